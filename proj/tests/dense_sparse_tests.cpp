#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "tnloss/check.hpp"
#include "tnloss/dense.hpp"
#include "tnloss/errors.hpp"
#include "tnloss/prediction.hpp"
#include "tnloss/sparse.hpp"

using namespace tnloss;

namespace {

constexpr TNormKind kKinds[] = {TNormKind::godel, TNormKind::lukasiewicz, TNormKind::product};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

struct Fixture {
  ConstraintSet cs;
  Matrix<float> p;
};

Fixture traffic_fixture() {
  const std::string dir = TNLOSS_DATA_DIR;
  Fixture f{load_constraints(dir + "/traffic.labels", dir + "/traffic.cnf"),
            load_prediction(dir + "/traffic_pred.csv", DomainCheck::strict)};
  return f;
}

Matrix<float> expected_goal(TNormKind kind) {
  const std::string dir = TNLOSS_DATA_DIR;
  return parse_prediction_csv(read_file(dir + "/traffic_goal_" + to_string(kind) + ".csv"),
                              DomainCheck::strict);
}

// Independent per-cell interpreter: gathers each clause's relaxed literal
// values straight from the clause list and folds them. Used as the oracle the
// production kernels are judged against.
template <typename T>
Matrix<T> naive_goal(const ConstraintSet& cs, const Matrix<T>& p, TNormKind kind) {
  Matrix<T> g(p.rows(), cs.n_constraints());
  for (std::size_t i = 0; i < p.rows(); ++i) {
    for (std::size_t j = 0; j < cs.n_constraints(); ++j) {
      std::vector<T> vals;
      for (const Literal& lit : cs.literals_by_label()[j]) {
        const T pv = p(i, static_cast<std::size_t>(lit.label));
        vals.push_back(lit.negated ? T(1) - pv : pv);
      }
      g(i, j) = tconorm_fold(kind, std::span<const T>(vals));
    }
  }
  return g;
}

template <typename T>
double max_abs_diff(const Matrix<T>& a, const Matrix<T>& b) {
  REQUIRE(a.rows() == b.rows());
  REQUIRE(a.cols() == b.cols());
  double dev = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k)
    dev = std::max(dev, std::abs(static_cast<double>(a.data()[k]) - static_cast<double>(b.data()[k])));
  return dev;
}

struct RandomInstance {
  ConstraintSet cs;
  Matrix<float> p;
};

RandomInstance random_instance(std::mt19937_64& rng, std::size_t max_d = 64,
                               std::size_t max_labels = 16, std::size_t max_constraints = 32) {
  const std::size_t d = 1 + rng() % max_d;
  const std::size_t nl = 1 + rng() % max_labels;
  const std::size_t npi = 1 + rng() % max_constraints;
  LabelSpace labels;
  for (std::size_t a = 0; a < nl; ++a) labels.names.push_back("L" + std::to_string(a));
  std::vector<std::int32_t> pool(nl);
  std::iota(pool.begin(), pool.end(), 0);
  std::vector<Clause> clauses;
  for (std::size_t j = 0; j < npi; ++j) {
    const std::size_t len = 1 + rng() % nl;
    for (std::size_t t = 0; t < len; ++t) std::swap(pool[t], pool[t + rng() % (nl - t)]);
    Clause clause;
    for (std::size_t t = 0; t < len; ++t) clause.literals.push_back({pool[t], (rng() & 1) == 1});
    clauses.push_back(std::move(clause));
  }
  std::uniform_real_distribution<float> unit(0.0f, 1.0f);
  Matrix<float> p(d, nl);
  for (std::size_t k = 0; k < p.size(); ++k) p.data()[k] = unit(rng);
  return {ConstraintSet::compile(std::move(labels), std::move(clauses)), std::move(p)};
}

}  // namespace

TEST_CASE("golden goal matrices on the traffic example") {
  const Fixture f = traffic_fixture();
  for (TNormKind kind : kKinds) {
    const Matrix<float> want = expected_goal(kind);
    CHECK(max_abs_diff(dense_goal(f.cs, f.p, kind), want) <= 1e-7);
    CHECK(max_abs_diff(sparse_goal(f.cs, f.p, kind), want) <= 1e-7);
  }
}

TEST_CASE("per-label intermediate states of the sparse fold") {
  const Fixture f = traffic_fixture();
  const std::vector<std::vector<float>> steps = {
      {0.1f, 0.0f, 0.9f, 0.0f, 0.4f, 0.0f},  // after Car
      {0.3f, 0.3f, 0.9f, 0.1f, 0.4f, 0.1f},  // after Moving
      {0.3f, 0.7f, 0.9f, 0.8f, 0.4f, 0.1f},  // after Stopped
  };
  std::size_t step = 0;
  sparse_goal<float>(f.cs, f.p, TNormKind::godel, 1, [&](std::int32_t label, const Matrix<float>& g) {
    REQUIRE(step < steps.size());
    CHECK(label == static_cast<std::int32_t>(step));
    for (std::size_t k = 0; k < g.size(); ++k)
      CHECK(std::abs(g.data()[k] - steps[step][k]) <= 1e-7f);
    ++step;
  });
  CHECK(step == 3);
}

TEST_CASE("golden losses on the traffic example") {
  const Fixture f = traffic_fixture();
  CHECK(dense_loss(f.cs, f.p, TNormKind::godel) == doctest::Approx(1.0 - 3.2 / 6.0).epsilon(1e-6));
  CHECK(sparse_loss(f.cs, f.p, TNormKind::godel).loss ==
        doctest::Approx(1.0 - 3.2 / 6.0).epsilon(1e-6));
  CHECK(sparse_loss(f.cs, f.p, TNormKind::product).loss == doctest::Approx(0.41).epsilon(1e-6));
  CHECK(sparse_loss(f.cs, f.p, TNormKind::lukasiewicz).loss ==
        doctest::Approx(1.0 / 3.0).epsilon(1e-6));
}

TEST_CASE("unit positive clause copies the prediction column") {
  const LabelSpace labels = parse_labels("Car\nMoving\n");
  const ConstraintSet cs = ConstraintSet::compile(labels, parse_clauses("1 0\n", labels));
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<float> unit(0.0f, 1.0f);
  Matrix<float> p(9, 2);
  for (std::size_t k = 0; k < p.size(); ++k) p.data()[k] = unit(rng);
  for (TNormKind kind : kKinds) {
    const Matrix<float> g = dense_goal(cs, p, kind);
    const Matrix<float> s = sparse_goal(cs, p, kind);
    for (std::size_t i = 0; i < p.rows(); ++i) {
      CHECK(g(i, 0) == p(i, 0));
      // The sparse fold starts from the disjunction identity, so the product
      // algebra reaches p via 1-(1-p): equal up to one rounding step.
      CHECK(std::abs(s(i, 0) - p(i, 0)) <= 1e-6f);
    }
  }
}

TEST_CASE("loss endpoints") {
  const LabelSpace labels = parse_labels("A\nB\n");
  const ConstraintSet cs = ConstraintSet::compile(labels, parse_clauses("1 0\n2 0\n", labels));
  Matrix<float> ones(4, 2);
  Matrix<float> zeros = Matrix<float>::zeros(4, 2);
  for (std::size_t k = 0; k < ones.size(); ++k) ones.data()[k] = 1.0f;
  for (TNormKind kind : kKinds) {
    CHECK(dense_loss(cs, ones, kind) == 0.0f);
    CHECK(sparse_loss(cs, ones, kind).loss == 0.0f);
    CHECK(dense_loss(cs, zeros, kind) == 1.0f);
    CHECK(sparse_loss(cs, zeros, kind).loss == 1.0f);
  }
}

TEST_CASE("dense and sparse agree with the naive oracle") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 300; ++trial) {
    const RandomInstance inst = random_instance(rng);
    const Matrix<double> pd = inst.p.cast<double>();
    for (TNormKind kind : kKinds) {
      const Matrix<float> oracle = naive_goal(inst.cs, inst.p, kind);
      CHECK(max_abs_diff(dense_goal(inst.cs, inst.p, kind), oracle) <= 1e-6);
      CHECK(max_abs_diff(sparse_goal(inst.cs, inst.p, kind), oracle) <= 1e-6);
      const Matrix<double> oracle_d = naive_goal(inst.cs, pd, kind);
      CHECK(max_abs_diff(dense_goal(inst.cs, pd, kind), oracle_d) <= 1e-12);
      CHECK(max_abs_diff(sparse_goal(inst.cs, pd, kind), oracle_d) <= 1e-12);
    }
  }
}

TEST_CASE("randomized dense/sparse equivalence via the check driver") {
  CheckConfig config;
  config.trials = 1000;
  config.seed = 77;
  const CheckReport report = run_check(config);
  CHECK(report.pass);
  CHECK(report.max_abs_dev_single <= 1e-6);
  CHECK(report.max_abs_dev_double <= 1e-12);
  CHECK_FALSE(report.failure.has_value());

  // determinism of the driver itself
  const CheckReport again = run_check(config);
  CHECK(again.max_abs_dev_single == report.max_abs_dev_single);
  CHECK(again.max_abs_dev_double == report.max_abs_dev_double);

  CheckConfig bad;
  bad.trials = 0;
  CHECK_THROWS_AS(run_check(bad), domain_error);
}

TEST_CASE("monotonicity in the prediction entries") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const RandomInstance inst = random_instance(rng, 8, 6, 8);
    for (TNormKind kind : kKinds) {
      const Matrix<float> before = dense_goal(inst.cs, inst.p, kind);
      const std::size_t i = rng() % inst.p.rows();
      const std::size_t a = rng() % inst.p.cols();
      Matrix<float> bumped = inst.p;
      bumped(i, a) = std::min(1.0f, bumped(i, a) + 0.25f);
      const Matrix<float> after = dense_goal(inst.cs, bumped, kind);
      for (std::size_t j = 0; j < inst.cs.n_constraints(); ++j) {
        if (inst.cs.c_plus()(j, a) == 1) CHECK(after(i, j) >= before(i, j));
        if (inst.cs.c_minus()(j, a) == 1) CHECK(after(i, j) <= before(i, j));
      }
    }
  }
}

TEST_CASE("label iteration order does not matter") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 50; ++trial) {
    const RandomInstance inst = random_instance(rng, 16, 8, 12);
    const Matrix<double> pd = inst.p.cast<double>();
    std::vector<std::int32_t> order(inst.cs.n_labels());
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    for (TNormKind kind : kKinds) {
      const Matrix<double> ascending = sparse_goal(inst.cs, pd, kind);
      const Matrix<double> permuted =
          sparse_goal_ordered(inst.cs, pd, kind, std::span<const std::int32_t>(order));
      if (kind == TNormKind::godel)
        CHECK(max_abs_diff(ascending, permuted) == 0.0);
      else
        CHECK(max_abs_diff(ascending, permuted) <= 1e-12);
    }
  }
}

TEST_CASE("labels without occurrences leave the goal untouched") {
  // Middle label B occurs in no clause.
  const LabelSpace labels = parse_labels("A\nB\nC\n");
  const ConstraintSet cs = ConstraintSet::compile(labels, parse_clauses("1 -3 0\n", labels));
  Matrix<float> p(4, 3);
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<float> unit(0.0f, 1.0f);
  for (std::size_t k = 0; k < p.size(); ++k) p.data()[k] = unit(rng);

  Matrix<float> after_a;
  Matrix<float> after_b;
  sparse_goal<float>(cs, p, TNormKind::product, 1,
                     [&](std::int32_t label, const Matrix<float>& g) {
                       if (label == 0) after_a = g;
                       if (label == 1) after_b = g;
                     });
  CHECK(after_a == after_b);
}

TEST_CASE("empty constraint set") {
  const LabelSpace labels = parse_labels("A\nB\n");
  const ConstraintSet cs = ConstraintSet::compile(labels, {});
  Matrix<float> p = Matrix<float>::zeros(5, 2);
  for (TNormKind kind : kKinds) {
    const LossResult<float> r = sparse_loss(cs, p, kind, /*want_grad=*/true);
    CHECK(r.loss == 0.0f);
    REQUIRE(r.goal.has_value());
    CHECK(r.goal->cols() == 0);
    REQUIRE(r.grad.has_value());
    for (std::size_t k = 0; k < r.grad->size(); ++k) CHECK(r.grad->data()[k] == 0.0f);
    CHECK_THROWS_AS(dense_goal(cs, p, kind), shape_error);  // dense path needs clauses
  }
}

TEST_CASE("threaded sparse path is bit-identical") {
  std::mt19937_64 rng(55);
  const RandomInstance inst = random_instance(rng, 64, 12, 20);
  for (TNormKind kind : kKinds) {
    const Matrix<float> sequential = sparse_goal(inst.cs, inst.p, kind, 1);
    for (int threads : {2, 3, 8}) {
      const Matrix<float> parallel = sparse_goal(inst.cs, inst.p, kind, threads);
      CHECK(parallel == sequential);
    }
    const LossResult<float> a = sparse_loss(inst.cs, inst.p, kind, true, 1);
    const LossResult<float> b = sparse_loss(inst.cs, inst.p, kind, true, 4);
    CHECK(a.loss == b.loss);
    CHECK(*a.grad == *b.grad);
  }
}

TEST_CASE("batched loss") {
  std::mt19937_64 rng(66);
  const RandomInstance inst = random_instance(rng, 16, 6, 10);
  std::uniform_real_distribution<float> unit(0.0f, 1.0f);
  Matrix<float> other(inst.p.rows(), inst.p.cols());
  for (std::size_t k = 0; k < other.size(); ++k) other.data()[k] = unit(rng);

  for (TNormKind kind : kKinds) {
    const std::vector<Matrix<float>> single{inst.p};
    const BatchLossResult<float> one =
        sparse_loss_batch(inst.cs, std::span<const Matrix<float>>(single), kind);
    CHECK(one.frames.size() == 1);
    CHECK(one.mean_loss == sparse_loss(inst.cs, inst.p, kind).loss);

    const std::vector<Matrix<float>> copies{inst.p, inst.p, inst.p};
    const BatchLossResult<float> same =
        sparse_loss_batch(inst.cs, std::span<const Matrix<float>>(copies), kind);
    CHECK(same.mean_loss == doctest::Approx(one.mean_loss).epsilon(1e-7));

    const std::vector<Matrix<float>> two{inst.p, other};
    const BatchLossResult<float> pair =
        sparse_loss_batch(inst.cs, std::span<const Matrix<float>>(two), kind);
    const double want = (static_cast<double>(sparse_loss(inst.cs, inst.p, kind).loss) +
                         static_cast<double>(sparse_loss(inst.cs, other, kind).loss)) /
                        2.0;
    CHECK(static_cast<double>(pair.mean_loss) == doctest::Approx(want).epsilon(1e-7));
  }
}

TEST_CASE("shape mismatches are rejected") {
  const LabelSpace labels = parse_labels("A\nB\nC\n");
  const ConstraintSet cs = ConstraintSet::compile(labels, parse_clauses("1 2 0\n", labels));
  Matrix<float> wrong = Matrix<float>::zeros(3, 2);
  for (TNormKind kind : kKinds) {
    CHECK_THROWS_AS(dense_goal(cs, wrong, kind), shape_error);
    CHECK_THROWS_AS(sparse_goal(cs, wrong, kind), shape_error);
    CHECK_THROWS_AS(sparse_loss(cs, wrong, kind), shape_error);
  }
}

TEST_CASE("dense peak byte model") {
  const DensePeak paper = dense_peak_bytes(550000, 200, 50, 4);
  CHECK(paper.per_tensor_bytes == std::uint64_t(550000) * 200 * 50 * 4);
  CHECK(paper.total_bytes == paper.per_tensor_bytes * 5);
  const DensePeak tiny = dense_peak_bytes(1, 1, 1, 4);
  CHECK(tiny.per_tensor_bytes == 4);
  CHECK(tiny.total_bytes == 20);
  CHECK_THROWS_AS(dense_peak_bytes(std::uint64_t(1) << 62, 1 << 10, 1 << 10, 8),
                  std::overflow_error);
}

TEST_CASE("dense loss stays in the unit interval") {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 100; ++trial) {
    const RandomInstance inst = random_instance(rng, 16, 8, 12);
    for (TNormKind kind : kKinds) {
      const float loss = dense_loss(inst.cs, inst.p, kind);
      CHECK(loss >= 0.0f);
      CHECK(loss <= 1.0f);
    }
  }
}
