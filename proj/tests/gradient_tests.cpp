#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "doctest.h"
#include "tnloss/errors.hpp"
#include "tnloss/gradients.hpp"
#include "tnloss/sparse.hpp"

using namespace tnloss;

namespace {

constexpr TNormKind kKinds[] = {TNormKind::godel, TNormKind::lukasiewicz, TNormKind::product};

ConstraintSet make_cs(const std::string& labels_text, const std::string& cnf_text) {
  LabelSpace labels = parse_labels(labels_text);
  std::vector<Clause> clauses = parse_clauses(cnf_text, labels);
  return ConstraintSet::compile(std::move(labels), std::move(clauses));
}

struct RandomInstance {
  ConstraintSet cs;
  Matrix<double> p;
};

// Entries are kept away from 0/1 so finite differences stay in-domain, and the
// minimum clause length is 1; nonsmooth points are handled by the checker.
RandomInstance random_instance(std::mt19937_64& rng, std::size_t max_d = 12,
                               std::size_t max_labels = 8, std::size_t max_constraints = 10) {
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
  std::uniform_real_distribution<double> unit(0.05, 0.95);
  Matrix<double> p(d, nl);
  for (std::size_t k = 0; k < p.size(); ++k) p.data()[k] = unit(rng);
  return {ConstraintSet::compile(std::move(labels), std::move(clauses)), std::move(p)};
}

}  // namespace

TEST_CASE("unit clauses have unit gradients") {
  const ConstraintSet pos = make_cs("Car\nMoving\n", "1 0\n");
  const ConstraintSet neg = make_cs("Car\nMoving\n", "-2 0\n");
  Matrix<double> p(1, 2);
  p(0, 0) = 0.3;
  p(0, 1) = 0.6;
  for (TNormKind kind : kKinds) {
    // L = 1 - P_Car: slope -1 on the named label, 0 elsewhere.
    const GradResult<double> g = loss_grad(pos, p, kind);
    CHECK(g.loss == doctest::Approx(0.7).epsilon(1e-12));
    CHECK(g.grad(0, 0) == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(g.grad(0, 1) == 0.0);

    // L = 1 - (1 - P_Moving) = P_Moving: slope +1.
    const GradResult<double> h = loss_grad(neg, p, kind);
    CHECK(h.loss == doctest::Approx(0.6).epsilon(1e-12));
    CHECK(h.grad(0, 1) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(h.grad(0, 0) == 0.0);
  }
}

TEST_CASE("gradient scale follows 1/(D * n_constraints)") {
  const ConstraintSet cs = make_cs("A\n", "1 0\n1 0\n");  // twice the same unit clause
  Matrix<double> p(4, 1, 0.5);
  for (TNormKind kind : kKinds) {
    const GradResult<double> g = loss_grad(cs, p, kind);
    // Each of the 8 goal cells contributes -1/(4*2) and both clauses touch A.
    for (std::size_t i = 0; i < 4; ++i)
      CHECK(g.grad(i, 0) == doctest::Approx(-0.25).epsilon(1e-12));
  }
}

TEST_CASE("loss value agrees with the sparse evaluation") {
  std::mt19937_64 rng(91);
  for (int trial = 0; trial < 40; ++trial) {
    const RandomInstance inst = random_instance(rng);
    for (TNormKind kind : kKinds) {
      const double via_grad = loss_grad(inst.cs, inst.p, kind).loss;
      const double via_goal = sparse_loss(inst.cs, inst.p, kind).loss;
      CHECK(via_grad == doctest::Approx(via_goal).epsilon(1e-12));
    }
  }
}

TEST_CASE("finite differences confirm the product gradient") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 30; ++trial) {
    const RandomInstance inst = random_instance(rng);
    const FDReport report = finite_diff_check(inst.cs, inst.p, TNormKind::product);
    CHECK(report.num_skipped_nonsmooth == 0);  // product is smooth
    CHECK(report.num_checked == inst.p.size());
    CHECK(report.max_rel_error <= 1e-4);
  }
}

TEST_CASE("finite differences confirm the piecewise-linear gradients") {
  std::mt19937_64 rng(18);
  for (TNormKind kind : {TNormKind::godel, TNormKind::lukasiewicz}) {
    for (int trial = 0; trial < 30; ++trial) {
      const RandomInstance inst = random_instance(rng);
      const FDReport report = finite_diff_check(inst.cs, inst.p, kind);
      CHECK(report.num_checked + report.num_skipped_nonsmooth == inst.p.size());
      CHECK(report.max_abs_error <= 1e-6);
    }
  }
}

TEST_CASE("nonsmooth coordinates are recognized and skipped") {
  // Exact argmax tie: both literal values are 0.5.
  const ConstraintSet cs = make_cs("A\nB\n", "1 2 0\n");
  Matrix<double> tie(1, 2);
  tie(0, 0) = 0.5;
  tie(0, 1) = 0.5;
  const FDReport godel = finite_diff_check(cs, tie, TNormKind::godel);
  CHECK(godel.num_skipped_nonsmooth == 2);
  CHECK(godel.num_checked == 0);

  // Clause sum sits exactly on the Lukasiewicz saturation boundary.
  Matrix<double> boundary(1, 2);
  boundary(0, 0) = 0.55;
  boundary(0, 1) = 0.45;
  const FDReport luka = finite_diff_check(cs, boundary, TNormKind::lukasiewicz);
  CHECK(luka.num_skipped_nonsmooth == 2);
  CHECK(luka.num_checked == 0);

  // Well-separated values pass without skips.
  Matrix<double> apart(1, 2);
  apart(0, 0) = 0.2;
  apart(0, 1) = 0.8;
  const FDReport clean_godel = finite_diff_check(cs, apart, TNormKind::godel);
  CHECK(clean_godel.num_skipped_nonsmooth == 0);
  CHECK(clean_godel.num_checked == 2);
  CHECK(clean_godel.max_abs_error <= 1e-6);
}

TEST_CASE("finite-difference preconditions") {
  const ConstraintSet cs = make_cs("A\n", "1 0\n");
  Matrix<double> p(1, 1);
  p(0, 0) = 0.5;
  CHECK_THROWS_AS(finite_diff_check(cs, p, TNormKind::product, 0.0), domain_error);
  CHECK_THROWS_AS(finite_diff_check(cs, p, TNormKind::product, -1e-4), domain_error);
  CHECK_THROWS_AS(finite_diff_check(cs, p, TNormKind::product, 0.5), domain_error);
  Matrix<double> outside(1, 1);
  outside(0, 0) = 1e-6;  // below the step
  CHECK_THROWS_AS(finite_diff_check(cs, outside, TNormKind::product, 1e-4), domain_error);
}

TEST_CASE("labels outside every clause get zero gradient") {
  const ConstraintSet cs = make_cs("A\nB\nC\n", "1 -3 0\n");  // B unused
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> unit(0.05, 0.95);
  Matrix<double> p(6, 3);
  for (std::size_t k = 0; k < p.size(); ++k) p.data()[k] = unit(rng);
  for (TNormKind kind : kKinds) {
    const GradResult<double> g = loss_grad(cs, p, kind);
    for (std::size_t i = 0; i < p.rows(); ++i) CHECK(g.grad(i, 1) == 0.0);
  }
}

TEST_CASE("gradient signs follow literal polarity") {
  // A occurs only positively, B only negatively, across several clauses.
  const ConstraintSet cs = make_cs("A\nB\nC\n", "1 -2 0\n1 3 0\n-2 -3 0\n");
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> unit(0.05, 0.95);
  for (int trial = 0; trial < 20; ++trial) {
    Matrix<double> p(3, 3);
    for (std::size_t k = 0; k < p.size(); ++k) p.data()[k] = unit(rng);
    for (TNormKind kind : kKinds) {
      const GradResult<double> g = loss_grad(cs, p, kind);
      for (std::size_t i = 0; i < p.rows(); ++i) {
        CHECK(g.grad(i, 0) <= 0.0);  // raising a positive literal can only lower the loss
        CHECK(g.grad(i, 1) >= 0.0);  // raising a negated one can only increase it
      }
    }
  }
}

TEST_CASE("saturated clauses stop propagating to the other literals") {
  const ConstraintSet cs = make_cs("A\nB\n", "1 2 0\n");
  Matrix<double> p(1, 2);
  p(0, 0) = 1.0;  // A alone satisfies the clause
  p(0, 1) = 0.4;
  for (TNormKind kind : kKinds) {
    const GradResult<double> g = loss_grad(cs, p, kind);
    CHECK(g.loss == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(g.grad(0, 1) == 0.0);  // B cannot move a clause already at 1
  }
  // Lukasiewicz clips the whole sum, so even the satisfying literal is flat.
  const GradResult<double> luka = loss_grad(cs, p, TNormKind::lukasiewicz);
  CHECK(luka.grad(0, 0) == 0.0);
}

TEST_CASE("godel routes each clause to exactly one literal") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> unit(0.05, 0.95);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t nl = 2 + rng() % 6;
    LabelSpace labels;
    for (std::size_t a = 0; a < nl; ++a) labels.names.push_back("L" + std::to_string(a));
    Clause clause;  // one clause over every label, random polarity
    for (std::size_t a = 0; a < nl; ++a)
      clause.literals.push_back({static_cast<std::int32_t>(a), (rng() & 1) == 1});
    const ConstraintSet cs = ConstraintSet::compile(std::move(labels), {clause});
    Matrix<double> p(1, nl);
    for (std::size_t k = 0; k < p.size(); ++k) p.data()[k] = unit(rng);
    const GradResult<double> g = loss_grad(cs, p, TNormKind::godel);
    std::size_t nonzero = 0;
    for (std::size_t a = 0; a < nl; ++a)
      if (g.grad(0, a) != 0.0) ++nonzero;
    CHECK(nonzero == 1);
  }
}

TEST_CASE("godel ties resolve to the lowest label index") {
  const ConstraintSet cs = make_cs("A\nB\nC\n", "1 2 3 0\n");
  Matrix<double> p(1, 3);
  p(0, 0) = 0.7;
  p(0, 1) = 0.7;
  p(0, 2) = 0.2;
  const GradResult<double> g = loss_grad(cs, p, TNormKind::godel);
  CHECK(g.grad(0, 0) == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(g.grad(0, 1) == 0.0);
  CHECK(g.grad(0, 2) == 0.0);
}

TEST_CASE("threaded gradients are bit-identical") {
  std::mt19937_64 rng(8);
  const RandomInstance big = random_instance(rng, 64, 8, 12);
  for (TNormKind kind : kKinds) {
    const GradResult<double> one = loss_grad(big.cs, big.p, kind, 1);
    for (int threads : {2, 5, 8}) {
      const GradResult<double> many = loss_grad(big.cs, big.p, kind, threads);
      CHECK(many.loss == one.loss);
      CHECK(many.grad == one.grad);
    }
  }
}

TEST_CASE("float and double gradients agree to single precision") {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    const RandomInstance inst = random_instance(rng);
    const Matrix<float> pf = inst.p.cast<float>();
    const Matrix<double> pd = pf.cast<double>();  // same points, single-precision grid
    for (TNormKind kind : kKinds) {
      const GradResult<float> f = loss_grad(inst.cs, pf, kind);
      const GradResult<double> d = loss_grad(inst.cs, pd, kind);
      CHECK(std::abs(static_cast<double>(f.loss) - d.loss) <= 1e-6);
      for (std::size_t k = 0; k < d.grad.size(); ++k)
        CHECK(std::abs(static_cast<double>(f.grad.data()[k]) - d.grad.data()[k]) <= 1e-6);
    }
  }
}

TEST_CASE("degenerate gradient shapes") {
  const LabelSpace labels = parse_labels("A\nB\n");
  const ConstraintSet none = ConstraintSet::compile(labels, {});
  Matrix<double> p(3, 2, 0.5);
  const GradResult<double> empty = loss_grad(none, p, TNormKind::product);
  CHECK(empty.loss == 0.0);
  for (std::size_t k = 0; k < empty.grad.size(); ++k) CHECK(empty.grad.data()[k] == 0.0);

  const ConstraintSet cs = make_cs("A\nB\n", "1 2 0\n");
  Matrix<double> no_rows(0, 2);
  const GradResult<double> hollow = loss_grad(cs, no_rows, TNormKind::product);
  CHECK(hollow.loss == 1.0);  // mean over an empty goal matrix is 0
  CHECK(hollow.grad.rows() == 0);

  Matrix<double> wrong(3, 5, 0.5);
  CHECK_THROWS_AS(loss_grad(cs, wrong, TNormKind::product), shape_error);
}
