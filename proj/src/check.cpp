#include "tnloss/check.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>

#include "tnloss/dense.hpp"
#include "tnloss/errors.hpp"
#include "tnloss/prediction.hpp"
#include "tnloss/sparse.hpp"

namespace tnloss {

namespace {

struct RandomInstance {
  LabelSpace labels;
  std::vector<Clause> clauses;
  Matrix<float> predictions;
};

RandomInstance random_instance(std::mt19937_64& rng, const CheckConfig& config) {
  std::uniform_int_distribution<std::size_t> d_dist(1, config.max_d);
  std::uniform_int_distribution<std::size_t> label_dist(1, config.max_labels);
  std::uniform_int_distribution<std::size_t> clause_dist(1, config.max_constraints);
  const std::size_t d = d_dist(rng);
  const std::size_t nl = label_dist(rng);
  const std::size_t npi = clause_dist(rng);

  RandomInstance inst;
  inst.labels.names.reserve(nl);
  for (std::size_t a = 0; a < nl; ++a) inst.labels.names.push_back("L" + std::to_string(a));

  std::vector<std::int32_t> pool(nl);
  std::iota(pool.begin(), pool.end(), 0);
  std::uniform_int_distribution<int> coin(0, 1);
  inst.clauses.reserve(npi);
  for (std::size_t j = 0; j < npi; ++j) {
    std::uniform_int_distribution<std::size_t> len_dist(1, nl);
    const std::size_t len = len_dist(rng);
    for (std::size_t t = 0; t < len; ++t) {
      std::uniform_int_distribution<std::size_t> pick(t, nl - 1);
      std::swap(pool[t], pool[pick(rng)]);
    }
    Clause clause;
    for (std::size_t t = 0; t < len; ++t) clause.literals.push_back({pool[t], coin(rng) == 1});
    std::sort(clause.literals.begin(), clause.literals.end(),
              [](const Literal& a, const Literal& b) { return a.label < b.label; });
    inst.clauses.push_back(std::move(clause));
  }

  std::uniform_real_distribution<float> unit(0.0f, 1.0f);
  inst.predictions = Matrix<float>(d, nl);
  for (std::size_t k = 0; k < inst.predictions.size(); ++k) inst.predictions.data()[k] = unit(rng);
  return inst;
}

template <typename T>
double max_abs_dev(const Matrix<T>& a, const Matrix<T>& b) {
  double dev = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k)
    dev = std::max(dev, std::abs(static_cast<double>(a.data()[k]) - static_cast<double>(b.data()[k])));
  return dev;
}

}  // namespace

CheckReport run_check(const CheckConfig& config) {
  if (config.trials <= 0) throw domain_error("check needs a positive trial count");
  if (config.max_d == 0 || config.max_labels == 0 || config.max_constraints == 0)
    throw domain_error("check bounds must be positive");

  static constexpr TNormKind kinds[] = {TNormKind::godel, TNormKind::lukasiewicz,
                                        TNormKind::product};
  CheckReport report;
  report.trials = config.trials;
  std::mt19937_64 rng(config.seed);
  for (int trial = 0; trial < config.trials; ++trial) {
    const RandomInstance inst = random_instance(rng, config);
    const ConstraintSet cs = ConstraintSet::compile(inst.labels, inst.clauses);
    const Matrix<double> pd = inst.predictions.cast<double>();
    for (TNormKind kind : kinds) {
      const double dev_s =
          max_abs_dev(dense_goal(cs, inst.predictions, kind), sparse_goal(cs, inst.predictions, kind));
      const double dev_d = max_abs_dev(dense_goal(cs, pd, kind), sparse_goal(cs, pd, kind));
      report.max_abs_dev_single = std::max(report.max_abs_dev_single, dev_s);
      report.max_abs_dev_double = std::max(report.max_abs_dev_double, dev_d);
      if ((dev_s > config.tol_single || dev_d > config.tol_double) && !report.failure) {
        CheckFailure failure;
        failure.trial = trial;
        failure.tnorm = to_string(kind);
        failure.labels = inst.labels;
        failure.clauses = inst.clauses;
        failure.predictions = inst.predictions;
        failure.deviation = std::max(dev_s, dev_d);
        report.failure = std::move(failure);
      }
    }
  }
  report.pass = report.max_abs_dev_single <= config.tol_single &&
                report.max_abs_dev_double <= config.tol_double;
  return report;
}

std::string write_replay(const CheckFailure& failure, const std::string& dir) {
  std::filesystem::create_directories(dir);

  std::ofstream labels(dir + "/labels.txt");
  for (const std::string& name : failure.labels.names) labels << name << '\n';
  labels.close();

  const ConstraintSet cs = ConstraintSet::compile(failure.labels, failure.clauses);
  std::ofstream cnf(dir + "/clauses.cnf");
  cnf << "p cnf " << failure.labels.count() << ' ' << failure.clauses.size() << '\n'
      << serialize_dimacs(cs);
  cnf.close();

  save_pmat(dir + "/pred.pmat", failure.predictions);

  return "trial " + std::to_string(failure.trial) + " (" + failure.tnorm + ", deviation " +
         std::to_string(failure.deviation) + ") written to " + dir;
}

}  // namespace tnloss
