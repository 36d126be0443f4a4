#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "tnloss/constraints.hpp"
#include "tnloss/matrix.hpp"

namespace tnloss {

struct CheckConfig {
  int trials = 1000;
  std::size_t max_d = 64;
  std::size_t max_labels = 16;
  std::size_t max_constraints = 32;
  std::uint64_t seed = 1;
  double tol_single = 1e-6;
  double tol_double = 1e-12;
};

struct CheckFailure {
  int trial = 0;
  std::string tnorm;
  LabelSpace labels;
  std::vector<Clause> clauses;
  Matrix<float> predictions;
  double deviation = 0.0;
};

struct CheckReport {
  int trials = 0;
  double max_abs_dev_single = 0.0;
  double max_abs_dev_double = 0.0;
  bool pass = false;
  std::optional<CheckFailure> failure;  // first offending instance
};

// Random-instance equivalence run between the dense and sparse goal
// evaluations, all three t-norms, in both precisions. pass iff the maximum
// absolute cell deviation stays within tol_single / tol_double.
CheckReport run_check(const CheckConfig& config);

// Serializes a failing instance for replay: <dir>/labels.txt, <dir>/clauses.cnf,
// <dir>/pred.pmat. Returns a short human-readable description.
std::string write_replay(const CheckFailure& failure, const std::string& dir);

}  // namespace tnloss
