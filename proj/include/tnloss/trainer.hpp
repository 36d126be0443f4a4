#pragma once

#include <cstdint>
#include <vector>

#include "tnloss/constraints.hpp"
#include "tnloss/matrix.hpp"
#include "tnloss/tnorm.hpp"

namespace tnloss {

// Toy multi-label task: label bit-vectors are rejection-sampled to satisfy the
// clause set, features are a fixed linear map of the bits plus Gaussian noise.
// The labelled/unlabelled/evaluation sets are drawn independently.
struct SyntheticTask {
  std::size_t n_labels = 0;
  std::size_t n_features = 0;
  std::uint64_t seed = 0;
  ConstraintSet cs;
  Matrix<double> x_labelled, x_unlabelled, x_eval;
  Matrix<float> y_labelled, y_unlabelled, y_eval;  // 0/1 ground truth bits
};

struct TaskSizes {
  std::size_t n_labelled = 40;
  std::size_t n_unlabelled = 40;
  std::size_t n_eval = 400;
};

SyntheticTask make_task(std::uint64_t seed, std::size_t n_labels, std::size_t n_features,
                        const TaskSizes& sizes, ConstraintSet cs);

struct TrainConfig {
  TNormKind kind = TNormKind::product;
  double logic_weight = 10.0;
  int warmup_epochs = 0;
  int epochs = 120;
  double learning_rate = 1.0;
  double threshold = 0.5;
  std::uint64_t seed = 1;
};

// Linear-sigmoid multi-label predictor.
struct LinearModel {
  Matrix<double> w;            // |A| x n_features
  std::vector<double> bias;    // |A|
};

struct EvalReport {
  double violation_rate = 0.0;          // falsified (example, clause) pairs / total
  double mean_ap = 0.0;                 // macro average of per-label AP
  std::vector<double> per_label_ap;
  double eval_bce = 0.0;
  double eval_logic_loss = 0.0;
};

struct TrainResult {
  LinearModel model;
  EvalReport report;
  std::vector<double> bce_curve;    // labelled BCE per epoch
  std::vector<double> logic_curve;  // labelled+unlabelled logic loss per epoch (0 in warm-up)
  std::uint64_t logic_invocations = 0;  // times the t-norm loss entered the objective
};

// Full-batch gradient descent on BCE(labelled) + w * L_logic(labelled) +
// w * L_logic(unlabelled). During warm-up epochs the logic terms are off and
// unlabelled data untouched. Deterministic per config.seed. Throws
// domain_error naming the epoch if the objective turns NaN.
TrainResult train(const SyntheticTask& task, const TrainConfig& config);

Matrix<double> predict(const LinearModel& model, const Matrix<double>& x);

EvalReport evaluate(const LinearModel& model, const SyntheticTask& task, double threshold,
                    TNormKind kind);

// Gradient pieces at a parameter point, for objective-additivity checks and
// the update step itself: the combined gradient is formed exactly as
// bce + w * logic, entry by entry.
struct ModelGrad {
  Matrix<double> w;
  std::vector<double> bias;
};

ModelGrad bce_grad(const LinearModel& model, const Matrix<double>& x, const Matrix<float>& y);

ModelGrad logic_grad(const LinearModel& model, const Matrix<double>& x, const ConstraintSet& cs,
                     TNormKind kind);

ModelGrad combined_grad(const ModelGrad& bce, const ModelGrad& logic, double weight);

// Boolean clause check on thresholded bits; shared by sampling and evaluation.
bool satisfies(const ConstraintSet& cs, const std::vector<std::uint8_t>& bits);

}  // namespace tnloss
