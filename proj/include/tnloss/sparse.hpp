#pragma once

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "tnloss/constraints.hpp"
#include "tnloss/matrix.hpp"
#include "tnloss/tnorm.hpp"

namespace tnloss {

// Called after each label's column updates; used by golden tests that check
// the intermediate goal matrices.
template <typename T>
using LabelStepObserver = std::function<void(std::int32_t label, const Matrix<T>& goal)>;

// Memory-efficient goal computation. G starts at the disjunction identity;
// for each label A (ascending), the columns listed in j+_A are t-conormed
// with P_A and the columns in j-_A with 1 - P_A. No 3-D tensor is ever
// formed; peak auxiliary memory is O(D*|Pi| + D) beyond inputs.
//
// With threads > 1 the D rows are partitioned across workers, each applying
// the identical ascending-label update sequence to its rows, so the result
// is bit-identical to the sequential run.
template <typename T>
Matrix<T> sparse_goal(const ConstraintSet& cs, const Matrix<T>& p, TNormKind kind,
                      int threads = 1, const LabelStepObserver<T>& after_label = {});

// Verification hook: same updates under a caller-chosen label iteration
// order (must be a permutation of 0..|A|-1).
template <typename T>
Matrix<T> sparse_goal_ordered(const ConstraintSet& cs, const Matrix<T>& p, TNormKind kind,
                              std::span<const std::int32_t> label_order);

template <typename T>
struct LossResult {
  T loss = T(0);
  std::optional<Matrix<T>> goal;  // D x |Pi|, retained for inspection / gradient pass
  std::optional<Matrix<T>> grad;  // D x |A|, dL/dP, present when requested
};

// Loss = 1 - mean(G). An empty constraint set yields loss 0 (nothing to
// violate). want_grad fills LossResult::grad via the gradient kernels.
template <typename T>
LossResult<T> sparse_loss(const ConstraintSet& cs, const Matrix<T>& p, TNormKind kind,
                          bool want_grad = false, int threads = 1);

template <typename T>
struct BatchLossResult {
  std::vector<LossResult<T>> frames;
  T mean_loss = T(0);
  // The gradient of the batch mean w.r.t. frame k's predictions is
  // frames[k].grad scaled by 1/batch size.
};

template <typename T>
BatchLossResult<T> sparse_loss_batch(const ConstraintSet& cs, std::span<const Matrix<T>> batch,
                                     TNormKind kind, bool want_grad = false, int threads = 1);

// Mean of all cells computed with a double accumulator in row-major order,
// independent of how many threads produced the matrix.
template <typename T>
double goal_mean(const Matrix<T>& g);

extern template Matrix<float> sparse_goal(const ConstraintSet&, const Matrix<float>&, TNormKind,
                                          int, const LabelStepObserver<float>&);
extern template Matrix<double> sparse_goal(const ConstraintSet&, const Matrix<double>&, TNormKind,
                                           int, const LabelStepObserver<double>&);
extern template LossResult<float> sparse_loss(const ConstraintSet&, const Matrix<float>&, TNormKind,
                                              bool, int);
extern template LossResult<double> sparse_loss(const ConstraintSet&, const Matrix<double>&,
                                               TNormKind, bool, int);

}  // namespace tnloss
