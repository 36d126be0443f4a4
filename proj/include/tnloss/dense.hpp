#pragma once

#include <cstdint>

#include "tnloss/constraints.hpp"
#include "tnloss/matrix.hpp"
#include "tnloss/tnorm.hpp"

namespace tnloss {

// Standard dense formulation. Stacks P, C+ and C- into three D x |Pi| x |A|
// tensors, forms the literal tensor P*C+ + (C- - P*C-), and reduces the label
// dimension with the t-conorm. The stacked tensors are materialized for real:
// this path doubles as the memory baseline, so it must pay the full 3-D cost.
//
// Requires |Pi| >= 1. Serves as the correctness oracle for the sparse path.
template <typename T>
Matrix<T> dense_goal(const ConstraintSet& cs, const Matrix<T>& p, TNormKind kind);

// 1 - mean(G) over all D*|Pi| cells.
template <typename T>
T dense_loss(const ConstraintSet& cs, const Matrix<T>& p, TNormKind kind);

struct DensePeak {
  std::uint64_t per_tensor_bytes = 0;  // D * |Pi| * |A| * elem_bytes
  std::uint64_t total_bytes = 0;       // 5 tensors of that size
};

// Analytic cost of the dense path; throws std::overflow_error on overflow.
DensePeak dense_peak_bytes(std::uint64_t d, std::uint64_t n_constraints, std::uint64_t n_labels,
                           std::uint64_t elem_bytes);

extern template Matrix<float> dense_goal(const ConstraintSet&, const Matrix<float>&, TNormKind);
extern template Matrix<double> dense_goal(const ConstraintSet&, const Matrix<double>&, TNormKind);
extern template float dense_loss(const ConstraintSet&, const Matrix<float>&, TNormKind);
extern template double dense_loss(const ConstraintSet&, const Matrix<double>&, TNormKind);

}  // namespace tnloss
