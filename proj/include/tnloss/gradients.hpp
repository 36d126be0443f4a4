#pragma once

#include <cstddef>

#include "tnloss/constraints.hpp"
#include "tnloss/matrix.hpp"
#include "tnloss/tnorm.hpp"

namespace tnloss {

template <typename T>
struct GradResult {
  T loss = T(0);
  Matrix<T> grad;  // D x |A|, dL/dP
};

// Exact reverse-mode gradient of L = 1 - mean(G) w.r.t. P.
//
// dL/dG_ij = -1/(D*|Pi|) everywhere. Per clause j on row i, with v_l the
// relaxed literal values and s = +1 (positive) / -1 (negative):
//   Product:     dG/dP_iA = s * prod_{l' != l} (1 - v_l')   (prefix/suffix pass)
//   Lukasiewicz: dG/dP_iA = s while sum_l v_l < 1, else 0 (boundary counts as 0)
//   Godel:       s routed to the lowest-label argmax literal, 0 elsewhere
//
// Work is row-local: per-clause products are recomputed forward instead of
// storing any D x |Pi| x |A| tensor, accumulation happens in double, and the
// result is emitted in T. Rows may be partitioned across threads; each row's
// arithmetic is unchanged, so results are bit-identical to the sequential run.
template <typename T>
GradResult<T> loss_grad(const ConstraintSet& cs, const Matrix<T>& p, TNormKind kind,
                        int threads = 1);

struct FDReport {
  double max_abs_error = 0.0;
  double max_rel_error = 0.0;
  std::size_t num_skipped_nonsmooth = 0;
  std::size_t num_checked = 0;
  double step_size = 0.0;
};

// Central finite differences against loss_grad, coordinate by coordinate.
// Coordinates within `nonsmooth_margin` of a Godel argmax tie or of the
// Lukasiewicz sum-equals-1 boundary are counted in num_skipped_nonsmooth and
// excluded from the error maxima. The relative error uses
// |fd - grad| / max(|fd|, |grad|), evaluated only where that denominator
// exceeds 1e-6; smaller entries are covered by the absolute error.
//
// Requires step in (0, 1e-2] and every entry of p in [step, 1 - step].
FDReport finite_diff_check(const ConstraintSet& cs, const Matrix<double>& p, TNormKind kind,
                           double step = 1e-4, double nonsmooth_margin = 1e-3);

extern template GradResult<float> loss_grad(const ConstraintSet&, const Matrix<float>&, TNormKind,
                                            int);
extern template GradResult<double> loss_grad(const ConstraintSet&, const Matrix<double>&, TNormKind,
                                             int);

}  // namespace tnloss
