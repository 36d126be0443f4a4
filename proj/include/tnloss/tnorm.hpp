#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <string_view>

#include "tnloss/errors.hpp"
#include "tnloss/matrix.hpp"

namespace tnloss {

// The three algebras. One kind is chosen per invocation and used by every
// kernel downstream (loss, gradients, benchmarks, trainer).
enum class TNormKind { godel, lukasiewicz, product };

// strict: values outside [0,1] raise domain_error.
// clamp:  values are clipped into [0,1]; upstream sigmoids can drift a ulp out.
enum class DomainCheck { strict, clamp };

const char* to_string(TNormKind kind);
TNormKind parse_tnorm(std::string_view name);  // "godel" | "lukasiewicz" | "product"

// Scalar kernels. Inputs are assumed to lie in [0,1]; validation happens at
// the input boundary (ensure_unit), not per call.
template <typename T>
inline T tnorm(TNormKind kind, T a, T b) {
  switch (kind) {
    case TNormKind::godel: return std::min(a, b);
    case TNormKind::lukasiewicz: return std::max(a + b - T(1), T(0));
    case TNormKind::product: return a * b;
  }
  return T(0);
}

template <typename T>
inline T tconorm(TNormKind kind, T a, T b) {
  switch (kind) {
    case TNormKind::godel: return std::max(a, b);
    case TNormKind::lukasiewicz: return std::min(a + b, T(1));
    case TNormKind::product: return T(1) - (T(1) - a) * (T(1) - b);
  }
  return T(0);
}

// Strong negation.
template <typename T>
inline T negate(T a) {
  return T(1) - a;
}

// Left fold of the t-conorm in list order. A disjunction over zero literals
// is undefined, so the empty list is rejected rather than defaulted to 0.
template <typename T>
inline T tconorm_fold(TNormKind kind, std::span<const T> values) {
  if (values.empty()) throw domain_error("tconorm_fold: empty operand list");
  T acc = values[0];
  for (std::size_t i = 1; i < values.size(); ++i) acc = tconorm(kind, acc, values[i]);
  return acc;
}

template <typename T>
inline T ensure_unit(T v, DomainCheck mode) {
  if (std::isnan(v)) throw domain_error("value is NaN");
  if (v >= T(0) && v <= T(1)) return v;
  if (mode == DomainCheck::strict)
    throw domain_error("value " + std::to_string(static_cast<double>(v)) + " outside [0,1]");
  return std::clamp(v, T(0), T(1));
}

template <typename T>
inline void ensure_unit(Matrix<T>& m, DomainCheck mode) {
  T* p = m.data();
  for (std::size_t k = 0; k < m.size(); ++k) p[k] = ensure_unit(p[k], mode);
}

}  // namespace tnloss
