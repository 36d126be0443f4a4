#include "tnloss/dense.hpp"

#include <limits>
#include <new>
#include <stdexcept>
#include <string>
#include <vector>

namespace tnloss {

namespace {

// Flat D x |Pi| x |A| tensor, row-major in (i, j, a).
template <typename T>
struct Tensor3 {
  std::size_t d, nc, nl;
  std::vector<T> data;

  Tensor3(std::size_t d_, std::size_t nc_, std::size_t nl_) : d(d_), nc(nc_), nl(nl_) {
    try {
      data.resize(d * nc * nl);
    } catch (const std::bad_alloc&) {
      throw std::runtime_error("dense path: allocation of " +
                               std::to_string(d * nc * nl * sizeof(T)) + " bytes failed");
    }
  }

  T& at(std::size_t i, std::size_t j, std::size_t a) { return data[(i * nc + j) * nl + a]; }
  const T& at(std::size_t i, std::size_t j, std::size_t a) const {
    return data[(i * nc + j) * nl + a];
  }

  void release() {
    data.clear();
    data.shrink_to_fit();
  }
};

template <typename T>
void check_shapes(const ConstraintSet& cs, const Matrix<T>& p) {
  require_shape(p.cols() == cs.n_labels(),
                "prediction matrix has " + std::to_string(p.cols()) + " columns, constraint set has " +
                    std::to_string(cs.n_labels()) + " labels");
}

}  // namespace

template <typename T>
Matrix<T> dense_goal(const ConstraintSet& cs, const Matrix<T>& p, TNormKind kind) {
  check_shapes(cs, p);
  const std::size_t d = p.rows();
  const std::size_t nc = cs.n_constraints();
  const std::size_t nl = cs.n_labels();
  require_shape(nc >= 1, "dense path requires at least one constraint");

  // Stack P along a new constraint dimension, C+/C- along a new output
  // dimension. Three full tensors, exactly as the standard formulation does.
  Tensor3<T> p_hat(d, nc, nl);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < nc; ++j)
      for (std::size_t a = 0; a < nl; ++a) p_hat.at(i, j, a) = p(i, a);

  Tensor3<T> c_plus_hat(d, nc, nl);
  Tensor3<T> c_minus_hat(d, nc, nl);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < nc; ++j)
      for (std::size_t a = 0; a < nl; ++a) {
        c_plus_hat.at(i, j, a) = static_cast<T>(cs.c_plus()(j, a));
        c_minus_hat.at(i, j, a) = static_cast<T>(cs.c_minus()(j, a));
      }

  // Literal tensor P*C+ + (C- - P*C-). The second term is built in its own
  // tensor first, giving the five-tensor peak the standard approach pays.
  Tensor3<T> literal(d, nc, nl);
  for (std::size_t k = 0; k < literal.data.size(); ++k)
    literal.data[k] = p_hat.data[k] * c_plus_hat.data[k];
  {
    Tensor3<T> negated(d, nc, nl);
    for (std::size_t k = 0; k < negated.data.size(); ++k)
      negated.data[k] = c_minus_hat.data[k] - p_hat.data[k] * c_minus_hat.data[k];
    for (std::size_t k = 0; k < literal.data.size(); ++k) literal.data[k] += negated.data[k];
  }
  p_hat.release();
  c_plus_hat.release();
  c_minus_hat.release();

  // Reduce the label dimension with the t-conorm fold, ascending label order.
  // Positions where the label does not occur are skipped; their entries are 0,
  // the disjunction identity, so skipping changes nothing.
  Matrix<T> g(d, nc);
  const auto& by_label = cs.literals_by_label();
  std::vector<T> vals;
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < nc; ++j) {
      vals.clear();
      for (const Literal& lit : by_label[j]) vals.push_back(literal.at(i, j, lit.label));
      g(i, j) = tconorm_fold<T>(kind, vals);
    }
  }
  return g;
}

template <typename T>
T dense_loss(const ConstraintSet& cs, const Matrix<T>& p, TNormKind kind) {
  Matrix<T> g = dense_goal(cs, p, kind);
  double sum = 0.0;
  const T* v = g.data();
  for (std::size_t k = 0; k < g.size(); ++k) sum += static_cast<double>(v[k]);
  return static_cast<T>(1.0 - sum / static_cast<double>(g.size()));
}

namespace {

std::uint64_t checked_mul(std::uint64_t a, std::uint64_t b) {
  std::uint64_t r = 0;
  if (__builtin_mul_overflow(a, b, &r))
    throw std::overflow_error("memory size arithmetic overflows 64 bits");
  return r;
}

}  // namespace

DensePeak dense_peak_bytes(std::uint64_t d, std::uint64_t n_constraints, std::uint64_t n_labels,
                           std::uint64_t elem_bytes) {
  if (d == 0 || n_constraints == 0 || n_labels == 0 || elem_bytes == 0)
    throw domain_error("dense_peak_bytes: all arguments must be positive");
  DensePeak peak;
  peak.per_tensor_bytes = checked_mul(checked_mul(checked_mul(d, n_constraints), n_labels), elem_bytes);
  peak.total_bytes = checked_mul(peak.per_tensor_bytes, 5);
  return peak;
}

template Matrix<float> dense_goal(const ConstraintSet&, const Matrix<float>&, TNormKind);
template Matrix<double> dense_goal(const ConstraintSet&, const Matrix<double>&, TNormKind);
template float dense_loss(const ConstraintSet&, const Matrix<float>&, TNormKind);
template double dense_loss(const ConstraintSet&, const Matrix<double>&, TNormKind);

}  // namespace tnloss
