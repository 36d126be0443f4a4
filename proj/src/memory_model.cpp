#include "tnloss/memory_model.hpp"

#include <stdexcept>
#include <string>

#include "tnloss/errors.hpp"

namespace tnloss {

namespace {

std::uint64_t checked_mul(std::uint64_t a, std::uint64_t b) {
  std::uint64_t r = 0;
  if (__builtin_mul_overflow(a, b, &r))
    throw std::overflow_error("memory model product overflows 64 bits: " + std::to_string(a) +
                              " * " + std::to_string(b));
  return r;
}

}  // namespace

MemoryModel estimate(std::uint64_t d, std::uint64_t n_constraints, std::uint64_t n_labels,
                     std::uint64_t elem_bytes, std::uint64_t sparse_aux_factor) {
  if (d == 0 || n_constraints == 0 || n_labels == 0 || elem_bytes == 0 || sparse_aux_factor == 0)
    throw domain_error("memory model arguments must be positive");
  if (sparse_aux_factor > 8)
    throw domain_error("sparse auxiliary factor k must be at most 8");

  MemoryModel m;
  m.d = d;
  m.n_constraints = n_constraints;
  m.n_labels = n_labels;
  m.elem_bytes = elem_bytes;
  m.sparse_aux_factor = sparse_aux_factor;
  m.dense_single_tensor_bytes = checked_mul(checked_mul(checked_mul(d, n_constraints), n_labels), elem_bytes);
  m.dense_total_bytes = checked_mul(m.dense_single_tensor_bytes, 5);
  m.sparse_goal_bytes = checked_mul(checked_mul(d, n_constraints), elem_bytes);
  m.sparse_total_bytes = checked_mul(m.sparse_goal_bytes, sparse_aux_factor);
  return m;
}

double to_gib(std::uint64_t bytes) {
  return static_cast<double>(bytes) / static_cast<double>(std::uint64_t(1) << 30);
}

std::uint64_t dense_crossover_constraints(std::uint64_t d, std::uint64_t n_labels,
                                          std::uint64_t elem_bytes, std::uint64_t budget_bytes) {
  if (d == 0 || n_labels == 0 || elem_bytes == 0)
    throw domain_error("memory model arguments must be positive");
  const std::uint64_t per_constraint = checked_mul(checked_mul(checked_mul(d, n_labels), elem_bytes), 5);
  return budget_bytes / per_constraint + 1;
}

}  // namespace tnloss
