#pragma once

#include <cstdint>

namespace tnloss {

// Analytic peak-allocation model for the two evaluation paths. The dense path
// works with five D x |Pi| x |A| tensors at peak; the sparse path touches
// k * D * |Pi| elements, k a small implementation constant (goal matrix plus
// bounded auxiliary buffers), never a 3-D tensor.
struct MemoryModel {
  std::uint64_t d = 0;
  std::uint64_t n_constraints = 0;
  std::uint64_t n_labels = 0;
  std::uint64_t elem_bytes = 0;
  std::uint64_t sparse_aux_factor = 0;  // k

  std::uint64_t dense_single_tensor_bytes = 0;  // D * |Pi| * |A| * elem_bytes
  std::uint64_t dense_total_bytes = 0;          // 5x single tensor
  std::uint64_t sparse_goal_bytes = 0;          // D * |Pi| * elem_bytes
  std::uint64_t sparse_total_bytes = 0;         // k * sparse_goal_bytes
};

// All arguments must be positive; k at most 8. Throws std::overflow_error if
// any product leaves uint64 range and domain_error on invalid arguments.
MemoryModel estimate(std::uint64_t d, std::uint64_t n_constraints, std::uint64_t n_labels,
                     std::uint64_t elem_bytes, std::uint64_t sparse_aux_factor = 4);

double to_gib(std::uint64_t bytes);  // GiB = 2^30 bytes

// Smallest |Pi| whose dense_total estimate exceeds budget_bytes at the given
// dimensions. 0 means no constraint count fits the budget (already over at
// |Pi| = 1 returns 1; a zero per-constraint cost cannot happen since inputs
// are positive).
std::uint64_t dense_crossover_constraints(std::uint64_t d, std::uint64_t n_labels,
                                          std::uint64_t elem_bytes, std::uint64_t budget_bytes);

}  // namespace tnloss
