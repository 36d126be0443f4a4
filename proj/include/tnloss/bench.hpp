#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tnloss/constraints.hpp"
#include "tnloss/tnorm.hpp"

namespace tnloss {

enum class BenchPath { dense, sparse };

std::string to_string(BenchPath path);
BenchPath parse_bench_path(const std::string& text);  // "dense" | "sparse"

struct BenchRecord {
  BenchPath path = BenchPath::sparse;
  TNormKind tnorm = TNormKind::godel;
  std::size_t n_constraints = 0;
  std::size_t d = 0;
  std::size_t n_labels = 0;
  std::uint64_t peak_bytes = 0;   // measured, or the analytic estimate when estimated
  double wall_seconds = 0.0;      // median per-iteration wall time; 0 when estimated
  int iterations = 0;
  bool estimated = false;

  friend bool operator==(const BenchRecord&, const BenchRecord&) = default;
};

struct SweepConfig {
  std::size_t d = 65536;
  std::size_t n_labels = 41;
  std::vector<std::size_t> constraint_counts = {8, 16, 32, 64, 128, 243};
  TNormKind kind = TNormKind::product;
  int iterations = 50;
  std::uint64_t budget_bytes = std::uint64_t(24) << 30;
  bool estimate_fallback = true;  // when false, an over-budget point throws
  std::uint64_t sparse_aux_factor = 4;
  std::uint64_t seed = 1;
  int threads = 1;
  bool run_dense = true;
  bool run_sparse = true;
};

// Random clause set in the style of the benchmark study: clause lengths
// uniform on 2..15 (capped by |A|), labels drawn without replacement (so no
// tautologies), polarity fair-coin. Deterministic per seed.
ConstraintSet make_synthetic_constraints(std::uint64_t seed, std::size_t n_labels,
                                         std::size_t n_constraints);

// One sweep over constraint_counts. Per point: builds the synthetic clause
// set and a uniform random prediction matrix, then runs `iterations` passes
// (dense: forward; sparse: forward + gradient) under the instrumented
// allocator, recording the peak live bytes beyond the pre-loaded inputs
// (baseline subtraction) and the median per-iteration wall time. Points whose
// analytic estimate exceeds budget_bytes are emitted with estimated=true and
// the estimate in peak_bytes instead of being run; with estimate_fallback off
// they throw domain_error. Dense rows precede sparse rows at each count.
std::vector<BenchRecord> run_sweep(const SweepConfig& config);

// header: path,tnorm,n_constraints,D,n_labels,peak_bytes,wall_seconds,estimated
std::string emit_csv(const std::vector<BenchRecord>& records);
std::vector<BenchRecord> parse_csv(const std::string& text);

// min(cap, 55% of MemAvailable from /proc/meminfo); cap when unavailable.
// Keeps desk-scale sweeps honest about what the host can actually measure.
std::uint64_t capped_budget_bytes(std::uint64_t cap);

}  // namespace tnloss
