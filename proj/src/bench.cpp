#include "tnloss/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include "tnloss/alloc_tracker.hpp"
#include "tnloss/dense.hpp"
#include "tnloss/errors.hpp"
#include "tnloss/memory_model.hpp"
#include "tnloss/sparse.hpp"

namespace tnloss {

std::string to_string(BenchPath path) { return path == BenchPath::dense ? "dense" : "sparse"; }

BenchPath parse_bench_path(const std::string& text) {
  if (text == "dense") return BenchPath::dense;
  if (text == "sparse") return BenchPath::sparse;
  throw parse_error("unknown bench path '" + text + "' (expected dense or sparse)");
}

ConstraintSet make_synthetic_constraints(std::uint64_t seed, std::size_t n_labels,
                                         std::size_t n_constraints) {
  if (n_labels == 0) throw domain_error("synthetic constraints need at least one label");
  std::mt19937_64 rng(seed);
  const std::size_t lo = std::min<std::size_t>(2, n_labels);
  const std::size_t hi = std::min<std::size_t>(15, n_labels);
  std::uniform_int_distribution<std::size_t> len_dist(lo, hi);
  std::uniform_int_distribution<int> coin(0, 1);

  std::vector<std::int32_t> pool(n_labels);
  std::iota(pool.begin(), pool.end(), 0);

  LabelSpace labels;
  labels.names.reserve(n_labels);
  for (std::size_t a = 0; a < n_labels; ++a) labels.names.push_back("L" + std::to_string(a));

  std::vector<Clause> clauses;
  clauses.reserve(n_constraints);
  for (std::size_t j = 0; j < n_constraints; ++j) {
    const std::size_t len = len_dist(rng);
    // Partial Fisher-Yates draw without replacement; no duplicate labels, so
    // tautologies cannot arise.
    for (std::size_t t = 0; t < len; ++t) {
      std::uniform_int_distribution<std::size_t> pick(t, n_labels - 1);
      std::swap(pool[t], pool[pick(rng)]);
    }
    Clause clause;
    clause.literals.reserve(len);
    for (std::size_t t = 0; t < len; ++t) clause.literals.push_back({pool[t], coin(rng) == 1});
    std::sort(clause.literals.begin(), clause.literals.end(),
              [](const Literal& a, const Literal& b) { return a.label < b.label; });
    clauses.push_back(std::move(clause));
  }
  return ConstraintSet::compile(std::move(labels), std::move(clauses));
}

namespace {

Matrix<float> random_predictions(std::uint64_t seed, std::size_t d, std::size_t n_labels) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> unit(0.0f, 1.0f);
  Matrix<float> p(d, n_labels);
  for (std::size_t k = 0; k < p.size(); ++k) p.data()[k] = unit(rng);
  return p;
}

double median(std::vector<double> xs) {
  std::sort(xs.begin(), xs.end());
  return xs[(xs.size() - 1) / 2];
}

template <typename Body>
BenchRecord measure_point(BenchRecord record, int iterations, const Body& body) {
  const std::size_t baseline = alloc::live_bytes();
  alloc::reset_peak();
  std::vector<double> walls;
  walls.reserve(static_cast<std::size_t>(iterations));
  double sink = 0.0;
  for (int it = 0; it < iterations; ++it) {
    const auto t0 = std::chrono::steady_clock::now();
    sink += body();
    const auto t1 = std::chrono::steady_clock::now();
    walls.push_back(std::chrono::duration<double>(t1 - t0).count());
  }
  (void)sink;
  record.peak_bytes = alloc::peak_bytes() - baseline;
  record.wall_seconds = median(std::move(walls));
  record.iterations = iterations;
  return record;
}

}  // namespace

std::vector<BenchRecord> run_sweep(const SweepConfig& config) {
  if (config.iterations <= 0) throw domain_error("benchmark needs a positive iteration count");
  std::vector<BenchRecord> records;
  for (const std::size_t count : config.constraint_counts) {
    const ConstraintSet cs =
        make_synthetic_constraints(config.seed + count, config.n_labels, count);
    const Matrix<float> p =
        random_predictions(config.seed * 7919 + count, config.d, config.n_labels);
    const MemoryModel model = estimate(config.d, count, config.n_labels, sizeof(float),
                                       config.sparse_aux_factor);

    BenchRecord base;
    base.tnorm = config.kind;
    base.n_constraints = count;
    base.d = config.d;
    base.n_labels = config.n_labels;

    if (config.run_dense) {
      BenchRecord rec = base;
      rec.path = BenchPath::dense;
      if (model.dense_total_bytes > config.budget_bytes) {
        if (!config.estimate_fallback)
          throw domain_error("dense point at " + std::to_string(count) +
                             " constraints needs about " + std::to_string(model.dense_total_bytes) +
                             " bytes, over the budget, and the estimate fallback is disabled");
        rec.peak_bytes = model.dense_total_bytes;
        rec.estimated = true;
        rec.iterations = 0;
        records.push_back(rec);
      } else {
        records.push_back(measure_point(rec, config.iterations, [&] {
          return static_cast<double>(dense_loss(cs, p, config.kind));
        }));
      }
    }

    if (config.run_sparse) {
      BenchRecord rec = base;
      rec.path = BenchPath::sparse;
      if (model.sparse_total_bytes > config.budget_bytes) {
        if (!config.estimate_fallback)
          throw domain_error("sparse point at " + std::to_string(count) +
                             " constraints needs about " + std::to_string(model.sparse_total_bytes) +
                             " bytes, over the budget, and the estimate fallback is disabled");
        rec.peak_bytes = model.sparse_total_bytes;
        rec.estimated = true;
        rec.iterations = 0;
        records.push_back(rec);
      } else {
        records.push_back(measure_point(rec, config.iterations, [&] {
          LossResult<float> r = sparse_loss(cs, p, config.kind, /*want_grad=*/true, config.threads);
          return static_cast<double>(r.loss);
        }));
      }
    }
  }
  return records;
}

std::string emit_csv(const std::vector<BenchRecord>& records) {
  if (records.empty()) throw domain_error("refusing to emit an empty benchmark CSV");
  std::string out = "path,tnorm,n_constraints,D,n_labels,peak_bytes,wall_seconds,estimated\n";
  char buf[512];
  for (const BenchRecord& r : records) {
    std::snprintf(buf, sizeof(buf), "%s,%s,%zu,%zu,%zu,%llu,%.17g,%s\n", to_string(r.path).c_str(),
                  to_string(r.tnorm), r.n_constraints, r.d, r.n_labels,
                  static_cast<unsigned long long>(r.peak_bytes), r.wall_seconds,
                  r.estimated ? "true" : "false");
    out += buf;
  }
  return out;
}

std::vector<BenchRecord> parse_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) ||
      line != "path,tnorm,n_constraints,D,n_labels,peak_bytes,wall_seconds,estimated")
    throw parse_error("benchmark CSV header missing or malformed");
  std::vector<BenchRecord> records;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string field;
    std::vector<std::string> cols;
    while (std::getline(fields, field, ',')) cols.push_back(field);
    if (cols.size() != 8)
      throw parse_error("benchmark CSV line " + std::to_string(line_no) + ": expected 8 fields, got " +
                        std::to_string(cols.size()));
    BenchRecord r;
    try {
      r.path = parse_bench_path(cols[0]);
      r.tnorm = parse_tnorm(cols[1]);
      r.n_constraints = std::stoull(cols[2]);
      r.d = std::stoull(cols[3]);
      r.n_labels = std::stoull(cols[4]);
      r.peak_bytes = std::stoull(cols[5]);
      r.wall_seconds = std::stod(cols[6]);
      if (cols[7] == "true")
        r.estimated = true;
      else if (cols[7] == "false")
        r.estimated = false;
      else
        throw parse_error("estimated flag must be true or false");
    } catch (const std::exception& e) {
      throw parse_error("benchmark CSV line " + std::to_string(line_no) + ": " + e.what());
    }
    // Measured iteration counts are not serialized; parse-back marks records
    // as external by leaving iterations at 0.
    records.push_back(r);
  }
  return records;
}

std::uint64_t capped_budget_bytes(std::uint64_t cap) {
  std::ifstream in("/proc/meminfo");
  std::string key;
  std::uint64_t value = 0;
  std::string unit;
  while (in >> key >> value >> unit) {
    if (key == "MemAvailable:") {
      const std::uint64_t avail = value * 1024;
      return std::min(cap, avail * 55 / 100);
    }
    in.ignore(std::numeric_limits<std::streamsize>::max(), '\n');
  }
  return cap;
}

}  // namespace tnloss
