#include "tnloss/gradients.hpp"

#include <algorithm>
#include <cmath>
#include <thread>
#include <vector>

#include "tnloss/errors.hpp"
#include "tnloss/sparse.hpp"

namespace tnloss {

namespace {

// Accumulates sum_j dG_dj/dP_dA over all clauses j into acc (|A| doubles,
// zeroed here) and returns sum_j G_dj for the row. Scratch vectors are reused
// across rows by the caller.
template <typename T>
double grad_row(const ConstraintSet& cs, const Matrix<T>& p, TNormKind kind, std::size_t row,
                std::vector<double>& acc, std::vector<double>& vals, std::vector<double>& pre) {
  std::fill(acc.begin(), acc.end(), 0.0);
  double clause_sum = 0.0;
  for (const std::vector<Literal>& lits : cs.literals_by_label()) {
    vals.clear();
    for (const Literal& lit : lits) {
      const double pv = static_cast<double>(p(row, static_cast<std::size_t>(lit.label)));
      vals.push_back(lit.negated ? 1.0 - pv : pv);
    }
    switch (kind) {
      case TNormKind::godel: {
        // max fold; subgradient routed to the lowest-label argmax (literals
        // are label-ascending, so strict > keeps the first winner).
        double best = vals[0];
        std::size_t best_l = 0;
        for (std::size_t l = 1; l < vals.size(); ++l) {
          if (vals[l] > best) {
            best = vals[l];
            best_l = l;
          }
        }
        clause_sum += best;
        acc[static_cast<std::size_t>(lits[best_l].label)] += lits[best_l].negated ? -1.0 : 1.0;
        break;
      }
      case TNormKind::lukasiewicz: {
        double sum = 0.0;
        for (double v : vals) sum += v;
        clause_sum += std::min(sum, 1.0);
        if (sum < 1.0) {
          for (std::size_t l = 0; l < vals.size(); ++l)
            acc[static_cast<std::size_t>(lits[l].label)] += lits[l].negated ? -1.0 : 1.0;
        }
        break;
      }
      case TNormKind::product: {
        // G = 1 - prod_l (1 - v_l); dG/dv_l is the product of the other
        // factors, assembled from prefix products and a backward-running
        // suffix.
        pre.resize(vals.size());
        double run = 1.0;
        for (std::size_t l = 0; l < vals.size(); ++l) {
          pre[l] = run;
          run *= 1.0 - vals[l];
        }
        clause_sum += 1.0 - run;
        double suf = 1.0;
        for (std::size_t l = vals.size(); l-- > 0;) {
          const double dv = pre[l] * suf;
          acc[static_cast<std::size_t>(lits[l].label)] += lits[l].negated ? -dv : dv;
          suf *= 1.0 - vals[l];
        }
        break;
      }
    }
  }
  return clause_sum;
}

template <typename T>
void grad_rows(const ConstraintSet& cs, const Matrix<T>& p, TNormKind kind, std::size_t row_begin,
               std::size_t row_end, Matrix<T>& grad, std::vector<double>& row_sums, double scale) {
  const std::size_t nl = cs.n_labels();
  std::vector<double> acc(nl), vals, pre;
  for (std::size_t i = row_begin; i < row_end; ++i) {
    row_sums[i] = grad_row(cs, p, kind, i, acc, vals, pre);
    for (std::size_t a = 0; a < nl; ++a) grad(i, a) = static_cast<T>(-scale * acc[a]);
  }
}

}  // namespace

template <typename T>
GradResult<T> loss_grad(const ConstraintSet& cs, const Matrix<T>& p, TNormKind kind, int threads) {
  require_shape(p.cols() == cs.n_labels(),
                "prediction matrix has " + std::to_string(p.cols()) + " columns, constraint set has " +
                    std::to_string(cs.n_labels()) + " labels");
  const std::size_t d = p.rows();
  const std::size_t npi = cs.n_constraints();

  GradResult<T> out;
  out.grad = Matrix<T>::zeros(d, cs.n_labels());
  if (npi == 0 || d == 0) {
    out.loss = npi == 0 ? T(0) : T(1);  // mean over an empty goal matrix is 0
    return out;
  }

  const double scale = 1.0 / (static_cast<double>(d) * static_cast<double>(npi));
  std::vector<double> row_sums(d, 0.0);

  if (threads <= 1 || d < 2) {
    grad_rows(cs, p, kind, 0, d, out.grad, row_sums, scale);
  } else {
    const std::size_t n_workers = std::min<std::size_t>(threads, d);
    std::vector<std::thread> workers;
    workers.reserve(n_workers);
    for (std::size_t w = 0; w < n_workers; ++w) {
      const std::size_t begin = d * w / n_workers;
      const std::size_t end = d * (w + 1) / n_workers;
      workers.emplace_back([&, begin, end] {
        grad_rows(cs, p, kind, begin, end, out.grad, row_sums, scale);
      });
    }
    for (auto& t : workers) t.join();
  }

  // Sequential reduction in row order keeps the loss independent of the
  // thread count, bit for bit.
  double total = 0.0;
  for (double s : row_sums) total += s;
  out.loss = static_cast<T>(1.0 - scale * total);
  return out;
}

namespace {

// Distance of the coordinate (row, label) from a gradient discontinuity. For
// Godel that is a tie between a clause's winning literal value and any other
// literal in the clause; for Lukasiewicz it is the clause sum crossing 1.
// Product is smooth, so nothing is ever flagged.
bool near_nonsmooth(const ConstraintSet& cs, const Matrix<double>& p, TNormKind kind,
                    std::size_t row, std::size_t label, double margin) {
  if (kind == TNormKind::product) return false;
  for (const std::vector<Literal>& lits : cs.literals_by_label()) {
    bool touches = false;
    for (const Literal& lit : lits)
      if (static_cast<std::size_t>(lit.label) == label) touches = true;
    if (!touches) continue;
    if (kind == TNormKind::lukasiewicz) {
      double sum = 0.0;
      for (const Literal& lit : lits) {
        const double pv = p(row, static_cast<std::size_t>(lit.label));
        sum += lit.negated ? 1.0 - pv : pv;
      }
      if (std::abs(sum - 1.0) <= margin) return true;
    } else {  // godel
      double best = -1.0;
      for (const Literal& lit : lits) {
        const double pv = p(row, static_cast<std::size_t>(lit.label));
        best = std::max(best, lit.negated ? 1.0 - pv : pv);
      }
      std::size_t at_top = 0;
      for (const Literal& lit : lits) {
        const double pv = p(row, static_cast<std::size_t>(lit.label));
        const double v = lit.negated ? 1.0 - pv : pv;
        if (best - v <= margin) ++at_top;
      }
      if (at_top > 1) return true;
    }
  }
  return false;
}

}  // namespace

FDReport finite_diff_check(const ConstraintSet& cs, const Matrix<double>& p, TNormKind kind,
                           double step, double nonsmooth_margin) {
  if (!(step > 0.0) || step > 1e-2)
    throw domain_error("finite-difference step must lie in (0, 1e-2]");
  for (std::size_t k = 0; k < p.size(); ++k) {
    const double v = p.data()[k];
    if (!(v >= step && v <= 1.0 - step))
      throw domain_error("prediction entries must lie in [step, 1 - step] so that perturbed "
                         "points stay inside the unit interval");
  }

  GradResult<double> analytic = loss_grad(cs, p, kind);
  FDReport report;
  report.step_size = step;

  Matrix<double> work = p;
  for (std::size_t i = 0; i < p.rows(); ++i) {
    for (std::size_t a = 0; a < p.cols(); ++a) {
      if (near_nonsmooth(cs, p, kind, i, a, nonsmooth_margin)) {
        ++report.num_skipped_nonsmooth;
        continue;
      }
      const double saved = work(i, a);
      work(i, a) = saved + step;
      const double up = static_cast<double>(sparse_loss(cs, work, kind).loss);
      work(i, a) = saved - step;
      const double down = static_cast<double>(sparse_loss(cs, work, kind).loss);
      work(i, a) = saved;

      const double fd = (up - down) / (2.0 * step);
      const double an = analytic.grad(i, a);
      const double abs_err = std::abs(fd - an);
      report.max_abs_error = std::max(report.max_abs_error, abs_err);
      const double denom = std::max(std::abs(fd), std::abs(an));
      if (denom > 1e-6) report.max_rel_error = std::max(report.max_rel_error, abs_err / denom);
      ++report.num_checked;
    }
  }
  return report;
}

template GradResult<float> loss_grad(const ConstraintSet&, const Matrix<float>&, TNormKind, int);
template GradResult<double> loss_grad(const ConstraintSet&, const Matrix<double>&, TNormKind, int);

}  // namespace tnloss
