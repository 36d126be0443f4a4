#include "tnloss/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "tnloss/errors.hpp"
#include "tnloss/gradients.hpp"
#include "tnloss/sparse.hpp"

namespace tnloss {

bool satisfies(const ConstraintSet& cs, const std::vector<std::uint8_t>& bits) {
  for (const Clause& clause : cs.clauses()) {
    bool sat = false;
    for (const Literal& lit : clause.literals) {
      const bool bit = bits[static_cast<std::size_t>(lit.label)] != 0;
      if (lit.negated ? !bit : bit) {
        sat = true;
        break;
      }
    }
    if (!sat) return false;
  }
  return true;
}

namespace {

constexpr int kRejectionBudget = 10000;
constexpr double kFeatureNoise = 1.0;

void sample_split(std::mt19937_64& rng, const ConstraintSet& cs, const Matrix<double>& w_true,
                  std::size_t n, Matrix<double>& x, Matrix<float>& y) {
  const std::size_t nl = cs.n_labels();
  const std::size_t nf = w_true.rows();
  x = Matrix<double>(n, nf);
  y = Matrix<float>(n, nl);
  std::bernoulli_distribution bit(0.5);
  std::normal_distribution<double> noise(0.0, kFeatureNoise);
  std::vector<std::uint8_t> bits(nl);
  for (std::size_t i = 0; i < n; ++i) {
    int tries = 0;
    do {
      if (++tries > kRejectionBudget)
        throw domain_error("rejection sampling could not satisfy the clause set after " +
                           std::to_string(kRejectionBudget) +
                           " draws; the constraints are unsatisfiable or nearly so");
      for (std::size_t a = 0; a < nl; ++a) bits[a] = bit(rng) ? 1 : 0;
    } while (!satisfies(cs, bits));
    for (std::size_t a = 0; a < nl; ++a) y(i, a) = static_cast<float>(bits[a]);
    for (std::size_t f = 0; f < nf; ++f) {
      double v = noise(rng);
      for (std::size_t a = 0; a < nl; ++a)
        if (bits[a]) v += w_true(f, a);
      x(i, f) = v;
    }
  }
}

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

double bce_value(const Matrix<double>& p, const Matrix<float>& y) {
  double sum = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    const double q = std::clamp(p.data()[k], 1e-12, 1.0 - 1e-12);
    const double t = static_cast<double>(y.data()[k]);
    sum -= t * std::log(q) + (1.0 - t) * std::log(1.0 - q);
  }
  return p.size() == 0 ? 0.0 : sum / static_cast<double>(p.size());
}

ModelGrad zero_grad(std::size_t n_labels, std::size_t n_features) {
  return {Matrix<double>::zeros(n_labels, n_features), std::vector<double>(n_labels, 0.0)};
}

// Contract per-logit gradients R (n x |A|) against inputs into parameter space.
ModelGrad contract(const Matrix<double>& r, const Matrix<double>& x) {
  ModelGrad g = zero_grad(r.cols(), x.cols());
  for (std::size_t i = 0; i < r.rows(); ++i) {
    for (std::size_t a = 0; a < r.cols(); ++a) {
      const double ria = r(i, a);
      if (ria == 0.0) continue;
      for (std::size_t f = 0; f < x.cols(); ++f) g.w(a, f) += ria * x(i, f);
      g.bias[a] += ria;
    }
  }
  return g;
}

struct LogicPiece {
  double loss = 0.0;
  ModelGrad grad;
};

LogicPiece logic_piece(const LinearModel& model, const Matrix<double>& x, const ConstraintSet& cs,
                       TNormKind kind) {
  const Matrix<double> p = predict(model, x);
  GradResult<double> gr = loss_grad(cs, p, kind);
  Matrix<double> r(p.rows(), p.cols());
  for (std::size_t k = 0; k < p.size(); ++k) {
    const double pk = p.data()[k];
    r.data()[k] = gr.grad.data()[k] * pk * (1.0 - pk);
  }
  return {gr.loss, contract(r, x)};
}

}  // namespace

SyntheticTask make_task(std::uint64_t seed, std::size_t n_labels, std::size_t n_features,
                        const TaskSizes& sizes, ConstraintSet cs) {
  if (n_labels == 0 || n_features == 0) throw domain_error("task needs labels and features");
  if (sizes.n_labelled == 0 || sizes.n_eval == 0)
    throw domain_error("task needs labelled and evaluation examples");
  if (cs.n_labels() != n_labels)
    throw shape_error("constraint set is over " + std::to_string(cs.n_labels()) +
                      " labels, task wants " + std::to_string(n_labels));

  SyntheticTask task{n_labels, n_features, seed, std::move(cs)};

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> weight(0.0, 1.0);
  Matrix<double> w_true(n_features, n_labels);
  for (std::size_t k = 0; k < w_true.size(); ++k) w_true.data()[k] = weight(rng);

  sample_split(rng, task.cs, w_true, sizes.n_labelled, task.x_labelled, task.y_labelled);
  sample_split(rng, task.cs, w_true, sizes.n_unlabelled, task.x_unlabelled, task.y_unlabelled);
  sample_split(rng, task.cs, w_true, sizes.n_eval, task.x_eval, task.y_eval);
  return task;
}

Matrix<double> predict(const LinearModel& model, const Matrix<double>& x) {
  require_shape(x.cols() == model.w.cols(),
                "feature width " + std::to_string(x.cols()) + " does not match model width " +
                    std::to_string(model.w.cols()));
  Matrix<double> p(x.rows(), model.w.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    for (std::size_t a = 0; a < model.w.rows(); ++a) {
      double z = model.bias[a];
      for (std::size_t f = 0; f < x.cols(); ++f) z += model.w(a, f) * x(i, f);
      p(i, a) = sigmoid(z);
    }
  }
  return p;
}

ModelGrad bce_grad(const LinearModel& model, const Matrix<double>& x, const Matrix<float>& y) {
  const Matrix<double> p = predict(model, x);
  require_shape(p.rows() == y.rows() && p.cols() == y.cols(), "label matrix shape mismatch");
  Matrix<double> r(p.rows(), p.cols());
  const double scale = 1.0 / static_cast<double>(p.size());
  for (std::size_t k = 0; k < p.size(); ++k)
    r.data()[k] = (p.data()[k] - static_cast<double>(y.data()[k])) * scale;
  return contract(r, x);
}

ModelGrad logic_grad(const LinearModel& model, const Matrix<double>& x, const ConstraintSet& cs,
                     TNormKind kind) {
  return logic_piece(model, x, cs, kind).grad;
}

ModelGrad combined_grad(const ModelGrad& bce, const ModelGrad& logic, double weight) {
  require_shape(bce.w.rows() == logic.w.rows() && bce.w.cols() == logic.w.cols(),
                "gradient pieces have different shapes");
  ModelGrad out = bce;
  for (std::size_t k = 0; k < out.w.size(); ++k) out.w.data()[k] += weight * logic.w.data()[k];
  for (std::size_t a = 0; a < out.bias.size(); ++a) out.bias[a] += weight * logic.bias[a];
  return out;
}

EvalReport evaluate(const LinearModel& model, const SyntheticTask& task, double threshold,
                    TNormKind kind) {
  if (!(threshold > 0.0 && threshold < 1.0)) throw domain_error("threshold must lie in (0,1)");
  const Matrix<double> p = predict(model, task.x_eval);
  const ConstraintSet& cs = task.cs;
  EvalReport report;

  const std::size_t n = p.rows();
  if (cs.n_constraints() > 0 && n > 0) {
    std::size_t falsified = 0;
    std::vector<std::uint8_t> bits(p.cols());
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t a = 0; a < p.cols(); ++a) bits[a] = p(i, a) >= threshold ? 1 : 0;
      for (const Clause& clause : cs.clauses()) {
        bool sat = false;
        for (const Literal& lit : clause.literals) {
          const bool bit = bits[static_cast<std::size_t>(lit.label)] != 0;
          if (lit.negated ? !bit : bit) {
            sat = true;
            break;
          }
        }
        if (!sat) ++falsified;
      }
    }
    report.violation_rate =
        static_cast<double>(falsified) / static_cast<double>(n * cs.n_constraints());
  }

  // Per-label average precision, ranking eval rows by score; labels with no
  // positive example score 1 by convention.
  report.per_label_ap.resize(p.cols(), 1.0);
  std::vector<std::size_t> order(n);
  for (std::size_t a = 0; a < p.cols(); ++a) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
      return p(i, a) > p(j, a);
    });
    std::size_t positives = 0;
    double ap = 0.0;
    for (std::size_t rank = 0; rank < n; ++rank) {
      if (task.y_eval(order[rank], a) > 0.5f) {
        ++positives;
        ap += static_cast<double>(positives) / static_cast<double>(rank + 1);
      }
    }
    if (positives > 0) report.per_label_ap[a] = ap / static_cast<double>(positives);
  }
  report.mean_ap = report.per_label_ap.empty()
                       ? 0.0
                       : std::accumulate(report.per_label_ap.begin(), report.per_label_ap.end(), 0.0) /
                             static_cast<double>(report.per_label_ap.size());

  report.eval_bce = bce_value(p, task.y_eval);
  report.eval_logic_loss =
      cs.n_constraints() == 0 ? 0.0 : static_cast<double>(sparse_loss(cs, p, kind).loss);
  return report;
}

TrainResult train(const SyntheticTask& task, const TrainConfig& config) {
  if (config.logic_weight < 0.0) throw domain_error("logic weight must be non-negative");
  if (config.warmup_epochs > config.epochs)
    throw domain_error("warm-up cannot be longer than training");
  if (!(config.threshold > 0.0 && config.threshold < 1.0))
    throw domain_error("threshold must lie in (0,1)");

  TrainResult result;
  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> init(0.0, 0.01);
  result.model.w = Matrix<double>(task.n_labels, task.n_features);
  for (std::size_t k = 0; k < result.model.w.size(); ++k) result.model.w.data()[k] = init(rng);
  result.model.bias.assign(task.n_labels, 0.0);

  const bool logic_possible = config.logic_weight > 0.0 && task.cs.n_constraints() > 0;
  const bool have_unlabelled = task.x_unlabelled.rows() > 0;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const bool warm = epoch < config.warmup_epochs;
    const ModelGrad bce = bce_grad(result.model, task.x_labelled, task.y_labelled);
    const double bce_now =
        bce_value(predict(result.model, task.x_labelled), task.y_labelled);

    ModelGrad step = bce;
    double logic_now = 0.0;
    if (logic_possible && !warm) {
      LogicPiece lab = logic_piece(result.model, task.x_labelled, task.cs, config.kind);
      ++result.logic_invocations;
      ModelGrad logic_total = lab.grad;
      logic_now = lab.loss;
      if (have_unlabelled) {
        LogicPiece unlab = logic_piece(result.model, task.x_unlabelled, task.cs, config.kind);
        ++result.logic_invocations;
        for (std::size_t k = 0; k < logic_total.w.size(); ++k)
          logic_total.w.data()[k] += unlab.grad.w.data()[k];
        for (std::size_t a = 0; a < logic_total.bias.size(); ++a)
          logic_total.bias[a] += unlab.grad.bias[a];
        logic_now += unlab.loss;
      }
      step = combined_grad(bce, logic_total, config.logic_weight);
    }

    const double objective = bce_now + config.logic_weight * logic_now;
    if (!std::isfinite(objective))
      throw domain_error("training diverged (objective is not finite) at epoch " +
                         std::to_string(epoch));

    for (std::size_t k = 0; k < result.model.w.size(); ++k)
      result.model.w.data()[k] -= config.learning_rate * step.w.data()[k];
    for (std::size_t a = 0; a < result.model.bias.size(); ++a)
      result.model.bias[a] -= config.learning_rate * step.bias[a];

    result.bce_curve.push_back(bce_now);
    result.logic_curve.push_back(logic_now);
  }

  result.report = evaluate(result.model, task, config.threshold, config.kind);
  return result;
}

}  // namespace tnloss
