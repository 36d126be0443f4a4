#include "tnloss/sparse.hpp"

#include <numeric>
#include <thread>

#include "tnloss/gradients.hpp"

namespace tnloss {

namespace {

template <typename T>
void check_shapes(const ConstraintSet& cs, const Matrix<T>& p) {
  require_shape(p.cols() == cs.n_labels(),
                "prediction matrix has " + std::to_string(p.cols()) + " columns, constraint set has " +
                    std::to_string(cs.n_labels()) + " labels");
}

// Table-1 column update for rows [row_begin, row_end): the selected G column
// becomes tconorm(G, v) where v is P_A for positive occurrences and 1 - P_A
// for negative ones.
template <typename T, bool Negated>
void update_column(Matrix<T>& g, std::size_t col, const Matrix<T>& p, std::size_t label,
                   TNormKind kind, std::size_t row_begin, std::size_t row_end) {
  switch (kind) {
    case TNormKind::godel:
      for (std::size_t i = row_begin; i < row_end; ++i) {
        T v = Negated ? T(1) - p(i, label) : p(i, label);
        T& cell = g(i, col);
        cell = std::max(cell, v);
      }
      break;
    case TNormKind::lukasiewicz:
      for (std::size_t i = row_begin; i < row_end; ++i) {
        T v = Negated ? T(1) - p(i, label) : p(i, label);
        T& cell = g(i, col);
        cell = std::min(cell + v, T(1));
      }
      break;
    case TNormKind::product:
      for (std::size_t i = row_begin; i < row_end; ++i) {
        T v = Negated ? T(1) - p(i, label) : p(i, label);
        T& cell = g(i, col);
        cell = T(1) - (T(1) - cell) * (T(1) - v);
      }
      break;
  }
}

template <typename T>
void apply_label(Matrix<T>& g, const ConstraintSet& cs, const Matrix<T>& p, TNormKind kind,
                 std::int32_t label, std::size_t row_begin, std::size_t row_end) {
  for (std::int32_t j : cs.j_plus()[label])
    update_column<T, false>(g, static_cast<std::size_t>(j), p, label, kind, row_begin, row_end);
  for (std::int32_t j : cs.j_minus()[label])
    update_column<T, true>(g, static_cast<std::size_t>(j), p, label, kind, row_begin, row_end);
}

}  // namespace

template <typename T>
Matrix<T> sparse_goal(const ConstraintSet& cs, const Matrix<T>& p, TNormKind kind, int threads,
                      const LabelStepObserver<T>& after_label) {
  check_shapes(cs, p);
  const std::size_t d = p.rows();
  const std::size_t nl = cs.n_labels();
  Matrix<T> g = Matrix<T>::zeros(d, cs.n_constraints());  // disjunction identity

  if (threads <= 1 || d < 2 || after_label) {
    for (std::int32_t a = 0; a < static_cast<std::int32_t>(nl); ++a) {
      apply_label(g, cs, p, kind, a, 0, d);
      if (after_label) after_label(a, g);
    }
    return g;
  }

  const std::size_t n_workers = std::min<std::size_t>(threads, d);
  std::vector<std::thread> workers;
  workers.reserve(n_workers);
  for (std::size_t w = 0; w < n_workers; ++w) {
    const std::size_t begin = d * w / n_workers;
    const std::size_t end = d * (w + 1) / n_workers;
    workers.emplace_back([&, begin, end] {
      for (std::int32_t a = 0; a < static_cast<std::int32_t>(nl); ++a)
        apply_label(g, cs, p, kind, a, begin, end);
    });
  }
  for (auto& t : workers) t.join();
  return g;
}

template <typename T>
Matrix<T> sparse_goal_ordered(const ConstraintSet& cs, const Matrix<T>& p, TNormKind kind,
                              std::span<const std::int32_t> label_order) {
  check_shapes(cs, p);
  require_shape(label_order.size() == cs.n_labels(), "label order must cover every label once");
  Matrix<T> g = Matrix<T>::zeros(p.rows(), cs.n_constraints());
  for (std::int32_t a : label_order) apply_label(g, cs, p, kind, a, 0, p.rows());
  return g;
}

template <typename T>
double goal_mean(const Matrix<T>& g) {
  double sum = 0.0;
  const T* v = g.data();
  for (std::size_t k = 0; k < g.size(); ++k) sum += static_cast<double>(v[k]);
  return g.size() == 0 ? 0.0 : sum / static_cast<double>(g.size());
}

template <typename T>
LossResult<T> sparse_loss(const ConstraintSet& cs, const Matrix<T>& p, TNormKind kind,
                          bool want_grad, int threads) {
  check_shapes(cs, p);
  LossResult<T> result;
  if (cs.n_constraints() == 0) {
    result.loss = T(0);
    result.goal = Matrix<T>::zeros(p.rows(), 0);
    if (want_grad) result.grad = Matrix<T>::zeros(p.rows(), p.cols());
    return result;
  }
  Matrix<T> g = sparse_goal(cs, p, kind, threads);
  result.loss = static_cast<T>(1.0 - goal_mean(g));
  result.goal = std::move(g);
  if (want_grad) {
    GradResult<T> gr = loss_grad(cs, p, kind, threads);
    result.grad = std::move(gr.grad);
  }
  return result;
}

template <typename T>
BatchLossResult<T> sparse_loss_batch(const ConstraintSet& cs, std::span<const Matrix<T>> batch,
                                     TNormKind kind, bool want_grad, int threads) {
  BatchLossResult<T> out;
  out.frames.reserve(batch.size());
  double sum = 0.0;
  for (const Matrix<T>& frame : batch) {
    out.frames.push_back(sparse_loss(cs, frame, kind, want_grad, threads));
    sum += static_cast<double>(out.frames.back().loss);
  }
  out.mean_loss = batch.empty() ? T(0) : static_cast<T>(sum / static_cast<double>(batch.size()));
  return out;
}

template Matrix<float> sparse_goal(const ConstraintSet&, const Matrix<float>&, TNormKind, int,
                                   const LabelStepObserver<float>&);
template Matrix<double> sparse_goal(const ConstraintSet&, const Matrix<double>&, TNormKind, int,
                                    const LabelStepObserver<double>&);
template Matrix<float> sparse_goal_ordered(const ConstraintSet&, const Matrix<float>&, TNormKind,
                                           std::span<const std::int32_t>);
template Matrix<double> sparse_goal_ordered(const ConstraintSet&, const Matrix<double>&, TNormKind,
                                            std::span<const std::int32_t>);
template double goal_mean(const Matrix<float>&);
template double goal_mean(const Matrix<double>&);
template LossResult<float> sparse_loss(const ConstraintSet&, const Matrix<float>&, TNormKind, bool,
                                       int);
template LossResult<double> sparse_loss(const ConstraintSet&, const Matrix<double>&, TNormKind,
                                        bool, int);
template BatchLossResult<float> sparse_loss_batch(const ConstraintSet&,
                                                  std::span<const Matrix<float>>, TNormKind, bool,
                                                  int);
template BatchLossResult<double> sparse_loss_batch(const ConstraintSet&,
                                                   std::span<const Matrix<double>>, TNormKind, bool,
                                                   int);

}  // namespace tnloss
