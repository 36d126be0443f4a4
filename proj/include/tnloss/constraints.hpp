#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "tnloss/labels.hpp"
#include "tnloss/matrix.hpp"

namespace tnloss {

struct Literal {
  std::int32_t label = 0;
  bool negated = false;

  friend bool operator==(const Literal&, const Literal&) = default;
};

// Disjunction of literals. Non-empty; a label occurs at most once, in one
// polarity (so tautologies like A v ~A are invalid).
struct Clause {
  std::vector<Literal> literals;

  friend bool operator==(const Clause&, const Clause&) = default;
};

struct ConstraintStats {
  std::size_t n_constraints = 0;
  std::size_t n_labels = 0;
  std::size_t total_literals = 0;
  std::size_t max_clause_len = 0;
  std::vector<std::size_t> label_fanout;  // |j+_A| + |j-_A| per label
  double density = 0.0;                   // literals / (|Pi| * |A|), 0 for empty set
  std::size_t duplicate_clauses = 0;      // clauses equal (as literal sets) to an earlier one
};

// Compiled clause set: the clause list plus the incidence matrices C+/C- and
// the per-label occurrence index sequences. Immutable after compile(); safe
// for unrestricted concurrent reads.
class ConstraintSet {
 public:
  static ConstraintSet compile(LabelSpace labels, std::vector<Clause> clauses);

  const LabelSpace& labels() const { return labels_; }
  const std::vector<Clause>& clauses() const { return clauses_; }
  std::size_t n_constraints() const { return clauses_.size(); }
  std::size_t n_labels() const { return labels_.count(); }

  // |Pi| x |A| binary incidence matrices.
  const Matrix<std::uint8_t>& c_plus() const { return c_plus_; }
  const Matrix<std::uint8_t>& c_minus() const { return c_minus_; }

  // Ascending clause-index sequence per label.
  const std::vector<std::vector<std::int32_t>>& j_plus() const { return j_plus_; }
  const std::vector<std::vector<std::int32_t>>& j_minus() const { return j_minus_; }

  // Per clause, its literals sorted by ascending label index. This is the
  // iteration order shared by the dense fold and the gradient kernels.
  const std::vector<std::vector<Literal>>& literals_by_label() const { return literals_by_label_; }

  friend bool operator==(const ConstraintSet&, const ConstraintSet&) = default;

 private:
  ConstraintSet() = default;

  LabelSpace labels_;
  std::vector<Clause> clauses_;
  Matrix<std::uint8_t> c_plus_;
  Matrix<std::uint8_t> c_minus_;
  std::vector<std::vector<std::int32_t>> j_plus_;
  std::vector<std::vector<std::int32_t>> j_minus_;
  std::vector<std::vector<Literal>> literals_by_label_;
};

// Clause document: DIMACS CNF body. One clause per line as signed 1-based
// integers terminated by 0; 'c' lines are comments; an optional "p cnf V C"
// header must match the label count and clause count.
std::vector<Clause> parse_clauses(std::string_view text, const LabelSpace& labels);

// Validates one clause against the invariants (used by parse_clauses and by
// callers constructing clauses programmatically).
void validate_clause(const Clause& clause, std::size_t n_labels);

// DIMACS body in clause order, literals in stored order.
std::string serialize_dimacs(const ConstraintSet& cs);

ConstraintStats stats(const ConstraintSet& cs);

// Convenience: load label map + clause file from disk and compile.
ConstraintSet load_constraints(const std::string& labels_path, const std::string& cnf_path);

}  // namespace tnloss
