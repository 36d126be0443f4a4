#include "tnloss/constraints.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include "tnloss/errors.hpp"

namespace tnloss {

void validate_clause(const Clause& clause, std::size_t n_labels) {
  if (clause.literals.empty()) throw parse_error("empty clause");
  std::vector<bool> seen(n_labels, false);
  for (const Literal& lit : clause.literals) {
    if (lit.label < 0 || static_cast<std::size_t>(lit.label) >= n_labels)
      throw parse_error("label index " + std::to_string(lit.label) + " out of range (|A| = " +
                        std::to_string(n_labels) + ")");
    if (seen[lit.label])
      throw parse_error("label " + std::to_string(lit.label) +
                        " occurs twice in one clause (tautologies are rejected)");
    seen[lit.label] = true;
  }
}

std::vector<Clause> parse_clauses(std::string_view text, const LabelSpace& labels) {
  std::vector<Clause> clauses;
  bool have_header = false;
  std::size_t header_clauses = 0;

  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == 'c') continue;

    std::istringstream toks(line);
    if (line[0] == 'p') {
      std::string p, fmt;
      std::size_t vars = 0, count = 0;
      toks >> p >> fmt >> vars >> count;
      if (fmt != "cnf" || toks.fail())
        throw parse_error("line " + std::to_string(line_no) + ": malformed 'p cnf' header");
      if (vars != labels.count())
        throw parse_error("header declares " + std::to_string(vars) + " variables, label map has " +
                          std::to_string(labels.count()));
      have_header = true;
      header_clauses = count;
      continue;
    }

    Clause clause;
    long long v = 0;
    bool terminated = false;
    while (toks >> v) {
      if (terminated)
        throw parse_error("line " + std::to_string(line_no) + ": tokens after terminating 0");
      if (v == 0) {
        terminated = true;
        continue;
      }
      std::int32_t label = static_cast<std::int32_t>((v > 0 ? v : -v) - 1);
      clause.literals.push_back({label, v < 0});
    }
    if (!toks.eof())
      throw parse_error("line " + std::to_string(line_no) + ": non-integer token");
    if (!terminated)
      throw parse_error("line " + std::to_string(line_no) + ": clause missing terminating 0");
    try {
      validate_clause(clause, labels.count());
    } catch (const parse_error& e) {
      throw parse_error("line " + std::to_string(line_no) + ": " + e.what());
    }
    clauses.push_back(std::move(clause));
  }

  if (have_header && header_clauses != clauses.size())
    throw parse_error("header declares " + std::to_string(header_clauses) + " clauses, file has " +
                      std::to_string(clauses.size()));
  return clauses;
}

ConstraintSet ConstraintSet::compile(LabelSpace labels, std::vector<Clause> clauses) {
  const std::size_t n_labels = labels.count();
  for (const Clause& c : clauses) validate_clause(c, n_labels);

  ConstraintSet cs;
  cs.labels_ = std::move(labels);
  cs.clauses_ = std::move(clauses);
  const std::size_t n = cs.clauses_.size();

  cs.c_plus_ = Matrix<std::uint8_t>::zeros(n, n_labels);
  cs.c_minus_ = Matrix<std::uint8_t>::zeros(n, n_labels);
  cs.j_plus_.assign(n_labels, {});
  cs.j_minus_.assign(n_labels, {});
  cs.literals_by_label_.resize(n);

  for (std::size_t i = 0; i < n; ++i) {
    for (const Literal& lit : cs.clauses_[i].literals) {
      if (lit.negated) {
        cs.c_minus_(i, lit.label) = 1;
        cs.j_minus_[lit.label].push_back(static_cast<std::int32_t>(i));
      } else {
        cs.c_plus_(i, lit.label) = 1;
        cs.j_plus_[lit.label].push_back(static_cast<std::int32_t>(i));
      }
    }
    cs.literals_by_label_[i] = cs.clauses_[i].literals;
    std::sort(cs.literals_by_label_[i].begin(), cs.literals_by_label_[i].end(),
              [](const Literal& a, const Literal& b) { return a.label < b.label; });
  }
  // Clause indices are pushed in ascending i, so j+/j- are already sorted.
  return cs;
}

std::string serialize_dimacs(const ConstraintSet& cs) {
  std::ostringstream out;
  for (const Clause& clause : cs.clauses()) {
    for (const Literal& lit : clause.literals) {
      long long v = lit.label + 1;
      out << (lit.negated ? -v : v) << ' ';
    }
    out << "0\n";
  }
  return out.str();
}

ConstraintStats stats(const ConstraintSet& cs) {
  ConstraintStats s;
  s.n_constraints = cs.n_constraints();
  s.n_labels = cs.n_labels();
  s.label_fanout.resize(s.n_labels);
  for (std::size_t a = 0; a < s.n_labels; ++a)
    s.label_fanout[a] = cs.j_plus()[a].size() + cs.j_minus()[a].size();
  for (const Clause& c : cs.clauses()) {
    s.total_literals += c.literals.size();
    s.max_clause_len = std::max(s.max_clause_len, c.literals.size());
  }
  if (s.n_constraints > 0)
    s.density = static_cast<double>(s.total_literals) /
                (static_cast<double>(s.n_constraints) * static_cast<double>(s.n_labels));

  // Duplicates only reweight a constraint in the loss mean; count them so
  // authors can spot unintended repeats.
  std::map<std::vector<std::pair<std::int32_t, bool>>, std::size_t> normalized;
  for (const std::vector<Literal>& lits : cs.literals_by_label()) {
    std::vector<std::pair<std::int32_t, bool>> key;
    key.reserve(lits.size());
    for (const Literal& lit : lits) key.emplace_back(lit.label, lit.negated);
    if (++normalized[key] > 1) ++s.duplicate_clauses;
  }
  return s;
}

ConstraintSet load_constraints(const std::string& labels_path, const std::string& cnf_path) {
  LabelSpace labels = load_labels(labels_path);
  std::ifstream in(cnf_path, std::ios::binary);
  if (!in) throw parse_error("cannot open clause file: " + cnf_path);
  std::ostringstream buf;
  buf << in.rdbuf();
  std::vector<Clause> clauses = parse_clauses(buf.str(), labels);
  return ConstraintSet::compile(std::move(labels), std::move(clauses));
}

}  // namespace tnloss
