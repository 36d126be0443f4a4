#pragma once

#include <stdexcept>
#include <string>

namespace tnloss {

// Malformed label-map or clause input.
struct parse_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Value outside [0,1] under strict checking, or an undefined operation
// (e.g. a disjunction over zero literals).
struct domain_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Dimension mismatch between a constraint set and a prediction matrix.
struct shape_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace tnloss
