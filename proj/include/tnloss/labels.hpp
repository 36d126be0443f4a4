#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace tnloss {

// Ordered label universe. Immutable once parsed.
struct LabelSpace {
  std::vector<std::string> names;

  std::size_t count() const { return names.size(); }

  friend bool operator==(const LabelSpace&, const LabelSpace&) = default;
};

// Label-map document: UTF-8, LF lines, one name per line, optionally
// "index<TAB>name". Explicit indices must run 0..n-1 in file order.
LabelSpace parse_labels(std::string_view text);

LabelSpace load_labels(const std::string& path);

}  // namespace tnloss
