#include "tnloss/labels.hpp"

#include <fstream>
#include <sstream>
#include <unordered_set>

#include "tnloss/errors.hpp"

namespace tnloss {

namespace {

std::string_view strip_cr(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  return line;
}

}  // namespace

LabelSpace parse_labels(std::string_view text) {
  LabelSpace space;
  std::unordered_set<std::string> seen;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    std::string_view line = strip_cr(text.substr(pos, eol == std::string_view::npos ? std::string_view::npos : eol - pos));
    pos = eol == std::string_view::npos ? text.size() : eol + 1;

    if (line.empty() && pos >= text.size()) break;  // trailing newline
    ++line_no;

    std::string_view name = line;
    if (std::size_t tab = line.find('\t'); tab != std::string_view::npos) {
      std::string_view index_part = line.substr(0, tab);
      name = line.substr(tab + 1);
      std::size_t parsed = 0;
      try {
        parsed = std::stoul(std::string(index_part));
      } catch (const std::exception&) {
        throw parse_error("label map line " + std::to_string(line_no) + ": bad index '" +
                          std::string(index_part) + "'");
      }
      if (parsed != line_no - 1)
        throw parse_error("label map line " + std::to_string(line_no) + ": index " +
                          std::to_string(parsed) + " out of order (expected " +
                          std::to_string(line_no - 1) + ")");
    }
    if (name.empty())
      throw parse_error("label map line " + std::to_string(line_no) + ": empty label name");
    space.names.emplace_back(name);
    if (!seen.insert(space.names.back()).second)
      throw parse_error("duplicate label '" + space.names.back() + "'");
  }
  if (space.names.empty()) throw parse_error("label map is empty");
  return space;
}

LabelSpace load_labels(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw parse_error("cannot open label map: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_labels(buf.str());
}

}  // namespace tnloss
