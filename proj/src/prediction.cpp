#include "tnloss/prediction.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

#include "tnloss/errors.hpp"

namespace tnloss {

namespace {

constexpr char kMagic[4] = {'P', 'M', 'A', 'T'};

static_assert(std::endian::native == std::endian::little,
              "PMAT I/O assumes a little-endian host");

std::uint32_t read_u32(std::istream& in) {
  std::uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), 4);
  return v;
}

}  // namespace

Matrix<float> parse_prediction_csv(std::string_view text, DomainCheck mode) {
  std::vector<std::vector<float>> rows;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<float> row;
    std::istringstream cells(line);
    std::string cell;
    while (std::getline(cells, cell, ',')) {
      try {
        std::size_t used = 0;
        float v = std::stof(cell, &used);
        while (used < cell.size() && std::isspace(static_cast<unsigned char>(cell[used]))) ++used;
        if (used != cell.size()) throw std::invalid_argument(cell);
        row.push_back(v);
      } catch (const std::exception&) {
        throw parse_error("csv line " + std::to_string(line_no) + ": bad number '" + cell + "'");
      }
    }
    if (row.empty()) throw parse_error("csv line " + std::to_string(line_no) + ": no values");
    if (!rows.empty() && row.size() != rows.front().size())
      throw parse_error("csv line " + std::to_string(line_no) + ": expected " +
                        std::to_string(rows.front().size()) + " values, got " +
                        std::to_string(row.size()));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw parse_error("csv: no data rows");

  Matrix<float> m(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j];
  ensure_unit(m, mode);
  return m;
}

Matrix<float> read_pmat(std::istream& in) {
  char magic[4] = {};
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0) throw parse_error("pmat: bad magic");
  std::uint32_t rows = read_u32(in);
  std::uint32_t cols = read_u32(in);
  if (!in) throw parse_error("pmat: truncated header");
  Matrix<float> m(rows, cols);
  in.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(m.size() * 4));
  if (static_cast<std::size_t>(in.gcount()) != m.size() * 4)
    throw parse_error("pmat: truncated payload (expected " + std::to_string(m.size() * 4) +
                      " bytes)");
  return m;
}

void write_pmat(std::ostream& out, const Matrix<float>& m) {
  out.write(kMagic, 4);
  std::uint32_t rows = static_cast<std::uint32_t>(m.rows());
  std::uint32_t cols = static_cast<std::uint32_t>(m.cols());
  out.write(reinterpret_cast<const char*>(&rows), 4);
  out.write(reinterpret_cast<const char*>(&cols), 4);
  out.write(reinterpret_cast<const char*>(m.data()), static_cast<std::streamsize>(m.size() * 4));
}

Matrix<float> load_prediction(const std::string& path, DomainCheck mode) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw parse_error("cannot open prediction file: " + path);
  char magic[4] = {};
  in.read(magic, 4);
  bool is_pmat = in.gcount() == 4 && std::memcmp(magic, kMagic, 4) == 0;
  in.clear();
  in.seekg(0);
  if (is_pmat) {
    Matrix<float> m = read_pmat(in);
    ensure_unit(m, mode);
    return m;
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_prediction_csv(buf.str(), mode);
}

void save_pmat(const std::string& path, const Matrix<float>& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw parse_error("cannot open for writing: " + path);
  write_pmat(out, m);
  if (!out) throw parse_error("write failed: " + path);
}

}  // namespace tnloss
