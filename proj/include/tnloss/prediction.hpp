#pragma once

#include <iosfwd>
#include <string>
#include <string_view>

#include "tnloss/matrix.hpp"
#include "tnloss/tnorm.hpp"

namespace tnloss {

// Prediction matrix file formats:
//   CSV:  one row per output, comma-separated decimals.
//   PMAT: magic "PMAT", u32 LE rows, u32 LE cols, rows*cols LE f32 row-major.
// load_prediction sniffs the format by the 4-byte magic.

Matrix<float> parse_prediction_csv(std::string_view text, DomainCheck mode);

Matrix<float> read_pmat(std::istream& in);
void write_pmat(std::ostream& out, const Matrix<float>& m);

Matrix<float> load_prediction(const std::string& path, DomainCheck mode);
void save_pmat(const std::string& path, const Matrix<float>& m);

}  // namespace tnloss
