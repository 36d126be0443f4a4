#include "tnloss/tnorm.hpp"

namespace tnloss {

const char* to_string(TNormKind kind) {
  switch (kind) {
    case TNormKind::godel: return "godel";
    case TNormKind::lukasiewicz: return "lukasiewicz";
    case TNormKind::product: return "product";
  }
  return "?";
}

TNormKind parse_tnorm(std::string_view name) {
  if (name == "godel") return TNormKind::godel;
  if (name == "lukasiewicz") return TNormKind::lukasiewicz;
  if (name == "product") return TNormKind::product;
  throw parse_error("unknown t-norm '" + std::string(name) +
                    "' (expected godel|lukasiewicz|product)");
}

}  // namespace tnloss
