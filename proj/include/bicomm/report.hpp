#pragma once

#include <json.hpp>

#include "bicomm/grid.hpp"

namespace bicomm {

using json = nlohmann::json;

/// Value + method + witness/enumeration metadata for a norm or constant
/// estimate. Serializes to JSON with fields (space, method, value, witness,
/// metadata).
struct NormReport {
  std::string space;
  std::string method;
  double value = 0.0;
  json witness;   // null, or {kind, ...} re-evaluating to value within 1e-9
  json metadata;  // lattices scanned, sample counts, iteration traces, ...
  bool converged = true;

  json to_json() const {
    return json{{"space", space},   {"method", method},     {"value", value},
                {"witness", witness}, {"metadata", metadata}, {"converged", converged}};
  }
};

inline json interval_json(const Interval& I) {
  return json{{"start", I.start}, {"len", I.len}, {"n", I.n}};
}

inline json rect_json(const Rect& R) {
  return json{{"axis1", interval_json(R.a1)}, {"axis2", interval_json(R.a2)}};
}

}  // namespace bicomm
