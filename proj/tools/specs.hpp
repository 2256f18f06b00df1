#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "rankrace/mfg_equilibrium.hpp"

namespace rankrace::cli {

/// A piecewise function from JSON:
///   {"breakpoints": [0, 0.5, 1],
///    "pieces": [{"constant": 2}, {"affine": [1, -0.5]}],
///    "value_at_one": 0, "continuity": "jumps"}
/// Piece forms: {"constant": a}, {"affine": [a, b]}, {"power": [scale, exponent]},
/// {"power_sum": [[s1, e1], ...]}, {"tabulated": {"grid": [], "values": [], "slopes": []}}.
/// "breakpoints" may be omitted for a single piece on [0, 1].
PiecewiseFn piecewise_from_json(const nlohmann::json& j);

/// A number gives a constant cost; otherwise inline JSON or a path to a JSON file.
MFCost parse_cost(const std::string& text);

/// Inline JSON or a path to a JSON file holding a piecewise descriptor.
nlohmann::json load_json_text(const std::string& text);

/// "1,2.5,3" -> {1, 2.5, 3}
std::vector<double> parse_list(const std::string& text);

/// "4:4096" is the dyadic ladder 4, 8, ..., 4096; "10,20,40" is taken as is.
std::vector<std::size_t> parse_ladder(const std::string& text);

/// RACE_SEED when set, otherwise 1.
std::uint64_t default_seed();

}  // namespace rankrace::cli
