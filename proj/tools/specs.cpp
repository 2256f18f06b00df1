#include "specs.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "rankrace/errors.hpp"

namespace rankrace::cli {
namespace {

using nlohmann::json;

[[noreturn]] void bad(const std::string& msg) { throw Error(ErrorKind::InvalidParameter, msg); }

double parse_double(const std::string& s) {
  double x = 0.0;
  const char* end = s.data() + s.size();
  const auto res = std::from_chars(s.data(), end, x);
  if (res.ec != std::errc() || res.ptr != end) bad("not a number: '" + s + "'");
  return x;
}

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t");
  return s.substr(a, b - a + 1);
}

std::vector<double> numbers(const json& j, const char* what) {
  if (!j.is_array()) bad(std::string(what) + " must be an array of numbers");
  std::vector<double> out;
  for (const auto& x : j) {
    if (!x.is_number()) bad(std::string(what) + " must be an array of numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

Piece piece_from_json(const json& j) {
  if (!j.is_object() || j.size() != 1) bad("each piece must be an object with one key");
  const std::string kind = j.begin().key();
  const json& v = j.begin().value();
  if (kind == "constant") return Constant{v.get<double>()};
  if (kind == "affine") {
    const auto p = numbers(v, "affine");
    if (p.size() != 2) bad("affine takes [intercept, slope]");
    return Affine{p[0], p[1]};
  }
  if (kind == "power") {
    const auto p = numbers(v, "power");
    if (p.size() != 2) bad("power takes [scale, exponent]");
    return Power{p[0], p[1]};
  }
  if (kind == "power_sum") {
    PowerSum s;
    for (const auto& t : v) {
      const auto p = numbers(t, "power_sum term");
      if (p.size() != 2) bad("power_sum terms are [scale, exponent]");
      s.terms.push_back({p[0], p[1]});
    }
    return s;
  }
  if (kind == "tabulated") {
    Tabulated t;
    t.grid = numbers(v.at("grid"), "grid");
    t.values = numbers(v.at("values"), "values");
    if (v.contains("slopes")) t.slopes = numbers(v.at("slopes"), "slopes");
    return t;
  }
  bad("unknown piece kind '" + kind + "'");
}

}  // namespace

PiecewiseFn piecewise_from_json(const json& j) {
  if (j.is_number()) return PiecewiseFn::constant(j.get<double>());
  if (!j.is_object() || !j.contains("pieces")) bad("a piecewise descriptor needs \"pieces\"");
  std::vector<Piece> pieces;
  for (const auto& p : j.at("pieces")) pieces.push_back(piece_from_json(p));
  std::vector<double> bps = j.contains("breakpoints") ? numbers(j.at("breakpoints"), "breakpoints")
                                                      : std::vector<double>{0.0, 1.0};
  PiecewiseOptions opts;
  if (j.contains("value_at_one")) opts.value_at_one = j.at("value_at_one").get<double>();
  if (j.contains("allow_non_lipschitz")) opts.allow_non_lipschitz = j.at("allow_non_lipschitz").get<bool>();
  return PiecewiseFn(std::move(bps), std::move(pieces), opts);
}

json load_json_text(const std::string& text) {
  const std::string t = trim(text);
  if (!t.empty() && (t.front() == '{' || t.front() == '[')) {
    try {
      return json::parse(t);
    } catch (const json::exception& e) {
      bad(std::string("malformed JSON: ") + e.what());
    }
  }
  std::ifstream in(t);
  if (!in) bad("'" + t + "' is neither JSON nor a readable file");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    bad("malformed JSON in " + t + ": " + e.what());
  }
}

MFCost parse_cost(const std::string& text) {
  const std::string t = trim(text);
  double x = 0.0;
  const char* end = t.data() + t.size();
  if (const auto res = std::from_chars(t.data(), end, x); res.ec == std::errc() && res.ptr == end) {
    return MFCost::constant(x);
  }
  const json j = load_json_text(t);
  CostContinuity cont = CostContinuity::Required;
  if (j.is_object() && j.contains("continuity")) {
    const std::string c = j.at("continuity").get<std::string>();
    if (c == "jumps") {
      cont = CostContinuity::AllowJumps;
    } else if (c != "required") {
      bad("continuity must be \"required\" or \"jumps\"");
    }
  }
  return MFCost(piecewise_from_json(j), cont);
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_double(trim(item)));
  if (out.empty()) bad("empty list");
  return out;
}

std::vector<std::size_t> parse_ladder(const std::string& text) {
  std::vector<std::size_t> out;
  if (const auto colon = text.find(':'); colon != std::string::npos) {
    const double lo = parse_double(trim(text.substr(0, colon)));
    const double hi = parse_double(trim(text.substr(colon + 1)));
    if (!(lo >= 1 && hi >= lo && hi <= 1e12)) bad("ladder a:b needs 1 <= a <= b");
    for (double n = lo; n <= hi; n *= 2) out.push_back(static_cast<std::size_t>(n));
    return out;
  }
  for (double x : parse_list(text)) {
    if (!(x >= 1 && x == std::floor(x))) bad("ladder entries must be positive integers");
    out.push_back(static_cast<std::size_t>(x));
  }
  return out;
}

std::uint64_t default_seed() {
  if (const char* env = std::getenv("RACE_SEED")) {
    std::uint64_t s = 0;
    const std::string t = trim(env);
    const char* end = t.data() + t.size();
    const auto res = std::from_chars(t.data(), end, s);
    if (res.ec != std::errc() || res.ptr != end) bad("RACE_SEED must be a non-negative integer");
    return s;
  }
  return 1;
}

}  // namespace rankrace::cli
