#pragma once

// JSON, CSV and TSV encodings. Rationals travel as {"exact": "a/b",
// "approx": double}; big integers as decimal strings.

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "hmix/analysis.hpp"
#include "hmix/construction.hpp"
#include "hmix/error.hpp"
#include "hmix/exact.hpp"
#include "hmix/moments.hpp"
#include "hmix/simulate.hpp"

namespace hmix {

using Json = nlohmann::json;

inline constexpr std::string_view kVersion = "1.0.0";
inline constexpr std::string_view kIndexNote =
    "i(N) = 0 when N < n_1; i(N) is omitted when N >= n_K (not fixed by the truncation)";

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// Shortest round-trip decimal.
inline std::string format_double(double x) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
  if (ec != std::errc{}) return "nan";
  return std::string(buf, end);
}

inline Json exact_number(const Rational& q) { return {{"exact", to_string(q)}, {"approx", to_double(q)}}; }

inline Json integer_list(const std::vector<Integer>& xs) {
  Json out = Json::array();
  for (const auto& x : xs) out.push_back(to_string(x));
  return out;
}

inline Integer json_integer(const Json& j) {
  if (j.is_string()) return parse_integer(j.get<std::string>());
  if (j.is_number_unsigned()) return Integer(std::to_string(j.get<std::uint64_t>()));
  if (j.is_number_integer()) return Integer(std::to_string(j.get<std::int64_t>()));
  fail(ErrorCode::kParseError, "expected an integer or decimal string, got " + j.dump());
}

inline Rational json_rational(const Json& j) {
  if (j.is_string()) return parse_rational(j.get<std::string>());
  if (j.is_number_integer()) return Rational(json_integer(j));
  if (j.is_number_float()) return parse_rational(format_double(j.get<double>()));
  if (j.is_object() && j.contains("exact") && j["exact"].is_string()) {
    return parse_rational(j["exact"].get<std::string>());
  }
  fail(ErrorCode::kParseError, "expected a rational, got " + j.dump());
}

inline std::vector<Integer> json_integers(const Json& j) {
  if (!j.is_array()) fail(ErrorCode::kParseError, "expected an array of integers");
  std::vector<Integer> out;
  for (const auto& x : j) out.push_back(json_integer(x));
  return out;
}

// ---------------------------------------------------------------------------
// Sequences
// ---------------------------------------------------------------------------

inline Json to_json(const BlockSequence& seq) {
  return {{"terms", integer_list(seq.terms())},
          {"p", to_string(seq.exponent())},
          {"origin", std::string(origin_name(seq.origin()))}};
}

inline BlockSequence sequence_from_json(const Json& j) {
  if (!j.is_object() || !j.contains("terms") || !j.contains("p")) {
    fail(ErrorCode::kParseError, "sequence JSON needs \"terms\" and \"p\"");
  }
  Origin origin = j.contains("origin") ? parse_origin(j.at("origin").get<std::string>())
                                       : Origin::kExplicit;
  return BlockSequence(json_integers(j.at("terms")), json_rational(j.at("p")), origin);
}

inline Json to_json(const ConditionCReport& r) {
  Json failures = Json::array();
  for (auto k : r.failures) failures.push_back(k);
  return {{"p", to_string(r.exponent)}, {"passed", r.passed()}, {"failures", failures}};
}

// ---------------------------------------------------------------------------
// Moments
// ---------------------------------------------------------------------------

inline Json to_json(const RationalInterval& r) {
  return {{"lo", exact_number(r.lo)}, {"hi", exact_number(r.hi)}};
}

inline Json to_json(const VarianceReport& v) {
  Json comps = Json::array();
  for (std::size_t k = 0; k < v.components.size(); ++k) {
    comps.push_back({{"k", k + 1},
                     {"n_k", to_string(v.terms[k])},
                     {"sigma2", exact_number(v.components[k])},
                     {"share", exact_number(v.shares[k])}});
  }
  Json out = {{"horizon", to_string(v.horizon)},
              {"components", comps},
              {"truncated_total", exact_number(v.truncated_total)},
              {"tail_bound", exact_number(v.tail_bound)},
              {"total", to_json(v.total())},
              {"index", v.index ? Json(*v.index) : Json(nullptr)},
              {"ratio", v.ratio ? to_json(*v.ratio) : Json(nullptr)}};
  return out;
}

inline Json to_json(const MassProfile& m) {
  Json shares = Json::array(), cumulative = Json::array(), tail = Json::array();
  for (std::size_t k = 0; k < m.shares.size(); ++k) {
    shares.push_back(exact_number(m.shares[k]));
    cumulative.push_back(exact_number(m.cumulative[k]));
    tail.push_back(exact_number(m.tail_shares[k]));
  }
  return {{"horizon", to_string(m.horizon)},
          {"shares", shares},
          {"cumulative", cumulative},
          {"tail_shares", tail},
          {"deficit_bound", exact_number(m.deficit_bound)}};
}

// ---------------------------------------------------------------------------
// Analysis
// ---------------------------------------------------------------------------

inline Json to_json(const TrendVerdict& t) {
  return {{"trend", std::string(trend_name(t.trend))},
          {"window_begin", t.window_begin},
          {"conclusive", t.conclusive}};
}

inline Json to_json(const ConfidenceInterval& c) {
  return {{"estimate", c.estimate}, {"lo", c.lo}, {"hi", c.hi}};
}

inline Json to_json(const UIProfile& p) {
  Json rows = Json::array();
  for (std::size_t h = 0; h < p.horizons.size(); ++h) {
    rows.push_back({{"horizon", to_string(p.horizons[h])},
                    {"mean_z", p.mean_z[h]},
                    {"tail_means", p.tail[h]}});
  }
  Json sup = Json::array();
  for (std::size_t m = 0; m < p.thresholds.size(); ++m) {
    sup.push_back({{"M", p.thresholds[m]}, {"sup", to_json(p.sup_ci[m])}});
  }
  return {{"thresholds", p.thresholds}, {"horizons", rows}, {"sup_over_N", sup}, {"monotone_in_M", p.monotone}};
}

inline Json to_json(const LpProfile& p) {
  Json rows = Json::array();
  for (std::size_t h = 0; h < p.horizons.size(); ++h) {
    rows.push_back({{"horizon", to_string(p.horizons[h])}, {"moment", to_json(p.moments[h])}});
  }
  return {{"p", p.p}, {"horizons", rows}, {"bound", p.bound}};
}

inline Json to_json(const NullityReport& r) {
  Json rows = Json::array();
  for (std::size_t i = 0; i < r.grid.size(); ++i) {
    rows.push_back({{"horizon", to_string(r.grid[i])},
                    {"ratio", exact_number(r.ratios[i])},
                    {"deficit_bound", exact_number(r.deficits[i])}});
  }
  return {{"coordinate", r.coordinate},
          {"grid", rows},
          {"trend", to_json(r.trend)},
          {"verdict", r.decreasing() ? "decreasing" : "not_decreasing"}};
}

inline Json to_json(const EscapeCertificate& c) {
  Json rows = Json::array();
  for (std::size_t i = 0; i < c.grid.size(); ++i) {
    rows.push_back({{"horizon", to_string(c.grid[i])},
                    {"low", exact_number(c.low[i])},
                    {"deficit_bound", exact_number(c.deficits[i])}});
  }
  return {{"coordinates", c.coordinates},
          {"threshold", exact_number(c.threshold)},
          {"grid", rows},
          {"trend", to_json(c.trend)},
          {"below_threshold", c.below_threshold},
          {"holds", c.holds()}};
}

inline Json to_json(const ScalingReport& r) {
  Json rows = Json::array();
  for (const auto& p : r.points) {
    rows.push_back({{"horizon", to_string(p.horizon)},
                    {"sigma2", exact_number(p.sigma2)},
                    {"ratio_squared", p.ratio_squared ? exact_number(*p.ratio_squared) : Json(nullptr)},
                    {"ratio", p.ratio},
                    {"ratio_with_tail", p.ratio_upper}});
  }
  return {{"c", r.c},
          {"grid", rows},
          {"trend", to_json(r.trend)},
          {"verdict", r.verdict},
          {"r", r.r},
          {"witness", integer_list(r.witness)}};
}

inline Json to_json(const MixingBoundEntry& e) {
  return {{"lag", to_string(e.lag)},
          {"head", exact_number(e.head)},
          {"tail", exact_number(e.tail)},
          {"bound", exact_number(e.bound)},
          {"normalized", e.normalized}};
}

inline Json to_json(const MixingBoundReport& r) {
  Json rows = Json::array();
  for (const auto& e : r.entries) rows.push_back(to_json(e));
  return {{"q", exact_number(r.q)},
          {"entries", rows},
          {"nonincreasing", r.nonincreasing},
          {"within_unit", r.within_unit},
          {"alpha_note", "alpha(l) <= bound(l) / 2"}};
}

inline Json to_json(const TinyBetaSpec& s, const TinyBetaResult& r) {
  return {{"n_k", to_string(s.n)},
          {"window", s.window},
          {"gap", s.gap},
          {"kind", "windowed"},
          {"beta", exact_number(r.beta)},
          {"alpha_bound", exact_number(r.alpha_bound)},
          {"single_component_bound", exact_number(r.single_component_bound)},
          {"indices", r.indices},
          {"states", r.states},
          {"enumerated", r.enumerated}};
}

// ---------------------------------------------------------------------------
// Simulation
// ---------------------------------------------------------------------------

inline Json to_json(const std::vector<HorizonSummary>& summaries) {
  Json rows = Json::array();
  for (const auto& s : summaries) {
    Json q = Json::array();
    for (const auto& [level, value] : s.z_quantiles) q.push_back({{"level", level}, {"value", value}});
    rows.push_back({{"horizon", to_string(s.horizon)},
                    {"sigma2_truncated", s.sigma2},
                    {"mean_z", s.mean_z},
                    {"variance_z", s.variance_z},
                    {"mean_norm2", s.mean_norm2},
                    {"component_means", s.component_means},
                    {"component_variances", s.component_variances},
                    {"z_quantiles", q}});
  }
  return rows;
}

// Config hash and seed carried by every output file.
struct Provenance {
  std::uint64_t config_hash = 0;
  std::optional<std::uint64_t> seed;

  Json seed_json() const { return seed ? Json(*seed) : Json(nullptr); }
  std::string seed_text() const { return seed ? std::to_string(*seed) : "none"; }
};

inline std::string provenance_comment(const Provenance& p) {
  return "# config_hash=" + hex64(p.config_hash) + " seed=" + p.seed_text() + "\n";
}

// One row per (horizon, replicate): N, S_1..S_K, norm2, Z.
inline std::string batch_csv(const SampleBatch& batch, const Provenance& provenance) {
  std::ostringstream out;
  out << provenance_comment(provenance);
  out << "N,replicate";
  for (std::size_t k = 1; k <= batch.active; ++k) out << ",S" << k;
  out << ",norm2,Z\n";
  for (const auto& hb : batch.horizons) {
    const std::string n = to_string(hb.horizon);
    for (std::size_t r = 0; r < hb.rows.size(); ++r) {
      const auto& row = hb.rows[r];
      out << n << ',' << r;
      for (std::int64_t v : row.sums) out << ',' << v;
      out << ',' << format_double(row.norm2) << ',' << format_double(row.z) << '\n';
    }
  }
  return out.str();
}

inline std::string variance_csv(const std::vector<VarianceReport>& reports,
                                const Provenance& provenance) {
  std::ostringstream out;
  out << provenance_comment(provenance);
  out << "N,k,n_k,sigma2_exact,sigma2_float,share\n";
  for (const auto& v : reports) {
    for (std::size_t k = 0; k < v.components.size(); ++k) {
      out << to_string(v.horizon) << ',' << k + 1 << ',' << to_string(v.terms[k]) << ','
          << to_string(v.components[k]) << ',' << format_double(to_double(v.components[k])) << ','
          << format_double(to_double(v.shares[k])) << '\n';
    }
  }
  return out.str();
}

// Two-column plot data.
inline std::string two_column_tsv(std::string_view x_name, std::string_view y_name,
                                  const std::vector<std::pair<std::string, double>>& points,
                                  const Provenance& provenance) {
  std::ostringstream out;
  out << provenance_comment(provenance);
  out << x_name << '\t' << y_name << '\n';
  for (const auto& [x, y] : points) out << x << '\t' << format_double(y) << '\n';
  return out.str();
}

// ---------------------------------------------------------------------------
// Files
// ---------------------------------------------------------------------------

// Writes `path` by renaming a completed sibling temp file over it.
inline void write_atomic(const std::filesystem::path& path, std::string_view contents) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  if (ec) fail(ErrorCode::kIoError, "cannot create " + path.parent_path().string() + ": " + ec.message());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::kIoError, "cannot open " + tmp.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) fail(ErrorCode::kIoError, "write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path, ec);
  if (ec) fail(ErrorCode::kIoError, "cannot rename onto " + path.string() + ": " + ec.message());
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIoError, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline Json parse_json(std::string_view text, std::string_view what) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    fail(ErrorCode::kParseError, std::string(what) + ": " + e.what());
  }
}

}  // namespace hmix
