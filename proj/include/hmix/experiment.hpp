#pragma once

// One JSON document describes an experiment; run() turns it into a
// deterministic tree of reports and data files.

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "hmix/analysis.hpp"
#include "hmix/construction.hpp"
#include "hmix/error.hpp"
#include "hmix/moments.hpp"
#include "hmix/rate.hpp"
#include "hmix/serialize.hpp"
#include "hmix/simulate.hpp"

namespace hmix {

inline const std::vector<std::string>& known_analyses() {
  static const std::vector<std::string> names{"variance", "profile",      "simulate",    "ui",
                                              "fdd",      "tightness",    "scaling",     "mixing-bound",
                                              "mixing-exact"};
  return names;
}

inline const std::vector<std::string>& known_builders() {
  static const std::vector<std::string> names{"closed_form", "recursive", "theorem_a_prime", "explicit"};
  return names;
}

struct SequenceSpec {
  std::string builder = "closed_form";
  Rational p = 2;
  std::size_t depth = 4;
  Integer n1 = 2;            // recursive
  std::string b = "1/N";     // theorem_a_prime
  std::string h = "N";       // theorem_a_prime
  Integer seed = 4;          // theorem_a_prime
  std::vector<Integer> terms;  // explicit

  BlockSequence build() const {
    if (builder == "closed_form") return build_theorem_a_sequence(p, depth);
    if (builder == "recursive") return build_recursive_sequence(p, n1, depth);
    if (builder == "theorem_a_prime") {
      TheoremAPrimeInputs in{Rate::parse(b), Rate::parse(h), seed};
      return build_theorem_a_prime_sequence(in, depth);
    }
    if (builder == "explicit") return BlockSequence(terms, p, Origin::kExplicit);
    fail(ErrorCode::kConfigError, "unknown sequence builder '" + builder + "'");
  }

  Json to_json() const {
    Json j = {{"builder", builder}};
    if (builder == "closed_form") {
      j["p"] = to_string(p);
      j["depth"] = depth;
    } else if (builder == "recursive") {
      j["p"] = to_string(p);
      j["n1"] = to_string(n1);
      j["depth"] = depth;
    } else if (builder == "theorem_a_prime") {
      j["b"] = Rate::parse(b).describe();
      j["h"] = Rate::parse(h).describe();
      j["seed"] = to_string(seed);
      j["depth"] = depth;
    } else {
      j["p"] = to_string(p);
      j["terms"] = integer_list(terms);
    }
    return j;
  }
};

struct ExperimentConfig {
  SequenceSpec sequence;
  std::vector<Integer> horizons;
  std::uint64_t replicates = 1000;
  std::optional<std::uint64_t> seed;
  std::size_t component_cap = 0;  // 0 simulates every component
  TruncationPolicy truncation_policy = TruncationPolicy::kError;
  std::vector<std::string> analyses;
  std::vector<double> thresholds{2, 4, 8, 16};
  double lp = 1.5;  // 0 skips the L^p profile
  std::size_t fdd_coordinate = 1;
  std::size_t tightness_coordinates = 1;
  Rational tightness_threshold{3, 10};
  std::string scaling_c = "sqrtN";
  std::vector<Integer> mixing_lags;  // empty: logarithmic grid up to n_K
  unsigned mixing_per_octave = 2;
  TinyBetaSpec tiny;
  std::size_t bootstrap_resamples = 200;
  double bootstrap_level = 0.95;
  std::set<std::string> formats{"json", "csv", "tsv"};
  // Execution settings; they never change the outputs and are not hashed.
  unsigned threads = 1;
  std::string output_dir;

  bool wants(std::string_view analysis) const {
    return std::find(analyses.begin(), analyses.end(), analysis) != analyses.end();
  }
  bool simulates() const { return wants("simulate") || wants("ui"); }

  void validate() const {
    if (std::find(known_builders().begin(), known_builders().end(), sequence.builder) ==
        known_builders().end()) {
      fail(ErrorCode::kConfigError, "unknown sequence builder '" + sequence.builder + "'");
    }
    if (analyses.empty()) fail(ErrorCode::kConfigError, "no analyses requested");
    for (const auto& a : analyses) {
      if (std::find(known_analyses().begin(), known_analyses().end(), a) == known_analyses().end()) {
        fail(ErrorCode::kConfigError, "unknown analysis '" + a + "'");
      }
    }
    const bool needs_grid = wants("variance") || wants("profile") || simulates() || wants("fdd") ||
                            wants("tightness") || wants("scaling");
    if (needs_grid) check_grid(horizons);
    if (simulates() && !seed) fail(ErrorCode::kConfigError, "a seed is required for simulation");
    if (simulates() && replicates < 1) fail(ErrorCode::kConfigError, "replicates must be >= 1");
    if (lp != 0 && !(lp > 1 && lp <= 2)) fail(ErrorCode::kConfigError, "lp must be 0 or lie in (1, 2]");
    for (const auto& f : formats) {
      if (f != "json" && f != "csv" && f != "tsv") fail(ErrorCode::kConfigError, "unknown format '" + f + "'");
    }
    if (!formats.count("json")) fail(ErrorCode::kConfigError, "the json format cannot be disabled");
    if (!(bootstrap_level > 0 && bootstrap_level < 1)) {
      fail(ErrorCode::kConfigError, "bootstrap level must lie in (0, 1)");
    }
  }

  // Canonical form of everything that determines the outputs.
  Json effective() const {
    Json mixing = {{"per_octave", mixing_per_octave},
                   {"lags", integer_list(mixing_lags)},
                   {"tiny", {{"n", to_string(tiny.n)}, {"window", tiny.window}, {"gap", tiny.gap}, {"cap", tiny.cap}}}};
    return {{"sequence", sequence.to_json()},
            {"horizons", integer_list(horizons)},
            {"replicates", replicates},
            {"seed", seed ? Json(*seed) : Json(nullptr)},
            {"component_cap", component_cap},
            {"truncation_policy", std::string(policy_name(truncation_policy))},
            {"analyses", analyses},
            {"thresholds", thresholds},
            {"lp", lp},
            {"fdd", {{"coordinate", fdd_coordinate}}},
            {"tightness", {{"coordinates", tightness_coordinates}, {"threshold", to_string(tightness_threshold)}}},
            {"scaling", {{"c", scaling_c}}},
            {"mixing", mixing},
            {"bootstrap", {{"resamples", bootstrap_resamples}, {"level", bootstrap_level}}},
            {"formats", formats}};
  }

  std::uint64_t hash() const { return fnv1a64(effective().dump()); }
};

namespace detail {

inline void reject_unknown_keys(const Json& j, std::initializer_list<std::string_view> allowed,
                                std::string_view where) {
  for (const auto& [key, _] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      fail(ErrorCode::kConfigError, "unknown key '" + key + "' in " + std::string(where));
    }
  }
}

template <class T>
T get_as(const Json& j, std::string_view key) {
  try {
    return j.get<T>();
  } catch (const Json::exception&) {
    fail(ErrorCode::kConfigError, "wrong type for '" + std::string(key) + "': " + j.dump());
  }
}

inline SequenceSpec sequence_spec_from_json(const Json& j) {
  if (!j.is_object()) fail(ErrorCode::kConfigError, "\"sequence\" must be an object");
  reject_unknown_keys(j, {"builder", "p", "depth", "n1", "b", "h", "seed", "terms"}, "sequence");
  SequenceSpec s;
  if (j.contains("builder")) s.builder = get_as<std::string>(j["builder"], "builder");
  if (j.contains("p")) s.p = json_rational(j["p"]);
  if (j.contains("depth")) s.depth = get_as<std::size_t>(j["depth"], "depth");
  if (j.contains("n1")) s.n1 = json_integer(j["n1"]);
  if (j.contains("b")) s.b = get_as<std::string>(j["b"], "b");
  if (j.contains("h")) s.h = get_as<std::string>(j["h"], "h");
  if (j.contains("seed")) s.seed = json_integer(j["seed"]);
  if (j.contains("terms")) s.terms = json_integers(j["terms"]);
  return s;
}

}  // namespace detail

inline ExperimentConfig config_from_json(const Json& j) {
  using detail::get_as;
  if (!j.is_object()) fail(ErrorCode::kConfigError, "config must be a JSON object");
  detail::reject_unknown_keys(
      j,
      {"sequence", "horizons", "replicates", "seed", "component_cap", "truncation_policy", "analyses",
       "thresholds", "lp", "fdd", "tightness", "scaling", "mixing", "bootstrap", "formats", "threads",
       "output_dir"},
      "config");
  ExperimentConfig c;
  if (j.contains("sequence")) c.sequence = detail::sequence_spec_from_json(j["sequence"]);
  if (j.contains("horizons")) c.horizons = json_integers(j["horizons"]);
  if (j.contains("replicates")) c.replicates = get_as<std::uint64_t>(j["replicates"], "replicates");
  if (j.contains("seed") && !j["seed"].is_null()) c.seed = get_as<std::uint64_t>(j["seed"], "seed");
  if (j.contains("component_cap")) c.component_cap = get_as<std::size_t>(j["component_cap"], "component_cap");
  if (j.contains("truncation_policy")) {
    c.truncation_policy = parse_policy(get_as<std::string>(j["truncation_policy"], "truncation_policy"));
  }
  if (j.contains("analyses")) c.analyses = get_as<std::vector<std::string>>(j["analyses"], "analyses");
  if (j.contains("thresholds")) c.thresholds = get_as<std::vector<double>>(j["thresholds"], "thresholds");
  if (j.contains("lp")) c.lp = get_as<double>(j["lp"], "lp");
  if (j.contains("fdd")) {
    detail::reject_unknown_keys(j["fdd"], {"coordinate"}, "fdd");
    if (j["fdd"].contains("coordinate")) c.fdd_coordinate = get_as<std::size_t>(j["fdd"]["coordinate"], "coordinate");
  }
  if (j.contains("tightness")) {
    const Json& t = j["tightness"];
    detail::reject_unknown_keys(t, {"coordinates", "threshold"}, "tightness");
    if (t.contains("coordinates")) c.tightness_coordinates = get_as<std::size_t>(t["coordinates"], "coordinates");
    if (t.contains("threshold")) c.tightness_threshold = json_rational(t["threshold"]);
  }
  if (j.contains("scaling")) {
    detail::reject_unknown_keys(j["scaling"], {"c"}, "scaling");
    if (j["scaling"].contains("c")) c.scaling_c = get_as<std::string>(j["scaling"]["c"], "c");
  }
  if (j.contains("mixing")) {
    const Json& m = j["mixing"];
    detail::reject_unknown_keys(m, {"lags", "per_octave", "tiny"}, "mixing");
    if (m.contains("lags")) c.mixing_lags = json_integers(m["lags"]);
    if (m.contains("per_octave")) c.mixing_per_octave = get_as<unsigned>(m["per_octave"], "per_octave");
    if (m.contains("tiny")) {
      const Json& t = m["tiny"];
      detail::reject_unknown_keys(t, {"n", "window", "gap", "cap"}, "mixing.tiny");
      if (t.contains("n")) c.tiny.n = json_integer(t["n"]);
      if (t.contains("window")) c.tiny.window = get_as<std::size_t>(t["window"], "window");
      if (t.contains("gap")) c.tiny.gap = get_as<std::size_t>(t["gap"], "gap");
      if (t.contains("cap")) c.tiny.cap = get_as<std::size_t>(t["cap"], "cap");
    }
  }
  if (j.contains("bootstrap")) {
    const Json& b = j["bootstrap"];
    detail::reject_unknown_keys(b, {"resamples", "level"}, "bootstrap");
    if (b.contains("resamples")) c.bootstrap_resamples = get_as<std::size_t>(b["resamples"], "resamples");
    if (b.contains("level")) c.bootstrap_level = get_as<double>(b["level"], "level");
  }
  if (j.contains("formats")) {
    auto f = get_as<std::vector<std::string>>(j["formats"], "formats");
    c.formats = std::set<std::string>(f.begin(), f.end());
  }
  if (j.contains("threads")) c.threads = get_as<unsigned>(j["threads"], "threads");
  if (j.contains("output_dir")) c.output_dir = get_as<std::string>(j["output_dir"], "output_dir");
  return c;
}

inline constexpr const char* kOutputDirEnv = "HMIX_OUTPUT_DIR";

inline std::string default_output_dir() {
  const char* env = std::getenv(kOutputDirEnv);
  return env && *env ? env : "hmix-out";
}

// ---------------------------------------------------------------------------
// Run
// ---------------------------------------------------------------------------

inline Json report_envelope(std::string_view analysis, const Provenance& prov, const BlockSequence& seq,
                            Json result) {
  return {{"analysis", analysis},
          {"config_hash", hex64(prov.config_hash)},
          {"seed", prov.seed_json()},
          {"version", kVersion},
          {"sequence", to_json(seq)},
          {"index_note", kIndexNote},
          {"result", std::move(result)}};
}

class OutputTree {
 public:
  OutputTree(std::filesystem::path root, std::set<std::string> formats)
      : root_(std::move(root)), formats_(std::move(formats)) {}

  void write(const std::string& name, std::string_view format, const std::string& contents) {
    if (!formats_.count(std::string(format))) return;
    write_atomic(root_ / name, contents);
    files_[name] = hex64(fnv1a64(contents));
  }
  void json(const std::string& name, const Json& j) { write(name, "json", j.dump(2) + "\n"); }

  const std::map<std::string, std::string>& files() const { return files_; }
  const std::filesystem::path& root() const { return root_; }

 private:
  std::filesystem::path root_;
  std::set<std::string> formats_;
  std::map<std::string, std::string> files_;
};

inline std::vector<std::pair<std::string, double>> points_of(const std::vector<Integer>& xs,
                                                              const std::vector<double>& ys) {
  std::vector<std::pair<std::string, double>> out;
  for (std::size_t i = 0; i < xs.size(); ++i) out.emplace_back(to_string(xs[i]), ys[i]);
  return out;
}

struct RunResult {
  std::filesystem::path output_dir;
  std::uint64_t config_hash = 0;
  std::vector<std::string> files;
};

// Analyses run in the fixed order construction, moments, simulation, analysis.
inline RunResult run(const ExperimentConfig& config) {
  config.validate();
  const BlockSequence seq = config.sequence.build();
  const Provenance prov{config.hash(), config.seed};
  OutputTree out(config.output_dir.empty() ? default_output_dir() : config.output_dir, config.formats);

  out.json("sequence.json", report_envelope("sequence", prov, seq,
                                            {{"condition_c", to_json(validate_condition_c(seq, seq.exponent()))}}));

  if (config.wants("variance")) {
    std::vector<VarianceReport> reports;
    Json rows = Json::array();
    std::vector<double> ratio;
    std::vector<Integer> ratio_x;
    for (const auto& n : config.horizons) {
      reports.push_back(total_variance(seq, n));
      rows.push_back(to_json(reports.back()));
      if (reports.back().ratio) {
        ratio_x.push_back(n);
        ratio.push_back(to_double(reports.back().ratio->lo));
      }
    }
    out.json("variance.json", report_envelope("variance", prov, seq, {{"horizons", rows}}));
    out.write("variance.csv", "csv", variance_csv(reports, prov));
    out.write("variance_ratio.tsv", "tsv", two_column_tsv("N", "sigma2_over_N_iN", points_of(ratio_x, ratio), prov));
  }

  if (config.wants("profile")) {
    Json rows = Json::array();
    std::vector<double> s1;
    for (const auto& n : config.horizons) {
      MassProfile m = mass_profile(seq, n);
      s1.push_back(to_double(m.shares.front()));
      rows.push_back(to_json(m));
    }
    out.json("profile.json", report_envelope("profile", prov, seq, {{"horizons", rows}}));
    out.write("profile_share1.tsv", "tsv", two_column_tsv("N", "share_1", points_of(config.horizons, s1), prov));
  }

  if (config.simulates()) {
    SampleConfig sc{*config.seed, config.replicates, config.component_cap, config.horizons,
                    config.truncation_policy, config.threads};
    SampleBatch batch = simulate_batch(seq, sc);
    batch.config_hash = prov.config_hash;
    if (config.wants("simulate")) {
      Json result = {{"active_components", batch.active},
                     {"replicates", config.replicates},
                     {"note", batch.note},
                     {"events", batch.work.events},
                     {"summary", to_json(summarize(batch))}};
      out.json("simulate.json", report_envelope("simulate", prov, seq, result));
      out.write("batch.csv", "csv", batch_csv(batch, prov));
    }
    if (config.wants("ui")) {
      BootstrapOptions bo{config.bootstrap_resamples, config.bootstrap_level, *config.seed};
      UIProfile ui = ui_tail_profile(batch, config.thresholds, bo);
      Json result = {{"profile", to_json(ui)}, {"note", batch.note}};
      if (config.lp != 0) result["lp"] = to_json(lp_profile(batch, config.lp, bo));
      out.json("ui.json", report_envelope("ui", prov, seq, result));
      std::vector<std::pair<std::string, double>> pts;
      for (std::size_t m = 0; m < ui.thresholds.size(); ++m) pts.emplace_back(format_double(ui.thresholds[m]), ui.sup[m]);
      out.write("ui_sup.tsv", "tsv", two_column_tsv("M", "sup_N_tail_mean", pts, prov));
    }
  }

  if (config.wants("fdd")) {
    NullityReport r = coordinate_nullity(seq, config.fdd_coordinate, config.horizons);
    out.json("fdd.json", report_envelope("fdd", prov, seq, to_json(r)));
    std::vector<double> ys;
    for (const auto& q : r.ratios) ys.push_back(to_double(q));
    out.write("fdd.tsv", "tsv", two_column_tsv("N", "coordinate_share", points_of(r.grid, ys), prov));
  }

  if (config.wants("tightness")) {
    EscapeCertificate c =
        escape_certificate(seq, config.tightness_coordinates, config.horizons, config.tightness_threshold);
    out.json("tightness.json", report_envelope("tightness", prov, seq, to_json(c)));
    std::vector<double> ys;
    for (const auto& q : c.low) ys.push_back(to_double(q));
    out.write("tightness.tsv", "tsv", two_column_tsv("N", "low_share", points_of(c.grid, ys), prov));
  }

  if (config.wants("scaling")) {
    ScalingReport r = scaling_dichotomy(seq, ScalingSpec::parse(config.scaling_c, config.horizons));
    out.json("scaling.json", report_envelope("scaling", prov, seq, to_json(r)));
    std::vector<Integer> xs;
    std::vector<double> ys;
    for (const auto& p : r.points) {
      xs.push_back(p.horizon);
      ys.push_back(p.ratio);
    }
    out.write("scaling.tsv", "tsv", two_column_tsv("N", "sigma_over_c", points_of(xs, ys), prov));
  }

  if (config.wants("mixing-bound")) {
    std::vector<Integer> lags =
        config.mixing_lags.empty() ? log_lag_grid(seq.last(), config.mixing_per_octave) : config.mixing_lags;
    MixingBoundReport r = mixing_bound_report(seq, lags);
    out.json("mixing_bound.json", report_envelope("mixing-bound", prov, seq, to_json(r)));
    std::vector<Integer> xs;
    std::vector<double> ys;
    for (const auto& e : r.entries) {
      xs.push_back(e.lag);
      ys.push_back(to_double(e.bound));
    }
    out.write("mixing_bound.tsv", "tsv", two_column_tsv("l", "beta_bound", points_of(xs, ys), prov));
  }

  if (config.wants("mixing-exact")) {
    TinyBetaResult r = beta_exact_tiny(config.tiny);
    out.json("mixing_exact.json", report_envelope("mixing-exact", prov, seq, to_json(config.tiny, r)));
  }

  Json files = Json::object();
  for (const auto& [name, digest] : out.files()) files[name] = digest;
  Json manifest = {{"config_hash", hex64(prov.config_hash)},
                   {"seed", prov.seed_json()},
                   {"version", kVersion},
                   {"effective_config", config.effective()},
                   {"files", files}};
  out.json("manifest.json", manifest);

  RunResult result{out.root(), prov.config_hash, {}};
  for (const auto& [name, _] : out.files()) result.files.push_back(name);
  return result;
}

// ---------------------------------------------------------------------------
// Collation
// ---------------------------------------------------------------------------

// Merges every JSON report in `dir` into summary.json. All reports must carry
// the same config hash.
inline Json collate_reports(const std::filesystem::path& dir) {
  std::error_code ec;
  if (!std::filesystem::is_directory(dir, ec)) fail(ErrorCode::kIoError, dir.string() + " is not a directory");
  std::vector<std::filesystem::path> paths;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    const auto& p = entry.path();
    if (p.extension() == ".json" && p.filename() != "summary.json") paths.push_back(p);
  }
  std::sort(paths.begin(), paths.end());
  if (paths.empty()) fail(ErrorCode::kEmptyBatch, "no JSON reports in " + dir.string());
  std::optional<std::string> hash;
  Json seed;
  Json reports = Json::object();
  for (const auto& p : paths) {
    Json j = parse_json(read_file(p), p.string());
    if (!j.is_object() || !j.contains("config_hash")) {
      fail(ErrorCode::kHashMismatch, p.filename().string() + " carries no config hash");
    }
    const std::string h = j["config_hash"].get<std::string>();
    if (hash && *hash != h) {
      fail(ErrorCode::kHashMismatch,
           p.filename().string() + " has config hash " + h + ", expected " + *hash);
    }
    hash = h;
    seed = j.value("seed", Json(nullptr));
    const std::string name = p.stem().string();
    reports[name] = j.contains("result") ? j["result"] : j;
  }
  return {{"config_hash", *hash}, {"seed", seed}, {"version", kVersion}, {"reports", reports}};
}

}  // namespace hmix
