// hmix command-line tool. Exit status: 0 success, 1 invalid input or
// configuration, 2 runtime failure.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hmix/analysis.hpp"
#include "hmix/construction.hpp"
#include "hmix/experiment.hpp"
#include "hmix/moments.hpp"
#include "hmix/serialize.hpp"
#include "hmix/simulate.hpp"

namespace {

using namespace hmix;

// An input file that cannot be read is a bad invocation, not a runtime fault.
Json read_input(const std::string& path) {
  try {
    return parse_json(read_file(path), path);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kIoError) throw;
    fail(ErrorCode::kConfigError, "cannot read input file " + path);
  }
}

struct SequenceOptions {
  std::string file;
  bool closed_form = false;
  bool recursive = false;
  bool prime = false;
  std::vector<std::string> terms;
  std::string p = "2";
  std::size_t depth = 4;
  std::optional<std::string> n1;
  std::string b = "1/N";
  std::string h = "N";

  void attach(CLI::App* app) {
    auto* group = app->add_option_group("sequence", "Block sequence selection");
    auto* seq = group->add_option("--seq", file, "Sequence JSON file");
    auto* cf = group->add_flag("--closed-form", closed_form, "n_k = floor(2^(p^k)) (default)");
    auto* rec = group->add_flag("--recursive", recursive, "n_{k+1} = max(ceil(n_k^p), n_k + 1)");
    auto* pr = group->add_flag("--prime", prime, "Rate-driven recursion from --rate-b and --rate-h");
    auto* ex = group->add_option("--terms", terms, "Explicit terms")->delimiter(',');
    const std::vector<CLI::Option*> builders{seq, cf, rec, pr, ex};
    for (auto* a : builders) {
      for (auto* b : builders) {
        if (a != b) a->excludes(b);
      }
    }
    group->add_option("--p", p, "Growth exponent p (rational, e.g. 2, 3/2, 1.1)");
    group->add_option("--depth", depth, "Number of terms K");
    group->add_option("--n1", n1, "First term (recursive: 2, prime: 4)");
    group->add_option("--rate-b", b, "Rate b_N for --prime, e.g. 1/N, 2^-N, power:1:-1");
    group->add_option("--rate-h", h, "Rate h_N for --prime, e.g. N, log:1:1");
  }

  SequenceSpec spec() const {
    SequenceSpec s;
    s.p = parse_rational(p);
    s.depth = depth;
    s.b = b;
    s.h = h;
    if (!terms.empty()) {
      s.builder = "explicit";
      for (const auto& t : terms) s.terms.push_back(parse_integer(t));
    } else if (recursive) {
      s.builder = "recursive";
      s.n1 = parse_integer(n1.value_or("2"));
    } else if (prime) {
      s.builder = "theorem_a_prime";
      s.seed = parse_integer(n1.value_or("4"));
    }
    return s;
  }

  BlockSequence build() const {
    if (!file.empty()) return sequence_from_json(read_input(file));
    return spec().build();
  }

  Json describe() const {
    if (!file.empty()) return to_json(build());
    return spec().to_json();
  }
};

std::vector<Integer> parse_integers(const std::vector<std::string>& xs) {
  std::vector<Integer> out;
  for (const auto& x : xs) out.push_back(parse_integer(x));
  return out;
}

// Default grid: n_1, ..., n_{K-1} and n_K - 1.
std::vector<Integer> default_grid(const BlockSequence& seq) {
  std::vector<Integer> out(seq.terms().begin(), seq.terms().end() - 1);
  Integer last = seq.last() - 1;
  if (out.empty() || last > out.back()) out.push_back(last);
  return out;
}

struct Output {
  std::string path;

  void attach(CLI::App* app) { app->add_option("-o,--output", path, "Write JSON here instead of stdout"); }

  void emit(const Json& j) const {
    const std::string text = j.dump(2) + "\n";
    if (path.empty()) {
      std::cout << text;
    } else {
      write_atomic(path, text);
    }
  }
};

Provenance provenance(const Json& effective, std::optional<std::uint64_t> seed) {
  return {fnv1a64(effective.dump()), seed};
}

int exit_code(const Error& e) { return is_validation_error(e.code()) ? 1 : 2; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Construct, analyze and simulate the block-noise Hilbert-space process"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));

  // seq ---------------------------------------------------------------------
  auto* seq_cmd = app.add_subcommand("seq", "Build or validate block sequences");
  seq_cmd->require_subcommand(1);
  SequenceOptions seq_build_opts;
  Output seq_build_out;
  auto* seq_build = seq_cmd->add_subcommand("build", "Print a sequence as JSON");
  seq_build_opts.attach(seq_build);
  seq_build_out.attach(seq_build);

  std::vector<std::string> validate_terms;
  std::string validate_file;
  std::string validate_p;
  Output validate_out;
  auto* seq_validate = seq_cmd->add_subcommand("validate", "Check condition (C) exactly");
  seq_validate->add_option("--terms", validate_terms, "Terms to check")->delimiter(',');
  seq_validate->add_option("--seq", validate_file, "Sequence JSON file");
  seq_validate->add_option("--p", validate_p, "Exponent (defaults to the file's p)");
  validate_out.attach(seq_validate);

  // variance / profile --------------------------------------------------------
  SequenceOptions var_seq;
  std::vector<std::string> var_horizons;
  std::string var_csv;
  Output var_out;
  auto* variance = app.add_subcommand("variance", "Exact sigma_N^2 per component and in total");
  var_seq.attach(variance);
  variance->add_option("-N,--horizon", var_horizons, "Horizons N")->delimiter(',')->required();
  variance->add_option("--csv", var_csv, "Also write the component table as CSV");
  var_out.attach(variance);

  SequenceOptions prof_seq;
  std::vector<std::string> prof_horizons;
  Output prof_out;
  auto* profile = app.add_subcommand("profile", "Per-coordinate variance mass");
  prof_seq.attach(profile);
  profile->add_option("-N,--horizon", prof_horizons, "Horizons N")->delimiter(',')->required();
  prof_out.attach(profile);

  // simulate --------------------------------------------------------------------
  SequenceOptions sim_seq;
  std::vector<std::string> sim_horizons;
  std::uint64_t sim_seed = 0;
  std::uint64_t sim_replicates = 1000;
  std::size_t sim_components = 0;
  std::string sim_policy = "error";
  unsigned sim_threads = 1;
  std::string sim_csv;
  Output sim_out;
  auto* simulate = app.add_subcommand("simulate", "Sparse Monte Carlo of S_N(f)");
  sim_seq.attach(simulate);
  simulate->add_option("-N,--horizons", sim_horizons, "Horizons N")->delimiter(',')->required();
  simulate->add_option("--seed", sim_seed, "Seed")->required();
  simulate->add_option("-R,--replicates", sim_replicates, "Replicates");
  simulate->add_option("--components", sim_components, "Simulate components 1..K_active (0: all)");
  simulate->add_option("--policy", sim_policy, "error | truncate_with_tail_note");
  simulate->add_option("--threads", sim_threads, "Worker threads (0: hardware)");
  simulate->add_option("--csv", sim_csv, "Write one row per replicate as CSV");
  sim_out.attach(simulate);

  // diagnose --------------------------------------------------------------------
  auto* diagnose = app.add_subcommand("diagnose", "Diagnostics");
  diagnose->require_subcommand(1);

  SequenceOptions ui_seq;
  std::vector<std::string> ui_horizons{"4", "16", "64", "256"};
  std::vector<double> ui_thresholds{2, 4, 8, 16};
  std::uint64_t ui_seed = 0;
  std::uint64_t ui_replicates = 10000;
  std::size_t ui_components = 0;
  double ui_lp = 1.5;
  std::size_t ui_resamples = 200;
  unsigned ui_threads = 1;
  Output ui_out;
  auto* ui = diagnose->add_subcommand("ui", "Uniform-integrability tail profile of Z_N");
  ui_seq.attach(ui);
  ui->add_option("-N,--horizons", ui_horizons, "Horizons N")->delimiter(',');
  ui->add_option("-M,--thresholds", ui_thresholds, "Thresholds M")->delimiter(',');
  ui->add_option("--seed", ui_seed, "Seed")->required();
  ui->add_option("-R,--replicates", ui_replicates, "Replicates");
  ui->add_option("--components", ui_components, "Simulate components 1..K_active (0: all)");
  ui->add_option("--lp", ui_lp, "Also report E[Z^p] for this p in (1, 2]; 0 skips");
  ui->add_option("--resamples", ui_resamples, "Bootstrap resamples");
  ui->add_option("--threads", ui_threads, "Worker threads (0: hardware)");
  ui_out.attach(ui);

  SequenceOptions fdd_seq;
  std::size_t fdd_d = 1;
  std::vector<std::string> fdd_grid;
  Output fdd_out;
  auto* fdd = diagnose->add_subcommand("fdd", "Exact share of one coordinate along a grid");
  fdd_seq.attach(fdd);
  fdd->add_option("-d,--coordinate", fdd_d, "Coordinate d");
  fdd->add_option("-N,--grid", fdd_grid, "Grid (default n_1..n_{K-1}, n_K - 1)")->delimiter(',');
  fdd_out.attach(fdd);

  SequenceOptions tight_seq;
  std::size_t tight_d = 1;
  std::vector<std::string> tight_grid;
  std::string tight_threshold = "3/10";
  Output tight_out;
  auto* tight = diagnose->add_subcommand("tightness", "Escape-of-mass certificate");
  tight_seq.attach(tight);
  tight->add_option("-d,--coordinates", tight_d, "Low coordinates 1..d");
  tight->add_option("-N,--grid", tight_grid, "Grid (default n_1..n_{K-1}, n_K - 1)")->delimiter(',');
  tight->add_option("--threshold", tight_threshold, "Certificate threshold on low_d");
  tight_out.attach(tight);

  SequenceOptions scale_seq;
  std::string scale_c = "sqrtN";
  std::vector<std::string> scale_grid;
  Output scale_out;
  auto* scaling = diagnose->add_subcommand("scaling", "sigma_N / c_N dichotomy");
  scale_seq.attach(scaling);
  scaling->add_option("--c", scale_c, "c_N: sigma, N, sqrtN, logN, power:C:A, log:C:A, exp:C:A, table:...");
  scaling->add_option("-N,--grid", scale_grid, "Grid (default n_1..n_{K-1}, n_K - 1)")->delimiter(',');
  scale_out.attach(scaling);

  // mixing ----------------------------------------------------------------------
  auto* mixing = app.add_subcommand("mixing", "Beta-mixing bounds and exact tiny-scale values");
  mixing->require_subcommand(1);
  SequenceOptions mb_seq;
  std::vector<std::string> mb_lags;
  unsigned mb_per_octave = 2;
  Output mb_out;
  auto* mbound = mixing->add_subcommand("bound", "bound(l) = min(1, sum_{n_j > l} 4/n_j + tail)");
  mb_seq.attach(mbound);
  mbound->add_option("-l,--lag", mb_lags, "Lags (default: logarithmic grid up to n_K)")->delimiter(',');
  mbound->add_option("--per-octave", mb_per_octave, "Default grid density");
  mb_out.attach(mbound);

  TinyBetaSpec tiny;
  std::string tiny_n = "2";
  Output me_out;
  auto* mexact = mixing->add_subcommand("exact", "Windowed beta of one component by enumeration");
  mexact->add_option("--n", tiny_n, "Component length n_k");
  mexact->add_option("-m,--window", tiny.window, "Window length m");
  mexact->add_option("-g,--gap", tiny.gap, "Gap g");
  mexact->add_option("--cap", tiny.cap, "Maximum enumerated noise indices");
  me_out.attach(mexact);

  // report / run ----------------------------------------------------------------
  std::string report_dir;
  auto* report = app.add_subcommand("report", "Collate the JSON reports of one run into summary.json");
  report->add_option("dir", report_dir, "Output directory of a run")->required();

  std::string run_config;
  std::optional<std::uint64_t> run_seed;
  std::optional<std::uint64_t> run_replicates;
  std::vector<std::string> run_horizons;
  std::optional<std::string> run_output;
  std::optional<unsigned> run_threads;
  std::vector<std::string> run_analyses;
  auto* run_cmd = app.add_subcommand("run", "Execute an experiment config");
  run_cmd->add_option("config", run_config, "Experiment JSON file")->required();
  run_cmd->add_option("--seed", run_seed, "Override the seed");
  run_cmd->add_option("-R,--replicates", run_replicates, "Override replicates");
  run_cmd->add_option("-N,--horizons", run_horizons, "Override horizons")->delimiter(',');
  run_cmd->add_option("--analyses", run_analyses, "Override the analysis list")->delimiter(',');
  run_cmd->add_option("--output-dir", run_output, "Output directory (default $HMIX_OUTPUT_DIR or hmix-out)");
  run_cmd->add_option("--threads", run_threads, "Worker threads (0: hardware)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (seq_build->parsed()) {
      seq_build_out.emit(to_json(seq_build_opts.build()));
    } else if (seq_validate->parsed()) {
      std::vector<Integer> terms = parse_integers(validate_terms);
      Rational p = validate_p.empty() ? Rational(0) : parse_rational(validate_p);
      if (!validate_file.empty()) {
        Json j = read_input(validate_file);
        terms = json_integers(j.at("terms"));
        if (validate_p.empty()) p = json_rational(j.at("p"));
      }
      if (terms.empty()) fail(ErrorCode::kInvalidArgument, "give --terms or --seq");
      if (validate_p.empty() && validate_file.empty()) fail(ErrorCode::kInvalidArgument, "give --p");
      ConditionCReport r = validate_condition_c(terms, p);
      validate_out.emit(to_json(r));
      return r.passed() ? 0 : 1;
    } else if (variance->parsed()) {
      BlockSequence seq = var_seq.build();
      auto horizons = parse_integers(var_horizons);
      Provenance prov = provenance({{"command", "variance"}, {"sequence", var_seq.describe()}, {"horizons", var_horizons}}, {});
      std::vector<VarianceReport> reports;
      Json rows = Json::array();
      for (const auto& n : horizons) {
        reports.push_back(total_variance(seq, n));
        rows.push_back(to_json(reports.back()));
      }
      if (!var_csv.empty()) write_atomic(var_csv, variance_csv(reports, prov));
      var_out.emit(report_envelope("variance", prov, seq, {{"horizons", rows}}));
    } else if (profile->parsed()) {
      BlockSequence seq = prof_seq.build();
      Provenance prov = provenance({{"command", "profile"}, {"sequence", prof_seq.describe()}, {"horizons", prof_horizons}}, {});
      Json rows = Json::array();
      for (const auto& n : parse_integers(prof_horizons)) rows.push_back(to_json(mass_profile(seq, n)));
      prof_out.emit(report_envelope("profile", prov, seq, {{"horizons", rows}}));
    } else if (simulate->parsed()) {
      BlockSequence seq = sim_seq.build();
      SampleConfig sc{sim_seed, sim_replicates, sim_components, parse_integers(sim_horizons),
                      parse_policy(sim_policy), sim_threads};
      Provenance prov = provenance({{"command", "simulate"}, {"sequence", sim_seq.describe()}, {"horizons", sim_horizons},
                                    {"replicates", sim_replicates}, {"components", sim_components}, {"policy", sim_policy}},
                                   sim_seed);
      SampleBatch batch = simulate_batch(seq, sc);
      batch.config_hash = prov.config_hash;
      if (!sim_csv.empty()) write_atomic(sim_csv, batch_csv(batch, prov));
      sim_out.emit(report_envelope("simulate", prov, seq,
                                   {{"active_components", batch.active},
                                    {"replicates", sim_replicates},
                                    {"note", batch.note},
                                    {"events", batch.work.events},
                                    {"summary", to_json(summarize(batch))}}));
    } else if (ui->parsed()) {
      BlockSequence seq = ui_seq.build();
      SampleConfig sc{ui_seed, ui_replicates, ui_components, parse_integers(ui_horizons),
                      TruncationPolicy::kError, ui_threads};
      Provenance prov = provenance({{"command", "diagnose ui"}, {"sequence", ui_seq.describe()}, {"horizons", ui_horizons},
                                    {"thresholds", ui_thresholds}, {"replicates", ui_replicates},
                                    {"components", ui_components}, {"lp", ui_lp}, {"resamples", ui_resamples}},
                                   ui_seed);
      SampleBatch batch = simulate_batch(seq, sc);
      BootstrapOptions bo{ui_resamples, 0.95, ui_seed};
      Json result = {{"profile", to_json(ui_tail_profile(batch, ui_thresholds, bo))}, {"note", batch.note}};
      if (ui_lp != 0) result["lp"] = to_json(lp_profile(batch, ui_lp, bo));
      ui_out.emit(report_envelope("ui", prov, seq, result));
    } else if (fdd->parsed()) {
      BlockSequence seq = fdd_seq.build();
      auto grid = fdd_grid.empty() ? default_grid(seq) : parse_integers(fdd_grid);
      Provenance prov = provenance({{"command", "diagnose fdd"}, {"sequence", fdd_seq.describe()}, {"d", fdd_d}, {"grid", integer_list(grid)}}, {});
      fdd_out.emit(report_envelope("fdd", prov, seq, to_json(coordinate_nullity(seq, fdd_d, grid))));
    } else if (tight->parsed()) {
      BlockSequence seq = tight_seq.build();
      auto grid = tight_grid.empty() ? default_grid(seq) : parse_integers(tight_grid);
      Provenance prov = provenance({{"command", "diagnose tightness"}, {"sequence", tight_seq.describe()}, {"d", tight_d},
                                    {"grid", integer_list(grid)}, {"threshold", tight_threshold}}, {});
      tight_out.emit(report_envelope(
          "tightness", prov, seq, to_json(escape_certificate(seq, tight_d, grid, parse_rational(tight_threshold)))));
    } else if (scaling->parsed()) {
      BlockSequence seq = scale_seq.build();
      auto grid = scale_grid.empty() ? default_grid(seq) : parse_integers(scale_grid);
      Provenance prov = provenance({{"command", "diagnose scaling"}, {"sequence", scale_seq.describe()}, {"c", scale_c},
                                    {"grid", integer_list(grid)}}, {});
      scale_out.emit(report_envelope("scaling", prov, seq, to_json(scaling_dichotomy(seq, ScalingSpec::parse(scale_c, grid)))));
    } else if (mbound->parsed()) {
      BlockSequence seq = mb_seq.build();
      auto lags = mb_lags.empty() ? log_lag_grid(seq.last(), mb_per_octave) : parse_integers(mb_lags);
      Provenance prov = provenance({{"command", "mixing bound"}, {"sequence", mb_seq.describe()}, {"lags", integer_list(lags)}}, {});
      mb_out.emit(report_envelope("mixing-bound", prov, seq, to_json(mixing_bound_report(seq, lags))));
    } else if (mexact->parsed()) {
      tiny.n = parse_integer(tiny_n);
      Json effective = {{"command", "mixing exact"}, {"n", tiny_n}, {"window", tiny.window}, {"gap", tiny.gap}, {"cap", tiny.cap}};
      Provenance prov = provenance(effective, {});
      TinyBetaResult r = beta_exact_tiny(tiny);
      me_out.emit({{"analysis", "mixing-exact"},
                   {"config_hash", hex64(prov.config_hash)},
                   {"seed", nullptr},
                   {"version", kVersion},
                   {"result", to_json(tiny, r)}});
    } else if (report->parsed()) {
      Json summary = collate_reports(report_dir);
      write_atomic(std::filesystem::path(report_dir) / "summary.json", summary.dump(2) + "\n");
      std::cout << (std::filesystem::path(report_dir) / "summary.json").string() << "\n";
    } else if (run_cmd->parsed()) {
      ExperimentConfig config = config_from_json(read_input(run_config));
      if (run_seed) config.seed = *run_seed;
      if (run_replicates) config.replicates = *run_replicates;
      if (!run_horizons.empty()) config.horizons = parse_integers(run_horizons);
      if (!run_analyses.empty()) config.analyses = run_analyses;
      if (run_output) config.output_dir = *run_output;
      if (run_threads) config.threads = *run_threads;
      RunResult r = run(config);
      std::cout << "config_hash " << hex64(r.config_hash) << "\n";
      for (const auto& f : r.files) std::cout << (r.output_dir / f).string() << "\n";
    }
  } catch (const Error& e) {
    std::cerr << "hmix: " << e.what() << "\n";
    return exit_code(e);
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "hmix: ParseError: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "hmix: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
