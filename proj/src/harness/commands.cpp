#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "json.hpp"

#include "bondsim/error.hpp"
#include "bondsim/harness.hpp"

#ifndef BONDSIM_GIT_REVISION
#define BONDSIM_GIT_REVISION "unknown"
#endif

namespace bondsim::harness {

namespace fs = std::filesystem;

namespace {

std::uint64_t require_seed(const ExperimentConfig& config) {
  if (!config.seed) fail(ErrorCode::config, "config field 'seed': required for stochastic experiments");
  return *config.seed;
}

std::string tag(std::string_view experiment, double fraction, BehaviorKind kind) {
  return std::string(experiment) + "/" + format_number(fraction) + "/" + std::string(to_string(kind));
}

std::vector<TrialResult> run_cell(const ExperimentConfig& config, std::string_view experiment,
                                  double fraction, BehaviorKind kind, std::size_t trials,
                                  void (*adjust)(DetectionConfig&)) {
  DetectionConfig d = config.detection(fraction, kind, trials);
  d.seed = cell_seed(require_seed(config), tag(experiment, fraction, kind));
  if (adjust) adjust(d);
  return run_detection_trials(d);
}

std::string bool_text(bool b) { return b ? "1" : "0"; }

CsvTable series_table(const ExpectedTimeSeries& s) {
  CsvTable t;
  t.schema = "bondsim/block_time/v1";
  t.columns = {"block", "time_s", "preference_hps", "actual_hps", "committed_hps",
               "difficulty_hashes", "expected_block_time_s"};
  for (const auto& p : s.points) {
    t.rows.push_back({std::to_string(p.block), format_number(p.time_s), format_number(p.preference_hps),
                      format_number(p.actual_hps), format_number(p.committed_hps),
                      format_number(p.difficulty), format_number(p.expected_block_time_s)});
  }
  return t;
}

CsvTable summary_table() {
  CsvTable t;
  t.schema = "bondsim/block_time_summary/v1";
  t.columns = {"daa", "kappa", "min_block_time_s", "max_block_time_s", "max_abs_deviation_s",
               "deviation_integral_s2", "deviation_duration_s"};
  return t;
}

void add_summary(CsvTable& t, const ExpectedTimeSeries& s, double tolerance) {
  const auto d = s.summary(tolerance);
  t.rows.push_back({std::string(to_string(s.daa)),
                    s.daa == DaaKind::bonded ? format_number(s.kappa) : std::string("NA"),
                    format_number(d.min_block_time_s), format_number(d.max_block_time_s),
                    format_number(d.max_abs_deviation_s), format_number(d.deviation_integral_s2),
                    format_number(d.deviation_duration_s)});
}

class Output {
 public:
  explicit Output(const std::string& dir) : dir_(dir) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) fail(ErrorCode::io, "cannot create output directory '" + dir + "': " + ec.message());
  }

  void csv(const std::string& name, const CsvTable& table) {
    std::ofstream out(dir_ / name, std::ios::binary);
    if (!out) fail(ErrorCode::io, "cannot write '" + (dir_ / name).string() + "'");
    write_csv(out, table);
    files_.push_back(name);
  }

  void blocks(const std::string& name, const std::vector<BlockRecord>& records) {
    std::ofstream out(dir_ / name, std::ios::binary);
    if (!out) fail(ErrorCode::io, "cannot write '" + (dir_ / name).string() + "'");
    write_blocks_csv(out, records);
    files_.push_back(name);
  }

  void manifest(nlohmann::json m) {
    m["outputs"] = files_;
    std::ofstream out(dir_ / "manifest.json", std::ios::binary);
    if (!out) fail(ErrorCode::io, "cannot write manifest");
    out << m.dump(2) << '\n';
  }

 private:
  fs::path dir_;
  std::vector<std::string> files_;
};

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::config:
    case ErrorCode::unsupported_hash_rate:
      return kExitConfig;
    case ErrorCode::data:
    case ErrorCode::insufficient_data:
    case ErrorCode::domain:
    case ErrorCode::io:
      return kExitData;
    case ErrorCode::protocol_violation:
    case ErrorCode::internal:
      return kExitInternal;
  }
  return kExitInternal;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace

std::vector<Table2Row> compute_table2(const ExperimentConfig& config, std::size_t trials) {
  std::vector<Table2Row> rows;
  for (double f : config.fractions) {
    Table2Row row{f, 0.0, 0.0, trials};
    auto bootstrap = [](DetectionConfig& d) { d.bootstrap_only = true; };
    row.short_rate = bootstrap_detection_rate(
        run_cell(config, "table2", f, BehaviorKind::short_range_dishonest, trials, bootstrap));
    row.long_rate = bootstrap_detection_rate(
        run_cell(config, "table2", f, BehaviorKind::long_range_dishonest, trials, bootstrap));
    rows.push_back(row);
  }
  return rows;
}

std::vector<Fig3Curve> compute_fig3(const ExperimentConfig& config, std::size_t trials) {
  std::vector<double> grid;
  for (double t = 0.0; t <= config.duration_s + 1e-9; t += config.grid_step_s) grid.push_back(t);
  std::vector<Fig3Curve> curves;
  for (double f : config.fractions) {
    for (auto kind : config.attacks) {
      const auto results = run_cell(config, "fig3", f, kind, trials, nullptr);
      curves.push_back({f, kind, grid, detection_curve(results, grid)});
    }
  }
  return curves;
}

std::vector<TypeIRow> compute_type_i(const ExperimentConfig& config, std::size_t trials) {
  std::vector<TypeIRow> rows;
  for (int pass = 0; pass < (config.type_i_with_drops ? 2 : 1); ++pass) {
    const bool drops = pass == 1;
    for (double f : config.fractions) {
      DetectionConfig d = config.detection(f, BehaviorKind::honest_random_walk, trials);
      d.behavior.honest_drops = drops;
      d.stop_at_first_failure = false;
      d.seed = cell_seed(require_seed(config), std::string(drops ? "typeI-drops/" : "typeI/") +
                                                    format_number(f));
      TypeIRow row{f, drops, trials, 0, 0};
      for (const auto& r : run_detection_trials(d)) {
        row.windows_tested += r.windows_tested;
        if (r.failures > 0) ++row.failing_trials;
      }
      rows.push_back(row);
    }
  }
  return rows;
}

ExpectedTimeSeries compute_block_times(const ExperimentConfig& config, DaaKind daa, double kappa) {
  ExpectedTimeConfig e = config.block_time;
  e.daa = daa;
  e.kappa = kappa;
  return run_expected_time_sim(e);
}

AbandonCheck compute_abandon_check(const ExperimentConfig& config) {
  AbandonCheck a;
  a.fraction = config.abandon_fraction;
  const double c = a.fraction * config.network_hps;
  a.mean_interval_s = config.network.target_s * config.network_hps / c;
  a.threshold_s = abandonment_threshold_s(c, config.network_hps, config.network);
  if (config.silent_hours) {
    a.silent_s = *config.silent_hours * 3600.0;
    a.abandoned = *a.silent_s > a.threshold_s;
  }
  return a;
}

int run_command(CommandKind kind, const RunOptions& options, std::ostream& out, std::ostream& err) {
  const auto started = std::chrono::steady_clock::now();
  try {
    if (options.config_path.empty()) fail(ErrorCode::config, "--config is required");
    ExperimentConfig config = load_config(options.config_path);
    if (config.experiment && *config.experiment != kind) {
      fail(ErrorCode::config, "config field 'experiment': config is for '" +
                                  std::string(to_string(*config.experiment)) + "', not '" +
                                  std::string(to_string(kind)) + "'");
    }
    if (options.seed) config.seed = options.seed;
    if (options.threads) config.threads = *options.threads;
    if (!options.blocks_path.empty()) config.blocks_path = options.blocks_path;
    if (is_stochastic(kind)) require_seed(config);
    if (options.trials && *options.trials == 0) fail(ErrorCode::config, "--trials must be at least 1");
    const std::size_t trials =
        options.trials ? *options.trials : (options.full ? config.full_trials : config.trials);

    Output files(options.out_dir);
    nlohmann::json manifest;
    manifest["command"] = std::string(to_string(kind));
    manifest["config_path"] = options.config_path;
    manifest["config_hash"] = "fnv1a64:" + hex64(fnv1a64(config.canonical_json));
    manifest["seed"] = config.seed ? nlohmann::json(*config.seed) : nlohmann::json(nullptr);
    manifest["trials"] = is_stochastic(kind) ? nlohmann::json(trials) : nlohmann::json(nullptr);
    manifest["git_revision"] = BONDSIM_GIT_REVISION;

    out << std::fixed;
    switch (kind) {
      case CommandKind::table2: {
        CsvTable t;
        t.schema = "bondsim/table2/v1";
        t.columns = {"hash_fraction", "short_range_detection_rate", "long_range_detection_rate", "trials"};
        out << "fraction  short-range  long-range  (" << trials << " trials)\n";
        for (const auto& r : compute_table2(config, trials)) {
          t.rows.push_back({format_number(r.fraction), format_number(r.short_rate),
                            format_number(r.long_rate), std::to_string(r.trials)});
          out << std::setprecision(3) << std::setw(8) << r.fraction << "  " << std::setw(11)
              << r.short_rate << "  " << std::setw(10) << r.long_rate << '\n';
        }
        files.csv("table2.csv", t);
        break;
      }
      case CommandKind::fig3: {
        CsvTable t;
        t.schema = "bondsim/fig3/v1";
        t.columns = {"time_s", "hash_fraction", "attack", "detection_probability"};
        for (const auto& c : compute_fig3(config, trials)) {
          for (std::size_t i = 0; i < c.grid_s.size(); ++i) {
            t.rows.push_back({format_number(c.grid_s[i]), format_number(c.fraction),
                              std::string(to_string(c.attack)), format_number(c.probability[i])});
          }
          auto at = [&](double days) {
            const std::size_t i = std::min(c.grid_s.size() - 1,
                                           static_cast<std::size_t>(days * kSecondsPerDay / config.grid_step_s));
            return c.probability[i];
          };
          out << std::setprecision(3) << "fraction " << c.fraction << " " << to_string(c.attack)
              << ": P(detected) bootstrap " << at(0) << ", +30d " << at(30) << ", end "
              << c.probability.back() << '\n';
        }
        files.csv("fig3.csv", t);
        break;
      }
      case CommandKind::fig4: {
        const auto bch = compute_block_times(config, DaaKind::bch_cw144, 0.0);
        const auto bm = compute_block_times(config, DaaKind::bonded, config.block_time.kappa);
        files.csv("fig4_bch.csv", series_table(bch));
        files.csv("fig4_bm.csv", series_table(bm));
        auto s = summary_table();
        add_summary(s, bch, config.block_time.deviation_tolerance);
        add_summary(s, bm, config.block_time.deviation_tolerance);
        files.csv("fig4_summary.csv", s);
        for (const auto* series : {&bch, &bm}) {
          const auto d = series->summary(config.block_time.deviation_tolerance);
          out << std::setprecision(1) << to_string(series->daa) << ": min " << d.min_block_time_s
              << " s, max " << d.max_block_time_s << " s, max |dev| " << d.max_abs_deviation_s
              << " s\n";
        }
        break;
      }
      case CommandKind::fig5: {
        auto s = summary_table();
        const auto bch = compute_block_times(config, DaaKind::bch_cw144, 0.0);
        files.csv("fig5_bch.csv", series_table(bch));
        add_summary(s, bch, config.block_time.deviation_tolerance);
        for (double kappa : config.kappas) {
          const auto bm = compute_block_times(config, DaaKind::bonded, kappa);
          files.csv("fig5_kappa_" + format_number(kappa) + ".csv", series_table(bm));
          add_summary(s, bm, config.block_time.deviation_tolerance);
          out << std::setprecision(2) << "kappa " << kappa << ": max |dev| " << std::setprecision(1)
              << bm.summary(config.block_time.deviation_tolerance).max_abs_deviation_s << " s\n";
        }
        out << std::setprecision(1) << "bch-cw144: max |dev| "
            << bch.summary(config.block_time.deviation_tolerance).max_abs_deviation_s << " s\n";
        files.csv("fig5_summary.csv", s);
        break;
      }
      case CommandKind::type_i: {
        CsvTable t;
        t.schema = "bondsim/type_i/v1";
        t.columns = {"hash_fraction", "honest_drops", "trials", "windows_tested", "failing_trials"};
        for (const auto& r : compute_type_i(config, trials)) {
          t.rows.push_back({format_number(r.fraction), bool_text(r.drops), std::to_string(r.trials),
                            std::to_string(r.windows_tested), std::to_string(r.failing_trials)});
          out << std::setprecision(3) << "fraction " << r.fraction << (r.drops ? " (drops)" : "")
              << ": " << r.failing_trials << " of " << r.trials << " trials failed, "
              << r.windows_tested << " windows\n";
        }
        files.csv("typeI.csv", t);
        break;
      }
      case CommandKind::validate: {
        if (config.blocks_path.empty()) {
          fail(ErrorCode::config, "config field 'validate.blocks': no blocks CSV given");
        }
        if (!fs::exists(config.blocks_path)) {
          fail(ErrorCode::config, "config field 'validate.blocks': '" + config.blocks_path +
                                      "' does not exist");
        }
        std::ifstream in(config.blocks_path, std::ios::binary);
        if (!in) fail(ErrorCode::io, "cannot read '" + config.blocks_path + "'");
        const auto blocks = read_blocks_csv(in, config.blocks_path);
        const auto params =
            config.validate_params ? *config.validate_params : bondsim::params_for(config.validate_fraction);
        const auto rows = validate_blocks(blocks, params);
        CsvTable t;
        t.schema = "bondsim/validate/v1";
        t.columns = {"block_index", "height", "timestamp_s", "short_delta", "short_p_value",
                     "short_pass", "long_delta", "long_p_value", "long_pass", "valid"};
        std::size_t failing = 0;
        for (const auto& r : rows) {
          const auto& v = r.verdict;
          if (!v.valid()) ++failing;
          t.rows.push_back({std::to_string(r.block_index), std::to_string(r.height),
                            format_number(r.timestamp_s), format_number(v.short_test.delta),
                            format_number(v.short_test.p_value), bool_text(v.short_pass),
                            format_number(v.long_test.delta), format_number(v.long_test.p_value),
                            bool_text(v.long_pass), bool_text(v.valid())});
        }
        files.csv("validate.csv", t);
        out << "windows " << rows.size() << ", failing " << failing << ", final window "
            << (rows.back().verdict.valid() ? "valid" : "INVALID") << '\n';
        manifest["blocks_path"] = config.blocks_path;
        break;
      }
      case CommandKind::abandon_check: {
        const auto a = compute_abandon_check(config);
        CsvTable t;
        t.schema = "bondsim/abandon/v1";
        t.columns = {"hash_fraction", "mean_interval_s", "threshold_s", "silent_s", "abandoned"};
        t.rows.push_back({format_number(a.fraction), format_number(a.mean_interval_s),
                          format_number(a.threshold_s),
                          a.silent_s ? format_number(*a.silent_s) : std::string("NA"),
                          a.silent_s ? bool_text(a.abandoned) : std::string("NA")});
        files.csv("abandon.csv", t);
        out << std::setprecision(2) << "fraction " << a.fraction << ": abandonment after "
            << a.threshold_s / 3600.0 << " h of silence";
        if (a.silent_s) out << "; silent " << *a.silent_s / 3600.0 << " h -> " << (a.abandoned ? "abandoned" : "ok");
        out << '\n';
        break;
      }
      case CommandKind::simulate: {
        DetectionConfig d = config.detection(config.simulate_fraction, config.simulate_behavior, 1);
        d.seed = cell_seed(*config.seed, tag("simulate", config.simulate_fraction, config.simulate_behavior));
        d.duration_s = config.simulate_duration_s;
        d.record_blocks = true;
        const auto r = run_detection_trial(d, 0);
        files.blocks("blocks.csv", r.blocks);
        out << "blocks " << r.blocks.size() << ", windows " << r.windows_tested << ", failures "
            << r.failures << '\n';
        break;
      }
    }

    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    manifest["wall_time_s"] = wall;
    files.manifest(manifest);
    return kExitOk;
  } catch (const Error& e) {
    err << "error (" << to_string(e.code()) << "): " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    err << "error (internal): " << e.what() << '\n';
    return kExitInternal;
  }
}

}  // namespace bondsim::harness
