#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "bondsim/protocol.hpp"
#include "bondsim/sim.hpp"
#include "bondsim/validity.hpp"

namespace bondsim::harness {

enum class CommandKind { table2, fig3, fig4, fig5, type_i, validate, abandon_check, simulate };

std::string_view to_string(CommandKind kind);
CommandKind parse_command(std::string_view name);

/// Every tunable of every experiment. Defaults: T = 600 s, the standard
/// window policy, mu = 2, gamma = 0.05, p = 0.99999 and
/// the two-week preference schedule.
struct ExperimentConfig {
  std::optional<CommandKind> experiment;
  std::optional<std::uint64_t> seed;  // required by the stochastic commands
  std::size_t trials = 200;
  std::size_t full_trials = 1000;
  unsigned threads = 0;

  NetworkParams network;
  double network_hps = 1e15;

  // detection experiments
  std::vector<double> fractions{0.01, 0.10, 0.25, 0.50};
  std::vector<BehaviorKind> attacks{BehaviorKind::short_range_dishonest,
                                    BehaviorKind::long_range_dishonest};
  double walk_sd = 0.01;
  double drop_factor = 0.2;
  std::optional<double> drop_duration_s;
  double duration_s = kSecondsPerYear;
  double grid_step_s = kSecondsPerDay;
  std::optional<ValidityParams> params_override;
  bool type_i_with_drops = false;  // also run honest miners that report drop episodes
  bool abandonment = false;        // count silence past the abandonment quantile as detection

  // block-time experiments
  ExpectedTimeConfig block_time;
  std::vector<double> kappas{0.1, 0.25, 1.0};

  // validate / abandon-check / simulate
  double validate_fraction = 0.5;
  std::optional<ValidityParams> validate_params;
  std::string blocks_path;  // resolved against the config file's directory
  double abandon_fraction = 0.10;
  std::optional<double> silent_hours;
  double simulate_fraction = 0.5;
  BehaviorKind simulate_behavior = BehaviorKind::honest_random_walk;
  double simulate_duration_s = 30.0 * kSecondsPerDay;

  std::string canonical_json;  // normalized source, hashed into the manifest


  ValidityParams params_for_fraction(double fraction) const;
  DetectionConfig detection(double fraction, BehaviorKind kind, std::size_t trials) const;
};

/// Parses a JSON config. Unknown keys and bad values are config errors
/// naming the field; syntax errors name the line and column.
ExperimentConfig parse_config(std::string_view text, std::string_view source_name = "config");
ExperimentConfig load_config(const std::string& path);

std::uint64_t fnv1a64(std::string_view bytes);

bool is_stochastic(CommandKind kind);

/// Independent sub-seed for one cell of an experiment grid.
std::uint64_t cell_seed(std::uint64_t base, std::string_view tag);

/// Versioned CSV: a `# schema: bondsim/<kind>/v<N>` line, a header, rows.
struct CsvTable {
  std::string schema;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  /// Index of a column; a data error naming the column if absent.
  std::size_t column(std::string_view name) const;
};

CsvTable read_csv(std::istream& in, std::string_view source_name = "csv");
void write_csv(std::ostream& out, const CsvTable& table);

/// Shortest round-trip text of a double.
std::string format_number(double value);

struct Table2Row {
  double fraction = 0.0;
  double short_rate = 0.0;
  double long_rate = 0.0;
  std::size_t trials = 0;
};

struct Fig3Curve {
  double fraction = 0.0;
  BehaviorKind attack = BehaviorKind::long_range_dishonest;
  std::vector<double> grid_s;
  std::vector<double> probability;
};

struct TypeIRow {
  double fraction = 0.0;
  bool drops = false;  // honest miners that also take reported drop episodes
  std::size_t trials = 0;
  std::size_t windows_tested = 0;
  std::size_t failing_trials = 0;
};

struct ValidationRow {
  std::size_t block_index = 0;  // 1-based, closing block of the window
  std::uint64_t height = 0;
  double timestamp_s = 0.0;
  ValidityVerdict verdict;
};

struct AbandonCheck {
  double fraction = 0.0;
  double mean_interval_s = 0.0;
  double threshold_s = 0.0;
  std::optional<double> silent_s;
  bool abandoned = false;
};

std::vector<Table2Row> compute_table2(const ExperimentConfig& config, std::size_t trials);
std::vector<Fig3Curve> compute_fig3(const ExperimentConfig& config, std::size_t trials);
std::vector<TypeIRow> compute_type_i(const ExperimentConfig& config, std::size_t trials);
ExpectedTimeSeries compute_block_times(const ExperimentConfig& config, DaaKind daa, double kappa);
AbandonCheck compute_abandon_check(const ExperimentConfig& config);

/// Blocks CSV (the `simulate` output schema): one row per block of a single
/// miner, columns height, timestamp_s, inter_arrival_s, report_hps,
/// avg_difficulty; extra columns are ignored.
struct BlockRow {
  std::uint64_t height = 0;
  double timestamp_s = 0.0;
  ReportedInterval interval;
};
std::vector<BlockRow> read_blocks_csv(std::istream& in, std::string_view source_name = "blocks");
void write_blocks_csv(std::ostream& out, const std::vector<BlockRecord>& blocks);
std::vector<ValidationRow> validate_blocks(const std::vector<BlockRow>& blocks,
                                           const ValidityParams& params);

struct RunOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> trials;
  bool full = false;
  std::string out_dir = "out";
  std::string blocks_path;  // validate input
  std::optional<unsigned> threads;
};

/// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitData = 2;
inline constexpr int kExitInternal = 3;

/// Runs one subcommand end to end: loads the config, writes CSVs and a JSON
/// manifest into options.out_dir, prints a short report to `out`, and
/// returns an exit code. Errors are reported on `err`.
int run_command(CommandKind kind, const RunOptions& options, std::ostream& out, std::ostream& err);

}  // namespace bondsim::harness
