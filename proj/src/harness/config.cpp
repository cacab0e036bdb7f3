#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>

#include "json.hpp"

#include "bondsim/error.hpp"
#include "bondsim/harness.hpp"

namespace bondsim::harness {

using nlohmann::json;

namespace {

struct CommandName {
  CommandKind kind;
  std::string_view name;
};

constexpr CommandName kCommands[] = {
    {CommandKind::table2, "table2"},       {CommandKind::fig3, "fig3"},
    {CommandKind::fig4, "fig4"},           {CommandKind::fig5, "fig5"},
    {CommandKind::type_i, "typeI"},        {CommandKind::validate, "validate"},
    {CommandKind::abandon_check, "abandon-check"}, {CommandKind::simulate, "simulate"},
};

[[noreturn]] void bad(const std::string& field, const std::string& why) {
  fail(ErrorCode::config, "config field '" + field + "': " + why);
}

// Rejects keys outside `allowed`, naming the first offender.
void only_keys(const json& obj, const std::string& where, std::initializer_list<std::string_view> allowed) {
  if (!obj.is_object()) bad(where, "expected an object");
  for (const auto& [key, value] : obj.items()) {
    bool known = false;
    for (auto a : allowed) known = known || a == key;
    if (!known) bad(where.empty() ? key : where + "." + key, "unknown key");
  }
}

std::string path_of(const std::string& where, std::string_view key) {
  return where.empty() ? std::string(key) : where + "." + std::string(key);
}

double get_number(const json& obj, const std::string& where, std::string_view key, double fallback) {
  auto it = obj.find(key);
  if (it == obj.end()) return fallback;
  if (!it->is_number()) bad(path_of(where, key), "expected a number");
  return it->get<double>();
}

double positive(const json& obj, const std::string& where, std::string_view key, double fallback) {
  const double v = get_number(obj, where, key, fallback);
  if (!(v > 0.0)) bad(path_of(where, key), "must be positive");
  return v;
}

std::uint64_t get_count(const json& obj, const std::string& where, std::string_view key,
                        std::uint64_t fallback) {
  auto it = obj.find(key);
  if (it == obj.end()) return fallback;
  if (!it->is_number_unsigned()) bad(path_of(where, key), "expected a nonnegative integer");
  return it->get<std::uint64_t>();
}

bool get_bool(const json& obj, const std::string& where, std::string_view key, bool fallback) {
  auto it = obj.find(key);
  if (it == obj.end()) return fallback;
  if (!it->is_boolean()) bad(path_of(where, key), "expected true or false");
  return it->get<bool>();
}

std::optional<double> get_optional(const json& obj, const std::string& where, std::string_view key) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  if (!it->is_number()) bad(path_of(where, key), "expected a number or null");
  return it->get<double>();
}

std::string get_string(const json& obj, const std::string& where, std::string_view key,
                       const std::string& fallback) {
  auto it = obj.find(key);
  if (it == obj.end()) return fallback;
  if (!it->is_string()) bad(path_of(where, key), "expected a string");
  return it->get<std::string>();
}

double fraction_value(const json& v, const std::string& field) {
  if (!v.is_number()) bad(field, "expected a number");
  const double f = v.get<double>();
  if (!(f >= kMinSupportedFraction && f <= 1.0)) bad(field, "hash fraction must lie in [0.005, 1]");
  return f;
}

ValidityParams parse_params(const json& obj, const std::string& where) {
  only_keys(obj, where, {"n_short", "n_long", "tau_short", "tau_long"});
  for (auto key : {"n_short", "n_long", "tau_short", "tau_long"}) {
    if (!obj.contains(key)) bad(path_of(where, key), "missing");
  }
  ValidityParams p;
  p.n_short = get_count(obj, where, "n_short", 0);
  p.n_long = get_count(obj, where, "n_long", 0);
  p.tau_short = get_number(obj, where, "tau_short", 0.0);
  p.tau_long = get_number(obj, where, "tau_long", 0.0);
  try {
    p.check();
  } catch (const Error& e) {
    bad(where, e.what());
  }
  return p;
}

std::vector<PreferencePoint> parse_schedule(const json& arr, const std::string& where) {
  if (!arr.is_array() || arr.empty()) bad(where, "expected a non-empty array");
  std::vector<PreferencePoint> out;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const std::string at = where + "[" + std::to_string(i) + "]";
    only_keys(arr[i], at, {"start_day", "fraction"});
    PreferencePoint p;
    p.start_day = get_number(arr[i], at, "start_day", 1.0);
    p.fraction = get_number(arr[i], at, "fraction", -1.0);
    if (p.fraction < 0.0) bad(at + ".fraction", "missing or negative");
    if (!out.empty() && p.start_day <= out.back().start_day) {
      bad(at + ".start_day", "days must strictly increase");
    }
    out.push_back(p);
  }
  return out;
}

std::vector<double> parse_fractions(const json& obj, const std::string& where, std::string_view key,
                                    std::vector<double> fallback) {
  auto it = obj.find(key);
  if (it == obj.end()) return fallback;
  const std::string field = path_of(where, key);
  if (!it->is_array() || it->empty()) bad(field, "expected a non-empty array");
  std::vector<double> out;
  for (std::size_t i = 0; i < it->size(); ++i) {
    out.push_back(fraction_value((*it)[i], field + "[" + std::to_string(i) + "]"));
  }
  return out;
}

BehaviorKind parse_behavior(const json& v, const std::string& field) {
  if (!v.is_string()) bad(field, "expected a behavior name");
  try {
    return parse_behavior_kind(v.get<std::string>());
  } catch (const Error& e) {
    bad(field, e.what());
  }
}

void parse_network(const json& obj, ExperimentConfig& c) {
  const std::string w = "network";
  only_keys(obj, w, {"target_s", "bond_coins", "mu", "gamma", "abandon_p", "total_hps"});
  c.network.target_s = positive(obj, w, "target_s", c.network.target_s);
  c.network.bond_coins = positive(obj, w, "bond_coins", c.network.bond_coins);
  c.network.mu = get_number(obj, w, "mu", c.network.mu);
  c.network.gamma = get_number(obj, w, "gamma", c.network.gamma);
  c.network.abandon_p = get_number(obj, w, "abandon_p", c.network.abandon_p);
  c.network_hps = positive(obj, w, "total_hps", c.network_hps);
  try {
    c.network.check();
  } catch (const Error& e) {
    bad(w, e.what());
  }
}

void parse_detection(const json& obj, ExperimentConfig& c) {
  const std::string w = "detection";
  only_keys(obj, w, {"fractions", "attacks", "walk_sd", "drop_factor", "drop_duration_days",
                     "duration_days", "grid_step_days", "params", "type_i_with_drops", "abandonment"});
  c.fractions = parse_fractions(obj, w, "fractions", c.fractions);
  if (auto it = obj.find("attacks"); it != obj.end()) {
    if (!it->is_array() || it->empty()) bad(w + ".attacks", "expected a non-empty array");
    c.attacks.clear();
    for (std::size_t i = 0; i < it->size(); ++i) {
      const std::string field = w + ".attacks[" + std::to_string(i) + "]";
      const auto kind = parse_behavior((*it)[i], field);
      if (kind == BehaviorKind::preference_follower) bad(field, "not a detection behavior");
      c.attacks.push_back(kind);
    }
  }
  c.walk_sd = get_number(obj, w, "walk_sd", c.walk_sd);
  if (c.walk_sd < 0.0) bad(w + ".walk_sd", "must be nonnegative");
  c.drop_factor = get_number(obj, w, "drop_factor", c.drop_factor);
  if (c.drop_factor < 0.0) bad(w + ".drop_factor", "must be nonnegative");
  if (auto d = get_optional(obj, w, "drop_duration_days")) {
    if (!(*d > 0.0)) bad(w + ".drop_duration_days", "must be positive");
    c.drop_duration_s = *d * kSecondsPerDay;
  }
  c.duration_s = positive(obj, w, "duration_days", c.duration_s / kSecondsPerDay) * kSecondsPerDay;
  c.grid_step_s = positive(obj, w, "grid_step_days", c.grid_step_s / kSecondsPerDay) * kSecondsPerDay;
  if (auto it = obj.find("params"); it != obj.end() && !it->is_null()) {
    c.params_override = parse_params(*it, w + ".params");
  }
  c.type_i_with_drops = get_bool(obj, w, "type_i_with_drops", c.type_i_with_drops);
  c.abandonment = get_bool(obj, w, "abandonment", c.abandonment);
}

void parse_block_time(const json& obj, ExperimentConfig& c) {
  const std::string w = "block_time";
  only_keys(obj, w, {"kappa", "kappas", "window_n", "update_every", "duration_days",
                     "deviation_tolerance", "available_hps", "schedule", "miners"});
  auto& b = c.block_time;
  b.kappa = get_number(obj, w, "kappa", b.kappa);
  if (b.kappa < 0.0) bad(w + ".kappa", "must be nonnegative");
  if (auto it = obj.find("kappas"); it != obj.end()) {
    if (!it->is_array() || it->empty()) bad(w + ".kappas", "expected a non-empty array");
    c.kappas.clear();
    for (std::size_t i = 0; i < it->size(); ++i) {
      const auto& v = (*it)[i];
      if (!v.is_number() || v.get<double>() < 0.0) {
        bad(w + ".kappas[" + std::to_string(i) + "]", "expected a nonnegative number");
      }
      c.kappas.push_back(v.get<double>());
    }
  }
  b.window_n = get_count(obj, w, "window_n", b.window_n);
  if (b.window_n == 0) bad(w + ".window_n", "must be positive");
  b.update_every = get_count(obj, w, "update_every", b.update_every);
  if (b.update_every == 0) bad(w + ".update_every", "must be positive");
  b.duration_s = positive(obj, w, "duration_days", b.duration_s / kSecondsPerDay) * kSecondsPerDay;
  b.deviation_tolerance = positive(obj, w, "deviation_tolerance", b.deviation_tolerance);
  b.available_hps = positive(obj, w, "available_hps", b.available_hps);

  std::vector<PreferencePoint> schedule = default_preference_schedule();
  if (auto it = obj.find("schedule"); it != obj.end()) schedule = parse_schedule(*it, w + ".schedule");
  b.miners.clear();
  if (auto it = obj.find("miners"); it != obj.end()) {
    if (!it->is_array() || it->empty()) bad(w + ".miners", "expected a non-empty array");
    for (std::size_t i = 0; i < it->size(); ++i) {
      const std::string at = w + ".miners[" + std::to_string(i) + "]";
      only_keys((*it)[i], at, {"share", "schedule"});
      FollowerMiner m;
      m.share = positive((*it)[i], at, "share", -1.0);
      m.schedule = (*it)[i].contains("schedule") ? parse_schedule((*it)[i]["schedule"], at + ".schedule")
                                                  : schedule;
      b.miners.push_back(std::move(m));
    }
  } else {
    b.miners.assign(10, FollowerMiner{0.1, schedule});
  }
}

void parse_validate(const json& obj, ExperimentConfig& c) {
  const std::string w = "validate";
  only_keys(obj, w, {"commit_fraction", "params", "blocks"});
  if (auto it = obj.find("commit_fraction"); it != obj.end()) {
    c.validate_fraction = fraction_value(*it, w + ".commit_fraction");
  }
  if (auto it = obj.find("params"); it != obj.end() && !it->is_null()) {
    c.validate_params = parse_params(*it, w + ".params");
  }
  c.blocks_path = get_string(obj, w, "blocks", c.blocks_path);
}

void parse_abandon(const json& obj, ExperimentConfig& c) {
  const std::string w = "abandon";
  only_keys(obj, w, {"commit_fraction", "silent_hours"});
  if (auto it = obj.find("commit_fraction"); it != obj.end()) {
    c.abandon_fraction = fraction_value(*it, w + ".commit_fraction");
  }
  if (auto h = get_optional(obj, w, "silent_hours")) {
    if (*h < 0.0) bad(w + ".silent_hours", "must be nonnegative");
    c.silent_hours = *h;
  }
}

void parse_simulate(const json& obj, ExperimentConfig& c) {
  const std::string w = "simulate";
  only_keys(obj, w, {"fraction", "behavior", "duration_days"});
  if (auto it = obj.find("fraction"); it != obj.end()) {
    c.simulate_fraction = fraction_value(*it, w + ".fraction");
  }
  if (auto it = obj.find("behavior"); it != obj.end()) {
    c.simulate_behavior = parse_behavior(*it, w + ".behavior");
    if (c.simulate_behavior == BehaviorKind::preference_follower) {
      bad(w + ".behavior", "not a detection behavior");
    }
  }
  c.simulate_duration_s =
      positive(obj, w, "duration_days", c.simulate_duration_s / kSecondsPerDay) * kSecondsPerDay;
}

// Line and column of a byte offset, both 1-based.
std::string locate(std::string_view text, std::size_t offset) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < offset && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

}  // namespace

std::string_view to_string(CommandKind kind) {
  for (const auto& c : kCommands) {
    if (c.kind == kind) return c.name;
  }
  return "?";
}

CommandKind parse_command(std::string_view name) {
  for (const auto& c : kCommands) {
    if (c.name == name) return c.kind;
  }
  fail(ErrorCode::config, "unknown experiment '" + std::string(name) + "'");
}

bool is_stochastic(CommandKind kind) {
  switch (kind) {
    case CommandKind::table2:
    case CommandKind::fig3:
    case CommandKind::type_i:
    case CommandKind::simulate:
      return true;
    default:
      return false;
  }
}

ValidityParams ExperimentConfig::params_for_fraction(double fraction) const {
  return params_override ? *params_override : bondsim::params_for(fraction);
}

DetectionConfig ExperimentConfig::detection(double fraction, BehaviorKind kind,
                                            std::size_t trial_count) const {
  if (!seed) fail(ErrorCode::config, "config field 'seed': required for stochastic experiments");
  DetectionConfig d;
  d.attacker_fraction = fraction;
  d.behavior.kind = kind;
  d.behavior.walk_sd = walk_sd;
  d.behavior.drop_factor = drop_factor;
  d.behavior.drop_duration_s = drop_duration_s;
  d.duration_s = duration_s;
  d.trials = trial_count;
  d.seed = *seed;
  d.target_s = network.target_s;
  d.network_hps = network_hps;
  d.params = params_for_fraction(fraction);
  d.threads = threads;
  d.abandonment = abandonment;
  d.abandon_p = network.abandon_p;
  return d;
}

ExperimentConfig parse_config(std::string_view text, std::string_view source_name) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(ErrorCode::config, std::string(source_name) + ": syntax error at " +
                                locate(text, e.byte > 0 ? e.byte - 1 : 0));
  }
  only_keys(root, "", {"experiment", "seed", "trials", "full_trials", "threads", "network",
                       "detection", "block_time", "validate", "abandon", "simulate", "comment"});

  ExperimentConfig c;
  if (auto it = root.find("experiment"); it != root.end()) {
    if (!it->is_string()) bad("experiment", "expected a command name");
    try {
      c.experiment = parse_command(it->get<std::string>());
    } catch (const Error& e) {
      bad("experiment", e.what());
    }
  }
  if (root.contains("seed")) c.seed = get_count(root, "", "seed", 0);
  c.trials = get_count(root, "", "trials", c.trials);
  if (c.trials == 0) bad("trials", "must be at least 1");
  c.full_trials = get_count(root, "", "full_trials", c.full_trials);
  if (c.full_trials == 0) bad("full_trials", "must be at least 1");
  c.threads = static_cast<unsigned>(get_count(root, "", "threads", 0));
  if (root.contains("comment") && !root["comment"].is_string()) bad("comment", "expected a string");

  if (auto it = root.find("network"); it != root.end()) parse_network(*it, c);
  if (auto it = root.find("detection"); it != root.end()) parse_detection(*it, c);
  c.block_time.target_s = c.network.target_s;
  c.block_time.mu = c.network.mu;
  if (auto it = root.find("block_time"); it != root.end()) parse_block_time(*it, c);
  if (auto it = root.find("validate"); it != root.end()) parse_validate(*it, c);
  if (auto it = root.find("abandon"); it != root.end()) parse_abandon(*it, c);
  if (auto it = root.find("simulate"); it != root.end()) parse_simulate(*it, c);

  c.canonical_json = root.dump();
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::config, "cannot read config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  auto config = parse_config(buf.str(), path);
  if (!config.blocks_path.empty() && std::filesystem::path(config.blocks_path).is_relative()) {
    config.blocks_path =
        (std::filesystem::path(path).parent_path() / config.blocks_path).lexically_normal().string();
  }
  return config;
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t cell_seed(std::uint64_t base, std::string_view tag) {
  // splitmix64 finalizer over the base seed mixed with the tag hash
  std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (fnv1a64(tag) | 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace bondsim::harness
