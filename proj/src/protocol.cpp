#include "bondsim/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <string>

#include <json.hpp>

#include "bondsim/error.hpp"
#include "bondsim/stats.hpp"

namespace bondsim {

CoinUnits to_units(double coins) {
  return static_cast<CoinUnits>(std::llround(coins * static_cast<double>(kUnitsPerCoin)));
}

double to_coins(CoinUnits units) {
  return static_cast<double>(units) / static_cast<double>(kUnitsPerCoin);
}

std::string_view to_string(BondState state) {
  switch (state) {
    case BondState::bootstrapping: return "bootstrapping";
    case BondState::fully_bonded: return "fully_bonded";
    case BondState::divested: return "divested";
    case BondState::abandoned: return "abandoned";
  }
  return "?";
}

bool is_legal_transition(BondState from, BondState to) {
  using S = BondState;
  switch (from) {
    case S::bootstrapping: return to == S::fully_bonded || to == S::abandoned;
    case S::fully_bonded: return to == S::bootstrapping || to == S::abandoned || to == S::divested;
    case S::abandoned: return to == S::divested;
    case S::divested: return to == S::bootstrapping;
  }
  return false;
}

std::string_view to_string(EventKind kind) {
  switch (kind) {
    case EventKind::join: return "join";
    case EventKind::deposit: return "deposit";
    case EventKind::block: return "block";
    case EventKind::reconcile: return "reconcile";
    case EventKind::slash: return "slash";
    case EventKind::abandon: return "abandon";
    case EventKind::divest: return "divest";
  }
  return "?";
}

void NetworkParams::check() const {
  require(target_s > 0.0, ErrorCode::config, "network: target_s must be positive");
  require(bond_coins >= 0.0, ErrorCode::config, "network: bond_coins must be nonnegative");
  require(mu >= 1.0, ErrorCode::config, "network: mu must be at least 1");
  require(gamma >= 0.0 && gamma <= 1.0, ErrorCode::config, "network: gamma must lie in [0, 1]");
  require(abandon_p > 0.0 && abandon_p < 1.0, ErrorCode::config,
          "network: abandon_p must lie in (0, 1)");
}

// ---------------------------------------------------------------------------
// event log

namespace {

template <typename Enum, std::size_t N>
Enum parse_enum(const std::string& text, const Enum (&all)[N], const char* what) {
  for (Enum e : all) {
    if (to_string(e) == text) return e;
  }
  fail(ErrorCode::data, std::string("event log: unknown ") + what + " '" + text + "'");
}

constexpr EventKind kAllKinds[] = {EventKind::join,      EventKind::deposit, EventKind::block,
                                   EventKind::reconcile, EventKind::slash,   EventKind::abandon,
                                   EventKind::divest};
constexpr BondState kAllStates[] = {BondState::bootstrapping, BondState::fully_bonded,
                                    BondState::divested, BondState::abandoned};

}  // namespace

void write_event_log(std::ostream& out, std::span<const Event> events) {
  for (const auto& e : events) {
    nlohmann::ordered_json j;
    j["event"] = std::string(to_string(e.kind));
    j["miner"] = e.miner;
    j["height"] = e.height;
    j["index"] = e.block_index;
    j["time_s"] = e.time_s;
    j["amount_units"] = e.amount;
    j["state"] = std::string(to_string(e.state));
    out << j.dump() << '\n';
  }
}

std::vector<Event> read_event_log(std::istream& in) {
  std::vector<Event> events;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      Event e;
      e.kind = parse_enum(j.at("event").get<std::string>(), kAllKinds, "event");
      e.miner = j.at("miner").get<std::uint32_t>();
      e.height = j.at("height").get<std::uint64_t>();
      e.block_index = j.at("index").get<std::size_t>();
      e.time_s = j.at("time_s").get<double>();
      e.amount = j.at("amount_units").get<CoinUnits>();
      e.state = parse_enum(j.at("state").get<std::string>(), kAllStates, "state");
      events.push_back(e);
    } catch (const nlohmann::json::exception& ex) {
      fail(ErrorCode::data, "event log line " + std::to_string(line_no) + ": " + ex.what());
    }
  }
  return events;
}

// ---------------------------------------------------------------------------
// account

MinerAccount::MinerAccount(std::uint32_t id, const ValidityParams& params,
                           double initial_commitment_hps, double join_time_s)
    : id_(id), params_(params), last_activity_s_(join_time_s) {
  params_.check();
  if (!(initial_commitment_hps > 0.0)) fail(ErrorCode::domain, "initial commitment must be positive");
  commitments_.push_back(initial_commitment_hps);
}

CoinUnits MinerAccount::locked() const noexcept {
  CoinUnits sum = 0;
  for (const auto& d : deposits_) sum += d.amount;
  return sum;
}

bool MinerAccount::conserves_coins() const noexcept {
  return totals_.deposited ==
         totals_.refunded + totals_.forfeited + totals_.slashed + totals_.burned + locked();
}

void MinerAccount::transition(BondState to) {
  if (!is_legal_transition(state_, to)) {
    fail(ErrorCode::internal, "illegal bond state transition " + std::string(to_string(state_)) +
                                  " -> " + std::string(to_string(to)));
  }
  transitions_.emplace_back(state_, to);
  state_ = to;
}

Event MinerAccount::make_event(EventKind kind, std::uint64_t height, std::size_t index,
                               double time_s, CoinUnits amount) const {
  return Event{kind, id_, height, index, time_s, amount, state_};
}

void MinerAccount::set_params(const ValidityParams& params) {
  params.check();
  params_ = params;
  if (state_ == BondState::fully_bonded && deposits_.size() < params_.n_long) {
    transition(BondState::bootstrapping);
  } else if (state_ == BondState::bootstrapping && deposits_.size() >= params_.n_long &&
             intervals_.size() >= params_.n_long) {
    transition(BondState::fully_bonded);
  }
}

Event MinerAccount::rejoin(double commitment_hps, double time_s) {
  if (state_ != BondState::divested) {
    fail(ErrorCode::protocol_violation, "only a divested miner can rejoin");
  }
  if (!(commitment_hps > 0.0)) fail(ErrorCode::domain, "commitment must be positive");
  deposits_.clear();
  intervals_.clear();
  commitments_.assign(1, commitment_hps);
  blocks_in_period_ = 0;
  last_activity_s_ = time_s;
  transition(BondState::bootstrapping);
  return make_event(EventKind::join, 0, 0, time_s, 0);
}

Event MinerAccount::slash_all(std::uint64_t height, double time_s) {
  const CoinUnits amount = locked();
  totals_.slashed += amount;
  deposits_.clear();
  transition(BondState::abandoned);
  transition(BondState::divested);
  return make_event(EventKind::slash, height, blocks_in_period_, time_s, amount);
}

Event MinerAccount::reconcile_oldest(std::uint64_t height, double time_s) {
  const Deposit d = deposits_.front();
  deposits_.pop_front();
  const double f = reconcile_amount(d.report_hps, d.commitment_hps, to_coins(d.amount));
  const CoinUnits refund = std::clamp(to_units(f), CoinUnits{0}, d.amount);
  totals_.refunded += refund;
  totals_.forfeited += d.amount - refund;
  return make_event(EventKind::reconcile, height, d.block_index, time_s, refund);
}

bool MinerAccount::window_valid() const {
  return valid(intervals_, params_);
}

// ---------------------------------------------------------------------------
// operations

double reconcile_amount(double report_hps, double commitment_hps, double bond_coins) {
  if (!(commitment_hps > 0.0)) fail(ErrorCode::domain, "reconcile: commitment must be positive");
  if (!(bond_coins >= 0.0)) fail(ErrorCode::domain, "reconcile: bond must be nonnegative");
  if (!(report_hps >= 0.0)) fail(ErrorCode::domain, "reconcile: report must be nonnegative");
  const double deviation = std::abs(report_hps - commitment_hps) / commitment_hps;
  return bond_coins - bond_coins * std::min(1.0, deviation);
}

std::vector<Event> on_block_mined(MinerAccount& account, BlockRecord& block,
                                  const NetworkParams& net) {
  net.check();
  if (account.state_ != BondState::bootstrapping && account.state_ != BondState::fully_bonded) {
    fail(ErrorCode::protocol_violation, "block from a miner that is not bonded");
  }
  if (block.miner != account.id_) fail(ErrorCode::protocol_violation, "block attributed to another miner");
  if (!(block.inter_arrival_s > 0.0)) fail(ErrorCode::domain, "inter-arrival time must be positive");
  if (!(block.timestamp_s > account.last_activity_s_)) {
    fail(ErrorCode::protocol_violation, "block timestamps must strictly increase");
  }

  std::vector<Event> events;
  const CoinUnits bond = to_units(net.bond_coins);
  const std::size_t n = account.required_deposits();
  const std::size_t k = ++account.blocks_in_period_;
  const double commitment = account.commitments_.back();

  account.intervals_.push_back({block.inter_arrival_s, block.report_hps, block.avg_difficulty});
  ++account.coinbase_count_;
  events.push_back(account.make_event(EventKind::block, block.height, k, block.timestamp_s, 0));

  CoinUnits refunded = 0;
  auto deposit = [&] {
    account.deposits_.push_back({k, bond, commitment, block.report_hps});
    account.totals_.deposited += bond;
    events.push_back(account.make_event(EventKind::deposit, block.height, k, block.timestamp_s, bond));
  };

  if (account.state_ == BondState::bootstrapping) {
    deposit();
    if (account.deposits_.size() >= n && account.intervals_.size() >= n) {
      if (!account.window_valid()) {
        events.push_back(account.slash_all(block.height, block.timestamp_s));
      } else {
        account.transition(BondState::fully_bonded);
        while (account.deposits_.size() > n) {
          events.push_back(account.reconcile_oldest(block.height, block.timestamp_s));
          refunded += events.back().amount;
        }
      }
    }
  } else {
    if (!account.window_valid()) {
      events.push_back(account.slash_all(block.height, block.timestamp_s));
    } else {
      while (account.deposits_.size() >= n) {
        events.push_back(account.reconcile_oldest(block.height, block.timestamp_s));
        refunded += events.back().amount;
      }
      deposit();
    }
  }

  if (account.state_ == BondState::fully_bonded) {
    const auto& hist = account.commitments_;
    const std::size_t take = std::min(n, hist.size());
    account.commitments_.push_back(constrain_commitment(
        block.next_commitment_hps, std::span<const double>(hist).last(take), net.mu));
  } else if (account.state_ == BondState::bootstrapping) {
    account.commitments_.push_back(std::max(0.0, block.next_commitment_hps));
  }

  block.reconciliation_coins = to_coins(refunded);
  account.last_activity_s_ = block.timestamp_s;
  account.blocks_.push_back(block);
  return events;
}

double abandonment_threshold_s(double commitment_hps, double total_commitment_hps,
                               const NetworkParams& net) {
  if (!(commitment_hps > 0.0)) fail(ErrorCode::domain, "abandonment: commitment must be positive");
  if (!(total_commitment_hps >= commitment_hps)) {
    fail(ErrorCode::domain, "abandonment: total commitment below the miner's own");
  }
  return exp_quantile(net.abandon_p, net.target_s * total_commitment_hps / commitment_hps);
}

bool check_abandonment(MinerAccount& account, double now_s, double total_commitment_hps,
                       const NetworkParams& net, std::vector<Event>* events) {
  if (account.state_ != BondState::bootstrapping && account.state_ != BondState::fully_bonded) {
    return false;
  }
  const double c = account.commitments_.back();
  if (!(c > 0.0)) return false;
  const double threshold = abandonment_threshold_s(c, total_commitment_hps, net);
  if (!(now_s - account.last_activity_s_ > threshold)) return false;

  const CoinUnits amount = account.locked();
  account.totals_.burned += amount;
  account.deposits_.clear();
  account.transition(BondState::abandoned);
  Event abandon = account.make_event(EventKind::abandon, 0, account.blocks_in_period_, now_s, amount);
  account.transition(BondState::divested);
  if (events) {
    events->push_back(abandon);
    events->push_back(account.make_event(EventKind::divest, 0, account.blocks_in_period_, now_s, 0));
  }
  return true;
}

double constrain_commitment(double proposed_hps, std::span<const double> history, double mu) {
  if (history.empty()) fail(ErrorCode::internal, "commitment history is empty");
  if (!(mu >= 1.0)) fail(ErrorCode::domain, "mu must be at least 1");
  const double mean =
      std::accumulate(history.begin(), history.end(), 0.0) / static_cast<double>(history.size());
  return std::min(std::max(0.0, proposed_hps), mu * mean);
}

std::vector<double> scale_bootstrapping(std::span<const double> bootstrapping_hps,
                                        double total_commitment_hps, double gamma) {
  if (!(total_commitment_hps >= 0.0) || !(gamma >= 0.0)) {
    fail(ErrorCode::domain, "scale_bootstrapping: inputs must be nonnegative");
  }
  std::vector<double> out(bootstrapping_hps.begin(), bootstrapping_hps.end());
  double sum = 0.0;
  for (double c : out) {
    if (!(c >= 0.0)) fail(ErrorCode::domain, "scale_bootstrapping: negative commitment");
    sum += c;
  }
  const double cap = gamma * total_commitment_hps;
  if (sum > cap) {
    const double factor = cap / sum;
    for (double& c : out) c *= factor;
  }
  return out;
}

std::vector<Event> divest(MinerAccount& account, const NetworkParams& net, double time_s) {
  net.check();
  if (account.state_ != BondState::fully_bonded) {
    fail(ErrorCode::protocol_violation, "only a fully bonded miner can divest");
  }
  std::vector<Event> events;
  if (account.window_valid()) {
    while (!account.deposits_.empty()) {
      events.push_back(account.reconcile_oldest(0, time_s));
    }
    account.transition(BondState::divested);
  } else {
    const CoinUnits amount = account.locked();
    account.totals_.slashed += amount;
    account.deposits_.clear();
    account.transition(BondState::divested);
    events.push_back(account.make_event(EventKind::slash, 0, account.blocks_in_period_, time_s, amount));
  }
  account.last_activity_s_ = time_s;
  events.push_back(account.make_event(EventKind::divest, 0, account.blocks_in_period_, time_s, 0));
  return events;
}

}  // namespace bondsim
