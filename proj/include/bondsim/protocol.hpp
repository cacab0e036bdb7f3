#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <iosfwd>
#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "bondsim/validity.hpp"

namespace bondsim {

/// Ledger amounts are integer base units so that conservation is exact.
using CoinUnits = std::int64_t;
inline constexpr CoinUnits kUnitsPerCoin = 100'000'000;

CoinUnits to_units(double coins);  // rounds to nearest unit
double to_coins(CoinUnits units);

enum class BondState { bootstrapping, fully_bonded, divested, abandoned };

std::string_view to_string(BondState state);
bool is_legal_transition(BondState from, BondState to);

struct NetworkParams {
  double target_s = 600.0;
  double bond_coins = 1.0;   // per-block bond b
  double mu = 2.0;           // commitment growth cap
  double gamma = 0.05;       // bootstrapping share cap
  double abandon_p = 0.99999;

  void check() const;
};

/// One block mined by a miner, as presented to its account.
struct BlockRecord {
  std::uint64_t height = 0;
  std::uint32_t miner = 0;
  double timestamp_s = 0.0;
  double inter_arrival_s = 0.0;      // since the miner's previous block
  double report_hps = 0.0;           // r_i
  double next_commitment_hps = 0.0;  // proposed c_{i+1}
  double avg_difficulty = 0.0;       // D_hat_i
  double reconciliation_coins = 0.0; // f_i, filled in by the account
};

/// A bond deposit, tied to the block that carried it.
struct Deposit {
  std::size_t block_index = 0;  // i, counted from 1 within a bonding period
  CoinUnits amount = 0;
  double commitment_hps = 0.0;  // c_i
  double report_hps = 0.0;      // r_i
};

enum class EventKind { join, deposit, block, reconcile, slash, abandon, divest };
std::string_view to_string(EventKind kind);

struct Event {
  EventKind kind = EventKind::block;
  std::uint32_t miner = 0;
  std::uint64_t height = 0;
  std::size_t block_index = 0;  // miner-local index of the block or deposit
  double time_s = 0.0;
  CoinUnits amount = 0;
  BondState state = BondState::bootstrapping;  // state after the event

  friend bool operator==(const Event&, const Event&) = default;
};

/// One line of JSON per event.
void write_event_log(std::ostream& out, std::span<const Event> events);
std::vector<Event> read_event_log(std::istream& in);

struct CoinTotals {
  CoinUnits deposited = 0;
  CoinUnits refunded = 0;   // paid back by reconciliation
  CoinUnits forfeited = 0;  // b - f kept back by reconciliation
  CoinUnits slashed = 0;    // lost to a failed validity test
  CoinUnits burned = 0;     // lost to abandonment
};

/// Per-miner protocol state.
class MinerAccount {
 public:
  MinerAccount(std::uint32_t id, const ValidityParams& params, double initial_commitment_hps,
               double join_time_s);

  std::uint32_t id() const noexcept { return id_; }
  BondState state() const noexcept { return state_; }
  const ValidityParams& params() const noexcept { return params_; }
  std::size_t required_deposits() const noexcept { return params_.n_long; }

  const std::deque<Deposit>& deposits() const noexcept { return deposits_; }
  const std::vector<ReportedInterval>& intervals() const noexcept { return intervals_; }
  const std::vector<double>& commitments() const noexcept { return commitments_; }
  const std::vector<BlockRecord>& blocks() const noexcept { return blocks_; }
  const CoinTotals& totals() const noexcept { return totals_; }
  const std::vector<std::pair<BondState, BondState>>& transitions() const noexcept {
    return transitions_;
  }

  CoinUnits locked() const noexcept;
  double current_commitment() const noexcept { return commitments_.back(); }
  double last_activity_s() const noexcept { return last_activity_s_; }
  std::size_t blocks_in_period() const noexcept { return blocks_in_period_; }
  std::uint64_t coinbase_count() const noexcept { return coinbase_count_; }

  /// deposited == refunded + forfeited + slashed + burned + locked
  bool conserves_coins() const noexcept;

  /// Applies a new window policy; a larger n sends a fully bonded miner back
  /// to Bootstrapping until enough deposits accumulate.
  void set_params(const ValidityParams& params);

  /// Deposit transaction for a Divested miner; starts a fresh bonding period.
  Event rejoin(double commitment_hps, double time_s);

 private:
  friend std::vector<Event> on_block_mined(MinerAccount&, BlockRecord&, const NetworkParams&);
  friend bool check_abandonment(MinerAccount&, double, double, const NetworkParams&,
                                std::vector<Event>*);
  friend std::vector<Event> divest(MinerAccount&, const NetworkParams&, double);

  void transition(BondState to);
  Event make_event(EventKind kind, std::uint64_t height, std::size_t index, double time_s,
                   CoinUnits amount) const;
  Event slash_all(std::uint64_t height, double time_s);
  Event reconcile_oldest(std::uint64_t height, double time_s);
  bool window_valid() const;

  std::uint32_t id_;
  BondState state_ = BondState::bootstrapping;
  ValidityParams params_;
  std::deque<Deposit> deposits_;
  std::vector<ReportedInterval> intervals_;
  std::vector<double> commitments_;  // c_1, c_2, ... of the current period
  std::vector<BlockRecord> blocks_;
  CoinTotals totals_;
  std::vector<std::pair<BondState, BondState>> transitions_;
  double last_activity_s_ = 0.0;
  std::size_t blocks_in_period_ = 0;
  std::uint64_t coinbase_count_ = 0;
};

/// Reconciliation refund: b - b * min(1, |r - c| / c).
double reconcile_amount(double report_hps, double commitment_hps, double bond_coins);

/// Processes a block mined by the account's miner. Fills
/// block.reconciliation_coins and returns the emitted events.
std::vector<Event> on_block_mined(MinerAccount& account, BlockRecord& block,
                                  const NetworkParams& net);

/// Silence threshold for a miner committed to `commitment_hps` out of
/// `total_commitment_hps`: the abandon_p quantile of its inter-block time.
double abandonment_threshold_s(double commitment_hps, double total_commitment_hps,
                               const NetworkParams& net);

/// True (and all bond burned, state Abandoned then Divested) when the miner
/// has been silent longer than its abandonment threshold at time `now_s`.
bool check_abandonment(MinerAccount& account, double now_s, double total_commitment_hps,
                       const NetworkParams& net, std::vector<Event>* events = nullptr);

/// Caps an increase at mu times the mean of `history` (the previous n
/// commitments). Decreases pass through; the result is never negative.
double constrain_commitment(double proposed_hps, std::span<const double> history, double mu);

/// Scales bootstrapping commitments down proportionately when their sum
/// exceeds gamma of the total commitment.
std::vector<double> scale_bootstrapping(std::span<const double> bootstrapping_hps,
                                        double total_commitment_hps, double gamma);

/// Divestment of a fully bonded miner: one final validity test, then either
/// per-deposit reconciliation payments or a full slash.
std::vector<Event> divest(MinerAccount& account, const NetworkParams& net, double time_s);

}  // namespace bondsim
