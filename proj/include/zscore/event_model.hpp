#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace zscore {

inline constexpr std::array<int, 4> kFeeTiersPpm = {100, 500, 3000, 10000};

bool is_valid_fee_tier(int fee_tier_ppm) noexcept;

struct PoolContext {
  std::string pool_id;
  int fee_tier_ppm = 3000;
  double tvl_usd = 0.0;
  bool is_stable_pair = false;

  bool operator==(const PoolContext&) const = default;
};

enum class EventKind { Deposit, Withdraw, Swap };

std::string_view to_string(EventKind kind) noexcept;
std::optional<EventKind> parse_event_kind(std::string_view text) noexcept;

struct Event {
  EventKind kind = EventKind::Deposit;
  std::string wallet;
  std::string tx_hash;
  std::int64_t ts = 0;
  PoolContext pool;
  double amount_usd = 0.0;
  // swap only
  std::optional<std::string> token_in;
  std::optional<std::string> token_out;
  std::optional<int> route_hops;
  // deposit / withdraw only
  std::optional<std::array<std::string, 2>> tokens;
  // withdraw only
  std::optional<double> fees_collected_usd;

  bool operator==(const Event&) const = default;
};

// Strict weak ordering used by EventLog: (ts, tx_hash) first, then the rest of
// the uniqueness key so the order is total.
bool event_less(const Event& a, const Event& b) noexcept;
bool same_event_key(const Event& a, const Event& b) noexcept;

// Immutable, sorted sequence of events. Construction sorts but does not
// validate; use validate_log or parse_events for checked input.
class EventLog {
 public:
  EventLog() = default;
  explicit EventLog(std::vector<Event> events);

  std::span<const Event> events() const noexcept { return events_; }
  std::size_t size() const noexcept { return events_.size(); }
  bool empty() const noexcept { return events_.empty(); }
  const Event& operator[](std::size_t i) const { return events_[i]; }

  // Largest timestamp, or 0 for an empty log.
  std::int64_t max_ts() const noexcept;

  bool operator==(const EventLog&) const = default;

 private:
  std::vector<Event> events_;
};

EventLog merge_logs(const EventLog& a, const EventLog& b);

enum class ViolationKind {
  NonPositiveTimestamp,
  NegativeAmount,
  NonFiniteValue,
  UnknownFeeTier,
  NegativeTvl,
  SelfSwap,
  InvalidRouteHops,
  MissingField,
  UnexpectedField,
  EmptyIdentifier,
  DuplicateKey,
  Unsorted,
};

std::string_view to_string(ViolationKind kind) noexcept;

struct Violation {
  ViolationKind kind;
  std::size_t event_index;
  std::string detail;

  bool operator==(const Violation&) const = default;
};

// Invariant checks for a single event, independent of its neighbours.
std::vector<Violation> validate_event(const Event& event, std::size_t index = 0);

// All invariant violations of the log; empty means valid.
std::vector<Violation> validate_log(const EventLog& log);

// Reads line-delimited JSON records. Blank lines are skipped. Throws
// RecordError (MalformedRecord / DuplicateEvent) for the first offending line.
EventLog parse_events(std::istream& source);
EventLog parse_events_file(const std::string& path);

std::string event_to_json_line(const Event& event);
void write_events(const EventLog& log, std::ostream& out);
void write_events_file(const EventLog& log, const std::string& path);

}  // namespace zscore
