#include "zscore/event_model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <tuple>
#include <unordered_set>

#include <json.hpp>

#include "zscore/error.hpp"

namespace zscore {

namespace {

using Json = nlohmann::json;
using OrderedJson = nlohmann::ordered_json;

auto key_tuple(const Event& e) {
  return std::tie(e.ts, e.tx_hash, e.kind, e.wallet, e.pool.pool_id);
}

std::string key_string(const Event& e) {
  std::string key = e.tx_hash;
  key += '\x1f';
  key += to_string(e.kind);
  key += '\x1f';
  key += e.wallet;
  key += '\x1f';
  key += e.pool.pool_id;
  key += '\x1f';
  key += std::to_string(e.ts);
  return key;
}

const std::unordered_set<std::string>& known_keys() {
  static const std::unordered_set<std::string> keys = {
      "kind",     "wallet",         "tx",        "ts",         "pool",
      "fee_tier_ppm", "pool_tvl_usd", "is_stable_pair", "amount_usd", "token_in",
      "token_out", "route_hops",    "tokens",    "fees_collected_usd"};
  return keys;
}

[[noreturn]] void malformed(std::size_t line_no, const std::string& reason) {
  throw RecordError(ErrorCode::MalformedRecord, line_no, reason);
}

const Json& require(const Json& obj, const char* key, std::size_t line_no) {
  auto it = obj.find(key);
  if (it == obj.end()) malformed(line_no, std::string("missing field '") + key + "'");
  return *it;
}

std::string require_string(const Json& obj, const char* key, std::size_t line_no) {
  const Json& v = require(obj, key, line_no);
  if (!v.is_string()) malformed(line_no, std::string("field '") + key + "' must be a string");
  auto s = v.get<std::string>();
  if (s.empty()) malformed(line_no, std::string("field '") + key + "' must not be empty");
  return s;
}

double require_number(const Json& obj, const char* key, std::size_t line_no) {
  const Json& v = require(obj, key, line_no);
  if (!v.is_number()) malformed(line_no, std::string("field '") + key + "' must be a number");
  double d = v.get<double>();
  if (!std::isfinite(d)) malformed(line_no, std::string("field '") + key + "' must be finite");
  return d;
}

std::int64_t require_integer(const Json& obj, const char* key, std::size_t line_no) {
  const Json& v = require(obj, key, line_no);
  if (v.is_number_integer()) return v.get<std::int64_t>();
  if (v.is_number_float()) {
    double d = v.get<double>();
    if (std::isfinite(d) && d == std::floor(d) && std::fabs(d) < 9.0e15) {
      return static_cast<std::int64_t>(d);
    }
  }
  malformed(line_no, std::string("field '") + key + "' must be an integer");
}

void forbid(const Json& obj, const char* key, EventKind kind, std::size_t line_no) {
  if (obj.contains(key)) {
    malformed(line_no, std::string("field '") + key + "' not allowed for kind '" +
                           std::string(to_string(kind)) + "'");
  }
}

Event event_from_json(const Json& obj, std::size_t line_no) {
  if (!obj.is_object()) malformed(line_no, "record must be a JSON object");
  for (const auto& item : obj.items()) {
    if (!known_keys().contains(item.key())) malformed(line_no, "unknown field '" + item.key() + "'");
  }

  Event e;
  auto kind_text = require_string(obj, "kind", line_no);
  auto kind = parse_event_kind(kind_text);
  if (!kind) malformed(line_no, "unknown kind '" + kind_text + "'");
  e.kind = *kind;
  e.wallet = require_string(obj, "wallet", line_no);
  e.tx_hash = require_string(obj, "tx", line_no);
  e.ts = require_integer(obj, "ts", line_no);
  e.pool.pool_id = require_string(obj, "pool", line_no);
  const auto tier = require_integer(obj, "fee_tier_ppm", line_no);
  if (!is_valid_fee_tier(static_cast<int>(tier)) || tier != static_cast<int>(tier)) {
    malformed(line_no, "fee_tier_ppm " + std::to_string(tier) + " is not one of 100, 500, 3000, 10000");
  }
  e.pool.fee_tier_ppm = static_cast<int>(tier);
  e.pool.tvl_usd = require_number(obj, "pool_tvl_usd", line_no);
  const Json& stable = require(obj, "is_stable_pair", line_no);
  if (!stable.is_boolean()) malformed(line_no, "field 'is_stable_pair' must be a boolean");
  e.pool.is_stable_pair = stable.get<bool>();
  e.amount_usd = require_number(obj, "amount_usd", line_no);

  if (e.kind == EventKind::Swap) {
    forbid(obj, "tokens", e.kind, line_no);
    forbid(obj, "fees_collected_usd", e.kind, line_no);
    e.token_in = require_string(obj, "token_in", line_no);
    e.token_out = require_string(obj, "token_out", line_no);
    e.route_hops = static_cast<int>(require_integer(obj, "route_hops", line_no));
  } else {
    forbid(obj, "token_in", e.kind, line_no);
    forbid(obj, "token_out", e.kind, line_no);
    forbid(obj, "route_hops", e.kind, line_no);
    const Json& tokens = require(obj, "tokens", line_no);
    if (!tokens.is_array() || tokens.size() != 2 || !tokens[0].is_string() ||
        !tokens[1].is_string()) {
      malformed(line_no, "field 'tokens' must be an array of two token symbols");
    }
    e.tokens = std::array<std::string, 2>{tokens[0].get<std::string>(), tokens[1].get<std::string>()};
    if (e.kind == EventKind::Deposit) {
      forbid(obj, "fees_collected_usd", e.kind, line_no);
    } else if (obj.contains("fees_collected_usd")) {
      e.fees_collected_usd = require_number(obj, "fees_collected_usd", line_no);
    }
  }

  auto violations = validate_event(e);
  if (!violations.empty()) {
    malformed(line_no, std::string(to_string(violations.front().kind)) + ": " +
                           violations.front().detail);
  }
  return e;
}

}  // namespace

bool is_valid_fee_tier(int fee_tier_ppm) noexcept {
  return std::find(kFeeTiersPpm.begin(), kFeeTiersPpm.end(), fee_tier_ppm) != kFeeTiersPpm.end();
}

std::string_view to_string(EventKind kind) noexcept {
  switch (kind) {
    case EventKind::Deposit: return "deposit";
    case EventKind::Withdraw: return "withdraw";
    case EventKind::Swap: return "swap";
  }
  return "unknown";
}

std::optional<EventKind> parse_event_kind(std::string_view text) noexcept {
  if (text == "deposit") return EventKind::Deposit;
  if (text == "withdraw") return EventKind::Withdraw;
  if (text == "swap") return EventKind::Swap;
  return std::nullopt;
}

bool event_less(const Event& a, const Event& b) noexcept { return key_tuple(a) < key_tuple(b); }

bool same_event_key(const Event& a, const Event& b) noexcept { return key_tuple(a) == key_tuple(b); }

EventLog::EventLog(std::vector<Event> events) : events_(std::move(events)) {
  std::stable_sort(events_.begin(), events_.end(), event_less);
}

std::int64_t EventLog::max_ts() const noexcept {
  return events_.empty() ? 0 : events_.back().ts;
}

EventLog merge_logs(const EventLog& a, const EventLog& b) {
  std::vector<Event> all(a.events().begin(), a.events().end());
  all.insert(all.end(), b.events().begin(), b.events().end());
  return EventLog(std::move(all));
}

std::string_view to_string(ViolationKind kind) noexcept {
  switch (kind) {
    case ViolationKind::NonPositiveTimestamp: return "NonPositiveTimestamp";
    case ViolationKind::NegativeAmount: return "NegativeAmount";
    case ViolationKind::NonFiniteValue: return "NonFiniteValue";
    case ViolationKind::UnknownFeeTier: return "UnknownFeeTier";
    case ViolationKind::NegativeTvl: return "NegativeTvl";
    case ViolationKind::SelfSwap: return "SelfSwap";
    case ViolationKind::InvalidRouteHops: return "InvalidRouteHops";
    case ViolationKind::MissingField: return "MissingField";
    case ViolationKind::UnexpectedField: return "UnexpectedField";
    case ViolationKind::EmptyIdentifier: return "EmptyIdentifier";
    case ViolationKind::DuplicateKey: return "DuplicateKey";
    case ViolationKind::Unsorted: return "Unsorted";
  }
  return "Unknown";
}

std::vector<Violation> validate_event(const Event& e, std::size_t index) {
  std::vector<Violation> out;
  auto add = [&](ViolationKind kind, std::string detail) {
    out.push_back(Violation{kind, index, std::move(detail)});
  };

  if (e.wallet.empty() || e.tx_hash.empty() || e.pool.pool_id.empty()) {
    add(ViolationKind::EmptyIdentifier, "wallet, tx and pool must be non-empty");
  }
  if (e.ts <= 0) add(ViolationKind::NonPositiveTimestamp, "ts must be > 0");
  if (!std::isfinite(e.amount_usd) || !std::isfinite(e.pool.tvl_usd) ||
      (e.fees_collected_usd && !std::isfinite(*e.fees_collected_usd))) {
    add(ViolationKind::NonFiniteValue, "monetary values must be finite");
  }
  if (e.amount_usd < 0.0) add(ViolationKind::NegativeAmount, "amount_usd must be >= 0");
  if (e.fees_collected_usd && *e.fees_collected_usd < 0.0) {
    add(ViolationKind::NegativeAmount, "fees_collected_usd must be >= 0");
  }
  if (!is_valid_fee_tier(e.pool.fee_tier_ppm)) {
    add(ViolationKind::UnknownFeeTier, "fee tier " + std::to_string(e.pool.fee_tier_ppm));
  }
  if (e.pool.tvl_usd < 0.0) add(ViolationKind::NegativeTvl, "pool_tvl_usd must be >= 0");

  if (e.kind == EventKind::Swap) {
    if (!e.token_in || !e.token_out || !e.route_hops) {
      add(ViolationKind::MissingField, "swap requires token_in, token_out and route_hops");
    }
    if (e.tokens || e.fees_collected_usd) {
      add(ViolationKind::UnexpectedField, "swap must not carry tokens or fees_collected_usd");
    }
    if (e.token_in && e.token_out && *e.token_in == *e.token_out) {
      add(ViolationKind::SelfSwap, "token_in equals token_out (" + *e.token_in + ")");
    }
    if (e.route_hops && *e.route_hops < 1) {
      add(ViolationKind::InvalidRouteHops, "route_hops must be >= 1");
    }
  } else {
    if (!e.tokens) add(ViolationKind::MissingField, "deposit/withdraw requires tokens");
    if (e.token_in || e.token_out || e.route_hops) {
      add(ViolationKind::UnexpectedField, "deposit/withdraw must not carry swap fields");
    }
    if (e.kind == EventKind::Deposit && e.fees_collected_usd) {
      add(ViolationKind::UnexpectedField, "deposit must not carry fees_collected_usd");
    }
  }
  return out;
}

std::vector<Violation> validate_log(const EventLog& log) {
  std::vector<Violation> out;
  const auto events = log.events();
  for (std::size_t i = 0; i < events.size(); ++i) {
    auto v = validate_event(events[i], i);
    out.insert(out.end(), v.begin(), v.end());
    if (i > 0) {
      if (same_event_key(events[i - 1], events[i])) {
        out.push_back({ViolationKind::DuplicateKey, i, "duplicate of event " + std::to_string(i - 1)});
      } else if (event_less(events[i], events[i - 1])) {
        out.push_back({ViolationKind::Unsorted, i, "event precedes its predecessor"});
      }
    }
  }
  return out;
}

EventLog parse_events(std::istream& source) {
  std::vector<Event> events;
  std::unordered_set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(source, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    Json obj;
    try {
      obj = Json::parse(line);
    } catch (const Json::parse_error& err) {
      malformed(line_no, std::string("invalid JSON: ") + err.what());
    }
    Event e = event_from_json(obj, line_no);
    if (!seen.insert(key_string(e)).second) {
      throw RecordError(ErrorCode::DuplicateEvent, line_no,
                        "duplicate event key (tx " + e.tx_hash + ", wallet " + e.wallet + ")");
    }
    events.push_back(std::move(e));
  }
  return EventLog(std::move(events));
}

EventLog parse_events_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open events file '" + path + "'");
  return parse_events(in);
}

std::string event_to_json_line(const Event& e) {
  OrderedJson obj;
  obj["kind"] = to_string(e.kind);
  obj["wallet"] = e.wallet;
  obj["tx"] = e.tx_hash;
  obj["ts"] = e.ts;
  obj["pool"] = e.pool.pool_id;
  obj["fee_tier_ppm"] = e.pool.fee_tier_ppm;
  obj["pool_tvl_usd"] = e.pool.tvl_usd;
  obj["is_stable_pair"] = e.pool.is_stable_pair;
  obj["amount_usd"] = e.amount_usd;
  if (e.token_in) obj["token_in"] = *e.token_in;
  if (e.token_out) obj["token_out"] = *e.token_out;
  if (e.route_hops) obj["route_hops"] = *e.route_hops;
  if (e.tokens) obj["tokens"] = {(*e.tokens)[0], (*e.tokens)[1]};
  if (e.fees_collected_usd) obj["fees_collected_usd"] = *e.fees_collected_usd;
  return obj.dump();
}

void write_events(const EventLog& log, std::ostream& out) {
  for (const auto& e : log.events()) out << event_to_json_line(e) << '\n';
}

void write_events_file(const EventLog& log, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write events file '" + path + "'");
  write_events(log, out);
  if (!out) throw Error(ErrorCode::Io, "write failed for '" + path + "'");
}

}  // namespace zscore
