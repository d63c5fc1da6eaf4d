#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "serc/fact_model.hpp"

namespace serc {

/// One trace line. `ts` is a logical sequence number so traces are
/// reproducible byte for byte. `phase` is one of the five pipeline phases or
/// "meta" for run bookkeeping records.
struct TraceEvent {
  std::int64_t ts = 0;
  std::string phase;
  std::string op;
  std::optional<int> k;
  std::optional<int> i;
  std::optional<Verdict> verdict;
  std::int64_t tokens_in = 0;
  std::int64_t tokens_out = 0;
  std::string note;
};

nlohmann::json to_json_record(const TraceEvent& e);
TraceEvent trace_event_from_json(const nlohmann::json& j);

/// 64-bit FNV-1a, rendered as 16 lowercase hex digits.
std::string digest(std::string_view text);

/// Append-only event log. Not thread-safe; parallel sections buffer events
/// locally and commit them in a fixed order.
class TraceLog {
 public:
  void append(TraceEvent e);
  void append_all(std::vector<TraceEvent> events);

  const std::vector<TraceEvent>& events() const { return events_; }
  void write(std::ostream& out) const;
  std::string jsonl() const;

  static std::vector<TraceEvent> read(std::istream& in);

 private:
  std::vector<TraceEvent> events_;
};

}  // namespace serc
