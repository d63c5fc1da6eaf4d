#include "serc/trace.hpp"

#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

namespace serc {

nlohmann::json to_json_record(const TraceEvent& e) {
  nlohmann::json j;
  j["ts"] = e.ts;
  j["phase"] = e.phase;
  j["op"] = e.op;
  j["k"] = e.k ? nlohmann::json(*e.k) : nlohmann::json(nullptr);
  j["i"] = e.i ? nlohmann::json(*e.i) : nlohmann::json(nullptr);
  j["verdict"] = e.verdict ? nlohmann::json(to_string(*e.verdict)) : nlohmann::json(nullptr);
  j["tokens_in"] = e.tokens_in;
  j["tokens_out"] = e.tokens_out;
  j["note"] = e.note;
  return j;
}

TraceEvent trace_event_from_json(const nlohmann::json& j) {
  TraceEvent e;
  e.ts = j.at("ts").get<std::int64_t>();
  e.phase = j.at("phase").get<std::string>();
  e.op = j.at("op").get<std::string>();
  if (!j.at("k").is_null()) e.k = j.at("k").get<int>();
  if (!j.at("i").is_null()) e.i = j.at("i").get<int>();
  if (!j.at("verdict").is_null()) e.verdict = parse_verdict(j.at("verdict").get<std::string>());
  e.tokens_in = j.at("tokens_in").get<std::int64_t>();
  e.tokens_out = j.at("tokens_out").get<std::int64_t>();
  e.note = j.at("note").get<std::string>();
  return e;
}

std::string digest(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void TraceLog::append(TraceEvent e) {
  e.ts = static_cast<std::int64_t>(events_.size()) + 1;
  events_.push_back(std::move(e));
}

void TraceLog::append_all(std::vector<TraceEvent> events) {
  for (auto& e : events) append(std::move(e));
}

void TraceLog::write(std::ostream& out) const {
  for (const auto& e : events_) out << to_json_record(e).dump() << '\n';
}

std::string TraceLog::jsonl() const {
  std::ostringstream out;
  write(out);
  return out.str();
}

std::vector<TraceEvent> TraceLog::read(std::istream& in) {
  std::vector<TraceEvent> out;
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(trace_event_from_json(nlohmann::json::parse(line)));
    } catch (const std::exception& e) {
      throw std::runtime_error("trace line " + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace serc
