#include "serc/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <set>

#include "serc/surface.hpp"

namespace serc {

namespace {

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

// Integers print without a fractional part; means keep two decimals.
std::string count(double v) {
  if (std::floor(v) == v) return fixed(v, 0);
  return fixed(v, 2);
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
  return out + "\"";
}

}  // namespace

Precision oracle_precision(const std::vector<AtomicFact>& facts, const KnowledgeBase& kb) {
  Precision p;
  auto unique = dedup_facts(facts);
  p.total = static_cast<int>(unique.size());
  for (const auto& f : unique)
    if (kb.contains(to_triple(f))) ++p.supported;
  if (p.total == 0) {
    p.vacuous = true;
    p.value = 1.0;
  } else {
    p.value = static_cast<double>(p.supported) / p.total;
  }
  return p;
}

std::optional<double> preservation_rate(double initial_count, double final_count) {
  if (initial_count <= 0) return std::nullopt;
  return 100.0 * final_count / initial_count;
}

CostReport cost_report(std::int64_t low_total, std::int64_t high_total) {
  CostReport r{low_total, high_total, std::nullopt};
  if (high_total != 0) r.reduction = 1.0 - static_cast<double>(low_total) / static_cast<double>(high_total);
  return r;
}

CostReport cost_report(const TokenLedger& low, const TokenLedger& high) {
  return cost_report(low.total(), high.total());
}

VerdictHistogram syndrome_histogram(const std::vector<Syndrome>& syndromes) {
  VerdictHistogram h;
  for (const auto& s : syndromes) {
    switch (s.verdict) {
      case Verdict::SUP: ++h.sup; break;
      case Verdict::CON: ++h.con; break;
      case Verdict::NF: ++h.nf; break;
    }
  }
  return h;
}

std::vector<std::string> kb_subjects(const std::vector<AtomicFact>& facts, const KnowledgeBase& kb) {
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (const auto& f : facts) {
    if (!kb.has_entity(f.subject)) continue;
    auto name = kb.entity_name(f.subject);
    if (seen.insert(normalize_text(name)).second) out.push_back(name);
  }
  return out;
}

bool is_chimera(const std::vector<AtomicFact>& facts, const KnowledgeBase& kb) {
  return kb_subjects(facts, kb).size() >= 2;
}

std::string csv_row(const RunRow& r) {
  return csv_field(r.run_id) + "," + csv_field(r.method) + "," + csv_field(r.density) + "," + fixed(r.precision, 4) +
         "," + count(r.initial_facts) + "," + count(r.final_facts) + "," +
         (r.preservation_pct ? fixed(*r.preservation_pct, 1) : std::string("N/A")) + "," + count(r.total_tokens) +
         "," + count(r.retrieval_calls);
}

std::string csv_row(const ReductionRow& r) {
  return csv_field(r.pair_id) + "," + count(r.low_tokens) + "," + count(r.high_tokens) + "," +
         (r.reduction_pct ? fixed(*r.reduction_pct, 1) : std::string("N/A"));
}

ReductionRow reduction_row(std::string pair_id, double low_tokens, double high_tokens) {
  ReductionRow r{std::move(pair_id), low_tokens, high_tokens, std::nullopt};
  if (high_tokens != 0) r.reduction_pct = 100.0 * (1.0 - low_tokens / high_tokens);
  return r;
}

RunRow summary_row(const std::vector<RunRow>& rows, std::string run_id) {
  RunRow s;
  s.run_id = std::move(run_id);
  if (rows.empty()) return s;
  s.method = rows.front().method;
  s.density = rows.front().density;
  double n = static_cast<double>(rows.size());
  double precision = 0;
  for (const auto& r : rows) {
    precision += r.precision;
    s.initial_facts += r.initial_facts;
    s.final_facts += r.final_facts;
    s.total_tokens += r.total_tokens;
    s.retrieval_calls += r.retrieval_calls;
    s.precision_vacuous = s.precision_vacuous || r.precision_vacuous;
  }
  s.precision = precision / n;
  s.initial_facts /= n;
  s.final_facts /= n;
  s.total_tokens /= n;
  s.retrieval_calls /= n;
  s.preservation_pct = preservation_rate(s.initial_facts, s.final_facts);
  return s;
}

RunRow make_run_row(std::string run_id, std::string method, std::string density,
                    const std::vector<AtomicFact>& initial_facts, const std::vector<AtomicFact>& final_facts,
                    const KnowledgeBase& kb, std::int64_t total_tokens, int retrieval_calls) {
  RunRow r;
  r.run_id = std::move(run_id);
  r.method = std::move(method);
  r.density = std::move(density);
  auto p = oracle_precision(final_facts, kb);
  r.precision = p.value;
  r.precision_vacuous = p.vacuous;
  r.initial_facts = static_cast<double>(dedup_facts(initial_facts).size());
  r.final_facts = static_cast<double>(dedup_facts(final_facts).size());
  r.preservation_pct = preservation_rate(r.initial_facts, r.final_facts);
  r.total_tokens = static_cast<double>(total_tokens);
  r.retrieval_calls = retrieval_calls;
  return r;
}

std::optional<AtomicFact> fact_from_note(const TraceEvent& e) {
  auto a = e.note.find(" | ");
  if (a == std::string::npos) return std::nullopt;
  auto b = e.note.find(" | ", a + 3);
  if (b == std::string::npos) return std::nullopt;
  Triple t{e.note.substr(0, a), e.note.substr(a + 3, b - a - 3), e.note.substr(b + 3)};
  return make_fact(t, e.k.value_or(0), e.i.value_or(0));
}

RunRow report_from_trace(const std::vector<TraceEvent>& events, const KnowledgeBase& kb) {
  std::string run_id = "run1", method = "serc", density = "low";
  std::vector<AtomicFact> initial, final;
  std::int64_t tokens = 0;
  int retrievals = 0;
  bool have_header = false;
  for (const auto& e : events) {
    tokens += e.tokens_in + e.tokens_out;
    if (e.op == "retrieve") ++retrievals;
    if (e.phase == "meta" && e.op == "run") {
      auto h = nlohmann::json::parse(e.note);
      run_id = h.value("run_id", run_id);
      method = h.value("method", method);
      density = h.value("density", density);
      have_header = true;
    } else if (e.op == "fact") {
      if (auto f = fact_from_note(e)) initial.push_back(*f);
    } else if (e.op == "final_fact") {
      if (auto f = fact_from_note(e)) final.push_back(*f);
    }
  }
  if (!have_header) throw std::runtime_error("trace has no run header record");
  return make_run_row(run_id, method, density, initial, final, kb, tokens, retrievals);
}

std::string format_table(const std::vector<RunRow>& rows) {
  char line[256];
  std::string out;
  std::snprintf(line, sizeof line, "%-12s %-18s %-7s %9s %8s %8s %9s %10s %6s\n", "run", "method", "density",
                "precision", "initial", "final", "preserve", "tokens", "calls");
  out += line;
  for (const auto& r : rows) {
    auto pres = r.preservation_pct ? fixed(*r.preservation_pct, 1) + "%" : std::string("N/A");
    auto prec = fixed(r.precision, 4) + (r.precision_vacuous ? "*" : "");
    std::snprintf(line, sizeof line, "%-12s %-18s %-7s %9s %8s %8s %9s %10s %6s\n", r.run_id.c_str(),
                  r.method.c_str(), r.density.c_str(), prec.c_str(), count(r.initial_facts).c_str(),
                  count(r.final_facts).c_str(), pres.c_str(), count(r.total_tokens).c_str(),
                  count(r.retrieval_calls).c_str());
    out += line;
  }
  bool any_vacuous = false;
  for (const auto& r : rows) any_vacuous = any_vacuous || r.precision_vacuous;
  if (any_vacuous) out += "* precision over an empty fact set (vacuously 1.0)\n";
  out += "fact counts are distinct facts after case and whitespace folding\n";
  return out;
}

}  // namespace serc
