#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "serc/fact_model.hpp"
#include "serc/knowledge_base.hpp"
#include "serc/trace.hpp"

namespace serc {

struct Precision {
  double value = 1.0;
  int supported = 0;
  int total = 0;
  bool vacuous = false;  // empty fact set, defined as 1.0
};

/// Share of facts present verbatim in the KB. Facts are deduplicated canonically first.
Precision oracle_precision(const std::vector<AtomicFact>& facts, const KnowledgeBase& kb);

/// 100 * final / initial, or nullopt when initial is zero.
std::optional<double> preservation_rate(double initial_count, double final_count);

struct CostReport {
  std::int64_t low_total = 0;
  std::int64_t high_total = 0;
  std::optional<double> reduction;  // 1 - low/high; nullopt when high is zero
};

CostReport cost_report(std::int64_t low_total, std::int64_t high_total);
CostReport cost_report(const TokenLedger& low, const TokenLedger& high);

struct VerdictHistogram {
  int sup = 0;
  int con = 0;
  int nf = 0;

  int total() const { return sup + con + nf; }
  bool operator==(const VerdictHistogram&) const = default;
};

VerdictHistogram syndrome_histogram(const std::vector<Syndrome>& syndromes);

/// Distinct KB entities named as subjects among `facts`, in first-seen order.
std::vector<std::string> kb_subjects(const std::vector<AtomicFact>& facts, const KnowledgeBase& kb);
/// Mixed-entity output: the facts reference two or more distinct KB subjects.
bool is_chimera(const std::vector<AtomicFact>& facts, const KnowledgeBase& kb);

/// One row of the per-run metrics CSV.
struct RunRow {
  std::string run_id;
  std::string method;
  std::string density;
  double precision = 1.0;
  bool precision_vacuous = false;
  double initial_facts = 0;
  double final_facts = 0;
  std::optional<double> preservation_pct;
  double total_tokens = 0;
  double retrieval_calls = 0;
};

struct ReductionRow {
  std::string pair_id;
  double low_tokens = 0;
  double high_tokens = 0;
  std::optional<double> reduction_pct;
};

inline constexpr const char* kRunCsvHeader =
    "run_id,method,density,precision,initial_facts,final_facts,preservation_pct,total_tokens,retrieval_calls";
inline constexpr const char* kReductionCsvHeader = "pair_id,low_tokens,high_tokens,reduction_pct";

std::string csv_row(const RunRow& row);
std::string csv_row(const ReductionRow& row);
ReductionRow reduction_row(std::string pair_id, double low_tokens, double high_tokens);

/// Mean row over `rows` (preservation from the mean counts); `run_id` names it.
RunRow summary_row(const std::vector<RunRow>& rows, std::string run_id);

/// Builds a run row from a response: counts use canonically deduplicated facts.
RunRow make_run_row(std::string run_id, std::string method, std::string density,
                    const std::vector<AtomicFact>& initial_facts, const std::vector<AtomicFact>& final_facts,
                    const KnowledgeBase& kb, std::int64_t total_tokens, int retrieval_calls);

/// Recomputes the run row from a saved trace alone (plus the KB).
RunRow report_from_trace(const std::vector<TraceEvent>& events, const KnowledgeBase& kb);

/// Fixed-width table for terminals.
std::string format_table(const std::vector<RunRow>& rows);

/// Fact triple stored in a trace note, "subject | predicate | object".
std::optional<AtomicFact> fact_from_note(const TraceEvent& e);

}  // namespace serc
