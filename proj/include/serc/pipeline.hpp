#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "serc/backend.hpp"
#include "serc/fact_model.hpp"
#include "serc/tanner_graph.hpp"
#include "serc/trace.hpp"

namespace serc {

struct PipelineConfig {
  Density density = Density::Low;
  bool firewall_enabled = true;
  bool rag_enabled = true;  // false swaps in the empty retriever
  int max_sentences = 40;
  int parallel_checks = 1;
  int max_group_size = 0;  // > 0 chunks each sentence group; overrides density
  int top_k = 8;
  std::size_t context_char_cap = 20000;

  /// Throws std::invalid_argument on out-of-range values.
  void validate() const;
  int group_size() const;
};

/// CON facts awaiting correction, with the evidence of their check node.
struct SyndromeBuffer {
  struct Entry {
    AtomicFact fact;
    Evidence evidence;
    std::string check_id;
  };
  std::vector<Entry> entries;

  bool empty() const { return entries.empty(); }
};

struct AlignmentResult {
  std::string initial_text;
  bool hard_reset_applied = false;
};

struct DetectionResult {
  std::vector<SentenceUnit> sentences;
  SemanticTannerGraph graph;
  std::vector<Evidence> evidence;     // one per check node
  std::vector<Syndrome> syndromes;    // fact order
  SyndromeBuffer buffer;
  std::vector<FactRef> deletion_set;  // NF facts
};

struct CorrectionResult {
  CorrectionMap correction_map;
  std::vector<std::string> draft_sentences;
  std::string final_text;
  std::vector<AtomicFact> final_facts;
};

struct RunLabel {
  std::string run_id = "run1";
  std::string method = "serc";
};

/// Text emitted when every fact was pruned and nothing else is left to say.
inline constexpr std::string_view kAbstention = "No verified information is available for this question.";

/// Single-run decoder. Not reusable across threads; check nodes fan out
/// internally up to `parallel_checks` and commit in check-node order.
class Decoder {
 public:
  Decoder(SemanticOps& ops, Retriever& retriever, PipelineConfig cfg, std::vector<Dependency> dependencies = {},
          TraceLog* trace = nullptr);

  AlignmentResult phase1_align(const std::string& query);
  DetectionResult phase2_detect(const std::string& initial_text);
  CorrectionResult phase3_correct(const std::string& query, const DetectionResult& detection);

  PipelineResponse run(const std::string& query, const RunLabel& label = {});

  const TokenLedger& ledger() const { return ledger_; }
  int retrieval_calls() const { return retrieval_calls_; }
  const std::vector<std::string>& warnings() const { return warnings_; }

  /// Events and usage from one unit of work, committed together.
  struct Batch {
    std::vector<TraceEvent> events;
    std::vector<TokenUsage> usage;
    std::vector<std::string> warnings;
    int retrievals = 0;
  };

 private:
  void commit(Batch& batch);
  Retrieval retrieve(const std::string& query, Phase phase, Batch& batch);
  std::vector<AtomicFact> redecompose(const std::string& text, Batch& batch);

  SemanticOps* ops_;
  Retriever* retriever_;
  EmptyRetriever empty_;
  PipelineConfig cfg_;
  std::vector<Dependency> dependencies_;
  TraceLog* trace_;
  TokenLedger ledger_;
  int retrieval_calls_ = 0;
  std::vector<std::string> warnings_;
};

}  // namespace serc
