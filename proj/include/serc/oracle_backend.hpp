#pragma once

#include <optional>
#include <string>
#include <vector>

#include "serc/backend.hpp"
#include "serc/channel.hpp"
#include "serc/surface.hpp"

namespace serc {

/// Deterministic semantic operations backed by the simulator knowledge base.
///
/// When a scripted observation is supplied it plays the language model: LM(Q)
/// returns the observation text, and LM(Q, docs) returns the same text with
/// every fact rebound to the documents' majority subject (the noise stays).
/// Without a script, answers are rendered from the KB entry named in Q.
///
/// Evidence summaries are "(subject, predicate, object)" lines holding the
/// true values of the queried predicates. Token counts are ceil(chars/4) of
/// the prompt the remote backend would send plus the produced output.
class OracleOps final : public SemanticOps {
 public:
  explicit OracleOps(const KnowledgeBase& kb, std::optional<NoisyObservation> script = std::nullopt,
                     std::size_t summary_char_cap = 4000);

  OpResult<std::string> generate_answer(const std::string& query, const std::vector<Document>& context) override;
  OpResult<std::optional<TopicEntity>> extract_topic(const std::string& text) override;
  OpResult<bool> judge_consistency(const TopicEntity& a, const TopicEntity& b) override;
  OpResult<std::vector<AtomicFact>> decompose_facts(const SentenceUnit& sentence) override;
  OpResult<std::string> generate_query(const std::vector<AtomicFact>& facts) override;
  OpResult<Evidence> summarize_evidence(const std::vector<Document>& documents, const std::string& query) override;
  OpResult<Syndrome> verify_fact(const AtomicFact& fact, const Evidence& evidence) override;
  OpResult<std::vector<CorrectionEntry>> correct_group(const CorrectionRequest& request) override;
  OpResult<std::string> rewrite_sentence(const std::vector<AtomicFact>& corrected_facts,
                                         const std::vector<std::string>& history) override;
  OpResult<std::string> polish(const std::string& query, const std::string& draft) override;

 private:
  std::optional<std::string> majority_subject(std::string_view text) const;
  std::string render_entity(const std::string& entity) const;

  const KnowledgeBase* kb_;
  std::optional<NoisyObservation> script_;
  std::size_t summary_cap_;
  TemplateParser parser_;
};

/// Returns the KB slice of the longest entity name found in the query, as one
/// document holding one templated sentence per triple.
class KbRetriever final : public Retriever {
 public:
  explicit KbRetriever(const KnowledgeBase& kb, std::size_t char_cap = 20000);
  Retrieval retrieve(const std::string& query, int top_k) override;

 private:
  const KnowledgeBase* kb_;
  std::size_t cap_;
};

/// Longest KB entity name occurring in `text` at word boundaries, case-insensitively.
std::optional<std::string> find_entity_mention(const KnowledgeBase& kb, std::string_view text);

/// "(subject, predicate, object)" evidence line and its inverse.
std::string evidence_line(const Triple& t);
std::vector<Triple> parse_evidence_lines(std::string_view summary);

/// The oracle belief update over one check group. Exposed for direct testing.
///
/// Roots are CON facts that are not 1-hop dependents of another CON fact in the
/// group. Each root takes an evidence value (preferring one not already
/// asserted in the group); a root with no evidence value is downgraded to
/// Pruned. Each 1-hop dependent of a corrected root whose object the evidence
/// disagrees with gets a propagated entry. Remaining CON facts are corrected
/// directly. Warnings are appended to `warnings`.
std::vector<CorrectionEntry> oracle_correct(const CorrectionRequest& request, std::vector<std::string>& warnings);

}  // namespace serc
