#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

namespace serc {

/// (sentence_index k, fact_index i), both 1-based.
struct FactRef {
  int k = 0;
  int i = 0;

  auto operator<=>(const FactRef&) const = default;
};

std::string to_string(FactRef ref);

struct AtomicFact {
  int sentence_index = 0;
  int fact_index = 0;
  std::string subject;
  std::string predicate;
  std::string object;
  std::string surface_text;

  FactRef ref() const { return {sentence_index, fact_index}; }
  bool operator==(const AtomicFact&) const = default;
};

struct SentenceUnit {
  int index = 0;
  std::string text;
  std::vector<AtomicFact> facts;

  bool operator==(const SentenceUnit&) const = default;
};

enum class Verdict { SUP, CON, NF };

std::string_view to_string(Verdict v);
/// Strict parse: only "SUP", "CON", "NF" are accepted.
Verdict parse_verdict(std::string_view text);

struct Syndrome {
  Verdict verdict = Verdict::NF;
  FactRef fact_ref;
  std::string evidence_ref;

  bool operator==(const Syndrome&) const = default;
};

struct SourceDocument {
  std::string key;  // url or kb key
  std::string excerpt;

  bool operator==(const SourceDocument&) const = default;
};

struct Evidence {
  std::string id;
  std::string query;
  std::string summary_text;
  std::vector<SourceDocument> source_documents;

  bool operator==(const Evidence&) const = default;
};

enum class Outcome { Corrected, Pruned, Unchanged };

std::string_view to_string(Outcome o);

/// Disposition of one fact after the local belief update. The cause/outcome
/// pairing (CON->Corrected, NF->Pruned, SUP->Unchanged) is enforced by the
/// factories; there is no public way to build a mismatched entry.
class CorrectionEntry {
 public:
  static CorrectionEntry unchanged(AtomicFact original);
  static CorrectionEntry pruned(AtomicFact original);
  static CorrectionEntry corrected(AtomicFact original, AtomicFact replacement,
                                   std::optional<FactRef> propagated_from = std::nullopt);

  /// Validating constructor used by deserialization; throws std::invalid_argument.
  static CorrectionEntry from_parts(AtomicFact original, Outcome outcome, Verdict cause,
                                    std::optional<AtomicFact> replacement,
                                    std::optional<FactRef> propagated_from);

  const AtomicFact& original() const { return original_; }
  Outcome outcome() const { return outcome_; }
  Verdict cause() const { return cause_; }
  const std::optional<AtomicFact>& replacement() const { return replacement_; }
  const std::optional<FactRef>& propagated_from() const { return propagated_from_; }

  bool operator==(const CorrectionEntry&) const = default;

 private:
  CorrectionEntry() = default;

  AtomicFact original_;
  Outcome outcome_ = Outcome::Unchanged;
  Verdict cause_ = Verdict::SUP;
  std::optional<AtomicFact> replacement_;
  std::optional<FactRef> propagated_from_;
};

struct CorrectionMap {
  std::map<FactRef, CorrectionEntry> entries;

  const CorrectionEntry* find(FactRef ref) const {
    auto it = entries.find(ref);
    return it == entries.end() ? nullptr : &it->second;
  }
};

struct TopicEntity {
  std::string name;
  std::optional<std::string> qualifier;

  bool operator==(const TopicEntity&) const = default;
};

enum class Phase { Alignment, Detection, Correction, Reconstruction, Polish };

std::string_view to_string(Phase p);
inline constexpr int kPhaseCount = 5;

struct TokenUsage {
  std::int64_t prompt_tokens = 0;
  std::int64_t completion_tokens = 0;
  Phase phase = Phase::Alignment;

  std::int64_t total() const { return prompt_tokens + completion_tokens; }
};

struct TokenLedger {
  std::int64_t prompt[kPhaseCount] = {};
  std::int64_t completion[kPhaseCount] = {};

  void add(const TokenUsage& usage);
  std::int64_t phase_total(Phase p) const;
  std::int64_t total() const;
};

struct PipelineResponse {
  std::string query;
  std::string initial_text;
  bool hard_reset_applied = false;
  std::vector<SentenceUnit> sentences;
  std::vector<Syndrome> syndromes;
  CorrectionMap correction_map;
  std::vector<std::string> draft_sentences;
  std::string final_text;
  TokenLedger token_ledger;
  std::vector<AtomicFact> final_facts;
  int retrieval_calls = 0;
};

/// Rule-based splitter with an abbreviation whitelist. Sentence texts are
/// trimmed; indices run 1..n.
std::vector<SentenceUnit> split_sentences(std::string_view text);

/// Lowercase and collapse internal whitespace runs; trims both ends.
std::string normalize_text(std::string_view text);

/// Triple equality after case folding and whitespace normalization.
bool canonical_fact_equal(const AtomicFact& a, const AtomicFact& b);

/// Drops later facts canonically equal to an earlier one.
std::vector<AtomicFact> dedup_facts(const std::vector<AtomicFact>& facts);

// Canonical line-record serialization.
void to_json(nlohmann::json& j, const FactRef& r);
void from_json(const nlohmann::json& j, FactRef& r);
void to_json(nlohmann::json& j, const AtomicFact& f);
void from_json(const nlohmann::json& j, AtomicFact& f);
void to_json(nlohmann::json& j, const SentenceUnit& s);
void from_json(const nlohmann::json& j, SentenceUnit& s);
void to_json(nlohmann::json& j, const Syndrome& s);
void from_json(const nlohmann::json& j, Syndrome& s);
void to_json(nlohmann::json& j, const Evidence& e);
void from_json(const nlohmann::json& j, Evidence& e);
void to_json(nlohmann::json& j, const CorrectionEntry& e);
CorrectionEntry correction_entry_from_json(const nlohmann::json& j);
void to_json(nlohmann::json& j, const TopicEntity& t);
void to_json(nlohmann::json& j, const TokenUsage& u);

}  // namespace serc
