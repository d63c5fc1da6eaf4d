#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "serc/fact_model.hpp"
#include "serc/knowledge_base.hpp"

namespace serc {

struct Document {
  std::string title;
  std::string url;  // url or kb key
  std::string content;

  bool operator==(const Document&) const = default;
};

/// Result of one semantic operation. `prompt` is the exact input text the
/// backend consumed (what the remote backend sends, and what the oracle
/// prices); the pipeline digests it into the trace.
template <class T>
struct OpResult {
  T value{};
  TokenUsage usage{};
  std::string prompt;
  std::vector<std::string> warnings;
};

/// ceil(chars / 4), the synthetic token count used whenever a server does not report usage.
std::int64_t estimate_tokens(std::string_view text);

struct CorrectionRequest {
  std::vector<std::pair<AtomicFact, Syndrome>> contradicted;
  std::vector<AtomicFact> group_facts;
  std::vector<Syndrome> group_syndromes;  // parallel to group_facts
  Evidence evidence;
  std::vector<Dependency> dependencies;
};

/// The semantic operations the decoder needs. Implementations must tolerate
/// concurrent calls.
class SemanticOps {
 public:
  virtual ~SemanticOps() = default;

  /// LM(Q) when `context` is empty, LM(Q, R(Q)) otherwise.
  virtual OpResult<std::string> generate_answer(const std::string& query,
                                                const std::vector<Document>& context) = 0;
  /// nullopt is the NoTopic result.
  virtual OpResult<std::optional<TopicEntity>> extract_topic(const std::string& text) = 0;
  virtual OpResult<bool> judge_consistency(const TopicEntity& a, const TopicEntity& b) = 0;
  virtual OpResult<std::vector<AtomicFact>> decompose_facts(const SentenceUnit& sentence) = 0;
  virtual OpResult<std::string> generate_query(const std::vector<AtomicFact>& facts) = 0;
  virtual OpResult<Evidence> summarize_evidence(const std::vector<Document>& documents,
                                                const std::string& query) = 0;
  virtual OpResult<Syndrome> verify_fact(const AtomicFact& fact, const Evidence& evidence) = 0;
  virtual OpResult<std::vector<CorrectionEntry>> correct_group(const CorrectionRequest& request) = 0;
  /// The original sentence is deliberately not a parameter.
  virtual OpResult<std::string> rewrite_sentence(const std::vector<AtomicFact>& corrected_facts,
                                                 const std::vector<std::string>& history) = 0;
  virtual OpResult<std::string> polish(const std::string& query, const std::string& draft) = 0;
};

struct Retrieval {
  std::vector<Document> documents;
  std::vector<std::string> warnings;
};

class Retriever {
 public:
  virtual ~Retriever() = default;
  /// At most top_k documents, content already truncated to the retriever's cap.
  /// Transport failures surface as an empty result plus a warning, never an exception.
  virtual Retrieval retrieve(const std::string& query, int top_k) = 0;
};

class EmptyRetriever final : public Retriever {
 public:
  Retrieval retrieve(const std::string&, int) override { return {}; }
};

/// Cuts every document's content to at most `cap` characters (UTF-8 safe).
void truncate_documents(std::vector<Document>& docs, std::size_t cap);
std::string truncate_utf8(std::string_view text, std::size_t cap);

}  // namespace serc
