#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "serc/fact_model.hpp"
#include "serc/knowledge_base.hpp"

namespace serc {

// Templated realization: "<subject> <predicate words> <object>" clauses joined
// by " and ", with the subject stated once per sentence. Predicate words are
// the predicate name with underscores read as spaces.

std::string predicate_phrase(std::string_view predicate);
std::string render_clause(const Triple& t);
/// All triples must share one subject. Empty input renders as "".
std::string render_sentence(const std::vector<Triple>& triples);
std::string render_sentence(const std::vector<AtomicFact>& facts);

Triple to_triple(const AtomicFact& f);
AtomicFact make_fact(const Triple& t, int k, int i);

/// Inverse of render_sentence over a fixed entity and predicate vocabulary.
class TemplateParser {
 public:
  TemplateParser(std::vector<std::string> entities, std::vector<std::string> predicates);
  explicit TemplateParser(const KnowledgeBase& kb);

  /// Triples of one sentence, or empty when the sentence is not a templated clause list.
  std::vector<Triple> parse_sentence(std::string_view sentence) const;
  /// Split + parse, with (k, i) numbering.
  std::vector<SentenceUnit> parse_text(std::string_view text) const;

 private:
  std::size_t match_entity(std::string_view text, std::string* name) const;
  std::size_t match_predicate(std::string_view text, std::string* name) const;

  // Sorted by descending phrase length so the first match is the longest.
  std::vector<std::pair<std::string, std::string>> entities_;    // (name, name)
  std::vector<std::pair<std::string, std::string>> predicates_;  // (phrase, predicate)
};

}  // namespace serc
