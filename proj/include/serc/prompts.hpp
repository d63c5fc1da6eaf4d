#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "serc/backend.hpp"

namespace serc::prompts {

struct Prompt {
  std::string system;
  std::string user;

  std::string text() const { return system + "\n\n" + user; }
};

inline constexpr std::size_t kMaxQueryChars = 300;

Prompt answer(const std::string& query, const std::vector<Document>& context);
Prompt topic(const std::string& text);
Prompt judge(const TopicEntity& a, const TopicEntity& b);
Prompt decompose(const SentenceUnit& sentence);
Prompt query(const std::vector<AtomicFact>& facts);
Prompt summarize(const std::vector<Document>& documents, const std::string& query);
Prompt verify(const AtomicFact& fact, const Evidence& evidence);
Prompt correct(const CorrectionRequest& request);
Prompt rewrite(const std::vector<AtomicFact>& facts, const std::vector<std::string>& history);
Prompt polish(const std::string& query, const std::string& draft);

/// "(subject | predicate | object)" listing used inside prompts.
std::string fact_line(const AtomicFact& f);

// Output parsers. Strict match first, then case-insensitive, then the caller's safe fallback.

std::optional<bool> parse_yes_no(std::string_view text);
std::optional<Verdict> parse_label(std::string_view text);
std::optional<TopicEntity> parse_topic(std::string_view text);

struct TripleLines {
  std::vector<Triple> triples;
  std::vector<std::string> rejected;
};
/// Lines of the form "subject | predicate | object"; bullets are tolerated.
TripleLines parse_triple_lines(std::string_view text);

struct CorrectionLine {
  FactRef target;
  std::optional<FactRef> from;  // set for PROP lines
  Triple replacement;
};
struct CorrectionLines {
  std::vector<CorrectionLine> lines;
  std::vector<std::string> rejected;
};
/// "FIX k.i | s | p | o" and "PROP k.i FROM k.i | s | p | o".
CorrectionLines parse_correction_lines(std::string_view text);

/// Caps a query at `max_chars`, cutting at the last word boundary.
std::string cap_query(std::string_view text, std::size_t max_chars, bool* capped);

/// First non-empty line, trimmed.
std::string first_line(std::string_view text);

}  // namespace serc::prompts
