#include "serc/fact_model.hpp"

#include <algorithm>
#include <array>
#include <cctype>

namespace serc {

std::string to_string(FactRef ref) {
  return std::to_string(ref.k) + "." + std::to_string(ref.i);
}

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::SUP: return "SUP";
    case Verdict::CON: return "CON";
    case Verdict::NF: return "NF";
  }
  return "NF";
}

Verdict parse_verdict(std::string_view text) {
  if (text == "SUP") return Verdict::SUP;
  if (text == "CON") return Verdict::CON;
  if (text == "NF") return Verdict::NF;
  throw std::invalid_argument("not a syndrome verdict: '" + std::string(text) + "'");
}

std::string_view to_string(Outcome o) {
  switch (o) {
    case Outcome::Corrected: return "corrected";
    case Outcome::Pruned: return "pruned";
    case Outcome::Unchanged: return "unchanged";
  }
  return "unchanged";
}

std::string_view to_string(Phase p) {
  switch (p) {
    case Phase::Alignment: return "alignment";
    case Phase::Detection: return "detection";
    case Phase::Correction: return "correction";
    case Phase::Reconstruction: return "reconstruction";
    case Phase::Polish: return "polish";
  }
  return "alignment";
}

static Outcome parse_outcome(std::string_view s) {
  if (s == "corrected") return Outcome::Corrected;
  if (s == "pruned") return Outcome::Pruned;
  if (s == "unchanged") return Outcome::Unchanged;
  throw std::invalid_argument("not an outcome: '" + std::string(s) + "'");
}

CorrectionEntry CorrectionEntry::unchanged(AtomicFact original) {
  CorrectionEntry e;
  e.original_ = std::move(original);
  e.outcome_ = Outcome::Unchanged;
  e.cause_ = Verdict::SUP;
  return e;
}

CorrectionEntry CorrectionEntry::pruned(AtomicFact original) {
  CorrectionEntry e;
  e.original_ = std::move(original);
  e.outcome_ = Outcome::Pruned;
  e.cause_ = Verdict::NF;
  return e;
}

CorrectionEntry CorrectionEntry::corrected(AtomicFact original, AtomicFact replacement,
                                           std::optional<FactRef> propagated_from) {
  CorrectionEntry e;
  e.original_ = std::move(original);
  e.outcome_ = Outcome::Corrected;
  e.cause_ = Verdict::CON;
  e.replacement_ = std::move(replacement);
  e.propagated_from_ = propagated_from;
  return e;
}

CorrectionEntry CorrectionEntry::from_parts(AtomicFact original, Outcome outcome, Verdict cause,
                                            std::optional<AtomicFact> replacement,
                                            std::optional<FactRef> propagated_from) {
  switch (outcome) {
    case Outcome::Corrected:
      if (cause != Verdict::CON) throw std::invalid_argument("corrected entry requires cause CON");
      if (!replacement) throw std::invalid_argument("corrected entry requires a replacement");
      return corrected(std::move(original), std::move(*replacement), propagated_from);
    case Outcome::Pruned:
      if (cause != Verdict::NF) throw std::invalid_argument("pruned entry requires cause NF");
      if (replacement || propagated_from)
        throw std::invalid_argument("pruned entry carries no replacement");
      return pruned(std::move(original));
    case Outcome::Unchanged:
      if (cause != Verdict::SUP) throw std::invalid_argument("unchanged entry requires cause SUP");
      if (replacement || propagated_from)
        throw std::invalid_argument("unchanged entry carries no replacement");
      return unchanged(std::move(original));
  }
  throw std::invalid_argument("bad outcome");
}

void TokenLedger::add(const TokenUsage& usage) {
  auto p = static_cast<int>(usage.phase);
  prompt[p] += usage.prompt_tokens;
  completion[p] += usage.completion_tokens;
}

std::int64_t TokenLedger::phase_total(Phase p) const {
  auto i = static_cast<int>(p);
  return prompt[i] + completion[i];
}

std::int64_t TokenLedger::total() const {
  std::int64_t t = 0;
  for (int i = 0; i < kPhaseCount; ++i) t += prompt[i] + completion[i];
  return t;
}

// ---------------------------------------------------------------------------
// Sentence splitting

namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
bool is_upper(char c) { return std::isupper(static_cast<unsigned char>(c)) != 0; }
bool is_lower(char c) { return std::islower(static_cast<unsigned char>(c)) != 0; }
bool is_terminator(char c) { return c == '.' || c == '!' || c == '?'; }
bool is_closer(char c) { return c == '"' || c == '\'' || c == ')' || c == ']'; }

constexpr std::array kAbbreviations = {
    "Dr",   "Mr",  "Mrs", "Ms",   "Prof", "St",  "Mt",  "Ft",  "Jr",  "Sr",   "Lt",
    "Col",  "Gen", "Capt", "Sgt", "Rev",  "Hon", "Gov", "Sen", "Rep", "Inc",  "Ltd",
    "Co",   "Corp", "vs",  "e.g", "i.e",  "cf",  "al",  "approx", "p", "pp", "vol",
    "fig",  "Fig", "Jan", "Feb", "Mar",  "Apr", "Jun", "Jul", "Aug", "Sep",  "Sept",
    "Oct",  "Nov", "Dec", "U.S", "U.K",  "a.m", "p.m", "Ph.D"};

bool is_abbreviation(std::string_view token) {
  return std::find(kAbbreviations.begin(), kAbbreviations.end(), token) != kAbbreviations.end();
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

// Token that ends at position `dot` (exclusive), delimited by whitespace or '('.
std::string_view token_before(std::string_view text, std::size_t dot) {
  std::size_t start = dot;
  while (start > 0 && !is_space(text[start - 1]) && text[start - 1] != '(' &&
         text[start - 1] != '"')
    --start;
  return text.substr(start, dot - start);
}

// Next whitespace-delimited token starting at `pos`.
std::string_view token_at(std::string_view text, std::size_t pos) {
  std::size_t end = pos;
  while (end < text.size() && !is_space(text[end])) ++end;
  return text.substr(pos, end - pos);
}

bool is_initial(std::string_view token) {
  return token.size() == 2 && is_upper(token[0]) && token[1] == '.';
}

// Decide whether the terminator run ending at `end` (exclusive) closes a sentence.
bool closes_sentence(std::string_view text, std::size_t run_start, std::size_t end) {
  if (end >= text.size()) return true;
  if (!is_space(text[end])) return false;
  std::size_t next = end;
  while (next < text.size() && is_space(text[next])) ++next;
  if (next >= text.size()) return true;
  char first = text[next];
  if (is_lower(first)) return false;

  bool single_dot = run_start + 1 == end && text[run_start] == '.';
  if (!single_dot) return true;

  std::string_view prev = token_before(text, run_start);
  if (is_abbreviation(prev)) return false;
  if (prev.size() == 1 && is_upper(prev[0])) {
    // An initial followed by another initial or by a name that continues the sentence.
    std::string_view following = token_at(text, next);
    if (is_initial(following)) return false;
    if (!following.empty() && is_upper(following[0]) && !is_terminator(following.back()) &&
        !is_closer(following.back()))
      return false;
  }
  return true;
}

}  // namespace

std::vector<SentenceUnit> split_sentences(std::string_view text) {
  std::vector<SentenceUnit> out;
  std::size_t start = 0;
  std::size_t pos = 0;
  auto emit = [&](std::size_t end) {
    std::string_view piece = trim(text.substr(start, end - start));
    if (!piece.empty()) {
      SentenceUnit unit;
      unit.index = static_cast<int>(out.size()) + 1;
      unit.text = std::string(piece);
      out.push_back(std::move(unit));
    }
    start = end;
  };
  while (pos < text.size()) {
    if (!is_terminator(text[pos])) {
      ++pos;
      continue;
    }
    std::size_t run_start = pos;
    while (pos < text.size() && is_terminator(text[pos])) ++pos;
    std::size_t end = pos;
    while (end < text.size() && is_closer(text[end])) ++end;
    if (closes_sentence(text, run_start, end)) {
      emit(end);
      pos = end;
    }
  }
  if (start < text.size()) emit(text.size());
  return out;
}

std::string normalize_text(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (char c : text) {
    if (is_space(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return out;
}

bool canonical_fact_equal(const AtomicFact& a, const AtomicFact& b) {
  return normalize_text(a.subject) == normalize_text(b.subject) &&
         normalize_text(a.predicate) == normalize_text(b.predicate) &&
         normalize_text(a.object) == normalize_text(b.object);
}

std::vector<AtomicFact> dedup_facts(const std::vector<AtomicFact>& facts) {
  std::vector<AtomicFact> out;
  for (const auto& f : facts) {
    bool seen = std::any_of(out.begin(), out.end(),
                            [&](const AtomicFact& g) { return canonical_fact_equal(f, g); });
    if (!seen) out.push_back(f);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Serialization

void to_json(nlohmann::json& j, const FactRef& r) { j = nlohmann::json::array({r.k, r.i}); }

void from_json(const nlohmann::json& j, FactRef& r) {
  if (!j.is_array() || j.size() != 2) throw std::invalid_argument("fact_ref must be [k, i]");
  r.k = j.at(0).get<int>();
  r.i = j.at(1).get<int>();
}

void to_json(nlohmann::json& j, const AtomicFact& f) {
  j = nlohmann::json{{"sentence_index", f.sentence_index},
                     {"fact_index", f.fact_index},
                     {"subject", f.subject},
                     {"predicate", f.predicate},
                     {"object", f.object},
                     {"surface_text", f.surface_text}};
}

void from_json(const nlohmann::json& j, AtomicFact& f) {
  f.sentence_index = j.at("sentence_index").get<int>();
  f.fact_index = j.at("fact_index").get<int>();
  f.subject = j.at("subject").get<std::string>();
  f.predicate = j.at("predicate").get<std::string>();
  f.object = j.at("object").get<std::string>();
  f.surface_text = j.at("surface_text").get<std::string>();
}

void to_json(nlohmann::json& j, const SentenceUnit& s) {
  j = nlohmann::json{{"index", s.index}, {"text", s.text}, {"facts", s.facts}};
}

void from_json(const nlohmann::json& j, SentenceUnit& s) {
  s.index = j.at("index").get<int>();
  s.text = j.at("text").get<std::string>();
  s.facts = j.at("facts").get<std::vector<AtomicFact>>();
  for (const auto& f : s.facts)
    if (f.sentence_index != s.index)
      throw std::invalid_argument("fact sentence_index does not match its sentence");
}

void to_json(nlohmann::json& j, const Syndrome& s) {
  j = nlohmann::json{{"verdict", to_string(s.verdict)},
                     {"fact_ref", s.fact_ref},
                     {"evidence_ref", s.evidence_ref}};
}

void from_json(const nlohmann::json& j, Syndrome& s) {
  s.verdict = parse_verdict(j.at("verdict").get<std::string>());
  s.fact_ref = j.at("fact_ref").get<FactRef>();
  s.evidence_ref = j.at("evidence_ref").get<std::string>();
}

void to_json(nlohmann::json& j, const Evidence& e) {
  auto docs = nlohmann::json::array();
  for (const auto& d : e.source_documents) docs.push_back({{"key", d.key}, {"excerpt", d.excerpt}});
  j = nlohmann::json{{"id", e.id},
                     {"query", e.query},
                     {"summary_text", e.summary_text},
                     {"source_documents", docs}};
}

void from_json(const nlohmann::json& j, Evidence& e) {
  e.id = j.at("id").get<std::string>();
  e.query = j.at("query").get<std::string>();
  e.summary_text = j.at("summary_text").get<std::string>();
  e.source_documents.clear();
  for (const auto& d : j.at("source_documents"))
    e.source_documents.push_back({d.at("key").get<std::string>(), d.at("excerpt").get<std::string>()});
}

void to_json(nlohmann::json& j, const CorrectionEntry& e) {
  j = nlohmann::json{{"original", e.original()},
                     {"outcome", to_string(e.outcome())},
                     {"cause", to_string(e.cause())}};
  j["corrected"] = e.replacement() ? nlohmann::json(*e.replacement()) : nlohmann::json(nullptr);
  j["propagated_from"] =
      e.propagated_from() ? nlohmann::json(*e.propagated_from()) : nlohmann::json(nullptr);
}

CorrectionEntry correction_entry_from_json(const nlohmann::json& j) {
  std::optional<AtomicFact> replacement;
  if (j.contains("corrected") && !j.at("corrected").is_null())
    replacement = j.at("corrected").get<AtomicFact>();
  std::optional<FactRef> from;
  if (j.contains("propagated_from") && !j.at("propagated_from").is_null())
    from = j.at("propagated_from").get<FactRef>();
  return CorrectionEntry::from_parts(j.at("original").get<AtomicFact>(),
                                     parse_outcome(j.at("outcome").get<std::string>()),
                                     parse_verdict(j.at("cause").get<std::string>()),
                                     std::move(replacement), from);
}

void to_json(nlohmann::json& j, const TopicEntity& t) {
  j = nlohmann::json{{"name", t.name}};
  j["qualifier"] = t.qualifier ? nlohmann::json(*t.qualifier) : nlohmann::json(nullptr);
}

void to_json(nlohmann::json& j, const TokenUsage& u) {
  j = nlohmann::json{{"prompt_tokens", u.prompt_tokens},
                     {"completion_tokens", u.completion_tokens},
                     {"phase", to_string(u.phase)}};
}

}  // namespace serc
