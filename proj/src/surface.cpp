#include "serc/surface.hpp"

#include <algorithm>
#include <cctype>

namespace serc {

namespace {

char fold(char c) { return static_cast<char>(std::tolower(static_cast<unsigned char>(c))); }

bool starts_with_ci(std::string_view text, std::string_view prefix) {
  if (prefix.size() > text.size()) return false;
  for (std::size_t i = 0; i < prefix.size(); ++i)
    if (fold(text[i]) != fold(prefix[i])) return false;
  return true;
}

// Prefix match that must end at a word boundary (space or end of text).
bool word_prefix(std::string_view text, std::string_view prefix) {
  return starts_with_ci(text, prefix) && (text.size() == prefix.size() || text[prefix.size()] == ' ');
}

void sort_longest_first(std::vector<std::pair<std::string, std::string>>& v) {
  std::stable_sort(v.begin(), v.end(),
                   [](const auto& a, const auto& b) { return a.first.size() > b.first.size(); });
}

}  // namespace

std::string predicate_phrase(std::string_view predicate) {
  std::string out(predicate);
  std::replace(out.begin(), out.end(), '_', ' ');
  return out;
}

std::string render_clause(const Triple& t) {
  return t.subject + " " + predicate_phrase(t.predicate) + " " + t.object;
}

std::string render_sentence(const std::vector<Triple>& triples) {
  if (triples.empty()) return {};
  std::string out = triples.front().subject;
  for (std::size_t i = 0; i < triples.size(); ++i) {
    if (i > 0) out += " and";
    out += " " + predicate_phrase(triples[i].predicate) + " " + triples[i].object;
  }
  out += ".";
  return out;
}

std::string render_sentence(const std::vector<AtomicFact>& facts) {
  std::vector<Triple> triples;
  triples.reserve(facts.size());
  for (const auto& f : facts) triples.push_back(to_triple(f));
  return render_sentence(triples);
}

Triple to_triple(const AtomicFact& f) { return {f.subject, f.predicate, f.object}; }

AtomicFact make_fact(const Triple& t, int k, int i) {
  return AtomicFact{k, i, t.subject, t.predicate, t.object, render_clause(t)};
}

TemplateParser::TemplateParser(std::vector<std::string> entities, std::vector<std::string> predicates) {
  for (auto& e : entities) entities_.emplace_back(e, e);
  for (auto& p : predicates) predicates_.emplace_back(predicate_phrase(p), p);
  sort_longest_first(entities_);
  sort_longest_first(predicates_);
}

TemplateParser::TemplateParser(const KnowledgeBase& kb)
    : TemplateParser(kb.entities(), kb.predicate_vocabulary()) {}

std::size_t TemplateParser::match_entity(std::string_view text, std::string* name) const {
  for (const auto& [phrase, entity] : entities_)
    if (word_prefix(text, phrase)) {
      *name = entity;
      return phrase.size();
    }
  return 0;
}

std::size_t TemplateParser::match_predicate(std::string_view text, std::string* name) const {
  for (const auto& [phrase, predicate] : predicates_)
    if (starts_with_ci(text, phrase) && text.size() > phrase.size() && text[phrase.size()] == ' ') {
      *name = predicate;
      return phrase.size();
    }
  return 0;
}

std::vector<Triple> TemplateParser::parse_sentence(std::string_view sentence) const {
  while (!sentence.empty() && (sentence.back() == '.' || sentence.back() == ' ' ||
                               sentence.back() == '!' || sentence.back() == '?'))
    sentence.remove_suffix(1);
  while (!sentence.empty() && sentence.front() == ' ') sentence.remove_prefix(1);

  std::string subject;
  std::size_t n = match_entity(sentence, &subject);
  if (n == 0 || n >= sentence.size()) return {};
  std::string_view rest = sentence.substr(n + 1);

  std::vector<Triple> out;
  while (!rest.empty()) {
    std::string predicate;
    std::size_t p = match_predicate(rest, &predicate);
    if (p == 0) return {};
    rest.remove_prefix(p + 1);
    // The object runs until " and <known predicate> " or the end of the sentence.
    std::size_t cut = std::string_view::npos;
    std::size_t search = 0;
    while (true) {
      auto pos = rest.find(" and ", search);
      if (pos == std::string_view::npos) break;
      std::string ignored;
      if (match_predicate(rest.substr(pos + 5), &ignored) > 0) {
        cut = pos;
        break;
      }
      search = pos + 1;
    }
    std::string_view object = rest.substr(0, cut);
    if (object.empty()) return {};
    out.push_back({subject, predicate, std::string(object)});
    if (cut == std::string_view::npos) break;
    rest.remove_prefix(cut + 5);
  }
  return out;
}

std::vector<SentenceUnit> TemplateParser::parse_text(std::string_view text) const {
  auto units = split_sentences(text);
  for (auto& u : units) {
    auto triples = parse_sentence(u.text);
    for (std::size_t i = 0; i < triples.size(); ++i)
      u.facts.push_back(make_fact(triples[i], u.index, static_cast<int>(i) + 1));
  }
  return units;
}

}  // namespace serc
