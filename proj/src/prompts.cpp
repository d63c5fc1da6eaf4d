#include "serc/prompts.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

namespace serc {

std::int64_t estimate_tokens(std::string_view text) {
  return static_cast<std::int64_t>((text.size() + 3) / 4);
}

std::string truncate_utf8(std::string_view text, std::size_t cap) {
  if (text.size() <= cap) return std::string(text);
  std::size_t cut = cap;
  // Do not split a multi-byte sequence.
  while (cut > 0 && (static_cast<unsigned char>(text[cut]) & 0xC0) == 0x80) --cut;
  return std::string(text.substr(0, cut));
}

void truncate_documents(std::vector<Document>& docs, std::size_t cap) {
  for (auto& d : docs)
    if (d.content.size() > cap) d.content = truncate_utf8(d.content, cap);
}

}  // namespace serc

namespace serc::prompts {

namespace {

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::vector<std::string> lines_of(std::string_view text) {
  std::vector<std::string> out;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) out.push_back(line);
  return out;
}

std::vector<std::string> split_bar(std::string_view s) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    auto pos = s.find('|', start);
    parts.push_back(trim(s.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

std::string strip_bullet(std::string line) {
  line = trim(line);
  while (!line.empty() && (line[0] == '-' || line[0] == '*' || line[0] == '(')) line = trim(line.substr(1));
  while (!line.empty() && line.back() == ')') line.pop_back();
  return trim(line);
}

std::optional<FactRef> parse_ref(std::string_view s) {
  auto dot = s.find('.');
  if (dot == std::string_view::npos) return std::nullopt;
  try {
    std::size_t used = 0;
    std::string ks(s.substr(0, dot)), is(s.substr(dot + 1));
    int k = std::stoi(ks, &used);
    if (used != ks.size()) return std::nullopt;
    int i = std::stoi(is, &used);
    if (used != is.size()) return std::nullopt;
    return FactRef{k, i};
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

std::string documents_block(const std::vector<Document>& docs) {
  std::string out;
  for (std::size_t n = 0; n < docs.size(); ++n) {
    out += "[" + std::to_string(n + 1) + "] " + docs[n].title;
    if (!docs[n].url.empty()) out += " (" + docs[n].url + ")";
    out += "\n" + docs[n].content + "\n";
  }
  return out;
}

std::string entity_line(const TopicEntity& t) {
  return t.qualifier ? t.name + " (" + *t.qualifier + ")" : t.name;
}

}  // namespace

std::string fact_line(const AtomicFact& f) {
  return "(" + f.subject + " | " + f.predicate + " | " + f.object + ")";
}

Prompt answer(const std::string& query, const std::vector<Document>& context) {
  Prompt p;
  p.system = "You are a careful assistant. Answer in plain factual prose.";
  if (context.empty()) {
    p.user = "Question: " + query;
  } else {
    p.system += " Use only the reference material; it describes the entity the question is about.";
    p.user = "Reference material:\n" + documents_block(context) + "\nQuestion: " + query;
  }
  return p;
}

Prompt topic(const std::string& text) {
  return {"Identify the single main entity a text is about. Reply with its name on one line, "
          "optionally followed by ' | ' and a short disambiguating qualifier such as a profession "
          "or era. Reply NONE if the text has no main entity.",
          "Text:\n" + text};
}

Prompt judge(const TopicEntity& a, const TopicEntity& b) {
  return {"Decide whether two entity descriptions refer to the same real-world entity. "
          "Reply with exactly YES or NO.",
          "Entity A: " + entity_line(a) + "\nEntity B: " + entity_line(b)};
}

Prompt decompose(const SentenceUnit& sentence) {
  return {"Break the sentence into atomic facts. Each fact states exactly one proposition. "
          "Write one fact per line as: subject | predicate | object. "
          "Write nothing if the sentence states no facts.",
          "Sentence: " + sentence.text};
}

Prompt query(const std::vector<AtomicFact>& facts) {
  std::string user = "Facts:\n";
  for (const auto& f : facts) user += fact_line(f) + "\n";
  return {"Write one web search query that can confirm or refute all of the listed facts at once. "
          "Reply with the query only, on one line.",
          user};
}

Prompt summarize(const std::vector<Document>& documents, const std::string& query) {
  return {"Summarize only what the documents say about the query. Keep names, dates and numbers "
          "exactly as written. Do not add outside knowledge.",
          "Query: " + query + "\nDocuments:\n" + documents_block(documents)};
}

Prompt verify(const AtomicFact& fact, const Evidence& evidence) {
  return {"Judge one claim against the evidence. Reply with exactly one label: SUP if the evidence "
          "supports the claim, CON if the evidence contradicts it, NF if the evidence does not "
          "mention it.",
          "Evidence:\n" + evidence.summary_text + "\nClaim: " + fact_line(fact)};
}

Prompt correct(const CorrectionRequest& request) {
  std::string user = "Evidence:\n" + request.evidence.summary_text + "\nGroup facts:\n";
  for (std::size_t n = 0; n < request.group_facts.size(); ++n) {
    const auto& f = request.group_facts[n];
    user += "[" + to_string(f.ref()) + "] " + fact_line(f);
    if (n < request.group_syndromes.size()) user += " " + std::string(to_string(request.group_syndromes[n].verdict));
    user += "\n";
  }
  if (!request.dependencies.empty()) {
    user += "Known dependencies:\n";
    for (const auto& d : request.dependencies)
      user += d.subject + ": " + d.root_predicate + " -> " + d.dependent_predicate + "\n";
  }
  return {"Fix every CON fact using only the evidence. For each, write: FIX k.i | subject | "
          "predicate | object. If a fix changes a fact that other facts in the group depend on, "
          "also re-derive each directly dependent fact from the evidence and write: PROP k.i FROM "
          "k.i | subject | predicate | object. Only follow one level of dependency. Omit a FIX when "
          "the evidence gives no replacement.",
          user};
}

Prompt rewrite(const std::vector<AtomicFact>& facts, const std::vector<std::string>& history) {
  std::string user = "Text so far:\n";
  for (const auto& h : history) user += h + "\n";
  user += "Facts for the next sentence:\n";
  for (const auto& f : facts) user += fact_line(f) + "\n";
  return {"Write the next sentence of the text. It must state all of the listed facts and nothing "
          "else, and read naturally after the text so far. Reply with the sentence only.",
          user};
}

Prompt polish(const std::string& query, const std::string& draft) {
  return {"Smooth the wording of the draft answer. Do not add, remove or change any fact, name, "
          "date or number. Reply with the revised answer only.",
          "Question: " + query + "\nDraft:\n" + draft};
}

std::optional<bool> parse_yes_no(std::string_view text) {
  if (text == "YES") return true;
  if (text == "NO") return false;
  auto t = lower(trim(text));
  while (!t.empty() && (t.back() == '.' || t.back() == '!')) t.pop_back();
  if (t == "yes") return true;
  if (t == "no") return false;
  return std::nullopt;
}

std::optional<Verdict> parse_label(std::string_view text) {
  if (text == "SUP") return Verdict::SUP;
  if (text == "CON") return Verdict::CON;
  if (text == "NF") return Verdict::NF;
  auto t = lower(trim(text));
  if (t == "sup") return Verdict::SUP;
  if (t == "con") return Verdict::CON;
  if (t == "nf") return Verdict::NF;
  return std::nullopt;
}

std::optional<TopicEntity> parse_topic(std::string_view text) {
  auto line = first_line(text);
  if (line.empty() || lower(line) == "none") return std::nullopt;
  auto parts = split_bar(line);
  TopicEntity t{parts[0], std::nullopt};
  if (t.name.empty()) return std::nullopt;
  if (parts.size() >= 2 && !parts[1].empty()) t.qualifier = parts[1];
  return t;
}

TripleLines parse_triple_lines(std::string_view text) {
  TripleLines out;
  for (const auto& raw : lines_of(text)) {
    auto line = strip_bullet(raw);
    if (line.empty()) continue;
    auto parts = split_bar(line);
    if (parts.size() == 3 && !parts[0].empty() && !parts[1].empty() && !parts[2].empty())
      out.triples.push_back({parts[0], parts[1], parts[2]});
    else
      out.rejected.push_back(raw);
  }
  return out;
}

CorrectionLines parse_correction_lines(std::string_view text) {
  CorrectionLines out;
  for (const auto& raw : lines_of(text)) {
    auto line = trim(raw);
    if (line.empty()) continue;
    auto parts = split_bar(line);
    bool ok = false;
    if (parts.size() == 4 && !parts[1].empty() && !parts[2].empty() && !parts[3].empty()) {
      std::istringstream head(parts[0]);
      std::string tag, target, from_kw, from;
      head >> tag >> target >> from_kw >> from;
      CorrectionLine c;
      c.replacement = {parts[1], parts[2], parts[3]};
      if (auto t = parse_ref(target)) {
        c.target = *t;
        if (tag == "FIX" && from_kw.empty()) {
          ok = true;
        } else if (tag == "PROP" && from_kw == "FROM") {
          if (auto f = parse_ref(from)) {
            c.from = *f;
            ok = true;
          }
        }
      }
      if (ok) out.lines.push_back(std::move(c));
    }
    if (!ok) out.rejected.push_back(raw);
  }
  return out;
}

std::string cap_query(std::string_view text, std::size_t max_chars, bool* capped) {
  auto t = trim(text);
  if (capped) *capped = false;
  if (t.size() <= max_chars) return t;
  if (capped) *capped = true;
  auto cut = t.rfind(' ', max_chars);
  if (cut == std::string::npos || cut == 0) return truncate_utf8(t, max_chars);
  return trim(std::string_view(t).substr(0, cut));
}

std::string first_line(std::string_view text) {
  for (const auto& l : lines_of(text)) {
    auto t = trim(l);
    if (!t.empty()) return t;
  }
  return {};
}

}  // namespace serc::prompts
