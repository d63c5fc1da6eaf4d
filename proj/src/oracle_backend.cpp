#include "serc/oracle_backend.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <set>

#include "serc/prompts.hpp"

namespace serc {

namespace {

bool same(std::string_view a, std::string_view b) { return normalize_text(a) == normalize_text(b); }

template <class T>
OpResult<T> priced(T value, const prompts::Prompt& prompt, std::string_view output, Phase phase) {
  OpResult<T> r;
  r.value = std::move(value);
  r.prompt = prompt.text();
  r.usage = {estimate_tokens(r.prompt), estimate_tokens(output), phase};
  return r;
}

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::string collapse_whitespace(std::string_view s) {
  std::string out;
  bool pending = false;
  for (char c : s) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      pending = !out.empty();
      continue;
    }
    if (pending) out += ' ';
    pending = false;
    out += c;
  }
  return out;
}

std::string join_sentences(const std::vector<SentenceUnit>& sentences) {
  std::string out;
  for (const auto& s : sentences) {
    if (s.text.empty()) continue;
    if (!out.empty()) out += ' ';
    out += s.text;
  }
  return out;
}

// Splits facts into runs sharing a subject and renders one sentence per run.
std::string render_facts(const std::vector<AtomicFact>& facts) {
  std::string out;
  std::size_t start = 0;
  while (start < facts.size()) {
    std::size_t end = start + 1;
    while (end < facts.size() && same(facts[end].subject, facts[start].subject)) ++end;
    std::vector<AtomicFact> run(facts.begin() + static_cast<std::ptrdiff_t>(start),
                                facts.begin() + static_cast<std::ptrdiff_t>(end));
    if (!out.empty()) out += ' ';
    out += render_sentence(run);
    start = end;
  }
  return out;
}

struct ParsedQuery {
  std::string subject;
  std::vector<std::string> predicates;
};

ParsedQuery parse_oracle_query(std::string_view query) {
  ParsedQuery q;
  auto colon = query.find(':');
  q.subject = trim(query.substr(0, colon));
  if (colon == std::string_view::npos) return q;
  std::string_view rest = query.substr(colon + 1);
  while (!rest.empty()) {
    auto comma = rest.find(',');
    auto p = trim(rest.substr(0, comma));
    if (!p.empty()) q.predicates.push_back(p);
    if (comma == std::string_view::npos) break;
    rest.remove_prefix(comma + 1);
  }
  return q;
}

bool is_dependent(const AtomicFact& root, const AtomicFact& other, const std::vector<Dependency>& deps) {
  if (!same(root.subject, other.subject)) return false;
  return std::any_of(deps.begin(), deps.end(), [&](const Dependency& d) {
    return same(d.subject, root.subject) && same(d.root_predicate, root.predicate) &&
           same(d.dependent_predicate, other.predicate);
  });
}

AtomicFact with_object(const AtomicFact& f, const std::string& object) {
  AtomicFact out = f;
  out.object = object;
  out.surface_text = render_clause(to_triple(out));
  return out;
}

}  // namespace

std::string evidence_line(const Triple& t) {
  return "(" + t.subject + ", " + t.predicate + ", " + t.object + ")";
}

std::vector<Triple> parse_evidence_lines(std::string_view summary) {
  std::vector<Triple> out;
  std::size_t pos = 0;
  while (pos < summary.size()) {
    auto nl = summary.find('\n', pos);
    auto line = trim(summary.substr(pos, nl == std::string_view::npos ? nl : nl - pos));
    pos = nl == std::string_view::npos ? summary.size() : nl + 1;
    if (line.size() < 2 || line.front() != '(' || line.back() != ')') continue;
    std::string_view body(line);
    body = body.substr(1, body.size() - 2);
    auto c1 = body.find(", ");
    if (c1 == std::string_view::npos) continue;
    auto c2 = body.find(", ", c1 + 2);
    if (c2 == std::string_view::npos) continue;
    Triple t{trim(body.substr(0, c1)), trim(body.substr(c1 + 2, c2 - c1 - 2)), trim(body.substr(c2 + 2))};
    if (!t.subject.empty() && !t.predicate.empty() && !t.object.empty()) out.push_back(std::move(t));
  }
  return out;
}

std::optional<std::string> find_entity_mention(const KnowledgeBase& kb, std::string_view text) {
  auto hay = " " + normalize_text(text) + " ";
  // Punctuation next to a name still counts as a boundary.
  for (auto& c : hay)
    if (c == ':' || c == ',' || c == '.' || c == '?' || c == '!' || c == ';') c = ' ';
  std::optional<std::string> best;
  std::size_t best_len = 0;
  for (const auto& e : kb.entities()) {
    auto needle = " " + normalize_text(e) + " ";
    if (needle.size() > best_len && hay.find(needle) != std::string::npos) {
      best = e;
      best_len = needle.size();
    }
  }
  return best;
}

OracleOps::OracleOps(const KnowledgeBase& kb, std::optional<NoisyObservation> script, std::size_t summary_char_cap)
    : kb_(&kb), script_(std::move(script)), summary_cap_(summary_char_cap), parser_(kb) {}

std::optional<std::string> OracleOps::majority_subject(std::string_view text) const {
  std::vector<std::string> order;
  std::map<std::string, int> counts;
  for (const auto& s : parser_.parse_text(text))
    for (const auto& f : s.facts) {
      auto key = normalize_text(f.subject);
      if (counts[key]++ == 0) order.push_back(f.subject);
    }
  std::optional<std::string> best;
  int best_count = 0;
  for (const auto& name : order) {
    int c = counts[normalize_text(name)];
    if (c > best_count) {
      best = name;
      best_count = c;
    }
  }
  return best;
}

std::string OracleOps::render_entity(const std::string& entity) const {
  auto attrs = kb_->attributes(entity);
  std::vector<std::string> sentences;
  for (std::size_t i = 0; i < attrs.size(); i += 2) {
    std::vector<Triple> group(attrs.begin() + static_cast<std::ptrdiff_t>(i),
                              attrs.begin() + static_cast<std::ptrdiff_t>(std::min(attrs.size(), i + 2)));
    sentences.push_back(render_sentence(group));
  }
  std::string out;
  for (const auto& s : sentences) out += (out.empty() ? "" : " ") + s;
  return out;
}

OpResult<std::string> OracleOps::generate_answer(const std::string& query, const std::vector<Document>& context) {
  auto prompt = prompts::answer(query, context);
  std::string text;
  if (context.empty()) {
    if (script_) {
      text = script_->text();
    } else if (auto e = find_entity_mention(*kb_, query)) {
      text = render_entity(*e);
    }
  } else {
    std::string all;
    for (const auto& d : context) all += d.content + "\n";
    auto subject = majority_subject(all);
    if (subject && script_) {
      text = join_sentences(realign_subject(script_->response, *subject));
    } else if (subject) {
      text = render_entity(*subject);
    } else if (script_) {
      text = script_->text();
    }
  }
  if (text.empty()) text = "I do not have information about that.";
  return priced(text, prompt, text, Phase::Alignment);
}

OpResult<std::optional<TopicEntity>> OracleOps::extract_topic(const std::string& text) {
  auto prompt = prompts::topic(text);
  std::optional<TopicEntity> topic;
  if (auto s = majority_subject(text)) topic = TopicEntity{*s, std::nullopt};
  return priced(topic, prompt, topic ? topic->name : "NONE", Phase::Alignment);
}

OpResult<bool> OracleOps::judge_consistency(const TopicEntity& a, const TopicEntity& b) {
  auto prompt = prompts::judge(a, b);
  bool ok = same(a.name, b.name);
  if (ok && a.qualifier && b.qualifier) ok = same(*a.qualifier, *b.qualifier);
  return priced(ok, prompt, ok ? "YES" : "NO", Phase::Alignment);
}

OpResult<std::vector<AtomicFact>> OracleOps::decompose_facts(const SentenceUnit& sentence) {
  auto prompt = prompts::decompose(sentence);
  std::vector<AtomicFact> facts;
  std::string output;
  auto triples = parser_.parse_sentence(sentence.text);
  for (std::size_t i = 0; i < triples.size(); ++i) {
    facts.push_back(make_fact(triples[i], sentence.index, static_cast<int>(i) + 1));
    output += triples[i].subject + " | " + triples[i].predicate + " | " + triples[i].object + "\n";
  }
  return priced(std::move(facts), prompt, output, Phase::Detection);
}

OpResult<std::string> OracleOps::generate_query(const std::vector<AtomicFact>& facts) {
  auto prompt = prompts::query(facts);
  std::string q;
  if (!facts.empty()) {
    q = facts.front().subject + ":";
    std::vector<std::string> seen;
    for (const auto& f : facts) {
      if (std::any_of(seen.begin(), seen.end(), [&](const std::string& p) { return same(p, f.predicate); }))
        continue;
      q += (seen.empty() ? " " : ", ") + f.predicate;
      seen.push_back(f.predicate);
    }
  }
  return priced(q, prompt, q, Phase::Detection);
}

OpResult<Evidence> OracleOps::summarize_evidence(const std::vector<Document>& documents, const std::string& query) {
  auto docs = documents;
  truncate_documents(docs, 20000);
  auto prompt = prompts::summarize(docs, query);
  Evidence ev;
  ev.query = query;
  if (docs.empty()) return priced(ev, prompt, "", Phase::Detection);

  auto q = parse_oracle_query(query);
  for (const auto& d : docs) {
    ev.source_documents.push_back({d.url, truncate_utf8(d.content, 200)});
    for (const auto& s : parser_.parse_text(d.content))
      for (const auto& f : s.facts) {
        if (!same(f.subject, q.subject)) continue;
        bool wanted = std::any_of(q.predicates.begin(), q.predicates.end(),
                                  [&](const std::string& p) { return same(p, f.predicate); });
        if (!wanted) continue;
        auto line = evidence_line(to_triple(f));
        if (ev.summary_text.size() + line.size() + 1 > summary_cap_) break;
        ev.summary_text += line + "\n";
      }
  }
  return priced(ev, prompt, ev.summary_text, Phase::Detection);
}

OpResult<Syndrome> OracleOps::verify_fact(const AtomicFact& fact, const Evidence& evidence) {
  auto prompt = prompts::verify(fact, evidence);
  Syndrome s{Verdict::NF, fact.ref(), evidence.id};
  if (!evidence.source_documents.empty()) {
    KnowledgeBase local;
    for (auto& t : parse_evidence_lines(evidence.summary_text)) local.add_triple(std::move(t));
    s.verdict = kb_verify(fact, local);
  }
  return priced(s, prompt, to_string(s.verdict), Phase::Detection);
}

std::vector<CorrectionEntry> oracle_correct(const CorrectionRequest& request, std::vector<std::string>& warnings) {
  KnowledgeBase evidence;
  for (auto& t : parse_evidence_lines(request.evidence.summary_text)) evidence.add_triple(std::move(t));

  const auto& group = request.group_facts;
  std::set<FactRef> con;
  for (const auto& [f, s] : request.contradicted) con.insert(f.ref());

  auto asserted = [&](const AtomicFact& f, const std::string& value) {
    return std::any_of(group.begin(), group.end(), [&](const AtomicFact& g) {
      return same(g.subject, f.subject) && same(g.predicate, f.predicate) && same(g.object, value);
    });
  };
  auto pick_value = [&](const AtomicFact& f) -> std::optional<std::string> {
    auto values = evidence.values(f.subject, f.predicate);
    if (values.empty()) return std::nullopt;
    for (const auto& v : values)
      if (!asserted(f, v)) return v;
    return values.front();
  };

  std::vector<CorrectionEntry> out;
  std::set<FactRef> assigned;

  auto correct_direct = [&](const AtomicFact& f) -> bool {
    auto value = pick_value(f);
    if (!value) {
      warnings.push_back("no replacement value in evidence for " + to_string(f.ref()) + "; pruned");
      out.push_back(CorrectionEntry::pruned(f));
      assigned.insert(f.ref());
      return false;
    }
    out.push_back(CorrectionEntry::corrected(f, with_object(f, *value)));
    assigned.insert(f.ref());
    return true;
  };

  for (const auto& f : group) {
    if (!con.count(f.ref())) continue;
    bool depends_on_con = std::any_of(group.begin(), group.end(), [&](const AtomicFact& r) {
      return r.ref() != f.ref() && con.count(r.ref()) && is_dependent(r, f, request.dependencies);
    });
    if (depends_on_con || assigned.count(f.ref())) continue;
    if (!correct_direct(f)) continue;
    for (const auto& g : group) {
      if (g.ref() == f.ref() || assigned.count(g.ref()) || !is_dependent(f, g, request.dependencies)) continue;
      auto values = evidence.values(g.subject, g.predicate);
      if (values.empty()) continue;
      bool agrees = std::any_of(values.begin(), values.end(), [&](const std::string& v) { return same(v, g.object); });
      if (agrees) continue;
      auto value = pick_value(g);
      out.push_back(CorrectionEntry::corrected(g, with_object(g, *value), f.ref()));
      assigned.insert(g.ref());
    }
  }
  for (const auto& f : group)
    if (con.count(f.ref()) && !assigned.count(f.ref())) correct_direct(f);

  std::sort(out.begin(), out.end(),
            [](const CorrectionEntry& a, const CorrectionEntry& b) { return a.original().ref() < b.original().ref(); });
  return out;
}

OpResult<std::vector<CorrectionEntry>> OracleOps::correct_group(const CorrectionRequest& request) {
  auto prompt = prompts::correct(request);
  std::vector<std::string> warnings;
  auto entries = oracle_correct(request, warnings);
  std::string output;
  for (const auto& e : entries) {
    if (!e.replacement()) continue;
    const auto& r = *e.replacement();
    output += (e.propagated_from() ? "PROP " + to_string(r.ref()) + " FROM " + to_string(*e.propagated_from())
                                   : "FIX " + to_string(r.ref())) +
              " | " + r.subject + " | " + r.predicate + " | " + r.object + "\n";
  }
  auto result = priced(std::move(entries), prompt, output, Phase::Correction);
  result.warnings = std::move(warnings);
  return result;
}

OpResult<std::string> OracleOps::rewrite_sentence(const std::vector<AtomicFact>& corrected_facts,
                                                  const std::vector<std::string>& history) {
  auto prompt = prompts::rewrite(corrected_facts, history);
  auto text = render_facts(corrected_facts);
  return priced(text, prompt, text, Phase::Reconstruction);
}

OpResult<std::string> OracleOps::polish(const std::string& query, const std::string& draft) {
  auto prompt = prompts::polish(query, draft);
  auto text = collapse_whitespace(draft);
  return priced(text, prompt, text, Phase::Polish);
}

KbRetriever::KbRetriever(const KnowledgeBase& kb, std::size_t char_cap) : kb_(&kb), cap_(char_cap) {}

Retrieval KbRetriever::retrieve(const std::string& query, int top_k) {
  Retrieval r;
  if (top_k < 1) return r;
  auto entity = find_entity_mention(*kb_, query);
  if (!entity) return r;
  Document d;
  d.title = *entity;
  d.url = "kb://" + *entity;
  for (const auto& t : kb_->attributes(*entity)) d.content += (d.content.empty() ? "" : " ") + render_sentence({t});
  d.content = truncate_utf8(d.content, cap_);
  r.documents.push_back(std::move(d));
  return r;
}

}  // namespace serc
