#include "serc/knowledge_base.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "serc/fact_model.hpp"

namespace serc {

namespace {

std::string trim_copy(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_bar(std::string_view s) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    auto pos = s.find('|', start);
    parts.push_back(trim_copy(s.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

}  // namespace

KnowledgeBase KnowledgeBase::parse(std::istream& in) {
  KnowledgeBase kb;
  struct PendingDep {
    int line;
    Dependency dep;
  };
  std::vector<PendingDep> deps;
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = trim_copy(raw);
    if (line.empty() || line[0] == '#') continue;
    if (line.size() < 2 || line[1] != ' ')
      throw KbParseError(line_no, "expected a record tag (T, D or X) followed by a space");
    char tag = line[0];
    std::string body = line.substr(2);
    auto parts = split_bar(body);
    switch (tag) {
      case 'T': {
        if (parts.size() != 3) throw KbParseError(line_no, "triple needs 'subject | predicate | object'");
        for (const auto& p : parts)
          if (p.empty()) throw KbParseError(line_no, "empty triple field");
        kb.add_triple({parts[0], parts[1], parts[2]});
        break;
      }
      case 'D': {
        if (parts.size() != 2) throw KbParseError(line_no, "dependency needs 'subject | root -> dependent'");
        auto arrow = parts[1].find("->");
        if (arrow == std::string::npos) throw KbParseError(line_no, "dependency is missing '->'");
        Dependency d{parts[0], trim_copy(std::string_view(parts[1]).substr(0, arrow)),
                     trim_copy(std::string_view(parts[1]).substr(arrow + 2))};
        if (d.subject.empty() || d.root_predicate.empty() || d.dependent_predicate.empty())
          throw KbParseError(line_no, "empty dependency field");
        deps.push_back({line_no, std::move(d)});
        break;
      }
      case 'X': {
        if (parts.size() != 2) throw KbParseError(line_no, "distractor needs 'predicate | value'");
        if (parts[0].empty() || parts[1].empty()) throw KbParseError(line_no, "empty distractor field");
        kb.add_distractor(parts[0], parts[1]);
        break;
      }
      default:
        throw KbParseError(line_no, std::string("unknown record tag '") + tag + "'");
    }
  }
  // Dependencies may reference triples declared later in the file.
  for (auto& pd : deps) {
    try {
      kb.add_dependency(std::move(pd.dep));
    } catch (const std::invalid_argument& e) {
      throw KbParseError(pd.line, e.what());
    }
  }
  return kb;
}

KnowledgeBase KnowledgeBase::parse_string(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse(in);
}

KnowledgeBase KnowledgeBase::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open knowledge base '" + path + "'");
  try {
    return parse(in);
  } catch (const KbParseError& e) {
    throw KbParseError(e.line(), e.message(), path);
  }
}

void KnowledgeBase::add_triple(Triple t) {
  auto key = normalize_text(t.subject);
  if (!entity_key_.count(key)) {
    entity_key_[key] = t.subject;
    entity_order_.push_back(t.subject);
  }
  if (contains(t)) return;
  by_subject_[key].push_back(triples_.size());
  triples_.push_back(std::move(t));
}

void KnowledgeBase::add_distractor(std::string predicate, std::string value) {
  auto& pool = distractors_[normalize_text(predicate)];
  if (std::find(pool.begin(), pool.end(), value) == pool.end()) pool.push_back(std::move(value));
  extra_predicates_.insert(std::move(predicate));
}

void KnowledgeBase::add_dependency(Dependency d) {
  if (!has_entity(d.subject)) throw std::invalid_argument("dependency names unknown entity '" + d.subject + "'");
  if (!has_predicate(d.subject, d.root_predicate))
    throw std::invalid_argument("dependency root '" + d.root_predicate + "' has no triple for " + d.subject);
  if (!has_predicate(d.subject, d.dependent_predicate))
    throw std::invalid_argument("dependency target '" + d.dependent_predicate + "' has no triple for " +
                                d.subject);
  if (normalize_text(d.root_predicate) == normalize_text(d.dependent_predicate) ||
      reaches(d.subject, d.dependent_predicate, d.root_predicate))
    throw std::invalid_argument("dependency " + d.root_predicate + " -> " + d.dependent_predicate +
                                " closes a cycle");
  dependencies_.push_back(std::move(d));
}

bool KnowledgeBase::reaches(const std::string& subject, const std::string& from, const std::string& to) const {
  std::vector<std::string> stack{normalize_text(from)};
  std::set<std::string> seen;
  auto target = normalize_text(to);
  auto subj = normalize_text(subject);
  while (!stack.empty()) {
    auto cur = stack.back();
    stack.pop_back();
    if (cur == target) return true;
    if (!seen.insert(cur).second) continue;
    for (const auto& d : dependencies_)
      if (normalize_text(d.subject) == subj && normalize_text(d.root_predicate) == cur)
        stack.push_back(normalize_text(d.dependent_predicate));
  }
  return false;
}

bool KnowledgeBase::has_entity(std::string_view name) const {
  return entity_key_.count(normalize_text(name)) > 0;
}

std::string KnowledgeBase::entity_name(std::string_view name) const {
  auto it = entity_key_.find(normalize_text(name));
  return it == entity_key_.end() ? std::string{} : it->second;
}

std::vector<Triple> KnowledgeBase::attributes(std::string_view subject) const {
  std::vector<Triple> out;
  auto it = by_subject_.find(normalize_text(subject));
  if (it == by_subject_.end()) return out;
  for (auto idx : it->second) out.push_back(triples_[idx]);
  return out;
}

std::vector<std::string> KnowledgeBase::values(std::string_view subject, std::string_view predicate) const {
  std::vector<std::string> out;
  auto p = normalize_text(predicate);
  for (const auto& t : attributes(subject))
    if (normalize_text(t.predicate) == p) out.push_back(t.object);
  return out;
}

bool KnowledgeBase::has_predicate(std::string_view subject, std::string_view predicate) const {
  return !values(subject, predicate).empty();
}

bool KnowledgeBase::contains(const Triple& t) const {
  auto o = normalize_text(t.object);
  for (const auto& v : values(t.subject, t.predicate))
    if (normalize_text(v) == o) return true;
  return false;
}

std::vector<std::string> KnowledgeBase::dependents(std::string_view subject, std::string_view root) const {
  std::vector<std::string> out;
  auto s = normalize_text(subject);
  auto r = normalize_text(root);
  for (const auto& d : dependencies_)
    if (normalize_text(d.subject) == s && normalize_text(d.root_predicate) == r)
      out.push_back(d.dependent_predicate);
  return out;
}

const std::vector<std::string>& KnowledgeBase::distractors(std::string_view predicate) const {
  static const std::vector<std::string> empty;
  auto it = distractors_.find(normalize_text(predicate));
  return it == distractors_.end() ? empty : it->second;
}

std::vector<std::string> KnowledgeBase::predicate_vocabulary() const {
  std::set<std::string> vocab(extra_predicates_.begin(), extra_predicates_.end());
  for (const auto& t : triples_) vocab.insert(t.predicate);
  return {vocab.begin(), vocab.end()};
}

}  // namespace serc
