#include "serc/channel.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <set>

#include "serc/surface.hpp"

namespace serc {

namespace {

bool same(std::string_view a, std::string_view b) { return normalize_text(a) == normalize_text(b); }

bool contains_norm(const std::vector<std::string>& pool, std::string_view v) {
  return std::any_of(pool.begin(), pool.end(), [&](const std::string& p) { return same(p, v); });
}

void push_unique(std::vector<std::string>& pool, const std::string& v) {
  if (!contains_norm(pool, v)) pool.push_back(v);
}

// Values of `predicate` held by entities other than `entity`, in KB order.
std::vector<std::string> foreign_values(const KnowledgeBase& kb, const std::string& entity,
                                        const std::string& predicate) {
  std::vector<std::string> out;
  for (const auto& t : kb.triples())
    if (!same(t.subject, entity) && same(t.predicate, predicate)) push_unique(out, t.object);
  return out;
}

std::vector<std::string> corruption_candidates(const KnowledgeBase& kb, const std::string& entity,
                                               const std::string& predicate) {
  auto truth = kb.values(entity, predicate);
  std::vector<std::string> out;
  for (const auto& v : kb.distractors(predicate))
    if (!contains_norm(truth, v)) push_unique(out, v);
  if (out.empty())
    for (const auto& v : foreign_values(kb, entity, predicate))
      if (!contains_norm(truth, v)) push_unique(out, v);
  return out;
}

void rerender(SentenceUnit& s) {
  for (std::size_t i = 0; i < s.facts.size(); ++i) {
    auto& f = s.facts[i];
    f.sentence_index = s.index;
    f.fact_index = static_cast<int>(i) + 1;
    f.surface_text = render_clause(to_triple(f));
  }
  if (!s.facts.empty()) s.text = render_sentence(s.facts);
}

ErrorKind parse_kind(std::string_view s) {
  if (s == "clean") return ErrorKind::Clean;
  if (s == "corrupted") return ErrorKind::Corrupted;
  if (s == "fabricated") return ErrorKind::Fabricated;
  throw std::invalid_argument("unknown error label '" + std::string(s) + "'");
}

}  // namespace

void NoiseConfig::validate() const {
  auto check = [](double p, const char* name) {
    if (!(p >= 0.0 && p <= 1.0))
      throw std::invalid_argument(std::string(name) + " must lie in [0, 1]");
  };
  check(p_entity_swap, "p_entity_swap");
  check(p_corrupt, "p_corrupt");
  check(p_fabricate, "p_fabricate");
}

std::string_view to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::Clean: return "clean";
    case ErrorKind::Corrupted: return "corrupted";
    case ErrorKind::Fabricated: return "fabricated";
  }
  return "clean";
}

std::string NoisyObservation::text() const {
  std::string out;
  for (const auto& s : response) {
    if (!out.empty()) out += ' ';
    out += s.text;
  }
  return out;
}

IdealResponse generate_codeword(const KnowledgeBase& kb, const std::string& entity, int n_sentences,
                                int facts_per_sentence, std::uint64_t seed) {
  if (!kb.has_entity(entity)) throw CapacityError("entity '" + entity + "' is not in the knowledge base");
  if (n_sentences < 0 || facts_per_sentence < 1)
    throw std::invalid_argument("n_sentences must be >= 0 and facts_per_sentence >= 1");
  IdealResponse ideal;
  ideal.entity = kb.entity_name(entity);
  if (n_sentences == 0) return ideal;

  auto attrs = kb.attributes(entity);
  auto needed = static_cast<std::size_t>(n_sentences) * static_cast<std::size_t>(facts_per_sentence);
  if (attrs.size() < needed)
    throw CapacityError("entity '" + ideal.entity + "' has " + std::to_string(attrs.size()) +
                        " attributes but " + std::to_string(n_sentences) + " sentences x " +
                        std::to_string(facts_per_sentence) + " facts needs " + std::to_string(needed) +
                        " (short by " + std::to_string(needed - attrs.size()) + ")");

  std::vector<std::size_t> order(attrs.size());
  std::iota(order.begin(), order.end(), 0);
  DrawStream draws(seed);
  for (std::size_t i = order.size() - 1; i > 0; --i) std::swap(order[i], order[draws.pick(i + 1)]);
  order.resize(needed);
  std::sort(order.begin(), order.end());

  for (int k = 1; k <= n_sentences; ++k) {
    SentenceUnit s;
    s.index = k;
    for (int i = 1; i <= facts_per_sentence; ++i) {
      const auto& t = attrs[order[static_cast<std::size_t>((k - 1) * facts_per_sentence + (i - 1))]];
      s.facts.push_back(make_fact(t, k, i));
    }
    s.text = render_sentence(s.facts);
    ideal.sentences.push_back(std::move(s));
  }
  return ideal;
}

NoisyObservation inject_noise(const IdealResponse& ideal, const NoiseConfig& cfg, const KnowledgeBase& kb) {
  cfg.validate();
  NoisyObservation obs;
  obs.entity = ideal.entity;
  DrawStream draws(cfg.seed);

  std::optional<std::string> decoy;
  if (draws.uniform() < cfg.p_entity_swap) {
    std::vector<std::string> others;
    for (const auto& e : kb.entities())
      if (!same(e, ideal.entity)) others.push_back(e);
    if (ideal.sentences.size() >= 2 && !others.empty()) decoy = others[draws.pick(others.size())];
  }

  auto vocabulary = kb.predicate_vocabulary();
  for (const auto& src : ideal.sentences) {
    SentenceUnit s;
    s.index = src.index;
    s.text = src.text;
    std::vector<ErrorLabel> labels;
    for (const auto& f : src.facts) {
      AtomicFact out = f;
      ErrorLabel label;
      if (draws.uniform() < cfg.p_corrupt) {
        auto candidates = corruption_candidates(kb, ideal.entity, f.predicate);
        if (!candidates.empty()) {
          label.kind = ErrorKind::Corrupted;
          label.original = to_triple(f);
          out.object = candidates[draws.pick(candidates.size())];
        }
      }
      s.facts.push_back(std::move(out));
      labels.push_back(std::move(label));
    }
    if (draws.uniform() < cfg.p_fabricate) {
      std::vector<std::string> predicates;
      for (const auto& p : vocabulary) {
        if (kb.has_predicate(ideal.entity, p)) continue;
        bool in_sentence = std::any_of(s.facts.begin(), s.facts.end(),
                                       [&](const AtomicFact& f) { return same(f.predicate, p); });
        if (!in_sentence) predicates.push_back(p);
      }
      if (!predicates.empty()) {
        const auto& p = predicates[draws.pick(predicates.size())];
        std::vector<std::string> values;
        for (const auto& v : kb.distractors(p)) push_unique(values, v);
        for (const auto& v : foreign_values(kb, ideal.entity, p)) push_unique(values, v);
        if (!values.empty()) {
          const auto& v = values[draws.pick(values.size())];
          s.facts.push_back(AtomicFact{s.index, 0, ideal.entity, p, v, {}});
          labels.push_back({ErrorKind::Fabricated, std::nullopt});
        }
      }
    }
    if (decoy && s.index > 1)
      for (auto& f : s.facts) f.subject = *decoy;
    rerender(s);
    for (std::size_t i = 0; i < labels.size(); ++i)
      obs.error_labels[{s.index, static_cast<int>(i) + 1}] = std::move(labels[i]);
    obs.response.push_back(std::move(s));
  }
  obs.entity_swapped = decoy;
  return obs;
}

Verdict kb_verify(const AtomicFact& fact, const KnowledgeBase& kb) {
  if (kb.contains(to_triple(fact))) return Verdict::SUP;
  if (kb.has_predicate(fact.subject, fact.predicate)) return Verdict::CON;
  return Verdict::NF;
}

std::vector<SentenceUnit> realign_subject(const std::vector<SentenceUnit>& sentences, const std::string& entity) {
  auto out = sentences;
  for (auto& s : out) {
    for (auto& f : s.facts) f.subject = entity;
    rerender(s);
  }
  return out;
}

void write_observation(std::ostream& out, const NoisyObservation& obs) {
  nlohmann::json header{{"type", "noisy_observation"}, {"entity", obs.entity}};
  header["entity_swapped"] = obs.entity_swapped ? nlohmann::json(*obs.entity_swapped) : nlohmann::json(nullptr);
  out << header.dump() << '\n';
  for (const auto& s : obs.response) {
    nlohmann::json j = s;
    j["type"] = "sentence_unit";
    out << j.dump() << '\n';
  }
  for (const auto& [ref, label] : obs.error_labels) {
    nlohmann::json j{{"type", "error_label"}, {"fact_ref", ref}, {"label", to_string(label.kind)}};
    if (label.original)
      j["original"] = {{"subject", label.original->subject},
                       {"predicate", label.original->predicate},
                       {"object", label.original->object}};
    else
      j["original"] = nullptr;
    out << j.dump() << '\n';
  }
}

NoisyObservation read_observation(std::istream& in) {
  NoisyObservation obs;
  bool have_header = false;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
      auto type = j.at("type").get<std::string>();
      if (type == "noisy_observation") {
        obs.entity = j.at("entity").get<std::string>();
        if (j.contains("entity_swapped") && !j.at("entity_swapped").is_null())
          obs.entity_swapped = j.at("entity_swapped").get<std::string>();
        have_header = true;
      } else if (type == "sentence_unit") {
        obs.response.push_back(j.get<SentenceUnit>());
      } else if (type == "error_label") {
        ErrorLabel label;
        label.kind = parse_kind(j.at("label").get<std::string>());
        if (j.contains("original") && !j.at("original").is_null()) {
          const auto& o = j.at("original");
          label.original = Triple{o.at("subject").get<std::string>(), o.at("predicate").get<std::string>(),
                                  o.at("object").get<std::string>()};
        }
        obs.error_labels[j.at("fact_ref").get<FactRef>()] = std::move(label);
      } else {
        throw std::invalid_argument("unknown record type '" + type + "'");
      }
    } catch (const std::exception& e) {
      throw std::runtime_error("observation line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (!have_header) throw std::runtime_error("observation is missing its noisy_observation header");
  std::size_t facts = 0;
  for (const auto& s : obs.response) {
    for (const auto& f : s.facts)
      if (!obs.error_labels.count(f.ref()))
        throw std::runtime_error("observation has no error label for fact " + to_string(f.ref()));
    facts += s.facts.size();
  }
  if (facts != obs.error_labels.size())
    throw std::runtime_error("observation has error labels for facts that do not exist");
  return obs;
}

NoisyObservation load_observation(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open observation '" + path + "'");
  return read_observation(in);
}

void save_observation(const std::string& path, const NoisyObservation& obs) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write observation '" + path + "'");
  write_observation(out, obs);
}

}  // namespace serc
