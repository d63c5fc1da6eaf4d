#include "serc/pipeline.hpp"

#include <algorithm>
#include <exception>
#include <optional>
#include <stdexcept>

#include <omp.h>

#include "serc/surface.hpp"

namespace serc {

namespace {

std::string triple_note(const AtomicFact& f) { return f.subject + " | " + f.predicate + " | " + f.object; }

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (const auto& p : parts) {
    if (p.empty()) continue;
    if (!out.empty()) out += sep;
    out += p;
  }
  return out;
}

// Records one backend call and returns its value.
template <class T>
T record(Decoder::Batch& batch, OpResult<T> r, Phase phase, std::string op, std::optional<int> k = std::nullopt,
         std::optional<int> i = std::nullopt, std::optional<Verdict> verdict = std::nullopt) {
  r.usage.phase = phase;
  TraceEvent e;
  e.phase = std::string(to_string(phase));
  e.op = std::move(op);
  e.k = k;
  e.i = i;
  e.verdict = verdict;
  e.tokens_in = r.usage.prompt_tokens;
  e.tokens_out = r.usage.completion_tokens;
  e.note = "digest=" + digest(r.prompt);
  for (const auto& w : r.warnings) {
    e.note += "; warning: " + w;
    batch.warnings.push_back(w);
  }
  batch.events.push_back(std::move(e));
  batch.usage.push_back(r.usage);
  return std::move(r.value);
}

void note_event(Decoder::Batch& batch, std::string phase, std::string op, std::string note,
                std::optional<int> k = std::nullopt, std::optional<int> i = std::nullopt,
                std::optional<Verdict> verdict = std::nullopt) {
  TraceEvent e;
  e.phase = std::move(phase);
  e.op = std::move(op);
  e.k = k;
  e.i = i;
  e.verdict = verdict;
  e.note = std::move(note);
  batch.events.push_back(std::move(e));
}

void warn(Decoder::Batch& batch, Phase phase, std::string message) {
  batch.warnings.push_back(message);
  note_event(batch, std::string(to_string(phase)), "warning", std::move(message));
}

std::vector<std::string> canonical_multiset(const std::vector<AtomicFact>& facts) {
  std::vector<std::string> keys;
  for (const auto& f : facts)
    keys.push_back(normalize_text(f.subject) + "\x1f" + normalize_text(f.predicate) + "\x1f" + normalize_text(f.object));
  std::sort(keys.begin(), keys.end());
  return keys;
}

struct CheckOutcome {
  Evidence evidence;
  std::vector<Syndrome> syndromes;
  Decoder::Batch batch;
  std::exception_ptr error;
};

}  // namespace

void PipelineConfig::validate() const {
  if (max_sentences < 1) throw std::invalid_argument("max_sentences must be >= 1");
  if (parallel_checks < 1) throw std::invalid_argument("parallel_checks must be >= 1");
  if (max_group_size < 0) throw std::invalid_argument("max_group_size must be >= 0");
  if (top_k < 1) throw std::invalid_argument("top_k must be >= 1");
  if (context_char_cap < 1) throw std::invalid_argument("context_char_cap must be >= 1");
}

int PipelineConfig::group_size() const {
  if (max_group_size > 0) return max_group_size;
  return density == Density::High ? 1 : 0;
}

Decoder::Decoder(SemanticOps& ops, Retriever& retriever, PipelineConfig cfg, std::vector<Dependency> dependencies,
                 TraceLog* trace)
    : ops_(&ops), retriever_(&retriever), cfg_(cfg), dependencies_(std::move(dependencies)), trace_(trace) {
  cfg_.validate();
}

void Decoder::commit(Batch& batch) {
  for (const auto& u : batch.usage) ledger_.add(u);
  retrieval_calls_ += batch.retrievals;
  for (auto& w : batch.warnings) warnings_.push_back(std::move(w));
  if (trace_) trace_->append_all(std::move(batch.events));
  batch = Batch{};
}

Retrieval Decoder::retrieve(const std::string& query, Phase phase, Batch& batch) {
  Retriever& r = cfg_.rag_enabled ? *retriever_ : empty_;
  auto result = r.retrieve(query, cfg_.top_k);
  truncate_documents(result.documents, cfg_.context_char_cap);
  if (result.documents.size() > static_cast<std::size_t>(cfg_.top_k)) result.documents.resize(cfg_.top_k);
  ++batch.retrievals;
  std::string note = "digest=" + digest(query) + "; documents=" + std::to_string(result.documents.size());
  for (const auto& w : result.warnings) {
    note += "; warning: " + w;
    batch.warnings.push_back(w);
  }
  note_event(batch, std::string(to_string(phase)), "retrieve", note);
  return result;
}

AlignmentResult Decoder::phase1_align(const std::string& query) {
  if (query.empty()) throw std::invalid_argument("query must be non-empty");
  Batch batch;
  AlignmentResult out;
  out.initial_text = record(batch, ops_->generate_answer(query, {}), Phase::Alignment, "generate");

  if (!cfg_.firewall_enabled) {
    commit(batch);
    return out;
  }
  auto docs = retrieve(query, Phase::Alignment, batch).documents;
  auto t_model = record(batch, ops_->extract_topic(out.initial_text), Phase::Alignment, "topic");
  std::optional<TopicEntity> t_rag;
  if (!docs.empty()) {
    std::string context;
    for (const auto& d : docs) context += (context.empty() ? "" : "\n") + d.content;
    t_rag = record(batch, ops_->extract_topic(context), Phase::Alignment, "topic");
  }
  if (!t_model || !t_rag) {
    warn(batch, Phase::Alignment,
         std::string("firewall skipped: no topic entity in the ") + (!t_model ? "initial answer" : "retrieved context"));
    commit(batch);
    return out;
  }
  bool consistent = record(batch, ops_->judge_consistency(*t_model, *t_rag), Phase::Alignment, "judge");
  if (!consistent) {
    out.initial_text = record(batch, ops_->generate_answer(query, docs), Phase::Alignment, "regenerate");
    out.hard_reset_applied = true;
    note_event(batch, "alignment", "hard_reset", "model topic '" + t_model->name + "' vs retrieved topic '" + t_rag->name + "'");
  }
  commit(batch);
  return out;
}

DetectionResult Decoder::phase2_detect(const std::string& initial_text) {
  DetectionResult out;
  Batch batch;
  out.sentences = split_sentences(initial_text);
  if (static_cast<int>(out.sentences.size()) > cfg_.max_sentences) {
    warn(batch, Phase::Detection,
         "response truncated from " + std::to_string(out.sentences.size()) + " to " +
             std::to_string(cfg_.max_sentences) + " sentences");
    out.sentences.resize(static_cast<std::size_t>(cfg_.max_sentences));
  }

  for (auto& s : out.sentences) {
    auto facts = record(batch, ops_->decompose_facts(s), Phase::Detection, "decompose", s.index);
    for (std::size_t n = 0; n < facts.size(); ++n) {
      facts[n].sentence_index = s.index;
      facts[n].fact_index = static_cast<int>(n) + 1;
      if (facts[n].surface_text.empty()) facts[n].surface_text = render_clause(to_triple(facts[n]));
      note_event(batch, "detection", "fact", triple_note(facts[n]), s.index, facts[n].fact_index);
    }
    s.facts = std::move(facts);
  }

  QueryGenerator gen_q = [&](const std::vector<AtomicFact>& group) {
    return record(batch, ops_->generate_query(group), Phase::Detection, "genq", group.front().sentence_index);
  };
  out.graph = build_grouped(out.sentences, cfg_.group_size(), gen_q);
  for (const auto& rec : adjacency_records(out.graph)) note_event(batch, "detection", "check_node", rec.dump());
  commit(batch);

  std::map<FactRef, const AtomicFact*> by_ref;
  for (const auto& s : out.sentences)
    for (const auto& f : s.facts) by_ref[f.ref()] = &f;

  const auto& checks = out.graph.check_nodes;
  std::vector<CheckOutcome> results(checks.size());
  auto evaluate = [&](std::size_t c) {
    auto& res = results[c];
    try {
      const auto& node = checks[c];
      auto docs = retrieve(node.query, Phase::Detection, res.batch).documents;
      if (docs.empty()) {
        res.evidence.query = node.query;
      } else {
        res.evidence = record(res.batch, ops_->summarize_evidence(docs, node.query), Phase::Detection, "summarize",
                              node.sentence_index);
      }
      res.evidence.id = "E" + node.id.substr(1);
      for (const auto& ref : node.facts) {
        const auto& fact = *by_ref.at(ref);
        Syndrome s{Verdict::NF, ref, res.evidence.id};
        if (!res.evidence.source_documents.empty()) {
          s = record(res.batch, ops_->verify_fact(fact, res.evidence), Phase::Detection, "verify", ref.k, ref.i);
          s.fact_ref = ref;
          s.evidence_ref = res.evidence.id;
        }
        res.syndromes.push_back(s);
        note_event(res.batch, "detection", "syndrome", node.id, ref.k, ref.i, s.verdict);
      }
    } catch (...) {
      res.error = std::current_exception();
    }
  };

  const int n_checks = static_cast<int>(checks.size());
  if (cfg_.parallel_checks > 1 && n_checks > 1) {
#pragma omp parallel for schedule(dynamic, 1) num_threads(cfg_.parallel_checks)
    for (int c = 0; c < n_checks; ++c) evaluate(static_cast<std::size_t>(c));
  } else {
    for (int c = 0; c < n_checks; ++c) evaluate(static_cast<std::size_t>(c));
  }

  std::map<FactRef, Syndrome> verdicts;
  for (std::size_t c = 0; c < results.size(); ++c) {
    auto& res = results[c];
    if (res.error) std::rethrow_exception(res.error);
    commit(res.batch);
    for (const auto& s : res.syndromes) {
      verdicts[s.fact_ref] = s;
      if (s.verdict == Verdict::CON) out.buffer.entries.push_back({*by_ref.at(s.fact_ref), res.evidence, checks[c].id});
      if (s.verdict == Verdict::NF) out.deletion_set.push_back(s.fact_ref);
    }
    out.evidence.push_back(std::move(res.evidence));
  }
  for (const auto& s : out.sentences)
    for (const auto& f : s.facts) out.syndromes.push_back(verdicts.at(f.ref()));
  std::sort(out.deletion_set.begin(), out.deletion_set.end());
  return out;
}

std::vector<AtomicFact> Decoder::redecompose(const std::string& text, Batch& batch) {
  std::vector<AtomicFact> facts;
  for (const auto& s : split_sentences(text)) {
    auto part = record(batch, ops_->decompose_facts(s), Phase::Polish, "decompose", s.index);
    for (auto& f : part) {
      f.sentence_index = s.index;
      facts.push_back(std::move(f));
    }
  }
  return facts;
}

CorrectionResult Decoder::phase3_correct(const std::string& query, const DetectionResult& detection) {
  CorrectionResult out;
  Batch batch;
  std::map<FactRef, Syndrome> verdicts;
  for (const auto& s : detection.syndromes) verdicts[s.fact_ref] = s;
  std::map<FactRef, const AtomicFact*> by_ref;
  for (const auto& s : detection.sentences)
    for (const auto& f : s.facts) by_ref[f.ref()] = &f;

  auto& entries = out.correction_map.entries;
  for (std::size_t c = 0; c < detection.graph.check_nodes.size(); ++c) {
    const auto& node = detection.graph.check_nodes[c];
    CorrectionRequest req;
    req.evidence = detection.evidence[c];
    for (const auto& ref : node.facts) {
      req.group_facts.push_back(*by_ref.at(ref));
      req.group_syndromes.push_back(verdicts.at(ref));
    }
    for (const auto& e : detection.buffer.entries)
      if (e.check_id == node.id) req.contradicted.emplace_back(e.fact, verdicts.at(e.fact.ref()));
    if (req.contradicted.empty()) continue;
    for (const auto& d : dependencies_)
      if (std::any_of(req.group_facts.begin(), req.group_facts.end(),
                      [&](const AtomicFact& f) { return normalize_text(f.subject) == normalize_text(d.subject); }))
        req.dependencies.push_back(d);

    auto fixed = record(batch, ops_->correct_group(req), Phase::Correction, "correct_group", node.sentence_index);
    for (auto& e : fixed) {
      auto ref = e.original().ref();
      bool in_group = std::find(node.facts.begin(), node.facts.end(), ref) != node.facts.end();
      if (!in_group || entries.count(ref)) {
        warn(batch, Phase::Correction, "ignored correction for " + to_string(ref) + " outside its group or repeated");
        continue;
      }
      entries.emplace(ref, std::move(e));
    }
    for (const auto& [fact, syndrome] : req.contradicted)
      if (!entries.count(fact.ref())) {
        warn(batch, Phase::Correction, "no correction returned for " + to_string(fact.ref()) + "; pruned");
        entries.emplace(fact.ref(), CorrectionEntry::pruned(fact));
      }
  }
  for (const auto& ref : detection.deletion_set)
    if (!entries.count(ref)) entries.emplace(ref, CorrectionEntry::pruned(*by_ref.at(ref)));

  for (const auto& [ref, e] : entries) {
    std::string note = std::string(to_string(e.outcome()));
    if (e.replacement()) note += "; replacement=" + triple_note(*e.replacement());
    if (e.propagated_from()) note += "; propagated_from=" + to_string(*e.propagated_from());
    note_event(batch, "correction", "correction", note, ref.k, ref.i, e.cause());
  }
  commit(batch);

  // Sequential reconstruction: each rewrite sees only F'_k and the emitted history.
  std::vector<std::string> history;
  for (const auto& s : detection.sentences) {
    if (s.facts.empty()) {
      history.push_back(s.text);
      out.draft_sentences.push_back(s.text);
      continue;
    }
    std::vector<AtomicFact> kept;
    for (const auto& f : s.facts) {
      const auto* e = out.correction_map.find(f.ref());
      if (!e) {
        kept.push_back(f);
      } else if (e->outcome() == Outcome::Corrected) {
        kept.push_back(*e->replacement());
      } else if (e->outcome() == Outcome::Unchanged) {
        kept.push_back(f);
      }
    }
    if (kept.empty()) continue;
    auto sentence = record(batch, ops_->rewrite_sentence(kept, history), Phase::Reconstruction, "rewrite", s.index);
    commit(batch);
    history.push_back(sentence);
    out.draft_sentences.push_back(std::move(sentence));
  }

  auto draft = join(out.draft_sentences, " ");
  if (draft.empty()) {
    bool had_text = !detection.sentences.empty();
    out.final_text = had_text ? std::string(kAbstention) : std::string{};
    if (had_text) note_event(batch, "polish", "abstain", "every fact was pruned");
    commit(batch);
    return out;
  }

  auto polished = record(batch, ops_->polish(query, draft), Phase::Polish, "polish");
  auto draft_facts = redecompose(draft, batch);
  auto polished_facts = redecompose(polished, batch);
  if (canonical_multiset(draft_facts) == canonical_multiset(polished_facts)) {
    out.final_text = polished;
    out.final_facts = std::move(polished_facts);
  } else {
    warn(batch, Phase::Polish, "polish changed the fact multiset; keeping the unpolished draft");
    out.final_text = draft;
    out.final_facts = std::move(draft_facts);
  }
  commit(batch);
  return out;
}

PipelineResponse Decoder::run(const std::string& query, const RunLabel& label) {
  ledger_ = {};
  retrieval_calls_ = 0;
  warnings_.clear();

  Batch batch;
  nlohmann::json header{{"run_id", label.run_id},
                        {"method", label.method},
                        {"density", to_string(cfg_.density)},
                        {"group_size", cfg_.group_size()},
                        {"firewall", cfg_.firewall_enabled},
                        {"rag", cfg_.rag_enabled},
                        {"query", query}};
  note_event(batch, "meta", "run", header.dump());
  commit(batch);

  PipelineResponse r;
  r.query = query;
  auto aligned = phase1_align(query);
  r.initial_text = aligned.initial_text;
  r.hard_reset_applied = aligned.hard_reset_applied;

  auto detection = phase2_detect(r.initial_text);
  auto corrected = phase3_correct(query, detection);

  r.sentences = std::move(detection.sentences);
  r.syndromes = std::move(detection.syndromes);
  r.correction_map = std::move(corrected.correction_map);
  r.draft_sentences = std::move(corrected.draft_sentences);
  r.final_text = std::move(corrected.final_text);
  r.final_facts = std::move(corrected.final_facts);

  for (const auto& f : r.final_facts) note_event(batch, "meta", "final_fact", triple_note(f), f.sentence_index, f.fact_index);
  commit(batch);
  r.token_ledger = ledger_;
  r.retrieval_calls = retrieval_calls_;
  return r;
}

}  // namespace serc
