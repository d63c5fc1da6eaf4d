#include "serc/experiment.hpp"

#include <exception>

#include <omp.h>

#include "serc/oracle_backend.hpp"

namespace serc {

namespace {

constexpr double kRates[] = {0.0, 0.1, 0.2, 0.4};

std::vector<std::string> eligible_entities(const KnowledgeBase& kb, std::size_t needed) {
  std::vector<std::string> out;
  for (const auto& e : kb.entities())
    if (kb.attributes(e).size() >= needed) out.push_back(e);
  return out;
}

std::vector<AtomicFact> all_facts(const std::vector<SentenceUnit>& sentences) {
  std::vector<AtomicFact> out;
  for (const auto& s : sentences) out.insert(out.end(), s.facts.begin(), s.facts.end());
  return out;
}

}  // namespace

std::string bio_query(const std::string& entity) { return "Tell me a bio of " + entity + "."; }

NoiseConfig episode_noise(const EpisodeConfig& cfg, int index, std::uint64_t episode_seed) {
  NoiseConfig n = cfg.noise;
  if (cfg.mixed_noise) {
    n.p_corrupt = kRates[index % 4];
    n.p_fabricate = kRates[(index / 4) % 4];
  }
  n.seed = episode_seed ^ 0x9E3779B97F4A7C15ULL;
  return n;
}

Episode run_episode(const KnowledgeBase& kb, const EpisodeConfig& cfg, std::uint64_t base_seed, int index) {
  Episode ep;
  ep.index = index;
  ep.seed = base_seed + static_cast<std::uint64_t>(index);
  auto needed = static_cast<std::size_t>(cfg.n_sentences) * static_cast<std::size_t>(cfg.facts_per_sentence);
  auto pool = eligible_entities(kb, needed);
  if (pool.empty())
    throw CapacityError("no entity has the " + std::to_string(needed) + " attributes an episode needs");
  DrawStream draws(ep.seed);
  ep.entity = pool[draws.pick(pool.size())];
  ep.query = bio_query(ep.entity);
  ep.noise = episode_noise(cfg, index, ep.seed);

  auto ideal = generate_codeword(kb, ep.entity, cfg.n_sentences, cfg.facts_per_sentence, ep.seed);
  ep.observation = inject_noise(ideal, ep.noise, kb);

  OracleOps ops(kb, ep.observation);
  KbRetriever retriever(kb, cfg.pipeline.context_char_cap);
  TraceLog trace;
  Decoder decoder(ops, retriever, cfg.pipeline, kb.dependencies(), &trace);
  RunLabel label{"ep" + std::to_string(index), cfg.method};
  ep.response = decoder.run(ep.query, label);
  ep.trace = trace.jsonl();
  ep.row = make_run_row(label.run_id, cfg.method, std::string(to_string(cfg.pipeline.density)),
                        all_facts(ep.response.sentences), ep.response.final_facts, kb, ep.response.token_ledger.total(),
                        ep.response.retrieval_calls);
  return ep;
}

std::vector<Episode> simulate_serial(const KnowledgeBase& kb, const EpisodeConfig& cfg, std::uint64_t base_seed,
                                     int episodes) {
  std::vector<Episode> out;
  out.reserve(static_cast<std::size_t>(std::max(episodes, 0)));
  for (int i = 0; i < episodes; ++i) out.push_back(run_episode(kb, cfg, base_seed, i));
  return out;
}

std::vector<Episode> simulate_parallel(const KnowledgeBase& kb, const EpisodeConfig& cfg, std::uint64_t base_seed,
                                       int episodes, int threads) {
  if (episodes <= 0) return {};
  std::vector<Episode> out(static_cast<std::size_t>(episodes));
  std::vector<std::exception_ptr> errors(out.size());
  int n_threads = threads > 0 ? threads : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic, 1) num_threads(n_threads)
  for (int i = 0; i < episodes; ++i) {
    try {
      out[static_cast<std::size_t>(i)] = run_episode(kb, cfg, base_seed, i);
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

}  // namespace serc
