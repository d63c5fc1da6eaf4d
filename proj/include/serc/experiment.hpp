#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "serc/channel.hpp"
#include "serc/metrics.hpp"
#include "serc/pipeline.hpp"

namespace serc {

struct EpisodeConfig {
  int n_sentences = 8;
  int facts_per_sentence = 3;
  NoiseConfig noise{0.0, 0.2, 0.1, 0};  // seed is derived per episode
  bool mixed_noise = false;             // cycle corrupt/fabricate rates over {0, 0.1, 0.2, 0.4}
  PipelineConfig pipeline;
  std::string method = "serc";
};

struct Episode {
  int index = 0;
  std::uint64_t seed = 0;
  std::string entity;
  std::string query;
  NoiseConfig noise;
  NoisyObservation observation;
  PipelineResponse response;
  RunRow row;
  std::string trace;  // JSONL
};

std::string bio_query(const std::string& entity);

/// Noise settings of episode `index`; the injector seed is derived from `episode_seed`.
NoiseConfig episode_noise(const EpisodeConfig& cfg, int index, std::uint64_t episode_seed);

/// Draws an entity, generates its codeword, corrupts it and decodes it with
/// the oracle backend. Episode seeds are base_seed + index.
Episode run_episode(const KnowledgeBase& kb, const EpisodeConfig& cfg, std::uint64_t base_seed, int index);

/// Serial reference.
std::vector<Episode> simulate_serial(const KnowledgeBase& kb, const EpisodeConfig& cfg, std::uint64_t base_seed,
                                     int episodes);
/// Episode-parallel version; output is identical to the serial reference.
std::vector<Episode> simulate_parallel(const KnowledgeBase& kb, const EpisodeConfig& cfg, std::uint64_t base_seed,
                                       int episodes, int threads = 0);

}  // namespace serc
