#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "serc/channel.hpp"
#include "serc/knowledge_base.hpp"

namespace serc::test {

inline std::string source_path(const std::string& rel) { return std::string(SERC_SOURCE_DIR) + "/" + rel; }

inline const KnowledgeBase& bio_kb() {
  static const KnowledgeBase kb = KnowledgeBase::load(source_path("data/bio.kb"));
  return kb;
}

inline KnowledgeBase fixture_kb(const std::string& name) { return KnowledgeBase::load(source_path("fixtures/" + name + ".kb")); }

inline NoisyObservation fixture_obs(const std::string& name) {
  return load_observation(source_path("fixtures/" + name + ".noisy"));
}

inline std::vector<AtomicFact> facts_of(const std::vector<SentenceUnit>& sentences) {
  std::vector<AtomicFact> out;
  for (const auto& s : sentences) out.insert(out.end(), s.facts.begin(), s.facts.end());
  return out;
}

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& tag) {
  auto p = std::filesystem::temp_directory_path() / ("serc-test-" + tag);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace serc::test
