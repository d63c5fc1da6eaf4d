#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "serc/fact_model.hpp"
#include "serc/knowledge_base.hpp"

namespace serc {

struct IdealResponse {
  std::string entity;
  std::vector<SentenceUnit> sentences;
};

struct NoiseConfig {
  double p_entity_swap = 0.0;
  double p_corrupt = 0.0;
  double p_fabricate = 0.0;
  std::uint64_t seed = 0;

  /// Throws std::invalid_argument when a probability lies outside [0, 1].
  void validate() const;
};

enum class ErrorKind { Clean, Corrupted, Fabricated };

std::string_view to_string(ErrorKind k);

struct ErrorLabel {
  ErrorKind kind = ErrorKind::Clean;
  std::optional<Triple> original;  // set for Corrupted
};

struct NoisyObservation {
  std::string entity;  // codeword entity the response was meant to describe
  std::vector<SentenceUnit> response;
  std::map<FactRef, ErrorLabel> error_labels;
  std::optional<std::string> entity_swapped;

  std::string text() const;
};

class CapacityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Seeded stream shared by the generator and the noise injector. Draws are
/// defined on the raw 64-bit mt19937_64 output so replays are portable.
class DrawStream {
 public:
  explicit DrawStream(std::uint64_t seed) : engine_(seed) {}
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  std::size_t pick(std::size_t n) { return static_cast<std::size_t>(engine_() % n); }

 private:
  std::mt19937_64 engine_;
};

/// Picks n_sentences * facts_per_sentence attributes of `entity` (seeded
/// Fisher-Yates), keeps them in KB order, and groups them into sentences.
IdealResponse generate_codeword(const KnowledgeBase& kb, const std::string& entity, int n_sentences,
                                int facts_per_sentence, std::uint64_t seed);

/// Applies entity drift, object corruption and fabrication to a codeword.
///
/// Draw order (the replay contract): one uniform for the swap, plus one pick
/// of the decoy when it fires; then per sentence, per original fact, one
/// uniform for corruption plus one pick when it fires and a candidate exists;
/// after the sentence's facts, one uniform for fabrication plus a predicate
/// pick and a value pick when it fires and candidates exist.
///
/// A swap rebinds every sentence after the opening one to a different KB
/// entity, keeping the attributes. It needs at least two sentences and
/// another entity in the KB. Labels are relative to the codeword entity.
NoisyObservation inject_noise(const IdealResponse& ideal, const NoiseConfig& cfg, const KnowledgeBase& kb);

/// SUP iff the triple is in the KB; CON iff the KB has (subject, predicate)
/// with another object; NF otherwise.
Verdict kb_verify(const AtomicFact& fact, const KnowledgeBase& kb);

/// Rebinds every fact to `entity` and re-renders the sentences.
std::vector<SentenceUnit> realign_subject(const std::vector<SentenceUnit>& sentences,
                                          const std::string& entity);

/// Canonical line-record serialization (header, one sentence_unit per line, one error_label per line).
void write_observation(std::ostream& out, const NoisyObservation& obs);
NoisyObservation read_observation(std::istream& in);
NoisyObservation load_observation(const std::string& path);
void save_observation(const std::string& path, const NoisyObservation& obs);

}  // namespace serc
