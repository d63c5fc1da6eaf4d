#pragma once

#include <memory>
#include <semaphore>
#include <stdexcept>
#include <string>
#include <vector>

#include "serc/backend.hpp"

namespace serc {

struct RemoteConfig {
  std::string chat_base_url = "http://localhost:8000/v1";
  std::string model_name = "meta-llama/Meta-Llama-3-8B-Instruct";
  double temperature_main = 0.0;
  double temperature_polish = 0.1;
  int max_new_tokens = 512;
  std::string retriever_base_url = "https://api.tavily.com";
  int retriever_top_k = 8;
  std::size_t context_char_cap = 20000;
  double request_timeout = 60.0;  // seconds
  int max_retries = 3;

  int retry_backoff_ms = 500;  // doubled after each failed attempt
  int max_in_flight = 4;
  std::size_t summary_char_cap = 4000;
  std::string search_depth = "advanced";
  std::string chat_api_key_env = "SERC_CHAT_API_KEY";
  std::string search_api_key_env = "SERC_SEARCH_API_KEY";

  void validate() const;
};

/// Raised when an endpoint stays unreachable after every retry.
class RemoteError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ChatReply {
  std::string content;
  TokenUsage usage;  // from the server's usage block when present, else ceil(chars/4)
};

/// Minimal OpenAI-compatible chat-completion client. Thread-safe; concurrent
/// requests are capped at `max_in_flight`.
class ChatClient {
 public:
  ChatClient(RemoteConfig cfg, std::string api_key);
  ~ChatClient();

  ChatReply complete(const std::string& system, const std::string& user, double temperature);

  /// Failed attempts seen so far (for diagnostics and tests).
  int failed_attempts() const;

 private:
  struct State;
  RemoteConfig cfg_;
  std::string api_key_;
  std::unique_ptr<State> state_;
};

/// Semantic operations over a chat endpoint. Output parsing is strict first,
/// then case-insensitive, then the fail-safe value (NF / false / drop).
class RemoteOps final : public SemanticOps {
 public:
  RemoteOps(RemoteConfig cfg, std::string api_key);

  OpResult<std::string> generate_answer(const std::string& query, const std::vector<Document>& context) override;
  OpResult<std::optional<TopicEntity>> extract_topic(const std::string& text) override;
  OpResult<bool> judge_consistency(const TopicEntity& a, const TopicEntity& b) override;
  OpResult<std::vector<AtomicFact>> decompose_facts(const SentenceUnit& sentence) override;
  OpResult<std::string> generate_query(const std::vector<AtomicFact>& facts) override;
  OpResult<Evidence> summarize_evidence(const std::vector<Document>& documents, const std::string& query) override;
  OpResult<Syndrome> verify_fact(const AtomicFact& fact, const Evidence& evidence) override;
  OpResult<std::vector<CorrectionEntry>> correct_group(const CorrectionRequest& request) override;
  OpResult<std::string> rewrite_sentence(const std::vector<AtomicFact>& corrected_facts,
                                         const std::vector<std::string>& history) override;
  OpResult<std::string> polish(const std::string& query, const std::string& draft) override;

 private:
  RemoteConfig cfg_;
  ChatClient chat_;
};

/// Web-search retriever: POST <base>/search {query, top_k, search_depth}
/// -> {results: [{title, url, content}]}. Final transport failure yields an
/// empty result with a warning.
class HttpRetriever final : public Retriever {
 public:
  HttpRetriever(RemoteConfig cfg, std::string api_key);
  ~HttpRetriever();

  Retrieval retrieve(const std::string& query, int top_k) override;

 private:
  struct State;
  RemoteConfig cfg_;
  std::string api_key_;
  std::unique_ptr<State> state_;
};

/// Splits "scheme://host[:port][/path]" into the origin and the path prefix.
std::pair<std::string, std::string> split_base_url(const std::string& url);

}  // namespace serc
