#include "serc/remote_backend.hpp"

#include <httplib.h>

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <iostream>
#include <map>
#include <set>
#include <thread>

#include "serc/prompts.hpp"
#include "serc/surface.hpp"

namespace serc {

namespace {

using Json = nlohmann::json;

bool debug_enabled() {
  static const bool on = std::getenv("SERC_DEBUG") != nullptr;
  return on;
}

struct Limiter {
  explicit Limiter(int n) : slots(n) {}
  std::counting_semaphore<1024> slots;
  std::atomic<int> failures{0};
};

struct PostOutcome {
  bool ok = false;
  int status = 0;
  std::string body;
  std::string error;
};

bool retryable(int status) { return status == 408 || status == 429 || status >= 500; }

// POST with exponential backoff. Transport errors and 408/429/5xx are retried.
PostOutcome post_json(const RemoteConfig& cfg, Limiter& limiter, const std::string& base_url,
                      const std::string& endpoint, const std::string& body, const std::string& api_key) {
  auto [origin, prefix] = split_base_url(base_url);
  PostOutcome out;
  auto timeout = std::chrono::duration<double>(cfg.request_timeout);
  auto micros = std::chrono::duration_cast<std::chrono::microseconds>(timeout);
  for (int attempt = 0; attempt <= cfg.max_retries; ++attempt) {
    if (attempt > 0) {
      auto wait = std::chrono::milliseconds(static_cast<long long>(cfg.retry_backoff_ms) << (attempt - 1));
      std::this_thread::sleep_for(wait);
    }
    httplib::Client client(origin);
    client.set_connection_timeout(micros);
    client.set_read_timeout(micros);
    client.set_write_timeout(micros);
    if (!api_key.empty()) client.set_bearer_token_auth(api_key);
    if (debug_enabled()) std::cerr << "[serc] POST " << origin << prefix << endpoint << " " << body << "\n";

    limiter.slots.acquire();
    auto res = client.Post(prefix + endpoint, body, "application/json");
    limiter.slots.release();

    if (!res) {
      out.error = "transport error: " + httplib::to_string(res.error());
      limiter.failures.fetch_add(1);
      continue;
    }
    out.status = res->status;
    out.body = res->body;
    if (debug_enabled()) std::cerr << "[serc] <- " << res->status << " " << res->body << "\n";
    if (res->status >= 200 && res->status < 300) {
      out.ok = true;
      return out;
    }
    limiter.failures.fetch_add(1);
    out.error = "HTTP " + std::to_string(res->status);
    if (!retryable(res->status)) return out;
  }
  return out;
}

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

template <class T>
OpResult<T> result_of(T value, const prompts::Prompt& p, const ChatReply& reply) {
  OpResult<T> r;
  r.value = std::move(value);
  r.prompt = p.text();
  r.usage = reply.usage;
  return r;
}

}  // namespace

void RemoteConfig::validate() const {
  if (chat_base_url.empty()) throw std::invalid_argument("chat_base_url must be set");
  if (max_new_tokens < 1) throw std::invalid_argument("max_new_tokens must be >= 1");
  if (retriever_top_k < 1) throw std::invalid_argument("retriever_top_k must be >= 1");
  if (context_char_cap < 1) throw std::invalid_argument("context_char_cap must be >= 1");
  if (request_timeout <= 0) throw std::invalid_argument("request_timeout must be > 0");
  if (max_retries < 0) throw std::invalid_argument("max_retries must be >= 0");
  if (retry_backoff_ms < 0) throw std::invalid_argument("retry_backoff_ms must be >= 0");
  if (max_in_flight < 1 || max_in_flight > 1024) throw std::invalid_argument("max_in_flight must be in [1, 1024]");
  if (temperature_main < 0 || temperature_polish < 0) throw std::invalid_argument("temperatures must be >= 0");
}

std::pair<std::string, std::string> split_base_url(const std::string& url) {
  auto scheme = url.find("://");
  if (scheme == std::string::npos) throw std::invalid_argument("base url needs a scheme: '" + url + "'");
  auto slash = url.find('/', scheme + 3);
  if (slash == std::string::npos) return {url, ""};
  auto path = url.substr(slash);
  while (!path.empty() && path.back() == '/') path.pop_back();
  return {url.substr(0, slash), path};
}

struct ChatClient::State {
  explicit State(int n) : limiter(n) {}
  Limiter limiter;
};

ChatClient::ChatClient(RemoteConfig cfg, std::string api_key)
    : cfg_(std::move(cfg)), api_key_(std::move(api_key)), state_(std::make_unique<State>(cfg_.max_in_flight)) {
  cfg_.validate();
}

ChatClient::~ChatClient() = default;

int ChatClient::failed_attempts() const { return state_->limiter.failures.load(); }

ChatReply ChatClient::complete(const std::string& system, const std::string& user, double temperature) {
  Json body{{"model", cfg_.model_name},
            {"messages", Json::array({{{"role", "system"}, {"content", system}}, {{"role", "user"}, {"content", user}}})},
            {"temperature", temperature},
            {"max_tokens", cfg_.max_new_tokens}};
  auto res = post_json(cfg_, state_->limiter, cfg_.chat_base_url, "/chat/completions", body.dump(), api_key_);
  if (!res.ok)
    throw RemoteError("chat endpoint " + cfg_.chat_base_url + " failed after " + std::to_string(cfg_.max_retries + 1) +
                      " attempt(s): " + res.error);
  ChatReply reply;
  try {
    auto j = Json::parse(res.body);
    const auto& content = j.at("choices").at(0).at("message").at("content");
    reply.content = content.is_string() ? content.get<std::string>() : std::string{};
    if (j.contains("usage") && j["usage"].is_object()) {
      reply.usage.prompt_tokens = j["usage"].value("prompt_tokens", std::int64_t{0});
      reply.usage.completion_tokens = j["usage"].value("completion_tokens", std::int64_t{0});
    } else {
      reply.usage.prompt_tokens = estimate_tokens(system + "\n\n" + user);
      reply.usage.completion_tokens = estimate_tokens(reply.content);
    }
  } catch (const Json::exception& e) {
    throw RemoteError("chat endpoint returned an unreadable body: " + std::string(e.what()));
  }
  return reply;
}

RemoteOps::RemoteOps(RemoteConfig cfg, std::string api_key) : cfg_(cfg), chat_(std::move(cfg), std::move(api_key)) {}

OpResult<std::string> RemoteOps::generate_answer(const std::string& query, const std::vector<Document>& context) {
  auto docs = context;
  truncate_documents(docs, cfg_.context_char_cap);
  auto p = prompts::answer(query, docs);
  auto reply = chat_.complete(p.system, p.user, cfg_.temperature_main);
  return result_of(trim(reply.content), p, reply);
}

OpResult<std::optional<TopicEntity>> RemoteOps::extract_topic(const std::string& text) {
  auto p = prompts::topic(text);
  auto reply = chat_.complete(p.system, p.user, cfg_.temperature_main);
  auto topic = prompts::parse_topic(reply.content);
  auto r = result_of(topic, p, reply);
  if (!topic) r.warnings.push_back("topic extractor returned no entity");
  return r;
}

OpResult<bool> RemoteOps::judge_consistency(const TopicEntity& a, const TopicEntity& b) {
  auto p = prompts::judge(a, b);
  auto reply = chat_.complete(p.system, p.user, cfg_.temperature_main);
  auto parsed = prompts::parse_yes_no(reply.content);
  auto r = result_of(parsed.value_or(false), p, reply);
  if (!parsed) r.warnings.push_back("unparseable judge output treated as NO: '" + prompts::first_line(reply.content) + "'");
  return r;
}

OpResult<std::vector<AtomicFact>> RemoteOps::decompose_facts(const SentenceUnit& sentence) {
  auto p = prompts::decompose(sentence);
  auto reply = chat_.complete(p.system, p.user, cfg_.temperature_main);
  auto lines = prompts::parse_triple_lines(reply.content);
  std::vector<AtomicFact> facts;
  for (std::size_t i = 0; i < lines.triples.size(); ++i)
    facts.push_back(make_fact(lines.triples[i], sentence.index, static_cast<int>(i) + 1));
  auto r = result_of(std::move(facts), p, reply);
  for (const auto& bad : lines.rejected) r.warnings.push_back("dropped unparseable fact line: '" + trim(bad) + "'");
  return r;
}

OpResult<std::string> RemoteOps::generate_query(const std::vector<AtomicFact>& facts) {
  auto p = prompts::query(facts);
  auto reply = chat_.complete(p.system, p.user, cfg_.temperature_main);
  bool capped = false;
  auto q = prompts::cap_query(prompts::first_line(reply.content), prompts::kMaxQueryChars, &capped);
  if (q.empty() && !facts.empty()) q = facts.front().subject + " " + predicate_phrase(facts.front().predicate);
  auto r = result_of(q, p, reply);
  if (capped) r.warnings.push_back("query capped at " + std::to_string(prompts::kMaxQueryChars) + " characters");
  return r;
}

OpResult<Evidence> RemoteOps::summarize_evidence(const std::vector<Document>& documents, const std::string& query) {
  auto docs = documents;
  truncate_documents(docs, cfg_.context_char_cap);
  Evidence ev;
  ev.query = query;
  auto p = prompts::summarize(docs, query);
  if (docs.empty()) {
    OpResult<Evidence> r;
    r.value = ev;
    r.prompt = p.text();
    return r;
  }
  auto reply = chat_.complete(p.system, p.user, cfg_.temperature_main);
  ev.summary_text = truncate_utf8(trim(reply.content), cfg_.summary_char_cap);
  for (const auto& d : docs) ev.source_documents.push_back({d.url, truncate_utf8(d.content, 300)});
  return result_of(ev, p, reply);
}

OpResult<Syndrome> RemoteOps::verify_fact(const AtomicFact& fact, const Evidence& evidence) {
  auto p = prompts::verify(fact, evidence);
  Syndrome s{Verdict::NF, fact.ref(), evidence.id};
  if (evidence.source_documents.empty()) {
    OpResult<Syndrome> r;
    r.value = s;
    r.prompt = p.text();
    return r;
  }
  auto reply = chat_.complete(p.system, p.user, cfg_.temperature_main);
  auto label = prompts::parse_label(reply.content);
  if (label) s.verdict = *label;
  auto r = result_of(s, p, reply);
  if (!label) r.warnings.push_back("unparseable verdict treated as NF: '" + prompts::first_line(reply.content) + "'");
  return r;
}

OpResult<std::vector<CorrectionEntry>> RemoteOps::correct_group(const CorrectionRequest& request) {
  auto p = prompts::correct(request);
  auto reply = chat_.complete(p.system, p.user, cfg_.temperature_main);
  auto parsed = prompts::parse_correction_lines(reply.content);

  std::map<FactRef, const AtomicFact*> group;
  for (const auto& f : request.group_facts) group[f.ref()] = &f;
  std::set<FactRef> con;
  for (const auto& [f, s] : request.contradicted) con.insert(f.ref());

  std::vector<std::string> warnings;
  std::vector<CorrectionEntry> entries;
  std::set<FactRef> done, fixed;
  auto replacement_for = [](const AtomicFact& original, const Triple& t) {
    return make_fact(t, original.sentence_index, original.fact_index);
  };
  for (const auto& line : parsed.lines) {
    if (line.from) continue;
    if (!con.count(line.target) || done.count(line.target)) {
      warnings.push_back("ignored FIX for " + to_string(line.target));
      continue;
    }
    const auto& orig = *group.at(line.target);
    entries.push_back(CorrectionEntry::corrected(orig, replacement_for(orig, line.replacement)));
    done.insert(line.target);
    fixed.insert(line.target);
  }
  for (const auto& line : parsed.lines) {
    if (!line.from) continue;
    if (!group.count(line.target) || done.count(line.target) || !fixed.count(*line.from)) {
      warnings.push_back("ignored PROP for " + to_string(line.target));
      continue;
    }
    const auto& orig = *group.at(line.target);
    entries.push_back(CorrectionEntry::corrected(orig, replacement_for(orig, line.replacement), *line.from));
    done.insert(line.target);
  }
  for (const auto& ref : con)
    if (!done.count(ref)) {
      warnings.push_back("no replacement value for " + to_string(ref) + "; pruned");
      entries.push_back(CorrectionEntry::pruned(*group.at(ref)));
    }
  for (const auto& bad : parsed.rejected) warnings.push_back("dropped unparseable correction line: '" + trim(bad) + "'");
  auto r = result_of(std::move(entries), p, reply);
  r.warnings = std::move(warnings);
  return r;
}

OpResult<std::string> RemoteOps::rewrite_sentence(const std::vector<AtomicFact>& corrected_facts,
                                                  const std::vector<std::string>& history) {
  auto p = prompts::rewrite(corrected_facts, history);
  auto reply = chat_.complete(p.system, p.user, cfg_.temperature_main);
  return result_of(trim(reply.content), p, reply);
}

OpResult<std::string> RemoteOps::polish(const std::string& query, const std::string& draft) {
  auto p = prompts::polish(query, draft);
  auto reply = chat_.complete(p.system, p.user, cfg_.temperature_polish);
  return result_of(trim(reply.content), p, reply);
}

struct HttpRetriever::State {
  explicit State(int n) : limiter(n) {}
  Limiter limiter;
};

HttpRetriever::HttpRetriever(RemoteConfig cfg, std::string api_key)
    : cfg_(std::move(cfg)), api_key_(std::move(api_key)), state_(std::make_unique<State>(cfg_.max_in_flight)) {
  cfg_.validate();
}

HttpRetriever::~HttpRetriever() = default;

Retrieval HttpRetriever::retrieve(const std::string& query, int top_k) {
  Retrieval out;
  if (top_k < 1) return out;
  Json body{{"query", query}, {"top_k", top_k}, {"search_depth", cfg_.search_depth}};
  auto res = post_json(cfg_, state_->limiter, cfg_.retriever_base_url, "/search", body.dump(), api_key_);
  if (!res.ok) {
    out.warnings.push_back("retrieval failed (" + res.error + "); group treated as not found");
    return out;
  }
  try {
    auto j = Json::parse(res.body);
    for (const auto& item : j.at("results")) {
      if (static_cast<int>(out.documents.size()) >= top_k) break;
      Document d;
      d.title = item.value("title", std::string{});
      d.url = item.value("url", std::string{});
      d.content = truncate_utf8(item.value("content", std::string{}), cfg_.context_char_cap);
      out.documents.push_back(std::move(d));
    }
  } catch (const Json::exception& e) {
    out.documents.clear();
    out.warnings.push_back(std::string("unreadable retrieval response; group treated as not found: ") + e.what());
  }
  return out;
}

}  // namespace serc
