#include <doctest.h>

#include <atomic>

#include "serc/pipeline.hpp"
#include "serc/remote_backend.hpp"
#include "stub_server.hpp"

using namespace serc;
using test::StubReply;
using test::StubServer;

namespace {

StubServer::SearchScript one_doc(std::string content) {
  return [content](const nlohmann::json&) { return StubReply{200, test::search_results({content})}; };
}

StubServer::SearchScript always(int status) {
  return [status](const nlohmann::json&) { return StubReply{status, ""}; };
}

}  // namespace

TEST_SUITE("remote-backend") {
  TEST_CASE("wire settings: temperatures, max tokens, model and key") {
    StubServer stub(test::ana_lima_script(), one_doc("Ana Lima was born in 1990."));
    RemoteOps ops(stub.config(), "secret");
    HttpRetriever ret(stub.config(), "search-key");
    Decoder dec(ops, ret, PipelineConfig{});
    auto r = dec.run("Who is Ana Lima?");
    CHECK(r.final_text == "Ana Lima was born in 1990.");

    auto log = stub.chat_log();
    REQUIRE_FALSE(log.empty());
    int polish = 0;
    for (const auto& c : log) {
      CAPTURE(c.kind);
      CHECK(c.kind != "unknown");
      CHECK(c.max_tokens == 512);
      CHECK(c.model == "meta-llama/Meta-Llama-3-8B-Instruct");
      CHECK(c.authorization == "Bearer secret");
      if (c.kind == "polish") {
        ++polish;
        CHECK(c.temperature == doctest::Approx(0.1));
      } else {
        CHECK(c.temperature == 0.0);
      }
    }
    CHECK(polish == 1);
    // Server-reported usage is what the ledger counts.
    CHECK(r.token_ledger.total() == static_cast<std::int64_t>(log.size()) * 110);
  }

  TEST_CASE("search requests carry top_k 8 and the search depth") {
    StubServer stub(test::ana_lima_script(), one_doc("Ana Lima was born in 1990."));
    HttpRetriever ret(stub.config(), "");
    ret.retrieve("Ana Lima birth year", 8);
    auto s = stub.search_log();
    REQUIRE(s.size() == 1);
    CHECK(s[0]["query"] == "Ana Lima birth year");
    CHECK(s[0]["top_k"] == 8);
    CHECK(s[0]["search_depth"] == "advanced");
  }

  TEST_CASE("documents are cut to 20000 characters and to top_k") {
    std::string big(25000, 'a');
    StubServer stub(test::ana_lima_script(),
                    [&](const nlohmann::json&) { return StubReply{200, test::search_results({big, big, "c"})}; });
    HttpRetriever ret(stub.config(), "");
    auto r = ret.retrieve("q", 2);
    REQUIRE(r.documents.size() == 2);
    CHECK(r.documents[0].content.size() == 20000);
    CHECK(r.documents[0].url == "https://example.org/1");

    // The summarize prompt that reaches the model never holds more than the cap per document.
    RemoteOps ops(stub.config(), "");
    std::vector<Document> docs{{"t", "u", big}};
    ops.summarize_evidence(docs, "q");
    auto log = stub.chat_log();
    REQUIRE(log.size() == 1);
    CHECK(log[0].user.find(std::string(20000, 'a')) != std::string::npos);
    CHECK(log[0].user.find(std::string(20001, 'a')) == std::string::npos);
  }

  TEST_CASE("retriever retries, then yields an empty result with a warning") {
    StubServer stub(test::ana_lima_script(), always(503));
    auto cfg = stub.config();
    cfg.max_retries = 2;
    HttpRetriever ret(cfg, "");
    auto r = ret.retrieve("q", 8);
    CHECK(r.documents.empty());
    REQUIRE(r.warnings.size() == 1);
    CHECK(r.warnings[0].find("HTTP 503") != std::string::npos);
    CHECK(stub.search_log().size() == 3);
  }

  TEST_CASE("a transient failure is retried and then succeeds") {
    std::atomic<int> calls{0};
    StubServer stub(test::ana_lima_script(), [&](const nlohmann::json&) {
      return ++calls == 1 ? StubReply{429, ""} : StubReply{200, test::search_results({"ok"})};
    });
    HttpRetriever ret(stub.config(), "");
    auto r = ret.retrieve("q", 8);
    REQUIRE(r.documents.size() == 1);
    CHECK(r.warnings.empty());
    CHECK(calls == 2);
  }

  TEST_CASE("client errors are not retried") {
    StubServer stub(test::ana_lima_script(), always(400));
    HttpRetriever ret(stub.config(), "");
    CHECK(ret.retrieve("q", 8).documents.empty());
    CHECK(stub.search_log().size() == 1);
  }

  TEST_CASE("retriever failure leaves every fact NF and the run abstains") {
    StubServer stub(test::ana_lima_script(), always(500));
    auto cfg = stub.config();
    cfg.max_retries = 1;
    RemoteOps ops(cfg, "");
    HttpRetriever ret(cfg, "");
    Decoder dec(ops, ret, PipelineConfig{});
    auto r = dec.run("Who is Ana Lima?");
    REQUIRE(r.syndromes.size() == 1);
    CHECK(r.syndromes[0].verdict == Verdict::NF);
    CHECK(r.final_text == kAbstention);
    for (const auto& c : stub.chat_log()) CHECK(c.kind != "verify");
    CHECK_FALSE(dec.warnings().empty());
  }

  TEST_CASE("verdict labels: strict, then case-insensitive, else NF") {
    Evidence ev;
    ev.id = "E1";
    ev.summary_text = "Ana Lima was born in 1990.";
    ev.source_documents.push_back({"u", "x"});
    AtomicFact f{1, 1, "Ana Lima", "born_in", "1990", "Ana Lima born in 1990"};
    auto verdict_for = [&](std::string reply) {
      StubServer stub(test::ana_lima_script({}, reply), always(200));
      RemoteOps ops(stub.config(), "");
      return ops.verify_fact(f, ev);
    };
    CHECK(verdict_for("SUP").value.verdict == Verdict::SUP);
    CHECK(verdict_for("CON").value.verdict == Verdict::CON);
    CHECK(verdict_for(" con\n").value.verdict == Verdict::CON);
    auto bad = verdict_for("Supported, mostly");
    CHECK(bad.value.verdict == Verdict::NF);
    REQUIRE(bad.warnings.size() == 1);
    CHECK(bad.warnings[0].find("NF") != std::string::npos);
    CHECK(verdict_for("").value.verdict == Verdict::NF);
  }

  TEST_CASE("unparseable judge output counts as inconsistent") {
    auto script = [](const test::ChatRequest&) { return StubReply{200, "They might be the same person."}; };
    StubServer stub(script, always(200));
    RemoteOps ops(stub.config(), "");
    auto r = ops.judge_consistency({"A", {}}, {"A", {}});
    CHECK_FALSE(r.value);
    CHECK(r.warnings.size() == 1);
  }

  TEST_CASE("polish that changes a fact is discarded") {
    StubServer stub(test::ana_lima_script("Ana Lima was born in 1991."), one_doc("Ana Lima was born in 1990."));
    RemoteOps ops(stub.config(), "");
    HttpRetriever ret(stub.config(), "");
    Decoder dec(ops, ret, PipelineConfig{});
    auto r = dec.run("Who is Ana Lima?");
    CHECK(r.final_text == "Ana Lima was born in 1990.");
    REQUIRE(r.final_facts.size() == 1);
    CHECK(r.final_facts[0].object == "1990");
    CHECK(std::any_of(dec.warnings().begin(), dec.warnings().end(),
                      [](const std::string& w) { return w.find("polish") != std::string::npos; }));
  }

  TEST_CASE("missing usage falls back to the character estimate") {
    auto script = [](const test::ChatRequest&) { return StubReply{200, "abcdefgh", false}; };
    StubServer stub(script, always(200));
    ChatClient chat(stub.config(), "");
    auto reply = chat.complete("sys", "user", 0.0);
    CHECK(reply.content == "abcdefgh");
    CHECK(reply.usage.completion_tokens == 2);
    CHECK(reply.usage.prompt_tokens == estimate_tokens("sys\n\nuser"));
  }

  TEST_CASE("chat endpoint failures surface after the retry budget") {
    auto script = [](const test::ChatRequest&) { return StubReply{502, ""}; };
    StubServer stub(script, always(200));
    auto cfg = stub.config();
    cfg.max_retries = 2;
    ChatClient chat(cfg, "");
    CHECK_THROWS_AS(chat.complete("s", "u", 0.0), RemoteError);
    CHECK(chat.failed_attempts() == 3);
    CHECK(stub.chat_log().size() == 3);
  }

  TEST_CASE("correction lines outside the contradicted set are ignored") {
    auto script = [](const test::ChatRequest&) {
      return StubReply{200,
                       "FIX 1.1 | Ana Lima | born_in | 1990\n"
                       "FIX 1.2 | Ana Lima | club | X\n"
                       "PROP 1.2 FROM 1.1 | Ana Lima | team | Y\n"
                       "gibberish\n"};
    };
    StubServer stub(script, always(200));
    RemoteOps ops(stub.config(), "");
    CorrectionRequest req;
    AtomicFact a{1, 1, "Ana Lima", "born_in", "1991", ""};
    AtomicFact b{1, 2, "Ana Lima", "team", "Z", ""};
    req.group_facts = {a, b};
    Syndrome s{Verdict::CON, {1, 1}, "E1"};
    req.group_syndromes = {s, {Verdict::SUP, {1, 2}, "E1"}};
    req.contradicted = {{a, s}};
    auto r = ops.correct_group(req);
    REQUIRE(r.value.size() == 2);
    CHECK(r.value[0].replacement()->object == "1990");
    CHECK(r.value[1].propagated_from() == FactRef{1, 1});
    CHECK(r.warnings.size() == 2);
  }

  TEST_CASE("base url splitting and config validation") {
    CHECK(split_base_url("http://localhost:8000/v1") == std::pair<std::string, std::string>{"http://localhost:8000", "/v1"});
    CHECK(split_base_url("https://api.example.com") == std::pair<std::string, std::string>{"https://api.example.com", ""});
    CHECK(split_base_url("https://h/a/b/") == std::pair<std::string, std::string>{"https://h", "/a/b"});
    CHECK_THROWS_AS(split_base_url("localhost"), std::invalid_argument);
    RemoteConfig bad;
    bad.max_new_tokens = 0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  }
}
