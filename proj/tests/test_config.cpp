#include <doctest.h>

#include "serc/config.hpp"
#include "support.hpp"

using namespace serc;

TEST_SUITE("config") {
  TEST_CASE("defaults") {
    Settings s;
    CHECK(s.backend == "oracle");
    CHECK(s.remote.temperature_main == 0.0);
    CHECK(s.remote.temperature_polish == doctest::Approx(0.1));
    CHECK(s.remote.max_new_tokens == 512);
    CHECK(s.remote.retriever_top_k == 8);
    CHECK(s.remote.context_char_cap == 20000);
    CHECK(s.remote.max_retries == 3);
    CHECK(s.pipeline.density == Density::Low);
    CHECK(s.pipeline.firewall_enabled);
    CHECK(s.pipeline.rag_enabled);
    CHECK(s.pipeline.max_sentences == 40);
    CHECK(s.seed == 42);
  }

  TEST_CASE("all sections apply") {
    auto s = parse_settings(R"(
# comment
[backend]
kind = "remote"
chat_base_url = "http://127.0.0.1:9/v1"   # trailing comment
temperature_main = 0
max_new_tokens = 256
max_retries = 5

[retriever]
top_k = 4
context_char_cap = 1_000
search_depth = "basic"

[pipeline]
density = "high"
firewall_enabled = false
parallel_checks = 2

[noise]
p_corrupt = 0.4
seed = 7
mixed = true
n_sentences = 5
)");
    CHECK(s.backend == "remote");
    CHECK(s.remote.chat_base_url == "http://127.0.0.1:9/v1");
    CHECK(s.remote.temperature_main == 0.0);
    CHECK(s.remote.max_new_tokens == 256);
    CHECK(s.remote.max_retries == 5);
    CHECK(s.remote.retriever_top_k == 4);
    CHECK(s.remote.context_char_cap == 1000);
    CHECK(s.remote.search_depth == "basic");
    CHECK(s.pipeline.density == Density::High);
    CHECK_FALSE(s.pipeline.firewall_enabled);
    CHECK(s.pipeline.parallel_checks == 2);
    CHECK(s.episode.noise.p_corrupt == doctest::Approx(0.4));
    CHECK(s.seed == 7);
    CHECK(s.episode.mixed_noise);
    CHECK(s.episode.n_sentences == 5);
  }

  TEST_CASE("strings support escapes") {
    auto t = parse_toml("[a]\nk = \"x\\\"y\\\\z # not a comment\"\n");
    CHECK(std::get<std::string>(t["a"]["k"]) == "x\"y\\z # not a comment");
  }

  TEST_CASE("errors name the line or key") {
    auto message = [](std::string_view text) {
      try {
        parse_settings(text);
      } catch (const ConfigError& e) {
        return std::string(e.what());
      }
      return std::string();
    };
    CHECK(message("[backend\n").find("line 1") != std::string::npos);
    CHECK(message("[backend]\nkind\n").find("line 2") != std::string::npos);
    CHECK(message("k = 1\n").find("before any section") != std::string::npos);
    CHECK(message("[a]\nk = 1\nk = 2\n").find("duplicate") != std::string::npos);
    CHECK(message("[backend]\nkind = [1]\n").find("unsupported value") != std::string::npos);
    CHECK(message("[bogus]\nk = 1\n").find("unknown config section") != std::string::npos);
    CHECK(message("[pipeline]\nspeed = 1\n").find("unknown config key") != std::string::npos);
    CHECK(message("[pipeline]\ndensity = \"medium\"\n").find("density") != std::string::npos);
    CHECK(message("[pipeline]\nparallel_checks = \"2\"\n").find("must be an integer") != std::string::npos);
    CHECK(message("[backend]\nkind = \"other\"\n").find("oracle or remote") != std::string::npos);
    CHECK(message("[noise]\np_corrupt = 1.5\n").find("p_corrupt") != std::string::npos);
    CHECK(message("[pipeline]\nmax_sentences = 0\n").find("max_sentences") != std::string::npos);
    CHECK(message("[noise]\nseed = -1\n").find(">= 0") != std::string::npos);
  }

  TEST_CASE("load_settings prefixes the path") {
    auto dir = test::temp_dir("config");
    auto path = (dir / "serc.toml").string();
    std::ofstream(path) << "[pipeline]\nmax_sentences = 12\n";
    CHECK(load_settings(path).pipeline.max_sentences == 12);
    std::ofstream(path) << "[pipeline]\nnope = 1\n";
    try {
      load_settings(path);
      FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).find("serc.toml") != std::string::npos);
    }
    CHECK_THROWS_AS(load_settings((dir / "absent.toml").string()), ConfigError);
  }
}
