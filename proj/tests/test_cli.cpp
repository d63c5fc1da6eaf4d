#include <doctest.h>

#include <cstdlib>
#include <sstream>

#include "../tools/cli.hpp"
#include "support.hpp"

using namespace serc;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run serc_run(std::vector<std::string> args) {
  std::ostringstream out, err;
  int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string src(const std::string& rel) { return test::source_path(rel); }

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("correct on the Mansour fixture prints the rugby league answer") {
    auto dir = test::temp_dir("cli-correct");
    auto r = serc_run({"correct", "--backend", "oracle", "--kb", src("fixtures/mansour.kb"), "--noisy",
                       src("fixtures/mansour.noisy"), "--out-dir", dir.string()});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("rugby league") != std::string::npos);
    CHECK(r.out.find("strong ball-carrying") != std::string::npos);
    CHECK(r.out.find("cricket") == std::string::npos);
    CHECK(std::filesystem::exists(dir / "trace.jsonl"));
    auto csv = test::slurp(dir / "metrics.csv");
    CHECK(csv.rfind("run_id,method,density,precision", 0) == 0);
    CHECK(csv.find("run1,serc,low,1.0000,6,5,83.3,") != std::string::npos);
  }

  TEST_CASE("correct --no-rag runs without retrieval and abstains") {
    auto dir = test::temp_dir("cli-norag");
    auto r = serc_run({"correct", "--kb", src("fixtures/mansour.kb"), "--noisy", src("fixtures/mansour.noisy"),
                       "--no-rag", "--out-dir", dir.string()});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("No verified information") != std::string::npos);
    CHECK(test::slurp(dir / "metrics.csv").find("serc-no-rag") != std::string::npos);
  }

  TEST_CASE("correct without input is a usage error") {
    auto r = serc_run({"correct", "--kb", src("fixtures/mansour.kb")});
    CHECK(r.code == 2);
    CHECK(r.err.find("--query") != std::string::npos);
    CHECK(serc_run({}).code == 2);
    CHECK(serc_run({"frobnicate"}).code == 2);
  }

  TEST_CASE("the remote backend names the missing key variable") {
    ::unsetenv("SERC_TEST_ABSENT_KEY");
    auto dir = test::temp_dir("cli-remote");
    auto cfg = (dir / "remote.toml").string();
    std::ofstream(cfg) << "[backend]\nkind = \"remote\"\nchat_api_key_env = \"SERC_TEST_ABSENT_KEY\"\n";
    auto r = serc_run({"correct", "--config", cfg, "--query", "Who is Ana Lima?", "--out-dir", dir.string()});
    CHECK(r.code == 1);
    CHECK(r.err.find("SERC_TEST_ABSENT_KEY") != std::string::npos);
  }

  TEST_CASE("KB parse errors carry the line number") {
    auto dir = test::temp_dir("cli-badkb");
    auto kb = (dir / "bad.kb").string();
    std::ofstream(kb) << "T A | p | x\n\nT nope\n";
    auto r = serc_run({"simulate", "--kb", kb, "--episodes", "1", "--out-dir", dir.string()});
    CHECK(r.code == 1);
    CHECK(r.err.find("line 3") != std::string::npos);
  }

  TEST_CASE("simulate with zero episodes writes only the header") {
    auto dir = test::temp_dir("cli-sim0");
    auto r = serc_run({"simulate", "--kb", src("data/bio.kb"), "--episodes", "0", "--out-dir", dir.string()});
    REQUIRE(r.code == 0);
    CHECK(test::slurp(dir / "simulate_low.csv") ==
          "run_id,method,density,precision,initial_facts,final_facts,preservation_pct,total_tokens,retrieval_calls\n");
  }

  TEST_CASE("simulate is byte-deterministic and the paired report shows a reduction") {
    auto a = test::temp_dir("cli-sim-a");
    auto b = test::temp_dir("cli-sim-b");
    for (const auto& dir : {a, b}) {
      auto r = serc_run({"simulate", "--kb", src("data/bio.kb"), "--episodes", "4", "--seed", "42", "--density",
                         "both", "--out-dir", dir.string()});
      REQUIRE(r.code == 0);
    }
    for (auto name : {"simulate_low.csv", "simulate_high.csv", "reduction.csv", "simulate_low.trace.jsonl",
                      "simulate_high.trace.jsonl"}) {
      CAPTURE(name);
      CHECK(test::slurp(a / name) == test::slurp(b / name));
    }
    auto low = test::slurp(a / "simulate_low.csv");
    CHECK(std::count(low.begin(), low.end(), '\n') == 6);
    CHECK(low.find("\nmean,") != std::string::npos);
    auto red = test::slurp(a / "reduction.csv");
    auto total = red.substr(red.find("total,"));
    auto pct = std::stod(total.substr(total.rfind(',') + 1));
    CHECK(pct > 0);
  }

  TEST_CASE("parallel episodes match the serial run") {
    auto a = test::temp_dir("cli-thr-a");
    auto b = test::temp_dir("cli-thr-b");
    REQUIRE(serc_run({"simulate", "--kb", src("data/bio.kb"), "--episodes", "6", "--out-dir", a.string()}).code == 0);
    REQUIRE(serc_run({"simulate", "--kb", src("data/bio.kb"), "--episodes", "6", "--threads", "3", "--out-dir",
                      b.string()})
                .code == 0);
    CHECK(test::slurp(a / "simulate_low.csv") == test::slurp(b / "simulate_low.csv"));
    CHECK(test::slurp(a / "simulate_low.trace.jsonl") == test::slurp(b / "simulate_low.trace.jsonl"));
  }

  TEST_CASE("ablate no-firewall on the swap fixture reports a chimera only for the variant") {
    auto dir = test::temp_dir("cli-abl-fw");
    auto r = serc_run({"ablate", "no-firewall", "--kb", src("fixtures/novaes.kb"), "--noisy",
                       src("fixtures/novaes.noisy"), "--out-dir", dir.string()});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("chimera full=no") != std::string::npos);
    CHECK(r.out.find("variant=yes") != std::string::npos);
    CHECK(std::filesystem::exists(dir / "ablate_no-firewall.csv"));
    CHECK(std::filesystem::exists(dir / "ablate_no-firewall_variant.trace.jsonl"));
  }

  TEST_CASE("ablate no-rag does not improve over the initial answer") {
    auto dir = test::temp_dir("cli-abl-rag");
    auto r = serc_run({"ablate", "no-rag", "--kb", src("fixtures/mansour.kb"), "--noisy",
                       src("fixtures/mansour.noisy"), "--out-dir", dir.string()});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("improved over initial full=yes variant=no") != std::string::npos);
  }

  TEST_CASE("ablate high-density keeps precision and costs more") {
    auto dir = test::temp_dir("cli-abl-hd");
    auto r = serc_run({"ablate", "high-density", "--kb", src("data/bio.kb"), "--noisy", src("fixtures/seed42.noisy"),
                       "--out-dir", dir.string()});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("precision low=1.0000 high=1.0000") != std::string::npos);
    auto pos = r.out.find("reduction_pct=");
    REQUIRE(pos != std::string::npos);
    CHECK(std::stod(r.out.substr(pos + 14)) > 0);
  }

  TEST_CASE("unknown ablation is a usage error") {
    auto r = serc_run({"ablate", "no-polish", "--kb", src("fixtures/mansour.kb")});
    CHECK(r.code == 2);
  }

  TEST_CASE("report recomputes metrics.csv from the trace") {
    auto dir = test::temp_dir("cli-report");
    REQUIRE(serc_run({"correct", "--kb", src("fixtures/chain.kb"), "--noisy", src("fixtures/chain.noisy"),
                      "--out-dir", dir.string()})
                .code == 0);
    auto r = serc_run({"report", "--trace", (dir / "trace.jsonl").string(), "--kb", src("fixtures/chain.kb")});
    REQUIRE(r.code == 0);
    CHECK(r.out == test::slurp(dir / "metrics.csv"));
  }

  TEST_CASE("generate reproduces the seed 42 fixture") {
    auto dir = test::temp_dir("cli-gen");
    auto out = (dir / "seed42.noisy").string();
    auto r = serc_run({"generate", "--kb", src("data/bio.kb"), "--sentences", "10", "--facts-per-sentence", "2",
                       "--p-corrupt", "0.2", "--p-fabricate", "0.1", "--seed", "42", "--out", out});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("clean 16, corrupted 4, fabricated 5") != std::string::npos);
    CHECK(test::slurp(out) == test::slurp(src("fixtures/seed42.noisy")));
  }

  TEST_CASE("correct is byte-deterministic") {
    auto a = test::temp_dir("cli-det-a");
    auto b = test::temp_dir("cli-det-b");
    for (const auto& dir : {a, b})
      REQUIRE(serc_run({"correct", "--kb", src("data/bio.kb"), "--noisy", src("fixtures/seed42.noisy"), "--seed", "42",
                        "--out-dir", dir.string()})
                  .code == 0);
    CHECK(test::slurp(a / "trace.jsonl") == test::slurp(b / "trace.jsonl"));
    CHECK(test::slurp(a / "metrics.csv") == test::slurp(b / "metrics.csv"));
  }
}
