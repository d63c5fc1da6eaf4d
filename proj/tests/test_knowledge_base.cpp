#include <doctest.h>

#include "serc/knowledge_base.hpp"
#include "support.hpp"

using namespace serc;

namespace {

int error_line(std::string_view text) {
  try {
    KnowledgeBase::parse_string(text);
  } catch (const KbParseError& e) {
    return e.line();
  }
  return -1;
}

}  // namespace

TEST_SUITE("knowledge-base") {
  TEST_CASE("records, comments and lookups") {
    auto kb = KnowledgeBase::parse_string(
        "# header\n"
        "T Ada Quill | genre | jazz\n"
        "\n"
        "T Ada Quill | instrument | tenor saxophone   # trailing text is part of the value\n"
        "T Ben Roe | genre | folk\n"
        "D Ada Quill | genre -> instrument\n"
        "X genre | opera\n");
    CHECK(kb.entities() == std::vector<std::string>{"Ada Quill", "Ben Roe"});
    CHECK(kb.has_entity("ada  quill"));
    CHECK(kb.entity_name("ADA QUILL") == "Ada Quill");
    CHECK(kb.entity_name("Nobody").empty());
    CHECK(kb.values("ada quill", "Genre") == std::vector<std::string>{"jazz"});
    CHECK(kb.contains({"ada quill", "genre", "JAZZ"}));
    CHECK_FALSE(kb.contains({"Ada Quill", "genre", "folk"}));
    CHECK(kb.dependents("Ada Quill", "genre") == std::vector<std::string>{"instrument"});
    CHECK(kb.dependents("Ben Roe", "genre").empty());
    CHECK(kb.distractors("genre") == std::vector<std::string>{"opera"});
    CHECK(kb.distractors("nothing").empty());
    auto vocab = kb.predicate_vocabulary();
    CHECK(std::is_sorted(vocab.begin(), vocab.end()));
    CHECK(vocab.size() == 2);
  }

  TEST_CASE("duplicate triples collapse") {
    auto kb = KnowledgeBase::parse_string("T A | p | x\nT a | P | X\n");
    CHECK(kb.triples().size() == 1);
  }

  TEST_CASE("malformed lines report their line number") {
    CHECK(error_line("T A | p | x\nT A | p\n") == 2);
    CHECK(error_line("\n\n# c\nQ A | p | x\n") == 4);
    CHECK(error_line("T A | p | x\nD A | p\n") == 2);
    CHECK(error_line("T A |  | x\n") == 1);
    CHECK(error_line("X only\n") == 1);
    CHECK(error_line("Tx\n") == 1);
  }

  TEST_CASE("dependencies must name existing triples and stay acyclic") {
    CHECK(error_line("T A | p | x\nD A | p -> q\n") == 2);
    CHECK(error_line("T A | p | x\nD B | p -> p\n") == 2);
    CHECK(error_line("T A | p | x\nT A | q | y\nD A | p -> q\nD A | q -> p\n") == 4);
    CHECK(error_line("T A | p | x\nD A | p -> p\n") == 2);
    CHECK(error_line("T A | p | x\nT A | q | y\nT A | r | z\nD A | p -> q\nD A | q -> r\nD A | r -> p\n") == 6);
    // Forward references are resolved after the whole file is read.
    CHECK(error_line("D A | p -> q\nT A | p | x\nT A | q | y\n") == -1);
  }

  TEST_CASE("load prefixes the path in diagnostics") {
    auto dir = test::temp_dir("kb-load");
    auto path = (dir / "bad.kb").string();
    std::ofstream(path) << "T A | p | x\nT broken\n";
    try {
      KnowledgeBase::load(path);
      FAIL("expected a parse error");
    } catch (const KbParseError& e) {
      CHECK(e.line() == 2);
      CHECK(std::string(e.what()).find("bad.kb: line 2") != std::string::npos);
    }
    CHECK_THROWS_AS(KnowledgeBase::load((dir / "missing.kb").string()), std::runtime_error);
  }

  TEST_CASE("shipped knowledge bases load") {
    const auto& kb = test::bio_kb();
    CHECK(kb.entities().size() >= 6);
    for (const auto& e : kb.entities()) CHECK(kb.attributes(e).size() >= 24);
    for (auto name : {"mansour", "chain", "einstein", "novaes"}) CHECK_NOTHROW(test::fixture_kb(name));
  }
}
