#include <doctest.h>

#include "serc/prompts.hpp"

using namespace serc;
namespace pr = serc::prompts;

TEST_SUITE("prompts") {
  TEST_CASE("token estimate is ceil(chars / 4)") {
    CHECK(estimate_tokens("") == 0);
    CHECK(estimate_tokens("a") == 1);
    CHECK(estimate_tokens("abcd") == 1);
    CHECK(estimate_tokens("abcde") == 2);
    CHECK(estimate_tokens(std::string(400, 'x')) == 100);
  }

  TEST_CASE("truncation never splits a UTF-8 sequence") {
    CHECK(truncate_utf8("hello", 10) == "hello");
    CHECK(truncate_utf8("hello", 3) == "hel");
    std::string s = "ab\xC3\xA9";  // "abé"
    CHECK(truncate_utf8(s, 3) == "ab");
    CHECK(truncate_utf8(s, 4) == s);
    std::vector<Document> docs{{"t", "u", std::string(30000, 'x')}, {"t", "u", "short"}};
    truncate_documents(docs, 20000);
    CHECK(docs[0].content.size() == 20000);
    CHECK(docs[1].content == "short");
  }

  TEST_CASE("yes/no parsing: strict, then case-insensitive, else nothing") {
    CHECK(pr::parse_yes_no("YES") == true);
    CHECK(pr::parse_yes_no("NO") == false);
    CHECK(pr::parse_yes_no(" yes. ") == true);
    CHECK(pr::parse_yes_no("No") == false);
    CHECK_FALSE(pr::parse_yes_no("maybe").has_value());
    CHECK_FALSE(pr::parse_yes_no("yes, they match").has_value());
    CHECK_FALSE(pr::parse_yes_no("").has_value());
  }

  TEST_CASE("label parsing accepts only the three labels") {
    CHECK(pr::parse_label("SUP") == Verdict::SUP);
    CHECK(pr::parse_label("CON") == Verdict::CON);
    CHECK(pr::parse_label("NF") == Verdict::NF);
    CHECK(pr::parse_label(" con\n") == Verdict::CON);
    CHECK(pr::parse_label("Nf") == Verdict::NF);
    for (const char* bad : {"SUPPORTED", "The answer is SUP", "", "CON.", "N/F", "contradicted"})
      CHECK_FALSE(pr::parse_label(bad).has_value());
  }

  TEST_CASE("topic parsing") {
    CHECK_FALSE(pr::parse_topic("NONE").has_value());
    CHECK_FALSE(pr::parse_topic("none\n").has_value());
    CHECK_FALSE(pr::parse_topic("   ").has_value());
    auto t = pr::parse_topic("\nJosh Mansour\nextra");
    REQUIRE(t.has_value());
    CHECK(t->name == "Josh Mansour");
    CHECK_FALSE(t->qualifier.has_value());
    auto q = pr::parse_topic("Fernando Novaes | footballer");
    REQUIRE(q.has_value());
    CHECK(q->name == "Fernando Novaes");
    CHECK(q->qualifier == "footballer");
  }

  TEST_CASE("triple lines tolerate bullets and parentheses") {
    auto r = pr::parse_triple_lines("- A | p | x\n* (B | q | y)\nnot a triple\nC | r |\n\n");
    REQUIRE(r.triples.size() == 2);
    CHECK(r.triples[0] == Triple{"A", "p", "x"});
    CHECK(r.triples[1] == Triple{"B", "q", "y"});
    CHECK(r.rejected.size() == 2);
  }

  TEST_CASE("correction lines") {
    auto r = pr::parse_correction_lines(
        "FIX 1.1 | Josh Mansour | sport | rugby league\n"
        "PROP 1.2 FROM 1.1 | Josh Mansour | skill | strong ball-carrying\n"
        "FIX 1 | A | p | x\n"
        "PROP 1.2 | A | p | x\n"
        "MOVE 1.1 | A | p | x\n"
        "FIX 1.1 | A | p\n");
    REQUIRE(r.lines.size() == 2);
    CHECK(r.lines[0].target == FactRef{1, 1});
    CHECK_FALSE(r.lines[0].from.has_value());
    CHECK(r.lines[0].replacement.object == "rugby league");
    CHECK(r.lines[1].target == FactRef{1, 2});
    CHECK(r.lines[1].from == FactRef{1, 1});
    CHECK(r.rejected.size() == 4);
  }

  TEST_CASE("query cap cuts at a word boundary") {
    bool capped = true;
    CHECK(pr::cap_query("short query", 300, &capped) == "short query");
    CHECK_FALSE(capped);
    std::string longq;
    for (int i = 0; i < 100; ++i) longq += "word ";
    auto out = pr::cap_query(longq, pr::kMaxQueryChars, &capped);
    CHECK(capped);
    CHECK(out.size() <= pr::kMaxQueryChars);
    CHECK(out.back() == 'd');
    CHECK(pr::cap_query(std::string(500, 'x'), 300, nullptr).size() == 300);
  }

  TEST_CASE("rewrite prompt carries facts and history, never a source sentence") {
    AtomicFact f{1, 1, "Josh Mansour", "sport", "rugby league", "Josh Mansour sport cricket"};
    auto p = pr::rewrite({f}, {"Earlier sentence."});
    CHECK(p.user.find("(Josh Mansour | sport | rugby league)") != std::string::npos);
    CHECK(p.user.find("Earlier sentence.") != std::string::npos);
    CHECK(p.text().find("cricket") == std::string::npos);
  }

  TEST_CASE("first line") {
    CHECK(pr::first_line("\n\n  hello \nworld") == "hello");
    CHECK(pr::first_line("").empty());
  }
}
