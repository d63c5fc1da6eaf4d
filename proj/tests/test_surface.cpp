#include <doctest.h>

#include "serc/surface.hpp"
#include "support.hpp"

using namespace serc;

TEST_SUITE("surface") {
  TEST_CASE("Einstein sentence renders and parses back") {
    auto kb = test::fixture_kb("einstein");
    auto text = render_sentence(kb.attributes("Einstein"));
    CHECK(text == "Einstein was born in Germany and published the theory of relativity.");

    TemplateParser parser(kb);
    auto triples = parser.parse_sentence(text);
    REQUIRE(triples.size() == 2);
    CHECK(triples[0] == Triple{"Einstein", "was_born_in", "Germany"});
    CHECK(triples[1] == Triple{"Einstein", "published", "the theory of relativity"});
  }

  TEST_CASE("non-templated sentences parse to nothing") {
    TemplateParser parser(test::fixture_kb("einstein"));
    CHECK(parser.parse_sentence("He later emigrated to the U.S. in 1933.").empty());
    CHECK(parser.parse_sentence("Einstein liked sailing.").empty());
    CHECK(parser.parse_sentence("").empty());
  }

  TEST_CASE("every bio entity round-trips through render and parse") {
    const auto& kb = test::bio_kb();
    TemplateParser parser(kb);
    for (const auto& entity : kb.entities()) {
      auto attrs = kb.attributes(entity);
      for (std::size_t start = 0; start < attrs.size(); start += 3) {
        std::vector<Triple> chunk(attrs.begin() + static_cast<long>(start),
                                  attrs.begin() + static_cast<long>(std::min(attrs.size(), start + 3)));
        auto sentence = render_sentence(chunk);
        CAPTURE(sentence);
        CHECK(parser.parse_sentence(sentence) == chunk);
      }
    }
  }

  TEST_CASE("parse_text numbers facts and keeps factless sentences") {
    const auto& kb = test::bio_kb();
    TemplateParser parser(kb);
    const auto& e = kb.entities().front();
    auto attrs = kb.attributes(e);
    std::string text = render_sentence(std::vector<Triple>{attrs[0], attrs[1]}) + " Nothing to see here. " +
                       render_sentence(std::vector<Triple>{attrs[2]});
    auto units = parser.parse_text(text);
    REQUIRE(units.size() == 3);
    CHECK(units[0].facts.size() == 2);
    CHECK(units[0].facts[1].ref() == FactRef{1, 2});
    CHECK(units[1].facts.empty());
    REQUIRE(units[2].facts.size() == 1);
    CHECK(units[2].facts[0].ref() == FactRef{3, 1});
  }

  TEST_CASE("longest entity name wins") {
    auto kb = test::fixture_kb("novaes");
    TemplateParser parser(kb);
    for (const auto& entity : kb.entities()) {
      auto attrs = kb.attributes(entity);
      auto parsed = parser.parse_sentence(render_sentence(std::vector<Triple>{attrs.front()}));
      REQUIRE(parsed.size() == 1);
      CHECK(parsed[0].subject == entity);
    }
  }

  TEST_CASE("fact helpers") {
    Triple t{"Einstein", "was_born_in", "Germany"};
    auto f = make_fact(t, 2, 1);
    CHECK(f.ref() == FactRef{2, 1});
    CHECK(f.surface_text == "Einstein was born in Germany");
    CHECK(to_triple(f) == t);
    CHECK(render_sentence(std::vector<Triple>{}).empty());
  }
}
