#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "golden.hpp"
#include "privgate/markers.hpp"

using namespace privgate;

TEST_CASE("golden raw outputs parse to their recorded results") {
  const auto results = testing::run_goldens(PRIVGATE_GOLDEN_DIR);
  CHECK(results.size() >= 20);
  std::set<std::string> categories;
  for (const auto& r : results) {
    INFO(r.file << ": " << r.detail);
    CHECK(r.ok);
    categories.insert(r.category);
  }
  CHECK(categories == std::set<std::string>{"well-formed", "cot-noise", "missing-marker", "nested-bracket"});
}

TEST_CASE("reasoning blocks are stripped only when leading and closed") {
  CHECK(strip_reasoning("<think>x</think>rest") == "rest");
  CHECK(strip_reasoning("  \n<think>x</think>\nrest") == "\nrest");
  CHECK(strip_reasoning("<think>never closed") == "<think>never closed");
  CHECK(strip_reasoning("text <think>x</think>") == "text <think>x</think>");
}

TEST_CASE("protocol markers") {
  CHECK(contains_protocol_marker("a [[[ b"));
  CHECK(contains_protocol_marker("### heading"));
  CHECK_FALSE(contains_protocol_marker("plain [[yes]] text"));
}

TEST_CASE("yes/no verdict is the last marker") {
  const auto v = find_last_yes_no("[[no]] then [[yes]] then [[no]]");
  REQUIRE(v);
  CHECK_FALSE(v->yes);
  CHECK(v->position == 25);
  CHECK_FALSE(find_last_yes_no("[[YES]]"));
  CHECK_FALSE(find_last_yes_no(""));
}

TEST_CASE("rejector rationale drops field markers") {
  const auto out = parse_rejector_output(
      "[[[ ### rationale ### ]]]\nfirst\n[[[ ### rationale ### ]]]\nsecond part\n[[[ ### label ### ]]]\n[[yes]]");
  CHECK(out.paraphrase);
  CHECK(out.rationale == "second part");
  CHECK_THROWS_AS(parse_rejector_output("no verdict"), ParseError);
}

TEST_CASE("paraphraser output") {
  const auto out = parse_paraphraser_output(
      "[[[ ### createdPrompt ### ]]]\n  Write a poem.  \n[[[ ### completed ### ]]]");
  CHECK(out.text == "Write a poem.");
  CHECK(out.rationale.empty());
  CHECK_THROWS_AS(parse_paraphraser_output("[[[ ### completed ### ]]] [[[ ### createdPrompt ### ]]] x"),
                  ParseError);
  CHECK_THROWS_AS(parse_paraphraser_output("[[[ ### createdPrompt ### ]]] has ### inside [[[ ### completed ### ]]]"),
                  ParseError);
}

TEST_CASE("outermost brackets") {
  CHECK(extract_outermost_brackets("x [[a]] y [[b]]") == "a");
  CHECK(extract_outermost_brackets("[[ [[a]] [[b]] ]]") == "[[a]] [[b]]");
  CHECK_THROWS_AS(extract_outermost_brackets("[[   ]]"), ParseError);
  CHECK_THROWS_AS(extract_outermost_brackets("]] [[ open"), ParseError);
}

TEST_CASE("pairwise choice uses the last token") {
  CHECK(parse_pairwise_choice("[[B]] [[A]]") == 'A');
  CHECK(parse_pairwise_choice("[[A]] [[B]]") == 'B');
  CHECK_THROWS_AS(parse_pairwise_choice("[[C]]"), ParseError);
}

TEST_CASE("absolute rating") {
  CHECK(parse_absolute_rating("Rating: [[1]]") == 1);
  CHECK(parse_absolute_rating("[[2]] then [[ 4 ]]") == 4);
  CHECK(parse_absolute_rating("[[+3]]") == 3);
  CHECK_THROWS_AS(parse_absolute_rating("[[0]]"), ParseError);
  CHECK_THROWS_AS(parse_absolute_rating("[[-1]]"), ParseError);
  CHECK_THROWS_AS(parse_absolute_rating("[[3.5]]"), ParseError);
  CHECK_THROWS_AS(parse_absolute_rating("[[99999999999999]]"), ParseError);
  CHECK_THROWS_AS(parse_absolute_rating("Rating: 4"), ParseError);
}

TEST_CASE("filter labels") {
  CHECK(parse_technical_label("Label: 1"));
  CHECK_FALSE(parse_technical_label("0 because 1"));
  CHECK(parse_technical_label("10"));
  CHECK_THROWS_AS(parse_technical_label("none"), ParseError);

  CHECK(parse_private_label("(A)"));
  CHECK_FALSE(parse_private_label("Because B"));
  CHECK_FALSE(parse_private_label("ABBA B"));
  CHECK_THROWS_AS(parse_private_label("ABBA"), ParseError);
}

TEST_CASE("arbitrary inputs either parse or raise ParseError") {
  Rng rng(17);
  const std::vector<std::string> pieces = {"[[", "]]", "[[yes]]", "[[no]]", "[[A]]", "[[B]]", "[[3]]",
                                           "<think>", "</think>", "[[[ ### createdPrompt ### ]]]",
                                           "[[[ ### completed ### ]]]", "[[[ ### rationale ### ]]]",
                                           "A", "B", "1", "0", " ", "\n", "word", "é"};
  for (int i = 0; i < 2000; ++i) {
    std::string raw;
    const auto n = testing::pick(rng, 12);
    for (std::size_t k = 0; k < n; ++k) raw += pieces[testing::pick(rng, pieces.size())];
    auto guarded = [&](auto&& f) {
      try {
        f();
      } catch (const ParseError&) {
      }
    };
    CHECK_NOTHROW(guarded([&] { parse_rejector_output(raw); }));
    CHECK_NOTHROW(guarded([&] {
      const auto p = parse_paraphraser_output(raw);
      CHECK_FALSE(p.text.empty());
      CHECK_FALSE(contains_protocol_marker(p.text));
    }));
    CHECK_NOTHROW(guarded([&] {
      const auto inner = extract_outermost_brackets(raw);
      CHECK_FALSE(inner.empty());
    }));
    CHECK_NOTHROW(guarded([&] {
      const int r = parse_absolute_rating(raw);
      CHECK(r >= 1);
      CHECK(r <= 4);
    }));
    CHECK_NOTHROW(guarded([&] { parse_pairwise_choice(raw); }));
    CHECK_NOTHROW(guarded([&] { parse_technical_label(raw); }));
    CHECK_NOTHROW(guarded([&] { parse_private_label(raw); }));
  }
}
