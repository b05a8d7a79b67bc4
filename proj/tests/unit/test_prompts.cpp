#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>

#include "privgate/assets.hpp"
#include "privgate/markers.hpp"
#include "privgate/name_pool.hpp"
#include "privgate/prompts.hpp"
#include "testing.hpp"

using namespace privgate;

TEST_CASE("templates substitute known slots in one pass") {
  CHECK(render_template("Q: {query}", {{"query", "hi"}}) == "Q: hi");
  CHECK(render_template("{a}{b}", {{"a", "{b}"}, {"b", "x"}}) == "{b}x");
  CHECK(render_template("{unknown} {query}", {{"query", "q"}}) == "{unknown} q");
  CHECK(render_template("json {\"k\": 1} {Query}", {{"query", "q"}}) == "json {\"k\": 1} {Query}");
  CHECK(render_template("{}", {}) == "{}");
  CHECK(render_template("{query", {{"query", "q"}}) == "{query");
}

TEST_CASE("substituted values are never rescanned") {
  Rng rng(5);
  for (int i = 0; i < 500; ++i) {
    const std::string value = "{" + testing::random_word(rng) + "}" + testing::random_text(rng, 0, 20);
    const std::string out = render_template("<{query}|{profile}>", {{"query", value}, {"profile", "{query}"}});
    CHECK(out == "<" + value + "|{query}>");
  }
}

TEST_CASE("stage prompts replay examples as alternating turns") {
  const auto& lib = PromptLibrary::builtin();
  const auto msgs = lib.rejector.messages({{"query", "QQQ"}, {"profile", "PPP"}});
  REQUIRE(msgs.size() == 2 + 2 * lib.rejector.examples.size());
  CHECK(msgs.front().role == MessageRole::System);
  for (std::size_t i = 1; i + 1 < msgs.size(); i += 2) {
    CHECK(msgs[i].role == MessageRole::User);
    CHECK(msgs[i + 1].role == MessageRole::Assistant);
  }
  CHECK(msgs.back().role == MessageRole::User);
  CHECK(msgs.back().content.find("QQQ") != std::string::npos);
  CHECK(msgs.back().content.find("PPP") != std::string::npos);
  CHECK(msgs.back().content.find(marker::kUserQuery) != std::string::npos);
  CHECK(msgs.back().content.find(marker::kUserPrivacyProfile) != std::string::npos);
}

TEST_CASE("builtin few-shot outputs satisfy their own parsers") {
  const auto& lib = PromptLibrary::builtin();
  CHECK(lib.rejector.examples.size() >= 2);
  bool saw_yes = false;
  bool saw_no = false;
  for (const auto& ex : lib.rejector.examples) {
    const auto out = parse_rejector_output(ex.output);
    (out.paraphrase ? saw_yes : saw_no) = true;
    CHECK_FALSE(out.rationale.empty());
  }
  CHECK(saw_yes);
  CHECK(saw_no);
  for (const auto& ex : lib.paraphraser.examples) {
    const auto out = parse_paraphraser_output(ex.output);
    CHECK_FALSE(out.text.empty());
    CHECK_FALSE(contains_protocol_marker(out.text));
  }
  for (const auto& ex : lib.aggregator.examples) {
    CHECK(ex.inputs.count("query_modified"));
    CHECK(ex.inputs.count("response"));
    CHECK(ex.inputs.count("query"));
    CHECK_FALSE(ex.output.empty());
  }
}

TEST_CASE("judge and construction templates expose their slots") {
  const auto& lib = PromptLibrary::builtin();
  CHECK(lib.leakage.find("{information}") != std::string::npos);
  CHECK(lib.leakage.find("{prompt}") != std::string::npos);
  CHECK(lib.leakage.find("[[yes]]") != std::string::npos);
  for (const char* slot : {"{query}", "{response_a}", "{response_b}"}) {
    CHECK(lib.pairwise_judge.find(slot) != std::string::npos);
  }
  CHECK(lib.absolute_judge.find("{query}") != std::string::npos);
  CHECK(lib.absolute_judge.find("{answer}") != std::string::npos);
  CHECK(lib.filter_technical.find("{prompt}") != std::string::npos);
  CHECK(lib.filter_private.find("{prompt}") != std::string::npos);
  CHECK(lib.extraction.find("{question}") != std::string::npos);
  CHECK(lib.extraction.find("{examples}") != std::string::npos);
  CHECK(lib.profile_generation.find("{profile}") != std::string::npos);
  CHECK(lib.profile_generation.find("{specification}") != std::string::npos);
  CHECK_FALSE(lib.review_keywords.empty());
  for (auto tone : kAllTones) {
    REQUIRE(lib.tones.count(tone));
    CHECK_FALSE(lib.tones.at(tone).description.empty());
    CHECK_FALSE(lib.tones.at(tone).examples.empty());
  }
}

TEST_CASE("asset overrides") {
  testing::TempDir dir;
  testing::write_file(dir / "leakage.txt", "custom {information} / {prompt}\n");
  const auto lib = PromptLibrary::load(dir.path());
  CHECK(lib.leakage == "custom {information} / {prompt}");
  CHECK(lib.pairwise_judge == PromptLibrary::builtin().pairwise_judge);

  testing::write_file(dir / "profile_tones.json", "{ not json");
  CHECK_THROWS_AS(PromptLibrary::load(dir.path()), ConfigError);

  CHECK_THROWS_AS(load_asset("prompts/missing.txt"), ConfigError);
  const auto names = builtin_asset_names();
  CHECK(std::find(names.begin(), names.end(), "names.txt") != names.end());
  CHECK(std::find(names.begin(), names.end(), "prompts/rejector.system.txt") != names.end());
}

TEST_CASE("name pool") {
  const auto& pool = NamePool::builtin();
  CHECK(pool.size() == NamePool::kSize);
  CHECK(pool.contains(pool[0]));
  CHECK_FALSE(pool.contains("Zz Not A Name"));

  std::vector<std::string> short_list(pool.names().begin(), pool.names().begin() + 10);
  CHECK_THROWS_AS(NamePool{short_list}, ValidationError);
  auto dup = pool.names();
  dup[1] = dup[0];
  CHECK_THROWS_AS(NamePool{dup}, ValidationError);

  testing::TempDir dir;
  std::string text;
  for (int i = 0; i < 1000; ++i) text += "Name " + std::to_string(i) + "\n";
  testing::write_file(dir / "names.txt", text);
  const auto custom = NamePool::load(dir.path());
  CHECK(custom[999] == "Name 999");
}
