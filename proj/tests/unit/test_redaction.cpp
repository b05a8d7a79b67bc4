#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "privgate/redaction.hpp"
#include "testing.hpp"

using namespace privgate;
using namespace privgate::testing;

namespace {

std::vector<EntityClass> classes(std::string_view text) {
  std::vector<EntityClass> out;
  for (const auto& s : detect_entities(text)) out.push_back(s.cls);
  return out;
}

}  // namespace

TEST_CASE("luhn checksum") {
  CHECK(luhn_valid("4111111111111111"));
  CHECK(luhn_valid("4111 1111 1111 1111"));
  CHECK(luhn_valid("79927398713"));
  CHECK_FALSE(luhn_valid("79927398710"));
  CHECK_FALSE(luhn_valid(""));
  Rng rng(3);
  for (int i = 0; i < 500; ++i) {
    std::string body;
    for (int k = 0; k < 15; ++k) body += static_cast<char>('0' + pick(rng, 10));
    const auto card = luhn_complete(body);
    CHECK(luhn_valid(card));
    std::string broken = card;
    broken.back() = static_cast<char>('0' + (card.back() - '0' + 1) % 10);
    CHECK_FALSE(luhn_valid(broken));
  }
}

TEST_CASE("entity classes") {
  CHECK(classes("mail ana.b@example.co.uk now") == std::vector{EntityClass::Email});
  CHECK(classes("see https://example.org/a?b=1.") == std::vector{EntityClass::Url});
  CHECK(classes("card 4111-1111-1111-1111 ok") == std::vector{EntityClass::CreditCard});
  CHECK(classes("card 4111-1111-1111-1112 ok") == std::vector{EntityClass::Phone});
  CHECK(classes("call +1 (555) 123-4567 today") == std::vector{EntityClass::Phone});
  CHECK(classes("passport AB1234567 here") == std::vector{EntityClass::Id});
  CHECK(classes("in 2024 I was 35") == std::vector<EntityClass>{});

  const auto& pool = NamePool::builtin();
  const std::string text = "Dear " + pool[0] + ", thanks";
  const auto spans = detect_entities(text);
  REQUIRE(spans.size() == 1);
  CHECK(spans[0].cls == EntityClass::Person);
  CHECK(text.substr(spans[0].begin, spans[0].end - spans[0].begin) == pool[0]);
  CHECK(detect_entities("x" + pool[0] + "x").empty());
}

TEST_CASE("trailing punctuation is not part of a URL") {
  const std::string text = "go to www.example.com/path).";
  const auto spans = detect_entities(text);
  REQUIRE(spans.size() == 1);
  CHECK(text.substr(spans[0].begin, spans[0].end - spans[0].begin) == "www.example.com/path");
}

TEST_CASE("redaction assigns stable per-class placeholders") {
  const auto r = baseline_redact("a@b.com wrote to c@d.org and a@b.com again");
  CHECK(r.text == "<EMAIL_1> wrote to <EMAIL_2> and <EMAIL_1> again");
  CHECK(r.mapping.size() == 2);
  CHECK(r.mapping.at("<EMAIL_1>") == "a@b.com");
  CHECK(r.mapping.at("<EMAIL_2>") == "c@d.org");
}

TEST_CASE("placeholders already in the input are skipped") {
  const std::string text = "keep <EMAIL_1> but hide x@y.com";
  const auto r = baseline_redact(text);
  CHECK(r.text == "keep <EMAIL_1> but hide <EMAIL_2>");
  CHECK(baseline_restore(r.text, r.mapping) == text);
}

TEST_CASE("restore is a single pass") {
  const std::map<std::string, std::string> mapping{{"<PERSON_1>", "<PERSON_2>"}, {"<PERSON_2>", "Ana"}};
  CHECK(baseline_restore("<PERSON_1> and <PERSON_2>", mapping) == "<PERSON_2> and Ana");
  CHECK(baseline_restore("<PHONE_9> stays", mapping) == "<PHONE_9> stays");
  CHECK(baseline_restore("a < b > c", mapping) == "a < b > c");
}

TEST_CASE("planted entities are removed and restored exactly") {
  Rng rng(99);
  const auto& pool = NamePool::builtin();
  for (int i = 0; i < 300; ++i) {
    const auto item = planted_item(rng, pool);
    const auto r = baseline_redact(item.text);
    INFO(item.text);
    for (const auto& e : item.entities) CHECK(r.text.find(e) == std::string::npos);
    CHECK(baseline_restore(r.text, r.mapping) == item.text);
  }
}

TEST_CASE("arbitrary text round-trips") {
  Rng rng(5);
  for (int i = 0; i < 500; ++i) {
    std::string text = random_text(rng, 0, 60);
    if (bernoulli(rng, 0.5)) text += " <PERSON_1> ";
    if (bernoulli(rng, 0.5)) text += NamePool::builtin()[pick(rng, NamePool::kSize)];
    const auto r = baseline_redact(text);
    CHECK(baseline_restore(r.text, r.mapping) == text);
  }
}
