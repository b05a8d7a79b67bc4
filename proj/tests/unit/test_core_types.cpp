#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <map>
#include <set>

#include "privgate/core_types.hpp"
#include "privgate/errors.hpp"
#include "testing.hpp"

using namespace privgate;

namespace {

PersonRecord person_with(std::string id, std::vector<AttributeType> types) {
  PersonRecord p{id, {}};
  int k = 0;
  for (auto t : types) p.attributes.push_back({id, t, "v" + std::to_string(k++), Disclosure::Protected});
  return p;
}

std::vector<PersonRecord> all_types_person() {
  return {person_with("USER", {kAllAttributeTypes.begin(), kAllAttributeTypes.end()})};
}

}  // namespace

TEST_CASE("attribute names round-trip and unknown names are rejected") {
  const std::vector<std::string> canonical = {
      "name", "passport/id", "email", "phone number", "credit card", "url", "age",
      "gender", "nationality", "marital status", "location", "occupation", "education", "work",
      "health", "hobbies", "habits", "religion", "languages", "has children", "connections"};
  REQUIRE(canonical.size() == kAllAttributeTypes.size());
  for (std::size_t i = 0; i < canonical.size(); ++i) {
    CHECK(to_string(kAllAttributeTypes[i]) == canonical[i]);
    CHECK(parse_attribute_type(canonical[i]) == kAllAttributeTypes[i]);
  }
  CHECK_THROWS_AS(parse_attribute_type("Name"), ValidationError);
  CHECK_THROWS_AS(parse_attribute_type("link"), ValidationError);
  CHECK_THROWS_AS(parse_attribute_type("passport_id"), ValidationError);
  CHECK_THROWS_AS(parse_attribute_type(""), ValidationError);
}

TEST_CASE("categories partition the taxonomy") {
  using A = AttributeType;
  const std::map<AttributeCategory, std::set<A>> expected = {
      {AttributeCategory::HardPII, {A::Name, A::PassportId, A::Email, A::PhoneNumber, A::CreditCard, A::Url}},
      {AttributeCategory::Demographics, {A::Age, A::Gender, A::Nationality, A::MaritalStatus, A::Location}},
      {AttributeCategory::Biographical, {A::Occupation, A::Education, A::Work, A::Health}},
      {AttributeCategory::SoftPII,
       {A::Hobbies, A::Habits, A::Religion, A::Languages, A::HasChildren, A::Connections}},
  };
  std::set<A> seen;
  for (const auto& [category, types] : expected) {
    for (A t : types) {
      CHECK(category_of(t) == category);
      CHECK(seen.insert(t).second);
    }
  }
  CHECK(seen.size() == 21);
  CHECK(category_of(A::Email) == AttributeCategory::HardPII);
  CHECK(category_of(A::Hobbies) == AttributeCategory::SoftPII);
  CHECK(category_of(A::MaritalStatus) == AttributeCategory::Demographics);
}

TEST_CASE("enumeration strings round-trip") {
  for (auto tone : kAllTones) CHECK(parse_tone(to_string(tone)) == tone);
  for (auto name : kAllPersonas) CHECK(parse_persona_name(to_string(name)) == name);
  for (auto src : {ProfileSource::Synthetic, ProfileSource::Persona, ProfileSource::UserWritten}) {
    CHECK(parse_profile_source(to_string(src)) == src);
  }
  for (auto d : {Disclosure::Protected, Disclosure::Authorised}) CHECK(parse_disclosure(to_string(d)) == d);
  CHECK(to_string(ProfileTone::Laidback) == "laidback");
  CHECK(to_string(PersonaName::PrivateUser) == "private_user");
  CHECK_THROWS_AS(parse_tone("calm"), ValidationError);
  CHECK_THROWS_AS(parse_persona_name("doctor"), ValidationError);
}

TEST_CASE("person ids") {
  CHECK(is_valid_person_id("USER"));
  CHECK(is_valid_person_id("PERSON 1"));
  CHECK(is_valid_person_id("PERSON 42"));
  CHECK_FALSE(is_valid_person_id("PERSON 0"));
  CHECK_FALSE(is_valid_person_id("PERSON 01"));
  CHECK_FALSE(is_valid_person_id("PERSON"));
  CHECK_FALSE(is_valid_person_id("person 1"));
  CHECK_FALSE(is_valid_person_id("PERSON 1 "));
  CHECK_FALSE(is_valid_person_id(""));
}

TEST_CASE("profile validation ties tone to synthetic source") {
  CHECK_NOTHROW(validate(PrivacyProfile{"keep my name private", ProfileTone::Brief, ProfileSource::Synthetic}));
  CHECK_NOTHROW(validate(PrivacyProfile{"keep my name private", std::nullopt, ProfileSource::Persona}));
  CHECK_THROWS_AS(validate(PrivacyProfile{"text", std::nullopt, ProfileSource::Synthetic}), ValidationError);
  CHECK_THROWS_AS(validate(PrivacyProfile{"text", ProfileTone::Basic, ProfileSource::UserWritten}),
                  ValidationError);
  CHECK_THROWS_AS(validate(PrivacyProfile{"  \n", std::nullopt, ProfileSource::UserWritten}), ValidationError);
}

TEST_CASE("record validation") {
  QueryRecord r{"q1", "help me", {person_with("USER", {AttributeType::Name})},
                PrivacyProfile{"p", std::nullopt, ProfileSource::UserWritten}};
  CHECK_NOTHROW(validate(r));

  SUBCASE("empty query") {
    r.query = " ";
    CHECK_THROWS_AS(validate(r), ValidationError);
  }
  SUBCASE("duplicate person ids") {
    r.people.push_back(person_with("USER", {AttributeType::Age}));
    CHECK_THROWS_AS(validate(r), ValidationError);
  }
  SUBCASE("owner mismatch") {
    r.people[0].attributes[0].owner_id = "PERSON 1";
    CHECK_THROWS_AS(validate(r), ValidationError);
  }
  SUBCASE("duplicate type and value") {
    r.people[0].attributes.push_back(r.people[0].attributes[0]);
    CHECK_THROWS_AS(validate(r), ValidationError);
  }
  SUBCASE("blank value") {
    r.people[0].attributes[0].value = "  ";
    CHECK_THROWS_AS(validate(r), ValidationError);
  }
  SUBCASE("people may be empty") {
    r.people.clear();
    CHECK_NOTHROW(validate(r));
  }
}

TEST_CASE("persona policies match the published shared sets") {
  using A = AttributeType;
  CHECK(persona_policy(PersonaName::PrivateUser).shared == std::set<A>{A::Languages, A::Hobbies, A::Habits});
  CHECK(persona_policy(PersonaName::Medical).shared ==
        std::set<A>{A::Age, A::Gender, A::Languages, A::HasChildren, A::Habits, A::Health, A::Occupation});
  CHECK(persona_policy(PersonaName::Ecommerce).shared ==
        std::set<A>{A::Name, A::Location, A::Languages, A::Email, A::CreditCard, A::PhoneNumber});
}

TEST_CASE("apply_persona overwrites disclosures and is idempotent") {
  for (auto name : kAllPersonas) {
    const auto policy = persona_policy(name);
    auto people = sample_disclosures(all_types_person(), 7);
    const auto once = apply_persona(people, policy);
    const auto twice = apply_persona(once, policy);
    CHECK(once == twice);
    for (const auto& inst : once[0].attributes) {
      CHECK(inst.disclosure == (policy.shares(inst.type) ? Disclosure::Authorised : Disclosure::Protected));
    }
  }
  const auto health = std::vector<PersonRecord>{person_with("USER", {AttributeType::Health})};
  CHECK(apply_persona(health, persona_policy(PersonaName::Medical))[0].attributes[0].disclosure ==
        Disclosure::Authorised);
  CHECK(apply_persona(health, persona_policy(PersonaName::Ecommerce))[0].attributes[0].disclosure ==
        Disclosure::Protected);
  CHECK(apply_persona({}, persona_policy(PersonaName::Medical)).empty());
}

TEST_CASE("sample_disclosures is deterministic and seed-sensitive") {
  std::vector<PersonRecord> people;
  for (int p = 0; p < 8; ++p) {
    people.push_back(person_with(p == 0 ? "USER" : "PERSON " + std::to_string(p),
                                 {AttributeType::Gender, AttributeType::Age, AttributeType::Health,
                                  AttributeType::Hobbies, AttributeType::Religion, AttributeType::Habits,
                                  AttributeType::Location, AttributeType::Name}));
  }
  REQUIRE(count_instances(people) == 64);
  CHECK(sample_disclosures(people, 11) == sample_disclosures(people, 11));
  CHECK(sample_disclosures(people, 11) != sample_disclosures(people, 12));

  const auto sampled = sample_disclosures(people, 11);
  for (std::size_t p = 0; p < people.size(); ++p) {
    for (std::size_t a = 0; a < people[p].attributes.size(); ++a) {
      CHECK(sampled[p].attributes[a].type == people[p].attributes[a].type);
      CHECK(sampled[p].attributes[a].value == people[p].attributes[a].value);
    }
  }
}

TEST_CASE("sampled authorised fractions track the per-type probability") {
  CHECK(authorise_probability(AttributeType::Occupation) == 0.1);
  CHECK(authorise_probability(AttributeType::Languages) == 0.1);
  CHECK(authorise_probability(AttributeType::Gender) == 0.5);

  for (auto [type, lo, hi] : {std::tuple{AttributeType::Gender, 0.48, 0.52},
                              std::tuple{AttributeType::Occupation, 0.09, 0.11}}) {
    int authorised = 0;
    for (int i = 0; i < 10000; ++i) {
      const auto out = sample_disclosures({person_with("USER", {type})}, derive_seed(1, std::to_string(i)));
      authorised += out[0].attributes[0].disclosure == Disclosure::Authorised;
    }
    const double fraction = authorised / 10000.0;
    CHECK(fraction >= lo);
    CHECK(fraction <= hi);
  }
}

TEST_CASE("derive_seed separates records and seeds") {
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 1000; ++i) seen.insert(derive_seed(5, "rec-" + std::to_string(i)));
  CHECK(seen.size() == 1000);
  CHECK(derive_seed(5, "a") == derive_seed(5, "a"));
  CHECK(derive_seed(5, "a") != derive_seed(6, "a"));
}

TEST_CASE("trim strips ASCII whitespace only at the ends") {
  CHECK(trim("  a b \n\t") == "a b");
  CHECK(trim("") == "");
  CHECK(trim(" \n ") == "");
  CHECK(trim("é ") == "é");
}

TEST_CASE("random records from the generator validate") {
  Rng rng(99);
  for (int i = 0; i < 200; ++i) {
    const auto r = privgate::testing::random_peep_record(rng, static_cast<std::size_t>(i));
    CHECK_NOTHROW(validate(r.record));
  }
}
