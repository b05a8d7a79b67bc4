#include "privgate/core_types.hpp"

#include <algorithm>
#include <cctype>
#include <utility>

#include "privgate/errors.hpp"
#include "privgate/random.hpp"

namespace privgate {

namespace {

template <typename Enum, std::size_t N>
Enum parse_enum(std::string_view text, const std::array<Enum, N>& values, const char* what) {
  for (Enum v : values) {
    if (to_string(v) == text) return v;
  }
  throw ValidationError(std::string("unknown ") + what + " '" + std::string(text) + "'");
}

}  // namespace

std::string_view to_string(AttributeType type) noexcept {
  switch (type) {
    case AttributeType::Name: return "name";
    case AttributeType::PassportId: return "passport/id";
    case AttributeType::Email: return "email";
    case AttributeType::PhoneNumber: return "phone number";
    case AttributeType::CreditCard: return "credit card";
    case AttributeType::Url: return "url";
    case AttributeType::Age: return "age";
    case AttributeType::Gender: return "gender";
    case AttributeType::Nationality: return "nationality";
    case AttributeType::MaritalStatus: return "marital status";
    case AttributeType::Location: return "location";
    case AttributeType::Occupation: return "occupation";
    case AttributeType::Education: return "education";
    case AttributeType::Work: return "work";
    case AttributeType::Health: return "health";
    case AttributeType::Hobbies: return "hobbies";
    case AttributeType::Habits: return "habits";
    case AttributeType::Religion: return "religion";
    case AttributeType::Languages: return "languages";
    case AttributeType::HasChildren: return "has children";
    case AttributeType::Connections: return "connections";
  }
  return "";
}

AttributeType parse_attribute_type(std::string_view text) {
  return parse_enum(text, kAllAttributeTypes, "attribute type");
}

AttributeCategory category_of(AttributeType type) noexcept {
  switch (type) {
    case AttributeType::Name:
    case AttributeType::PassportId:
    case AttributeType::Email:
    case AttributeType::PhoneNumber:
    case AttributeType::CreditCard:
    case AttributeType::Url:
      return AttributeCategory::HardPII;
    case AttributeType::Age:
    case AttributeType::Gender:
    case AttributeType::Nationality:
    case AttributeType::MaritalStatus:
    case AttributeType::Location:
      return AttributeCategory::Demographics;
    case AttributeType::Occupation:
    case AttributeType::Education:
    case AttributeType::Work:
    case AttributeType::Health:
      return AttributeCategory::Biographical;
    case AttributeType::Hobbies:
    case AttributeType::Habits:
    case AttributeType::Religion:
    case AttributeType::Languages:
    case AttributeType::HasChildren:
    case AttributeType::Connections:
      return AttributeCategory::SoftPII;
  }
  return AttributeCategory::SoftPII;  // unreachable for valid enumerators
}

std::string_view to_string(AttributeCategory category) noexcept {
  switch (category) {
    case AttributeCategory::HardPII: return "HardPII";
    case AttributeCategory::Demographics: return "Demographics";
    case AttributeCategory::Biographical: return "Biographical";
    case AttributeCategory::SoftPII: return "SoftPII";
  }
  return "";
}

std::string_view to_string(Disclosure disclosure) noexcept {
  return disclosure == Disclosure::Authorised ? "authorised" : "protected";
}

Disclosure parse_disclosure(std::string_view text) {
  return parse_enum(text, std::array{Disclosure::Protected, Disclosure::Authorised}, "disclosure");
}

std::string_view to_string(ProfileTone tone) noexcept {
  switch (tone) {
    case ProfileTone::Basic: return "basic";
    case ProfileTone::Brief: return "brief";
    case ProfileTone::Aggressive: return "aggressive";
    case ProfileTone::Lazy: return "lazy";
    case ProfileTone::Laidback: return "laidback";
    case ProfileTone::Informal: return "informal";
  }
  return "";
}

ProfileTone parse_tone(std::string_view text) { return parse_enum(text, kAllTones, "tone"); }

std::string_view to_string(ProfileSource source) noexcept {
  switch (source) {
    case ProfileSource::Synthetic: return "synthetic";
    case ProfileSource::Persona: return "persona";
    case ProfileSource::UserWritten: return "user_written";
  }
  return "";
}

ProfileSource parse_profile_source(std::string_view text) {
  return parse_enum(
      text, std::array{ProfileSource::Synthetic, ProfileSource::Persona, ProfileSource::UserWritten},
      "profile source");
}

std::string_view to_string(PersonaName name) noexcept {
  switch (name) {
    case PersonaName::PrivateUser: return "private_user";
    case PersonaName::Medical: return "medical";
    case PersonaName::Ecommerce: return "ecommerce";
  }
  return "";
}

PersonaName parse_persona_name(std::string_view text) {
  return parse_enum(text, kAllPersonas, "persona");
}

bool is_valid_person_id(std::string_view id) noexcept {
  if (id == kUserId) return true;
  constexpr std::string_view prefix = "PERSON ";
  if (!id.starts_with(prefix)) return false;
  const std::string_view digits = id.substr(prefix.size());
  if (digits.empty() || digits.size() > 9 || digits.front() == '0') return false;
  return std::all_of(digits.begin(), digits.end(),
                     [](char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; });
}

PersonaPolicy persona_policy(PersonaName name) {
  using A = AttributeType;
  switch (name) {
    case PersonaName::PrivateUser:
      return {name, {A::Languages, A::Hobbies, A::Habits}};
    case PersonaName::Medical:
      return {name,
              {A::Age, A::Gender, A::Languages, A::HasChildren, A::Habits, A::Health, A::Occupation}};
    case PersonaName::Ecommerce:
      return {name,
              {A::Name, A::Location, A::Languages, A::Email, A::CreditCard, A::PhoneNumber}};
  }
  return {name, {}};
}

std::string trim(std::string_view text) {
  auto is_space = [](unsigned char c) { return std::isspace(c) != 0; };
  std::size_t begin = 0;
  std::size_t end = text.size();
  while (begin < end && is_space(static_cast<unsigned char>(text[begin]))) ++begin;
  while (end > begin && is_space(static_cast<unsigned char>(text[end - 1]))) --end;
  return std::string(text.substr(begin, end - begin));
}

void validate(const PrivacyProfile& profile) {
  if (trim(profile.text).empty()) throw ValidationError("privacy profile text is empty");
  const bool synthetic = profile.source == ProfileSource::Synthetic;
  if (synthetic && !profile.tone) throw ValidationError("synthetic profile is missing its tone");
  if (!synthetic && profile.tone) throw ValidationError("only synthetic profiles carry a tone");
}

void validate(const PersonRecord& person) {
  if (!is_valid_person_id(person.id)) {
    throw ValidationError("invalid person id '" + person.id + "'");
  }
  std::set<std::pair<AttributeType, std::string>> seen;
  for (const auto& inst : person.attributes) {
    if (inst.owner_id != person.id) {
      throw ValidationError("attribute owner '" + inst.owner_id + "' does not match person '" +
                            person.id + "'");
    }
    if (trim(inst.value).empty()) {
      throw ValidationError("empty value for " + std::string(to_string(inst.type)) + " of " +
                            person.id);
    }
    if (!seen.emplace(inst.type, inst.value).second) {
      throw ValidationError("duplicate " + std::string(to_string(inst.type)) + " '" + inst.value +
                            "' for " + person.id);
    }
  }
}

void validate(const QueryRecord& record) {
  if (record.id.empty()) throw ValidationError("record id is empty");
  if (trim(record.query).empty()) throw ValidationError("query is empty");
  std::set<std::string> ids;
  for (const auto& person : record.people) {
    validate(person);
    if (!ids.insert(person.id).second) {
      throw ValidationError("duplicate person id '" + person.id + "'");
    }
  }
  validate(record.profile);
}

std::size_t count_instances(const std::vector<PersonRecord>& people) noexcept {
  std::size_t n = 0;
  for (const auto& p : people) n += p.attributes.size();
  return n;
}

std::uint64_t derive_seed(std::uint64_t seed, std::string_view record_id) noexcept {
  // FNV-1a over the id, then a splitmix64 finaliser mixed with the batch seed.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : record_id) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::uint64_t z = h ^ (seed + 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double authorise_probability(AttributeType type) noexcept {
  return (type == AttributeType::Occupation || type == AttributeType::Languages) ? 0.1 : 0.5;
}

std::vector<PersonRecord> sample_disclosures(std::vector<PersonRecord> people, std::uint64_t seed) {
  Rng rng(seed);
  for (auto& person : people) {
    for (auto& inst : person.attributes) {
      inst.disclosure = bernoulli(rng, authorise_probability(inst.type)) ? Disclosure::Authorised
                                                                         : Disclosure::Protected;
    }
  }
  return people;
}

std::vector<PersonRecord> apply_persona(std::vector<PersonRecord> people, const PersonaPolicy& policy) {
  for (auto& person : people) {
    for (auto& inst : person.attributes) {
      inst.disclosure = policy.shares(inst.type) ? Disclosure::Authorised : Disclosure::Protected;
    }
  }
  return people;
}

}  // namespace privgate
