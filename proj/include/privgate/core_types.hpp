#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace privgate {

// The closed attribute taxonomy used for structured leakage accounting.
enum class AttributeType {
  Name,
  PassportId,
  Email,
  PhoneNumber,
  CreditCard,
  Url,
  Age,
  Gender,
  Nationality,
  MaritalStatus,
  Location,
  Occupation,
  Education,
  Work,
  Health,
  Hobbies,
  Habits,
  Religion,
  Languages,
  HasChildren,
  Connections,
};

inline constexpr std::array<AttributeType, 21> kAllAttributeTypes = {
    AttributeType::Name,        AttributeType::PassportId,    AttributeType::Email,
    AttributeType::PhoneNumber, AttributeType::CreditCard,    AttributeType::Url,
    AttributeType::Age,         AttributeType::Gender,        AttributeType::Nationality,
    AttributeType::MaritalStatus, AttributeType::Location,    AttributeType::Occupation,
    AttributeType::Education,   AttributeType::Work,          AttributeType::Health,
    AttributeType::Hobbies,     AttributeType::Habits,        AttributeType::Religion,
    AttributeType::Languages,   AttributeType::HasChildren,   AttributeType::Connections,
};

enum class AttributeCategory { HardPII, Demographics, Biographical, SoftPII };

enum class Disclosure { Protected, Authorised };

enum class ProfileTone { Basic, Brief, Aggressive, Lazy, Laidback, Informal };

inline constexpr std::array<ProfileTone, 6> kAllTones = {
    ProfileTone::Basic, ProfileTone::Brief,    ProfileTone::Aggressive,
    ProfileTone::Lazy,  ProfileTone::Laidback, ProfileTone::Informal,
};

enum class ProfileSource { Synthetic, Persona, UserWritten };

enum class PersonaName { PrivateUser, Medical, Ecommerce };

inline constexpr std::array<PersonaName, 3> kAllPersonas = {
    PersonaName::PrivateUser, PersonaName::Medical, PersonaName::Ecommerce};

// Canonical wire names ("phone number", "passport/id", ...). Parsing is strict:
// anything outside the canonical set throws ValidationError.
std::string_view to_string(AttributeType type) noexcept;
AttributeType parse_attribute_type(std::string_view text);

std::string_view to_string(AttributeCategory category) noexcept;
std::string_view to_string(Disclosure disclosure) noexcept;
Disclosure parse_disclosure(std::string_view text);
std::string_view to_string(ProfileTone tone) noexcept;
ProfileTone parse_tone(std::string_view text);
std::string_view to_string(ProfileSource source) noexcept;
ProfileSource parse_profile_source(std::string_view text);
std::string_view to_string(PersonaName name) noexcept;
PersonaName parse_persona_name(std::string_view text);

AttributeCategory category_of(AttributeType type) noexcept;

inline constexpr std::string_view kUserId = "USER";

// "USER" or "PERSON <n>" with n >= 1 and no leading zeros.
bool is_valid_person_id(std::string_view id) noexcept;

struct AttributeInstance {
  std::string owner_id;
  AttributeType type = AttributeType::Name;
  std::string value;
  Disclosure disclosure = Disclosure::Protected;

  friend bool operator==(const AttributeInstance&, const AttributeInstance&) = default;
};

struct PersonRecord {
  std::string id;
  std::vector<AttributeInstance> attributes;

  friend bool operator==(const PersonRecord&, const PersonRecord&) = default;
};

struct PrivacyProfile {
  std::string text;
  std::optional<ProfileTone> tone;
  ProfileSource source = ProfileSource::UserWritten;

  friend bool operator==(const PrivacyProfile&, const PrivacyProfile&) = default;
};

struct QueryRecord {
  std::string id;
  std::string query;
  std::vector<PersonRecord> people;
  PrivacyProfile profile;

  friend bool operator==(const QueryRecord&, const QueryRecord&) = default;
};

struct PersonaPolicy {
  PersonaName name = PersonaName::PrivateUser;
  std::set<AttributeType> shared;

  bool shares(AttributeType type) const { return shared.contains(type); }
};

PersonaPolicy persona_policy(PersonaName name);

// Validation helpers throw ValidationError describing the first violation.
void validate(const PrivacyProfile& profile);
void validate(const PersonRecord& person);
void validate(const QueryRecord& record);

std::string trim(std::string_view text);

std::size_t count_instances(const std::vector<PersonRecord>& people) noexcept;

// Per-record seed so that batch order never changes sampled output.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view record_id) noexcept;

// Marks every instance Authorised with probability 0.1 (occupation, languages)
// or 0.5 (all other types), persons then attributes in stored order.
std::vector<PersonRecord> sample_disclosures(std::vector<PersonRecord> people, std::uint64_t seed);

double authorise_probability(AttributeType type) noexcept;

// Shared types become Authorised, everything else Protected.
std::vector<PersonRecord> apply_persona(std::vector<PersonRecord> people, const PersonaPolicy& policy);

}  // namespace privgate
