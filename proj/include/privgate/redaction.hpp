#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "privgate/name_pool.hpp"

namespace privgate {

// Entity classes detected by the rule-based pseudonymisation baseline, in
// match priority order.
enum class EntityClass { Email, Url, CreditCard, Phone, Id, Person };

std::string_view to_string(EntityClass cls) noexcept;

struct EntitySpan {
  EntityClass cls;
  std::size_t begin;
  std::size_t end;
};

// Non-overlapping detections, ordered by position.
std::vector<EntitySpan> detect_entities(std::string_view text, const NamePool& pool = NamePool::builtin());

bool luhn_valid(std::string_view digits) noexcept;

struct Redaction {
  std::string text;
  std::map<std::string, std::string> mapping;  // "<EMAIL_1>" -> "a@b.com"
};

// Each distinct detected value gets "<CLASS_k>", k counting per class from 1
// and skipping placeholders already present in the input.
Redaction baseline_redact(std::string_view text, const NamePool& pool = NamePool::builtin());

// Single left-to-right pass; placeholders missing from the mapping stay as
// they are and are logged.
std::string baseline_restore(std::string_view answer, const std::map<std::string, std::string>& mapping);

}  // namespace privgate
