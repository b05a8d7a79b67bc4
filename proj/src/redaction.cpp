#include "privgate/redaction.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <regex>

#include "privgate/log.hpp"

namespace privgate {

std::string_view to_string(EntityClass cls) noexcept {
  switch (cls) {
    case EntityClass::Email: return "EMAIL";
    case EntityClass::Url: return "URL";
    case EntityClass::CreditCard: return "CREDIT_CARD";
    case EntityClass::Phone: return "PHONE";
    case EntityClass::Id: return "ID";
    case EntityClass::Person: return "PERSON";
  }
  return "";
}

bool luhn_valid(std::string_view digits) noexcept {
  int sum = 0;
  bool twice = false;
  std::size_t count = 0;
  for (auto it = digits.rbegin(); it != digits.rend(); ++it) {
    if (!std::isdigit(static_cast<unsigned char>(*it))) continue;
    int d = *it - '0';
    if (twice) {
      d *= 2;
      if (d > 9) d -= 9;
    }
    sum += d;
    twice = !twice;
    ++count;
  }
  return count > 0 && sum % 10 == 0;
}

namespace {

bool is_word_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

bool bounded(std::string_view text, std::size_t begin, std::size_t end) {
  return (begin == 0 || !is_word_char(text[begin - 1])) && (end >= text.size() || !is_word_char(text[end]));
}

std::size_t count_digits(std::string_view s) {
  return static_cast<std::size_t>(
      std::count_if(s.begin(), s.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); }));
}

struct Pattern {
  EntityClass cls;
  std::regex re;
};

const std::vector<Pattern>& patterns() {
  static const std::vector<Pattern> p = [] {
    const auto flags = std::regex::ECMAScript | std::regex::optimize;
    std::vector<Pattern> out;
    out.push_back({EntityClass::Email,
                   std::regex(R"([A-Za-z0-9._%+\-]+@[A-Za-z0-9\-]+(\.[A-Za-z0-9\-]+)*\.[A-Za-z]{2,})", flags)});
    out.push_back({EntityClass::Url, std::regex(R"((https?://|www\.)[^\s<>"']+)", flags | std::regex::icase)});
    out.push_back({EntityClass::CreditCard, std::regex(R"(\d([ \-]?\d){12,18})", flags)});
    out.push_back({EntityClass::Phone,
                   std::regex(R"((\+\d{1,3}[ .\-]?)?(\(\d{1,4}\)[ .\-]?)?\d{2,4}([ .\-]\d{2,4}){1,3})", flags)});
    out.push_back({EntityClass::Id, std::regex(R"([A-Z]{1,3}\d{6,9})", flags)});
    return out;
  }();
  return p;
}

// Trailing sentence punctuation is not part of a URL.
std::size_t trim_url_end(std::string_view text, std::size_t begin, std::size_t end) {
  while (end > begin && std::string_view(".,;:!?)]}").find(text[end - 1]) != std::string_view::npos) --end;
  return end;
}

bool accept(EntityClass cls, std::string_view text, std::size_t begin, std::size_t& end) {
  const std::string_view match = text.substr(begin, end - begin);
  switch (cls) {
    case EntityClass::Email:
      return true;
    case EntityClass::Url:
      end = trim_url_end(text, begin, end);
      return end > begin;
    case EntityClass::CreditCard: {
      const std::size_t n = count_digits(match);
      return n >= 13 && n <= 19 && bounded(text, begin, end) && luhn_valid(match);
    }
    case EntityClass::Phone:
      return count_digits(match) >= 7 && bounded(text, begin, end);
    case EntityClass::Id:
      return bounded(text, begin, end);
    case EntityClass::Person:
      return bounded(text, begin, end);
  }
  return false;
}

}  // namespace

std::vector<EntitySpan> detect_entities(std::string_view text, const NamePool& pool) {
  std::vector<EntitySpan> spans;
  std::vector<bool> taken(text.size(), false);
  auto claim = [&](EntityClass cls, std::size_t begin, std::size_t end) {
    if (std::any_of(taken.begin() + static_cast<std::ptrdiff_t>(begin),
                    taken.begin() + static_cast<std::ptrdiff_t>(end), [](bool t) { return t; })) {
      return;
    }
    std::fill(taken.begin() + static_cast<std::ptrdiff_t>(begin), taken.begin() + static_cast<std::ptrdiff_t>(end),
              true);
    spans.push_back({cls, begin, end});
  };

  const std::string owned(text);
  for (const auto& [cls, re] : patterns()) {
    for (auto it = std::sregex_iterator(owned.begin(), owned.end(), re); it != std::sregex_iterator(); ++it) {
      const auto begin = static_cast<std::size_t>(it->position());
      std::size_t end = begin + static_cast<std::size_t>(it->length());
      if (accept(cls, text, begin, end)) claim(cls, begin, end);
    }
  }
  for (const auto& name : pool.names()) {
    for (auto pos = text.find(name); pos != std::string_view::npos; pos = text.find(name, pos + 1)) {
      std::size_t end = pos + name.size();
      if (accept(EntityClass::Person, text, pos, end)) claim(EntityClass::Person, pos, end);
    }
  }

  std::sort(spans.begin(), spans.end(), [](const EntitySpan& a, const EntitySpan& b) { return a.begin < b.begin; });
  return spans;
}

Redaction baseline_redact(std::string_view text, const NamePool& pool) {
  Redaction out;
  std::map<std::pair<EntityClass, std::string>, std::string> assigned;
  std::map<EntityClass, int> counters;

  std::size_t cursor = 0;
  for (const auto& span : detect_entities(text, pool)) {
    out.text.append(text.substr(cursor, span.begin - cursor));
    std::string value(text.substr(span.begin, span.end - span.begin));
    auto [it, fresh] = assigned.try_emplace({span.cls, value});
    if (fresh) {
      std::string placeholder;
      do {
        placeholder = "<" + std::string(to_string(span.cls)) + "_" + std::to_string(++counters[span.cls]) + ">";
      } while (text.find(placeholder) != std::string_view::npos);
      it->second = placeholder;
      out.mapping.emplace(placeholder, value);
    }
    out.text.append(it->second);
    cursor = span.end;
  }
  out.text.append(text.substr(cursor));
  return out;
}

std::string baseline_restore(std::string_view answer, const std::map<std::string, std::string>& mapping) {
  std::string out;
  out.reserve(answer.size());
  std::size_t i = 0;
  while (i < answer.size()) {
    if (answer[i] == '<') {
      std::size_t j = i + 1;
      while (j < answer.size() && (std::isupper(static_cast<unsigned char>(answer[j])) || answer[j] == '_' ||
                                   std::isdigit(static_cast<unsigned char>(answer[j])))) {
        ++j;
      }
      if (j < answer.size() && answer[j] == '>' && j > i + 1) {
        const std::string token(answer.substr(i, j - i + 1));
        if (const auto it = mapping.find(token); it != mapping.end()) {
          out += it->second;
          i = j + 1;
          continue;
        }
        if (token.find('_') != std::string::npos && std::isdigit(static_cast<unsigned char>(token[token.size() - 2]))) {
          log().info("restore: unknown placeholder {} left intact", token);
        }
      }
    }
    out += answer[i++];
  }
  return out;
}

}  // namespace privgate
