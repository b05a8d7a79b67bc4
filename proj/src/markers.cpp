#include "privgate/markers.hpp"

#include <cctype>

#include "privgate/core_types.hpp"
#include "privgate/errors.hpp"

namespace privgate {

namespace {

bool is_alnum(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

// Removes every occurrence of `needle` from `text`.
std::string erase_all(std::string text, std::string_view needle) {
  for (auto pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos)) {
    text.erase(pos, needle.size());
  }
  return text;
}

// Last occurrence of `needle` that starts before `limit`.
std::size_t rfind_before(std::string_view text, std::string_view needle, std::size_t limit) {
  if (limit < needle.size()) return std::string_view::npos;
  return text.rfind(needle, limit - needle.size());
}

}  // namespace

std::string_view strip_reasoning(std::string_view raw) noexcept {
  const std::size_t first = raw.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return raw;
  if (raw.substr(first).starts_with("<think>")) {
    const auto close = raw.find("</think>");
    if (close != std::string_view::npos) return raw.substr(close + 8);
  }
  return raw;
}

bool contains_protocol_marker(std::string_view text) noexcept {
  return text.find("[[[") != std::string_view::npos || text.find("###") != std::string_view::npos;
}

std::optional<YesNoVerdict> find_last_yes_no(std::string_view raw) noexcept {
  const auto yes = raw.rfind(marker::kYes);
  const auto no = raw.rfind(marker::kNo);
  if (yes == std::string_view::npos && no == std::string_view::npos) return std::nullopt;
  if (no == std::string_view::npos || (yes != std::string_view::npos && yes > no)) {
    return YesNoVerdict{true, yes};
  }
  return YesNoVerdict{false, no};
}

RejectorOutput parse_rejector_output(std::string_view raw) {
  const std::string_view body = strip_reasoning(raw);
  const auto verdict = find_last_yes_no(body);
  if (!verdict) throw ParseError("rejector output carries neither [[yes]] nor [[no]]");

  std::string rationale(body.substr(0, verdict->position));
  if (const auto start = rationale.rfind(marker::kRationale); start != std::string::npos) {
    rationale.erase(0, start + marker::kRationale.size());
  }
  rationale = erase_all(std::move(rationale), marker::kLabel);
  return RejectorOutput{verdict->yes, trim(rationale)};
}

ParaphraserOutput parse_paraphraser_output(std::string_view raw) {
  const std::string_view body = strip_reasoning(raw);
  const auto completed = body.rfind(marker::kCompleted);
  if (completed == std::string_view::npos) {
    throw ParseError("paraphraser output lacks the completed marker");
  }
  const auto created = rfind_before(body, marker::kCreatedPrompt, completed);
  if (created == std::string_view::npos) {
    throw ParseError("paraphraser output lacks the createdPrompt marker before completion");
  }
  const std::size_t text_begin = created + marker::kCreatedPrompt.size();
  ParaphraserOutput out;
  out.text = trim(body.substr(text_begin, completed - text_begin));
  if (out.text.empty()) throw ParseError("paraphraser produced an empty prompt");
  if (contains_protocol_marker(out.text)) {
    throw ParseError("created prompt still contains protocol markers");
  }

  std::string_view before = body.substr(0, created);
  if (const auto r = before.rfind(marker::kRationale); r != std::string_view::npos) {
    before = before.substr(r + marker::kRationale.size());
  }
  out.rationale = trim(before);
  return out;
}

std::string extract_outermost_brackets(std::string_view raw) {
  const std::string_view body = strip_reasoning(raw);
  const auto open = body.find("[[");
  if (open == std::string_view::npos) throw ParseError("no [[ ... ]] span in output");
  int depth = 1;
  std::size_t i = open + 2;
  while (i < body.size()) {
    if (body.compare(i, 2, "[[") == 0) {
      ++depth;
      i += 2;
    } else if (body.compare(i, 2, "]]") == 0) {
      if (--depth == 0) {
        std::string inner = trim(body.substr(open + 2, i - open - 2));
        if (inner.empty()) throw ParseError("empty [[ ]] span in output");
        return inner;
      }
      i += 2;
    } else {
      ++i;
    }
  }
  throw ParseError("unbalanced [[ ... ]] span in output");
}

char parse_pairwise_choice(std::string_view raw) {
  const std::string_view body = strip_reasoning(raw);
  const auto a = body.rfind("[[A]]");
  const auto b = body.rfind("[[B]]");
  if (a == std::string_view::npos && b == std::string_view::npos) {
    throw ParseError("judge output carries neither [[A]] nor [[B]]");
  }
  if (b == std::string_view::npos || (a != std::string_view::npos && a > b)) return 'A';
  return 'B';
}

int parse_absolute_rating(std::string_view raw) {
  const std::string_view body = strip_reasoning(raw);
  std::optional<long> last;
  for (std::size_t open = body.find("[["); open != std::string_view::npos;
       open = body.find("[[", open + 1)) {
    const auto close = body.find("]]", open + 2);
    if (close == std::string_view::npos) break;
    const std::string inner = trim(body.substr(open + 2, close - open - 2));
    if (inner.empty() || inner.size() > 9) continue;
    std::size_t k = (inner[0] == '-' || inner[0] == '+') ? 1 : 0;
    if (k == inner.size()) continue;
    bool digits = true;
    for (std::size_t j = k; j < inner.size(); ++j) {
      digits = digits && std::isdigit(static_cast<unsigned char>(inner[j])) != 0;
    }
    if (digits) last = std::stol(inner);
  }
  if (!last) throw ParseError("judge output carries no [[<rating>]] token");
  if (*last < 1 || *last > 4) {
    throw ParseError("rating " + std::to_string(*last) + " lies outside 1..4");
  }
  return static_cast<int>(*last);
}

bool parse_technical_label(std::string_view raw) {
  const std::string_view body = strip_reasoning(raw);
  for (char c : body) {
    if (std::isdigit(static_cast<unsigned char>(c))) return c == '1';
  }
  throw ParseError("technical filter output has no digit");
}

bool parse_private_label(std::string_view raw) {
  const std::string_view body = strip_reasoning(raw);
  for (std::size_t i = 0; i < body.size(); ++i) {
    const char c = body[i];
    if (c != 'A' && c != 'B') continue;
    const bool left_ok = i == 0 || !is_alnum(body[i - 1]);
    const bool right_ok = i + 1 == body.size() || !is_alnum(body[i + 1]);
    if (left_ok && right_ok) return c == 'A';
  }
  throw ParseError("private-communication filter output has no standalone A/B");
}

}  // namespace privgate
