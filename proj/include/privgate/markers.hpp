#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace privgate {

// Field markers of the prompt protocol. Bit-exact.
namespace marker {
inline constexpr std::string_view kUserQuery = "[[[ ### userQuery ### ]]]";
inline constexpr std::string_view kUserPrivacyProfile = "[[[ ### userPrivacyProfile ### ]]]";
inline constexpr std::string_view kCreatedPrompt = "[[[ ### createdPrompt ### ]]]";
inline constexpr std::string_view kAnswerFromAssistant = "[[[ ### answerFromAssistant ### ]]]";
inline constexpr std::string_view kCompleted = "[[[ ### completed ### ]]]";
inline constexpr std::string_view kRationale = "[[[ ### rationale ### ]]]";
inline constexpr std::string_view kLabel = "[[[ ### label ### ]]]";
inline constexpr std::string_view kYes = "[[yes]]";
inline constexpr std::string_view kNo = "[[no]]";
}  // namespace marker

// Drops a leading <think>...</think> reasoning block, if closed.
std::string_view strip_reasoning(std::string_view raw) noexcept;

// True when text carries "[[[" or "###".
bool contains_protocol_marker(std::string_view text) noexcept;

struct YesNoVerdict {
  bool yes = false;
  std::size_t position = 0;  // offset of the deciding marker in the input
};

// Last occurrence among [[yes]] / [[no]].
std::optional<YesNoVerdict> find_last_yes_no(std::string_view raw) noexcept;

struct RejectorOutput {
  bool paraphrase = false;
  std::string rationale;
};

// Paraphrase iff the last verdict marker is [[yes]]; rationale is the text
// before it with field markers removed. ParseError without a marker.
RejectorOutput parse_rejector_output(std::string_view raw);

struct ParaphraserOutput {
  std::string text;
  std::string rationale;
};

// Content between the createdPrompt and completed markers, trimmed.
// ParseError if either marker is missing or the text is empty or still
// carries protocol markers.
ParaphraserOutput parse_paraphraser_output(std::string_view raw);

// Content of the outermost [[ ... ]] span, trimmed. ParseError if none.
std::string extract_outermost_brackets(std::string_view raw);

// 'A' or 'B' from the last [[A]] / [[B]] token.
char parse_pairwise_choice(std::string_view raw);

// Last [[<integer>]] token; must lie in 1..4 (no clamping).
int parse_absolute_rating(std::string_view raw);

// True iff the first digit is '1'. ParseError without digits.
bool parse_technical_label(std::string_view raw);

// True iff the first standalone 'A'/'B' letter is 'A'. ParseError if none.
bool parse_private_label(std::string_view raw);

}  // namespace privgate
