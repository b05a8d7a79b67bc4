#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "privgate/backend.hpp"
#include "privgate/core_types.hpp"

namespace privgate {

using TemplateValues = std::map<std::string, std::string, std::less<>>;

// Replaces {name} placeholders present in `values` in a single left-to-right
// pass; substituted text is never rescanned and unknown braces stay as-is.
std::string render_template(std::string_view tmpl, const TemplateValues& values);

struct FewShotExample {
  TemplateValues inputs;
  std::string output;
};

// A pipeline stage prompt: system instructions, a user-turn template and
// in-context examples replayed as user/assistant turns.
struct StagePrompt {
  std::string system;
  std::string user;
  std::vector<FewShotExample> examples;

  std::vector<ChatMessage> messages(const TemplateValues& inputs) const;
};

struct ToneGuide {
  std::string description;
  std::vector<std::string> examples;
};

struct PromptLibrary {
  int version = 1;
  StagePrompt rejector;
  StagePrompt paraphraser;
  StagePrompt aggregator;
  std::string leakage;
  std::string pairwise_judge;
  std::string absolute_judge;
  std::string filter_technical;
  std::string filter_private;
  std::string extraction;
  std::string extraction_examples;
  std::string profile_generation;
  std::map<ProfileTone, ToneGuide> tones;
  std::vector<std::string> review_keywords;

  static const PromptLibrary& builtin();
  // Files present in `dir` (same names as under assets/prompts) override the
  // builtin copies.
  static PromptLibrary load(const std::optional<std::filesystem::path>& dir);
};

}  // namespace privgate
