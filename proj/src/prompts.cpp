#include "privgate/prompts.hpp"

#include <cctype>
#include <sstream>

#include <nlohmann/json.hpp>

#include "privgate/assets.hpp"
#include "privgate/errors.hpp"

namespace privgate {

using nlohmann::json;

std::string render_template(std::string_view tmpl, const TemplateValues& values) {
  std::string out;
  out.reserve(tmpl.size());
  std::size_t i = 0;
  while (i < tmpl.size()) {
    if (tmpl[i] == '{') {
      std::size_t j = i + 1;
      while (j < tmpl.size() &&
             (std::islower(static_cast<unsigned char>(tmpl[j])) || tmpl[j] == '_')) {
        ++j;
      }
      if (j < tmpl.size() && tmpl[j] == '}' && j > i + 1) {
        if (auto it = values.find(tmpl.substr(i + 1, j - i - 1)); it != values.end()) {
          out += it->second;
          i = j + 1;
          continue;
        }
      }
    }
    out += tmpl[i++];
  }
  return out;
}

std::vector<ChatMessage> StagePrompt::messages(const TemplateValues& inputs) const {
  std::vector<ChatMessage> out;
  out.push_back({MessageRole::System, system});
  for (const auto& ex : examples) {
    out.push_back({MessageRole::User, render_template(user, ex.inputs)});
    out.push_back({MessageRole::Assistant, ex.output});
  }
  out.push_back({MessageRole::User, render_template(user, inputs)});
  return out;
}

namespace {

std::string chomp(std::string text) {
  while (!text.empty() && (text.back() == '\n' || text.back() == '\r')) text.pop_back();
  return text;
}

std::vector<FewShotExample> parse_examples(const json& array, std::initializer_list<const char*> keys) {
  std::vector<FewShotExample> out;
  for (const auto& item : array) {
    FewShotExample ex;
    for (const char* key : keys) ex.inputs[key] = item.at(key).get<std::string>();
    ex.output = item.at("output").get<std::string>();
    out.push_back(std::move(ex));
  }
  return out;
}

PromptLibrary load_library(const std::optional<std::filesystem::path>& dir) {
  auto read = [&](std::string_view file) {
    if (dir && std::filesystem::exists(*dir / std::string(file))) return chomp(load_asset(file, dir));
    return chomp(load_asset("prompts/" + std::string(file)));
  };

  PromptLibrary lib;
  try {
    const json examples = json::parse(read("pipeline.examples.json"));
    lib.version = examples.value("version", 1);
    lib.rejector = {read("rejector.system.txt"), read("rejector.user.txt"),
                    parse_examples(examples.at("rejector"), {"query", "profile"})};
    lib.paraphraser = {read("paraphraser.system.txt"), read("paraphraser.user.txt"),
                       parse_examples(examples.at("paraphraser"), {"query", "profile"})};
    lib.aggregator = {read("aggregator.system.txt"), read("aggregator.user.txt"),
                      parse_examples(examples.at("aggregator"), {"query_modified", "response", "query"})};

    const json tones = json::parse(read("profile_tones.json"));
    for (ProfileTone tone : kAllTones) {
      const json& node = tones.at(std::string(to_string(tone)));
      lib.tones[tone] = ToneGuide{node.at("description").get<std::string>(),
                                  node.at("examples").get<std::vector<std::string>>()};
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed prompt asset: ") + e.what());
  }

  lib.leakage = read("leakage.txt");
  lib.pairwise_judge = read("pairwise_judge.txt");
  lib.absolute_judge = read("absolute_judge.txt");
  lib.filter_technical = read("filter_technical.txt");
  lib.filter_private = read("filter_private.txt");
  lib.extraction = read("extraction.txt");
  lib.extraction_examples = read("extraction.examples.txt");
  lib.profile_generation = read("profile_generation.txt");

  std::istringstream keywords(read("review_keywords.txt"));
  for (std::string line; std::getline(keywords, line);) {
    if (auto kw = trim(line); !kw.empty()) lib.review_keywords.push_back(std::move(kw));
  }
  return lib;
}

}  // namespace

const PromptLibrary& PromptLibrary::builtin() {
  static const PromptLibrary lib = load_library(std::nullopt);
  return lib;
}

PromptLibrary PromptLibrary::load(const std::optional<std::filesystem::path>& dir) {
  return load_library(dir);
}

}  // namespace privgate
