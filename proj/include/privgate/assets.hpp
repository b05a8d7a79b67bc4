#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace privgate {

namespace detail {
struct EmbeddedAsset {
  std::string_view name;
  std::string_view content;
};
const std::vector<EmbeddedAsset>& embedded_assets();
}  // namespace detail

// Assets compiled into the library from the repository's assets/ directory,
// addressed by relative path ("prompts/rejector.system.txt", "names.txt").
std::optional<std::string_view> builtin_asset(std::string_view name);
std::vector<std::string> builtin_asset_names();

// Reads `name` from `override_dir` when given and present, else the builtin.
// Throws ConfigError when neither exists.
std::string load_asset(std::string_view name,
                       const std::optional<std::filesystem::path>& override_dir = std::nullopt);

}  // namespace privgate
