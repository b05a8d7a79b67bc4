#include "privgate/assets.hpp"

#include <fstream>
#include <sstream>

#include "privgate/errors.hpp"

namespace privgate {

std::optional<std::string_view> builtin_asset(std::string_view name) {
  for (const auto& asset : detail::embedded_assets()) {
    if (asset.name == name) return asset.content;
  }
  return std::nullopt;
}

std::vector<std::string> builtin_asset_names() {
  std::vector<std::string> names;
  for (const auto& asset : detail::embedded_assets()) names.emplace_back(asset.name);
  return names;
}

std::string load_asset(std::string_view name, const std::optional<std::filesystem::path>& override_dir) {
  if (override_dir) {
    const auto path = *override_dir / std::filesystem::path(std::string(name));
    if (std::filesystem::exists(path)) {
      std::ifstream in(path, std::ios::binary);
      if (!in) throw ConfigError("cannot read asset " + path.string());
      std::ostringstream buffer;
      buffer << in.rdbuf();
      return buffer.str();
    }
  }
  if (auto builtin = builtin_asset(name)) return std::string(*builtin);
  throw ConfigError("unknown asset '" + std::string(name) + "'");
}

}  // namespace privgate
