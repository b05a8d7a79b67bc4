#include "privgate/name_pool.hpp"

#include <sstream>

#include "privgate/assets.hpp"
#include "privgate/core_types.hpp"
#include "privgate/errors.hpp"

namespace privgate {

NamePool::NamePool(std::vector<std::string> names) : names_(std::move(names)) {
  if (names_.size() != kSize) {
    throw ValidationError("name pool must hold " + std::to_string(kSize) + " names, got " +
                          std::to_string(names_.size()));
  }
  for (const auto& n : names_) {
    if (n.empty()) throw ValidationError("name pool contains an empty entry");
    if (!index_.insert(n).second) throw ValidationError("duplicate name in pool: '" + n + "'");
  }
}

bool NamePool::contains(std::string_view name) const { return index_.count(std::string(name)) > 0; }

NamePool NamePool::load(const std::optional<std::filesystem::path>& dir) {
  std::istringstream in(load_asset("names.txt", dir));
  std::vector<std::string> names;
  for (std::string line; std::getline(in, line);) {
    if (auto name = trim(line); !name.empty()) names.push_back(std::move(name));
  }
  return NamePool(std::move(names));
}

const NamePool& NamePool::builtin() {
  static const NamePool pool = load(std::nullopt);
  return pool;
}

}  // namespace privgate
