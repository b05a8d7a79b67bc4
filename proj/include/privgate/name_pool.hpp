#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace privgate {

// Full names used as replacements during anonymisation and as the PERSON
// dictionary of the redaction baseline.
class NamePool {
 public:
  static constexpr std::size_t kSize = 1000;

  // ValidationError unless exactly kSize distinct, non-empty names.
  explicit NamePool(std::vector<std::string> names);

  static const NamePool& builtin();
  // One name per line; "names.txt" in `dir` overrides the builtin.
  static NamePool load(const std::optional<std::filesystem::path>& dir);

  [[nodiscard]] const std::vector<std::string>& names() const noexcept { return names_; }
  [[nodiscard]] std::size_t size() const noexcept { return names_.size(); }
  [[nodiscard]] const std::string& operator[](std::size_t i) const { return names_.at(i); }
  [[nodiscard]] bool contains(std::string_view name) const;

 private:
  std::vector<std::string> names_;
  std::unordered_set<std::string> index_;
};

}  // namespace privgate
