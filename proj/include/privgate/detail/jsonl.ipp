#pragma once

#include "privgate/errors.hpp"

namespace privgate {

template <typename T, typename Reader>
std::vector<T> parse_jsonl(std::string_view text, Reader read) {
  std::vector<T> out;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    ++line_no;
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") != std::string_view::npos) {
      try {
        out.push_back(read(Json::parse(line)));
      } catch (const Json::exception& e) {
        throw SchemaError(line_no, std::string("invalid JSON: ") + e.what());
      } catch (const ValidationError& e) {
        throw SchemaError(line_no, e.what());
      }
    }
    if (end == text.size()) break;
    start = end + 1;
  }
  return out;
}

}  // namespace privgate
