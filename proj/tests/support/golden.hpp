#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "privgate/dataset.hpp"
#include "privgate/markers.hpp"
#include "privgate/serialization.hpp"
#include "testing.hpp"

namespace privgate::testing {

struct GoldenResult {
  std::string file;
  std::string category;
  bool ok = false;
  std::string detail;
};

// Runs the named parser over a raw model output and renders the outcome in
// the manifest's expectation shape.
inline Json run_golden_parser(const std::string& parser, const std::string& raw) {
  try {
    if (parser == "rejector") {
      const auto out = parse_rejector_output(raw);
      return Json{{"paraphrase", out.paraphrase}, {"rationale", out.rationale}};
    }
    if (parser == "paraphraser") {
      const auto out = parse_paraphraser_output(raw);
      return Json{{"text", out.text}, {"rationale", out.rationale}};
    }
    if (parser == "brackets") return Json{{"text", extract_outermost_brackets(raw)}};
    if (parser == "pairwise") return Json{{"choice", std::string(1, parse_pairwise_choice(raw))}};
    if (parser == "absolute") return Json{{"rating", parse_absolute_rating(raw)}};
    if (parser == "technical") return Json{{"technical", parse_technical_label(raw)}};
    if (parser == "private") return Json{{"private", parse_private_label(raw)}};
    if (parser == "extraction") {
      Json people = Json::array();
      for (const auto& p : parse_extraction_output(raw)) people.push_back(to_json(p));
      return Json{{"people", std::move(people)}};
    }
  } catch (const ParseError&) {
    return Json{{"error", "ParseError"}};
  }
  throw std::runtime_error("unknown golden parser '" + parser + "'");
}

inline std::vector<GoldenResult> run_goldens(const std::filesystem::path& dir) {
  const Json manifest = Json::parse(slurp(dir / "manifest.json"));
  std::vector<GoldenResult> results;
  for (const auto& c : manifest.at("cases")) {
    GoldenResult r;
    r.file = c.at("file").get<std::string>();
    r.category = c.at("category").get<std::string>();
    const std::string raw = slurp(dir / r.file);
    const Json got = run_golden_parser(c.at("parser").get<std::string>(), raw);
    const std::string want_text = c.at("expect").dump();
    const std::string got_text = got.dump();
    r.ok = want_text == got_text;
    if (!r.ok) r.detail = "expected " + want_text + " got " + got_text;
    results.push_back(std::move(r));
  }
  return results;
}

}  // namespace privgate::testing
