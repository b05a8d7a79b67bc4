#include "privgate/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <regex>
#include <set>

#include "privgate/log.hpp"
#include "privgate/markers.hpp"
#include "privgate/redaction.hpp"
#include "privgate/serialization.hpp"

namespace privgate {

namespace {

// Independent per-record streams for the construction stages.
constexpr std::uint64_t kPlaceholderSalt = 0x706c616365686f6cULL;
constexpr std::uint64_t kDisclosureSalt = 0x646973636c6f7375ULL;
constexpr std::uint64_t kToneSalt = 0x746f6e6573616d70ULL;
constexpr std::uint64_t kProfileSalt = 0x70726f66696c6567ULL;

std::string lower(std::string_view text) {
  std::string out(text);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

bool is_unknown(std::string_view value) { return value.empty() || lower(value) == "unknown"; }

template <typename Parse>
auto parse_twice(const ChatBackend& model, const std::string& prompt, double temperature, Parse parse)
    -> std::optional<decltype(parse(std::string_view{}))> {
  const std::vector<ChatMessage> messages{{MessageRole::User, prompt}};
  for (int attempt = 0; attempt < 2; ++attempt) {
    const std::string raw = model.chat(messages, CallOptions{temperature}).content;
    try {
      return parse(raw);
    } catch (const ParseError& e) {
      log().debug("unparseable {} output (attempt {}): {}", model.model_id(), attempt + 1, e.what());
    }
  }
  return std::nullopt;
}

}  // namespace

void validate(const PeepRecord& record) { validate(record.record); }

std::vector<PeepRecord> parse_corpus(std::string_view jsonl) {
  auto corpus = parse_jsonl<PeepRecord>(jsonl, [](const Json& node) { return peep_from_json(node); });
  // Duplicate ids are reported against the line that introduces them.
  std::set<std::string> seen;
  std::size_t line_no = 0;
  std::size_t index = 0;
  std::size_t start = 0;
  while (index < corpus.size() && start <= jsonl.size()) {
    auto end = jsonl.find('\n', start);
    if (end == std::string_view::npos) end = jsonl.size();
    ++line_no;
    if (jsonl.substr(start, end - start).find_first_not_of(" \t\r") != std::string_view::npos) {
      if (!seen.insert(corpus[index].record.id).second) {
        throw SchemaError(line_no, "duplicate record id '" + corpus[index].record.id + "'");
      }
      ++index;
    }
    start = end + 1;
  }
  return corpus;
}

std::vector<PeepRecord> load_corpus(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw StorageError("corpus file '" + path.string() + "' does not exist");
  return parse_corpus(read_text_file(path.string()));
}

std::string render_corpus(const std::vector<PeepRecord>& corpus) {
  std::string out;
  for (const auto& r : corpus) {
    validate(r);
    out += dump_line(to_json(r));
    out += '\n';
  }
  return out;
}

void save_corpus(const std::filesystem::path& path, const std::vector<PeepRecord>& corpus) {
  const std::string body = render_corpus(corpus);
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw StorageError("cannot open '" + tmp.string() + "' for writing");
    out << body;
    out.flush();
    if (!out) throw StorageError("write to '" + tmp.string() + "' failed");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw StorageError("cannot move corpus into '" + path.string() + "'");
  }
}

std::vector<RawConversation> parse_raw_conversations(std::string_view jsonl) {
  return parse_jsonl<RawConversation>(jsonl, [](const Json& node) { return conversation_from_json(node); });
}

std::vector<RawConversation> load_raw_conversations(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw StorageError("raw file '" + path.string() + "' does not exist");
  return parse_raw_conversations(read_text_file(path.string()));
}

bool filter_technical(const std::string& query, const ChatBackend& model, const PromptLibrary& prompts) {
  const auto label = parse_twice(model, render_template(prompts.filter_technical, {{"prompt", query}}),
                                 kDeterministicTemperature,
                                 [](std::string_view raw) { return parse_technical_label(strip_reasoning(raw)); });
  return label.value_or(false);
}

bool filter_private(const std::string& query, const ChatBackend& model, const PromptLibrary& prompts) {
  const auto label = parse_twice(model, render_template(prompts.filter_private, {{"prompt", query}}),
                                 kDeterministicTemperature,
                                 [](std::string_view raw) { return parse_private_label(strip_reasoning(raw)); });
  return label.value_or(false);
}

namespace {

std::optional<AttributeType> extraction_field(const std::string& key) {
  static const std::map<std::string, AttributeType, std::less<>> aliases = {
      {"link", AttributeType::Url},
      {"url", AttributeType::Url},
      {"passport", AttributeType::PassportId},
      {"phone", AttributeType::PhoneNumber},
      {"marital_status", AttributeType::MaritalStatus},
      {"has_children", AttributeType::HasChildren},
  };
  if (const auto it = aliases.find(key); it != aliases.end()) return it->second;
  try {
    return parse_attribute_type(key);
  } catch (const ValidationError&) {
    return std::nullopt;
  }
}

std::string clean_value(std::string_view value) {
  std::string v = trim(value);
  if (v.size() >= 2 && ((v.front() == '"' && v.back() == '"') || (v.front() == '\'' && v.back() == '\''))) {
    v = trim(std::string_view(v).substr(1, v.size() - 2));
  }
  return v;
}

std::string clean_key(std::string_view key) {
  std::string k;
  for (char c : key) {
    if (c != '*' && c != '`') k += c;
  }
  k = lower(trim(k));
  while (!k.empty() && (k.front() == '-' || k.front() == ' ')) k.erase(k.begin());
  return k;
}

// Drops UNKNOWN parts of a comma-separated sub-entry.
std::string drop_unknown_parts(std::string_view value) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (start <= value.size()) {
    auto end = value.find(',', start);
    if (end == std::string_view::npos) end = value.size();
    if (auto part = clean_value(value.substr(start, end - start)); !is_unknown(part)) parts.push_back(part);
    start = end + 1;
  }
  std::string out;
  for (const auto& p : parts) out += (out.empty() ? "" : ", ") + p;
  return out;
}

struct PersonBlock {
  PersonRecord person;
  std::vector<std::string> education;
  std::vector<std::string> work;
};

void add_instance(PersonRecord& person, AttributeType type, std::string value) {
  if (is_unknown(value)) return;
  const bool duplicate = std::any_of(person.attributes.begin(), person.attributes.end(), [&](const auto& a) {
    return a.type == type && a.value == value;
  });
  if (!duplicate) person.attributes.push_back({person.id, type, std::move(value), Disclosure::Protected});
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (const auto& p : parts) {
    if (!out.empty()) out += sep;
    out += p;
  }
  return out;
}

}  // namespace

std::vector<PersonRecord> parse_extraction_output(std::string_view raw) {
  std::vector<PersonBlock> blocks;
  PersonBlock* current = nullptr;
  // Field whose "--" sub-lines are being read, if any.
  AttributeType group = AttributeType::Name;
  bool grouped = false;

  std::size_t start = 0;
  const std::string_view text = strip_reasoning(raw);
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    const std::string line = trim(text.substr(start, end - start));
    start = end + 1;
    if (line.empty()) continue;

    const auto colon = line.find(':');
    if (line.rfind("--", 0) == 0) {
      if (!current || !grouped || colon == std::string::npos) continue;
      const AttributeType parent_type = group;
      const std::string sub_key = clean_value(std::string_view(line).substr(2, colon - 2));
      const std::string sub_value = clean_value(std::string_view(line).substr(colon + 1));
      if (parent_type == AttributeType::Connections) {
        if (is_valid_person_id(sub_key) && sub_key != current->person.id && !is_unknown(sub_value)) {
          add_instance(current->person, AttributeType::Connections, sub_key + ": " + sub_value);
        }
      } else if (parent_type == AttributeType::Education) {
        if (!is_unknown(sub_value)) current->education.push_back(sub_value);
      } else if (parent_type == AttributeType::Work) {
        if (auto v = drop_unknown_parts(sub_value); !v.empty()) current->work.push_back(std::move(v));
      }
      continue;
    }
    if (colon == std::string::npos) continue;

    const std::string key = clean_key(std::string_view(line).substr(0, colon));
    const std::string value = clean_value(std::string_view(line).substr(colon + 1));
    if (key == "id") {
      grouped = false;
      if (!is_valid_person_id(value)) {
        current = nullptr;
        continue;
      }
      auto it = std::find_if(blocks.begin(), blocks.end(), [&](const auto& b) { return b.person.id == value; });
      if (it == blocks.end()) {
        blocks.push_back(PersonBlock{PersonRecord{value, {}}, {}, {}});
        current = &blocks.back();
      } else {
        current = &*it;
      }
      continue;
    }
    if (!current) continue;
    grouped = false;
    const auto type = extraction_field(key);
    if (!type) continue;
    if (*type == AttributeType::Education) {
      group = *type;
      grouped = true;
      if (!is_unknown(value)) current->education.push_back(value);
    } else if (*type == AttributeType::Work) {
      group = *type;
      grouped = true;
      if (!is_unknown(value)) current->work.push_back(value);
    } else if (*type == AttributeType::Connections) {
      group = *type;
      grouped = true;
    } else {
      add_instance(current->person, *type, value);
    }
  }

  if (blocks.empty()) throw ParseError("no person block with a valid id line");
  std::vector<PersonRecord> people;
  for (auto& b : blocks) {
    if (!b.education.empty()) add_instance(b.person, AttributeType::Education, join(b.education, "; "));
    if (!b.work.empty()) add_instance(b.person, AttributeType::Work, join(b.work, "; "));
    people.push_back(std::move(b.person));
  }
  return people;
}

std::vector<PersonRecord> extract_persons(const std::string& query, const ChatBackend& model,
                                          const PromptLibrary& prompts) {
  const std::string prompt =
      render_template(prompts.extraction, {{"examples", prompts.extraction_examples}, {"question", query}});
  auto people = parse_twice(model, prompt, kDeterministicTemperature,
                            [](std::string_view raw) { return parse_extraction_output(raw); });
  if (!people) {
    log().warn("extraction produced no parseable person block; query skipped");
    return {};
  }
  return std::move(*people);
}

std::string scramble_characters(std::string_view value, Rng& rng) {
  std::string out(value);
  for (char& c : out) {
    const auto u = static_cast<unsigned char>(c);
    if (u >= 0x80) continue;
    if (std::isupper(u)) {
      c = static_cast<char>('A' + uniform_below(rng, 26));
    } else if (std::islower(u)) {
      c = static_cast<char>('a' + uniform_below(rng, 26));
    } else if (std::isdigit(u)) {
      c = static_cast<char>('0' + uniform_below(rng, 10));
    }
  }
  return out;
}

namespace {

bool is_scrambled_type(AttributeType type) {
  switch (type) {
    case AttributeType::PassportId:
    case AttributeType::Email:
    case AttributeType::PhoneNumber:
    case AttributeType::CreditCard:
    case AttributeType::Url:
      return true;
    default:
      return false;
  }
}

// Single pass, longest key first at each position, so replacements are
// never rewritten by later keys.
std::string replace_values(std::string_view text, const std::vector<std::pair<std::string, std::string>>& by_length) {
  std::string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    bool replaced = false;
    for (const auto& [from, to] : by_length) {
      if (text.compare(i, from.size(), from) == 0) {
        out += to;
        i += from.size();
        replaced = true;
        break;
      }
    }
    if (!replaced) out += text[i++];
  }
  return out;
}

}  // namespace

PeepRecord anonymise(const PeepRecord& record, const NamePool& pool, std::uint64_t seed) {
  Rng rng(derive_seed(seed, record.record.id));
  std::map<std::string, std::string> mapping;
  std::set<std::string> used_names;

  for (const auto& person : record.record.people) {
    for (const auto& inst : person.attributes) {
      if (mapping.count(inst.value)) continue;
      if (is_scrambled_type(inst.type)) {
        mapping.emplace(inst.value, scramble_characters(inst.value, rng));
      } else if (inst.type == AttributeType::Name) {
        std::string pick;
        do {
          pick = pool[uniform_below(rng, pool.size())];
        } while (pick == inst.value || used_names.count(pick));
        used_names.insert(pick);
        mapping.emplace(inst.value, std::move(pick));
      }
    }
  }

  std::vector<std::pair<std::string, std::string>> by_length(mapping.begin(), mapping.end());
  std::stable_sort(by_length.begin(), by_length.end(),
                   [](const auto& a, const auto& b) { return a.first.size() > b.first.size(); });

  PeepRecord out = record;
  if (by_length.empty()) return out;
  out.record.query = replace_values(record.record.query, by_length);
  out.record.profile.text = replace_values(record.record.profile.text, by_length);
  for (auto& person : out.record.people) {
    for (auto& inst : person.attributes) inst.value = replace_values(inst.value, by_length);
  }
  return out;
}

std::string disclosure_listing(const std::vector<PersonRecord>& people) {
  std::string out;
  for (const auto& person : people) {
    if (person.attributes.empty()) continue;
    if (!out.empty()) out += '\n';
    out += person.id == kUserId ? "USER (the person writing):\n" : person.id + ":\n";
    for (const auto& inst : person.attributes) {
      out += inst.disclosure == Disclosure::Protected ? "- do not share " : "- okay to share ";
      out += std::string(to_string(inst.type)) + ": " + inst.value + '\n';
    }
  }
  return out;
}

std::string tone_specification(ProfileTone tone, Rng& rng, const PromptLibrary& prompts) {
  const ToneGuide& guide = prompts.tones.at(tone);
  std::vector<std::string> pool = guide.examples;
  if (tone != ProfileTone::Basic) {
    const auto& basic = prompts.tones.at(ProfileTone::Basic).examples;
    pool.insert(pool.end(), basic.begin(), basic.end());
  }
  std::string out = "Write it in the following tone. " + guide.description + "\nHere are some example profiles:\n";
  for (int i = 0; i < 4 && !pool.empty(); ++i) {
    out += "[[" + pool[uniform_below(rng, pool.size())] + "]]\n";
  }
  return out;
}

std::string generate_profile_text(const std::vector<PersonRecord>& people, ProfileTone tone,
                                  const ChatBackend& model, std::uint64_t seed, const PromptLibrary& prompts) {
  if (count_instances(people) == 0) throw PreconditionError("generate_profile_text: no attribute instances");
  Rng rng(seed);
  const std::string prompt = render_template(
      prompts.profile_generation,
      {{"specification", tone_specification(tone, rng, prompts)}, {"profile", disclosure_listing(people)}});
  auto text = parse_twice(model, prompt, kGenerativeTemperature,
                          [](std::string_view raw) { return extract_outermost_brackets(strip_reasoning(raw)); });
  if (!text) throw ParseError("profile generation returned no [[ ]] span after retry");
  return std::move(*text);
}

std::string persona_profile_text(const PersonaPolicy& policy) {
  std::vector<std::string> names;
  for (AttributeType t : kAllAttributeTypes) {
    if (policy.shares(t)) names.emplace_back(to_string(t));
  }
  std::string list;
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (i > 0) list += i + 1 == names.size() ? " and " : ", ";
    list += names[i];
  }
  if (list.empty()) return "Do not share any personal information about me or the people I mention.";
  return "You may share information about my " + list +
         ", and the same for the people I mention. Keep every other personal detail private.";
}

std::size_t utf8_length(std::string_view text) noexcept {
  std::size_t n = 0;
  for (std::size_t i = 0; i < text.size();) {
    const auto c = static_cast<unsigned char>(text[i]);
    std::size_t width = 1;
    if (c >= 0xF0 && c < 0xF8) {
      width = 4;
    } else if (c >= 0xE0) {
      width = c < 0xF0 ? 3 : 1;
    } else if (c >= 0xC0) {
      width = 2;
    }
    bool valid = i + width <= text.size();
    for (std::size_t k = 1; valid && k < width; ++k) {
      valid = (static_cast<unsigned char>(text[i + k]) & 0xC0) == 0x80;
    }
    i += valid ? width : 1;
    ++n;
  }
  return n;
}

std::string merge_single_turn(const std::vector<Turn>& turns) {
  if (turns.empty() || turns.front().role != "user") {
    throw PreconditionError("merge_single_turn: the first turn must be a user turn");
  }
  const std::string& first = turns.front().text;
  const auto second = std::find_if(turns.begin() + 1, turns.end(), [](const Turn& t) { return t.role == "user"; });
  if (second == turns.end()) return first;
  const std::size_t n1 = utf8_length(first);
  const std::size_t n2 = utf8_length(second->text);
  if (n1 < kMergeShortTurn && n2 >= kMergeRatio * n1) return first + "\n\n" + second->text;
  return first;
}

ReprofileResult reprofile_with_persona(const std::vector<PeepRecord>& corpus, const PersonaPolicy& policy,
                                       ProfileTone tone, const ChatBackend& model, std::uint64_t seed,
                                       const PromptLibrary& prompts) {
  ReprofileResult result;
  for (const auto& rec : corpus) {
    PeepRecord out = rec;
    out.record.people = apply_persona(rec.record.people, policy);
    try {
      const std::string text =
          count_instances(out.record.people) == 0
              ? persona_profile_text(policy)
              : generate_profile_text(out.record.people, tone, model, derive_seed(seed ^ kProfileSalt, rec.record.id),
                                      prompts);
      out.record.profile = PrivacyProfile{text, std::nullopt, ProfileSource::Persona};
      validate(out);
      result.corpus.push_back(std::move(out));
    } catch (const ConfigError&) {
      throw;
    } catch (const Error& e) {
      log().warn("persona re-profiling failed for {}: {}", rec.record.id, e.what());
      result.failures.push_back({rec.record.id, std::string(e.kind()) + ": " + e.what()});
    }
  }
  if (!result.failures.empty()) {
    log().warn("persona re-profiling: {} of {} records failed", result.failures.size(), corpus.size());
  }
  return result;
}

std::vector<std::string> review_flags(std::string_view query, const std::vector<std::string>& keywords) {
  const std::string haystack = lower(query);
  auto word = [](char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; };
  std::vector<std::string> hits;
  for (const auto& kw : keywords) {
    const std::string needle = lower(kw);
    if (needle.empty()) continue;
    for (auto pos = haystack.find(needle); pos != std::string::npos; pos = haystack.find(needle, pos + 1)) {
      const std::size_t end = pos + needle.size();
      if ((pos == 0 || !word(haystack[pos - 1])) && (end == haystack.size() || !word(haystack[end]))) {
        hits.push_back(kw);
        break;
      }
    }
  }
  return hits;
}

namespace {

std::string random_card(Rng& rng) {
  std::string digits;
  for (int i = 0; i < 15; ++i) digits += static_cast<char>('0' + uniform_below(rng, 10));
  for (char check = '0'; check <= '9'; ++check) {
    if (luhn_valid(digits + check)) {
      digits += check;
      break;
    }
  }
  return digits.substr(0, 4) + ' ' + digits.substr(4, 4) + ' ' + digits.substr(8, 4) + ' ' + digits.substr(12, 4);
}

}  // namespace

std::string substitute_placeholder_tags(std::string_view text, Rng& rng) {
  static const std::regex tag(R"(<PRESIDIO_ANONYMIZED_([A-Z_]+)>)");
  const std::string owned(text);
  std::string out;
  std::size_t cursor = 0;
  for (auto it = std::sregex_iterator(owned.begin(), owned.end(), tag); it != std::sregex_iterator(); ++it) {
    const auto pos = static_cast<std::size_t>(it->position());
    out.append(owned, cursor, pos - cursor);
    cursor = pos + static_cast<std::size_t>(it->length());
    const std::string kind = (*it)[1].str();
    if (kind == "PERSON") {
      continue;
    } else if (kind == "EMAIL_ADDRESS") {
      out += scramble_characters("jane.doe", rng) + "@example.com";
    } else if (kind == "PHONE_NUMBER") {
      out += scramble_characters("555-013-2468", rng);
    } else if (kind == "URL") {
      out += "https://www." + scramble_characters("example", rng) + ".com";
    } else if (kind == "CREDIT_CARD") {
      out += random_card(rng);
    } else {
      out += it->str();
    }
  }
  out.append(owned, cursor, std::string::npos);
  return out;
}

BuildResult build_corpus(const std::vector<RawConversation>& raw, const ChatBackend& model,
                         const BuildOptions& options, const PromptLibrary& prompts) {
  const NamePool& pool = options.pool ? *options.pool : NamePool::builtin();
  BuildResult result;
  std::set<std::string> seen;
  auto drop = [&](const char* reason) { ++result.dropped[reason]; };

  for (const auto& conv : raw) {
    if (!seen.insert(conv.id).second) {
      drop("duplicate_id");
      continue;
    }
    if (conv.turns.empty() || conv.turns.front().role != "user") {
      drop("no_initial_user_turn");
      continue;
    }
    Rng tag_rng(derive_seed(options.seed ^ kPlaceholderSalt, conv.id));
    const std::string query = substitute_placeholder_tags(merge_single_turn(conv.turns), tag_rng);
    if (trim(query).empty()) {
      drop("empty_query");
      continue;
    }
    if (filter_technical(query, model, prompts)) {
      drop("technical");
      continue;
    }
    if (!filter_private(query, model, prompts)) {
      drop("not_private");
      continue;
    }
    auto people = extract_persons(query, model, prompts);
    if (count_instances(people) == 0) {
      drop("no_personal_information");
      continue;
    }

    PeepRecord rec;
    rec.record.id = conv.id;
    rec.record.query = query;
    rec.record.people = std::move(people);
    rec.source_id = conv.id;
    rec.construction_seed = options.seed;
    rec = anonymise(rec, pool, options.seed);
    rec.record.people = sample_disclosures(std::move(rec.record.people),
                                           derive_seed(options.seed ^ kDisclosureSalt, conv.id));

    Rng tone_rng(derive_seed(options.seed ^ kToneSalt, conv.id));
    const ProfileTone tone = kAllTones[uniform_below(tone_rng, kAllTones.size())];
    try {
      rec.record.profile = PrivacyProfile{
          generate_profile_text(rec.record.people, tone, model, derive_seed(options.seed ^ kProfileSalt, conv.id),
                                prompts),
          tone, ProfileSource::Synthetic};
    } catch (const ParseError&) {
      drop("profile_generation_failed");
      continue;
    }
    rec.review_flags = review_flags(rec.record.query, prompts.review_keywords);
    try {
      validate(rec);
    } catch (const ValidationError& e) {
      log().warn("constructed record {} is invalid: {}", conv.id, e.what());
      drop("invalid_record");
      continue;
    }
    result.corpus.push_back(std::move(rec));
  }
  return result;
}

}  // namespace privgate
