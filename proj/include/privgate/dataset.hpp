#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "privgate/backend.hpp"
#include "privgate/core_types.hpp"
#include "privgate/name_pool.hpp"
#include "privgate/prompts.hpp"
#include "privgate/random.hpp"

namespace privgate {

// One corpus line: a query record plus where it came from.
struct PeepRecord {
  QueryRecord record;
  std::string source_id;
  std::optional<std::string> language;
  std::optional<std::uint64_t> construction_seed;
  std::vector<std::string> review_flags;  // keywords that call for a human look

  friend bool operator==(const PeepRecord&, const PeepRecord&) = default;
};

void validate(const PeepRecord& record);

// All-or-nothing: SchemaError names the first offending line (1-based).
// Blank lines are skipped; duplicate record ids are rejected.
std::vector<PeepRecord> load_corpus(const std::filesystem::path& path);
std::vector<PeepRecord> parse_corpus(std::string_view jsonl);

// Writes through a temporary file and renames it into place.
void save_corpus(const std::filesystem::path& path, const std::vector<PeepRecord>& corpus);
std::string render_corpus(const std::vector<PeepRecord>& corpus);

struct Turn {
  std::string role;
  std::string text;

  friend bool operator==(const Turn&, const Turn&) = default;
};

struct RawConversation {
  std::string id;
  std::vector<Turn> turns;

  friend bool operator==(const RawConversation&, const RawConversation&) = default;
};

// {"id", "turns":[{"role","text"}]} per line.
std::vector<RawConversation> load_raw_conversations(const std::filesystem::path& path);
std::vector<RawConversation> parse_raw_conversations(std::string_view jsonl);

// True means technical: drop the query. Unparseable twice keeps it (false).
bool filter_technical(const std::string& query, const ChatBackend& model,
                      const PromptLibrary& prompts = PromptLibrary::builtin());

// True means private communication: keep the query. Unparseable twice is false.
bool filter_private(const std::string& query, const ChatBackend& model,
                    const PromptLibrary& prompts = PromptLibrary::builtin());

// Person blocks of the extraction template. ParseError when no block has a
// valid id line.
std::vector<PersonRecord> parse_extraction_output(std::string_view raw);

// Empty (with a warning) when the output is unparseable twice.
std::vector<PersonRecord> extract_persons(const std::string& query, const ChatBackend& model,
                                          const PromptLibrary& prompts = PromptLibrary::builtin());

// Letters become random letters of the same case and digits random digits;
// everything else, including non-ASCII bytes, is kept.
std::string scramble_characters(std::string_view value, Rng& rng);

// Identifier values are scrambled and names drawn from the pool, consistently
// per distinct value, across the query, profile text and attribute values.
PeepRecord anonymise(const PeepRecord& record, const NamePool& pool, std::uint64_t seed);

// The {profile} slot: per person, what may and may not be shared.
std::string disclosure_listing(const std::vector<PersonRecord>& people);

// The {specification} slot: tone description plus four examples drawn with
// repetition from the tone's pool and the basic pool.
std::string tone_specification(ProfileTone tone, Rng& rng, const PromptLibrary& prompts = PromptLibrary::builtin());

// PreconditionError without attribute instances; ParseError when no [[ ]]
// span comes back twice.
std::string generate_profile_text(const std::vector<PersonRecord>& people, ProfileTone tone,
                                  const ChatBackend& model, std::uint64_t seed,
                                  const PromptLibrary& prompts = PromptLibrary::builtin());

// Fixed wording of a persona policy, used when there is nothing to generate from.
std::string persona_profile_text(const PersonaPolicy& policy);

// Length in code points; invalid UTF-8 bytes count one each.
std::size_t utf8_length(std::string_view text) noexcept;

inline constexpr std::size_t kMergeShortTurn = 120;
inline constexpr std::size_t kMergeRatio = 3;

// First user turn, plus the second user turn when the first is shorter than
// kMergeShortTurn code points and the second is at least kMergeRatio times
// as long. PreconditionError unless the first turn is a user turn.
std::string merge_single_turn(const std::vector<Turn>& turns);

struct RecordFailure {
  std::string id;
  std::string reason;

  friend bool operator==(const RecordFailure&, const RecordFailure&) = default;
};

struct ReprofileResult {
  std::vector<PeepRecord> corpus;
  std::vector<RecordFailure> failures;
};

// Failed records are left out of the output corpus and listed in failures.
ReprofileResult reprofile_with_persona(const std::vector<PeepRecord>& corpus, const PersonaPolicy& policy,
                                       ProfileTone tone, const ChatBackend& model, std::uint64_t seed,
                                       const PromptLibrary& prompts = PromptLibrary::builtin());

// Case-insensitive whole-word keyword hits, in keyword order.
std::vector<std::string> review_flags(std::string_view query, const std::vector<std::string>& keywords);

// Replaces <PRESIDIO_ANONYMIZED_*> tags: person tags are removed, the other
// identifier tags become random values of the same kind.
std::string substitute_placeholder_tags(std::string_view text, Rng& rng);

struct BuildOptions {
  std::uint64_t seed = 0;
  const NamePool* pool = nullptr;  // builtin when null
};

struct BuildResult {
  std::vector<PeepRecord> corpus;
  std::map<std::string, std::size_t> dropped;  // reason -> count
};

// merge, placeholder tags, technical and private filters, extraction,
// anonymisation, disclosure sampling, tone choice, profile generation and
// keyword review, per conversation.
BuildResult build_corpus(const std::vector<RawConversation>& raw, const ChatBackend& model,
                         const BuildOptions& options, const PromptLibrary& prompts = PromptLibrary::builtin());

}  // namespace privgate
