#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "privgate/backend.hpp"
#include "privgate/core_types.hpp"
#include "privgate/prompts.hpp"

namespace privgate {

enum class RejectVerdict { Paraphrase, AnswerLocally };
enum class TracePath { Delegated, LocalOnly };

std::string_view to_string(RejectVerdict verdict) noexcept;
RejectVerdict parse_reject_verdict(std::string_view text);
std::string_view to_string(TracePath path) noexcept;
TracePath parse_trace_path(std::string_view text);

struct RejectDecision {
  RejectVerdict verdict = RejectVerdict::AnswerLocally;
  std::string rationale;
  std::string raw;
  bool parse_failed = false;  // conservative default applied

  friend bool operator==(const RejectDecision&, const RejectDecision&) = default;
};

// The paraphrased query that may leave the trust boundary.
struct PrivacyCompliantQuery {
  std::string text;
  std::string rationale;
  std::string raw;

  friend bool operator==(const PrivacyCompliantQuery&, const PrivacyCompliantQuery&) = default;
};

// Stage keys used in timings and backend_ids.
namespace stage {
inline constexpr const char* kReject = "reject";
inline constexpr const char* kParaphrase = "paraphrase";
inline constexpr const char* kExternal = "external";
inline constexpr const char* kAggregate = "aggregate";
inline constexpr const char* kAnswerLocally = "answer_locally";
}  // namespace stage

struct PipelineTrace {
  std::string trace_id;  // assigned when persisted
  std::string query_id;
  std::string query;
  std::string profile_text;
  RejectDecision decision;
  std::optional<PrivacyCompliantQuery> pcq;
  std::optional<std::string> external_answer;
  std::string final_answer;
  TracePath path = TracePath::LocalOnly;
  std::optional<std::string> fallback;  // why a Paraphrase decision still ended LocalOnly
  std::map<std::string, double> timings_ms;
  std::map<std::string, std::string> backend_ids;
  std::string created_at;
  std::vector<PersonRecord> annotations;  // annotated people of the source record, if any

  friend bool operator==(const PipelineTrace&, const PipelineTrace&) = default;
};

// Throws ValidationError unless exactly one of the two trace shapes holds.
void validate(const PipelineTrace& trace);

struct PipelineBackends {
  const ChatBackend& local;
  const ChatBackend& external;
};

// Each stage retries once on a malformed output and then throws ParseError.
RejectDecision reject(const std::string& query, const PrivacyProfile& profile, const ChatBackend& local,
                      const PromptLibrary& prompts = PromptLibrary::builtin());

PrivacyCompliantQuery paraphrase(const std::string& query, const PrivacyProfile& profile,
                                 const ChatBackend& local,
                                 const PromptLibrary& prompts = PromptLibrary::builtin());

// PreconditionError for an empty PCQ; nothing is sent in that case.
std::string query_external(const PrivacyCompliantQuery& pcq, const ChatBackend& external);

std::string aggregate(const std::string& query, const PrivacyCompliantQuery& pcq,
                      const std::string& external_answer, const ChatBackend& local,
                      const PromptLibrary& prompts = PromptLibrary::builtin());

std::string answer_locally(const std::string& query, const ChatBackend& local);

// Model-content problems never escape: they end in a LocalOnly trace. Only
// ConfigError, or the local model failing to answer at all, propagate.
PipelineTrace run_pipeline(const QueryRecord& record, const PipelineBackends& backends,
                           const PromptLibrary& prompts = PromptLibrary::builtin());

std::string utc_timestamp_now();

}  // namespace privgate
