#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "privgate/backend.hpp"
#include "privgate/core_types.hpp"
#include "privgate/pipeline.hpp"
#include "privgate/prompts.hpp"

namespace privgate {

struct LeakAudit {
  std::string query_id;
  std::string trace_id;  // optional; narrows the audit to one trace
  AttributeInstance instance;
  bool leaked = false;
  std::string judged_text;  // the PCQ audited; empty for LocalOnly traces
  std::string raw_verdict;
  bool parse_failed = false;

  friend bool operator==(const LeakAudit&, const LeakAudit&) = default;
};

// "<attr name>: <value>", prefixed with the owner for non-USER persons.
std::string information_piece(const AttributeInstance& instance);

struct LeakAssessment {
  bool leaked = true;
  std::string raw;
  bool parse_failed = false;
};

// Leaked iff the judge's final marker is [[yes]]. Unparseable twice counts
// as leaked.
LeakAssessment assess_leak_detailed(const AttributeInstance& instance, const std::string& pcq_text,
                                    const ChatBackend& judge,
                                    const PromptLibrary& prompts = PromptLibrary::builtin());

bool assess_leak(const AttributeInstance& instance, const std::string& pcq_text, const ChatBackend& judge,
                 const PromptLibrary& prompts = PromptLibrary::builtin());

// One audit per annotated instance. LocalOnly traces are all clean and make
// no judge calls.
std::vector<LeakAudit> audit_trace(const PipelineTrace& trace, const ChatBackend& judge,
                                   const PromptLibrary& prompts = PromptLibrary::builtin());

struct LeakRates {
  std::optional<double> leak_pro;
  std::optional<double> leak_aut;
  std::size_t protected_total = 0;
  std::size_t protected_leaked = 0;
  std::size_t authorised_total = 0;
  std::size_t authorised_leaked = 0;
};

LeakRates leak_rates(const std::vector<LeakAudit>& audits);

enum class Position { First, Second };
enum class Outcome { Win, Draw, Loss };

std::string_view to_string(Position position) noexcept;
Position parse_position(std::string_view text);
std::string_view to_string(Outcome outcome) noexcept;
Outcome parse_outcome(std::string_view text);

// Round 1 lists the pipeline answer first, round 2 lists the baseline first.
// Win iff the pipeline wins both rounds, Loss iff the baseline does.
Outcome judge_outcome(Position round1_winner, Position round2_winner) noexcept;

struct JudgeVerdict {
  std::string query_id;
  Position round1_winner = Position::Second;
  Position round2_winner = Position::First;
  Outcome outcome = Outcome::Loss;
  std::string raw_round1;
  std::string raw_round2;
  int parse_failures = 0;

  friend bool operator==(const JudgeVerdict&, const JudgeVerdict&) = default;
};

// An unparseable round (after one retry) counts as preferring the baseline.
JudgeVerdict pairwise_judge(const std::string& query, const std::string& pipeline_answer,
                            const std::string& baseline_answer, const ChatBackend& judge,
                            const PromptLibrary& prompts = PromptLibrary::builtin(),
                            std::string query_id = {});

struct SuccessRates {
  double success = 0.0;
  double win = 0.0;
};

// success = (wins + draws) / N, win = wins / N. EmptyInput on no verdicts.
SuccessRates success_rate(const std::vector<JudgeVerdict>& verdicts);

// 1..4, or nullopt when the judge gives no in-range [[n]] twice.
std::optional<int> absolute_score(const std::string& query, const std::string& answer,
                                  const ChatBackend& judge,
                                  const PromptLibrary& prompts = PromptLibrary::builtin());

struct AbsoluteScore {
  std::string query_id;
  std::optional<int> score;

  friend bool operator==(const AbsoluteScore&, const AbsoluteScore&) = default;
};

struct AttributeLeak {
  AttributeType type = AttributeType::Name;
  std::size_t protected_total = 0;
  std::size_t protected_leaked = 0;
  double leak_pro = 0.0;

  friend bool operator==(const AttributeLeak&, const AttributeLeak&) = default;
};

struct ReportCounts {
  std::size_t traces = 0;
  std::size_t local_only = 0;
  std::size_t delegated = 0;
  std::size_t verdicts = 0;
  std::size_t wins = 0;
  std::size_t draws = 0;
  std::size_t losses = 0;
  std::size_t protected_total = 0;
  std::size_t protected_leaked = 0;
  std::size_t authorised_total = 0;
  std::size_t authorised_leaked = 0;
  std::size_t delegated_protected_total = 0;
  std::size_t delegated_protected_leaked = 0;
  std::size_t delegated_authorised_total = 0;
  std::size_t delegated_authorised_leaked = 0;
  std::size_t scores_present = 0;
  std::size_t scores_missing = 0;
  long score_sum = 0;

  friend bool operator==(const ReportCounts&, const ReportCounts&) = default;
};

struct MetricsReport {
  std::optional<double> success_rate;
  std::optional<double> win_rate;
  std::optional<double> leak_pro;  // LocalOnly audits count as clean and stay in the denominator
  std::optional<double> leak_aut;
  std::optional<double> delegated_leak_pro;  // same, restricted to Delegated traces
  std::optional<double> delegated_leak_aut;
  std::optional<double> reject_rate;
  std::optional<double> absolute_mean;
  std::vector<AttributeLeak> per_attribute_leak_pro;  // descending by leak_pro
  ReportCounts counts;

  friend bool operator==(const MetricsReport&, const MetricsReport&) = default;
};

// Audits resolve by trace_id when set, otherwise by query_id; verdicts and
// scores by query_id. Anything unresolved throws InconsistentUniverse, as does
// a leaked audit on a LocalOnly trace.
MetricsReport build_report(const std::vector<PipelineTrace>& traces, const std::vector<LeakAudit>& audits,
                           const std::vector<JudgeVerdict>& verdicts,
                           const std::vector<AbsoluteScore>& scores = {});

// Aligned-column summary plus the per-attribute table.
std::string render_report_text(const MetricsReport& report);

}  // namespace privgate
