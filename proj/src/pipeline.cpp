#include "privgate/pipeline.hpp"

#include <chrono>
#include <ctime>
#include <iomanip>
#include <sstream>

#include "privgate/log.hpp"
#include "privgate/markers.hpp"

namespace privgate {

std::string_view to_string(RejectVerdict verdict) noexcept {
  return verdict == RejectVerdict::Paraphrase ? "Paraphrase" : "AnswerLocally";
}

RejectVerdict parse_reject_verdict(std::string_view text) {
  if (text == "Paraphrase") return RejectVerdict::Paraphrase;
  if (text == "AnswerLocally") return RejectVerdict::AnswerLocally;
  throw ValidationError("unknown reject verdict '" + std::string(text) + "'");
}

std::string_view to_string(TracePath path) noexcept {
  return path == TracePath::Delegated ? "Delegated" : "LocalOnly";
}

TracePath parse_trace_path(std::string_view text) {
  if (text == "Delegated") return TracePath::Delegated;
  if (text == "LocalOnly") return TracePath::LocalOnly;
  throw ValidationError("unknown trace path '" + std::string(text) + "'");
}

void validate(const PipelineTrace& trace) {
  const bool has_pcq = trace.pcq.has_value();
  const bool has_external = trace.external_answer.has_value();
  if (trace.path == TracePath::LocalOnly) {
    if (has_pcq || has_external) {
      throw ValidationError("LocalOnly trace must not carry a PCQ or an external answer");
    }
  } else {
    if (!has_pcq || !has_external) {
      throw ValidationError("Delegated trace needs both a PCQ and an external answer");
    }
    if (trace.decision.verdict != RejectVerdict::Paraphrase) {
      throw ValidationError("Delegated trace without a Paraphrase decision");
    }
    if (trace.pcq->text.empty() || contains_protocol_marker(trace.pcq->text)) {
      throw ValidationError("Delegated trace carries an invalid PCQ");
    }
  }
  if (trace.final_answer.empty()) throw ValidationError("trace has no final answer");
}

std::string utc_timestamp_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t secs = std::chrono::system_clock::to_time_t(now);
  const auto millis =
      std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
  std::tm tm{};
  gmtime_r(&secs, &tm);
  std::ostringstream out;
  out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%S") << '.' << std::setw(3) << std::setfill('0')
      << millis << 'Z';
  return out.str();
}

namespace {

template <typename Parsed>
struct Attempted {
  std::string raw;
  std::optional<Parsed> parsed;
};

// Identical prompt at most twice; returns the last raw output either way.
template <typename Parser>
auto call_with_parse_retry(const ChatBackend& backend, const std::vector<ChatMessage>& messages,
                           const CallOptions& options, Parser parse)
    -> Attempted<decltype(parse(std::string_view{}))> {
  Attempted<decltype(parse(std::string_view{}))> out;
  for (int attempt = 0; attempt < 2; ++attempt) {
    out.raw = backend.chat(messages, options).content;
    try {
      out.parsed = parse(out.raw);
      return out;
    } catch (const ParseError& e) {
      log().debug("unparseable {} output (attempt {}): {}", backend.model_id(), attempt + 1, e.what());
    }
  }
  return out;
}

TemplateValues profile_inputs(const std::string& query, const PrivacyProfile& profile) {
  return {{"query", query}, {"profile", profile.text}};
}

Attempted<RejectorOutput> attempt_reject(const std::string& query, const PrivacyProfile& profile,
                                         const ChatBackend& local, const PromptLibrary& prompts) {
  if (trim(query).empty()) throw PreconditionError("reject: empty query");
  return call_with_parse_retry(local, prompts.rejector.messages(profile_inputs(query, profile)),
                               CallOptions{kDeterministicTemperature},
                               [](std::string_view raw) { return parse_rejector_output(raw); });
}

Attempted<ParaphraserOutput> attempt_paraphrase(const std::string& query, const PrivacyProfile& profile,
                                                const ChatBackend& local, const PromptLibrary& prompts) {
  if (trim(query).empty()) throw PreconditionError("paraphrase: empty query");
  return call_with_parse_retry(local, prompts.paraphraser.messages(profile_inputs(query, profile)),
                               CallOptions{kGenerativeTemperature},
                               [](std::string_view raw) { return parse_paraphraser_output(raw); });
}

class StageClock {
 public:
  explicit StageClock(PipelineTrace& trace) : trace_(trace) {}

  template <typename F>
  auto time(const char* stage, const ChatBackend& backend, F&& body) {
    trace_.backend_ids[stage] = backend.model_id();
    const auto start = std::chrono::steady_clock::now();
    struct Record {
      PipelineTrace& trace;
      const char* stage;
      std::chrono::steady_clock::time_point start;
      ~Record() {
        trace.timings_ms[stage] = std::chrono::duration<double, std::milli>(
                                      std::chrono::steady_clock::now() - start)
                                      .count();
      }
    } record{trace_, stage, start};
    return body();
  }

 private:
  PipelineTrace& trace_;
};

// Backend failures that the orchestrator turns into a local answer.
template <typename F>
bool recoverable(F&& body, std::string& reason, const char* what) {
  try {
    body();
    return true;
  } catch (const ConfigError&) {
    throw;
  } catch (const TransportError& e) {
    reason = std::string(what) + ": " + e.what();
  } catch (const ProtocolError& e) {
    reason = std::string(what) + ": " + e.what();
  }
  return false;
}

}  // namespace

RejectDecision reject(const std::string& query, const PrivacyProfile& profile, const ChatBackend& local,
                      const PromptLibrary& prompts) {
  auto attempt = attempt_reject(query, profile, local, prompts);
  if (!attempt.parsed) throw ParseError("rejector output unparseable after retry");
  return RejectDecision{
      attempt.parsed->paraphrase ? RejectVerdict::Paraphrase : RejectVerdict::AnswerLocally,
      attempt.parsed->rationale, attempt.raw, false};
}

PrivacyCompliantQuery paraphrase(const std::string& query, const PrivacyProfile& profile,
                                 const ChatBackend& local, const PromptLibrary& prompts) {
  auto attempt = attempt_paraphrase(query, profile, local, prompts);
  if (!attempt.parsed) throw ParseError("paraphraser output unparseable after retry");
  return PrivacyCompliantQuery{attempt.parsed->text, attempt.parsed->rationale, attempt.raw};
}

std::string query_external(const PrivacyCompliantQuery& pcq, const ChatBackend& external) {
  if (trim(pcq.text).empty()) throw PreconditionError("query_external: empty PCQ");
  if (contains_protocol_marker(pcq.text)) {
    throw PreconditionError("query_external: PCQ carries protocol markers");
  }
  return external.chat({{MessageRole::User, pcq.text}}).content;
}

std::string aggregate(const std::string& query, const PrivacyCompliantQuery& pcq,
                      const std::string& external_answer, const ChatBackend& local,
                      const PromptLibrary& prompts) {
  if (trim(query).empty() || trim(pcq.text).empty() || trim(external_answer).empty()) {
    throw PreconditionError("aggregate: all inputs must be non-empty");
  }
  const TemplateValues inputs{
      {"query_modified", pcq.text}, {"response", external_answer}, {"query", query}};
  return local.chat(prompts.aggregator.messages(inputs), CallOptions{kGenerativeTemperature}).content;
}

std::string answer_locally(const std::string& query, const ChatBackend& local) {
  if (trim(query).empty()) throw PreconditionError("answer_locally: empty query");
  return local.chat({{MessageRole::User, query}}, CallOptions{kGenerativeTemperature}).content;
}

PipelineTrace run_pipeline(const QueryRecord& record, const PipelineBackends& backends,
                           const PromptLibrary& prompts) {
  if (trim(record.query).empty()) throw PreconditionError("run_pipeline: empty query");
  if (trim(record.profile.text).empty()) throw PreconditionError("run_pipeline: empty profile");

  PipelineTrace trace;
  trace.query_id = record.id;
  trace.query = record.query;
  trace.profile_text = record.profile.text;
  trace.annotations = record.people;
  trace.created_at = utc_timestamp_now();
  StageClock clock(trace);

  std::string reason;
  const bool rejector_ok = recoverable(
      [&] {
        auto attempt = clock.time(stage::kReject, backends.local, [&] {
          return attempt_reject(record.query, record.profile, backends.local, prompts);
        });
        trace.decision.raw = attempt.raw;
        if (attempt.parsed) {
          trace.decision.verdict = attempt.parsed->paraphrase ? RejectVerdict::Paraphrase
                                                              : RejectVerdict::AnswerLocally;
          trace.decision.rationale = attempt.parsed->rationale;
        } else {
          trace.decision.verdict = RejectVerdict::AnswerLocally;
          trace.decision.parse_failed = true;
        }
      },
      reason, "rejector unavailable");
  if (!rejector_ok) {
    trace.decision.verdict = RejectVerdict::AnswerLocally;
    trace.fallback = reason;
  }

  if (trace.decision.verdict == RejectVerdict::Paraphrase) {
    std::optional<PrivacyCompliantQuery> pcq;
    std::optional<std::string> external_answer;
    std::optional<std::string> final_answer;

    recoverable(
        [&] {
          auto attempt = clock.time(stage::kParaphrase, backends.local, [&] {
            return attempt_paraphrase(record.query, record.profile, backends.local, prompts);
          });
          if (attempt.parsed) {
            pcq = PrivacyCompliantQuery{attempt.parsed->text, attempt.parsed->rationale, attempt.raw};
          } else {
            reason = "paraphraser output unparseable after retry";
          }
        },
        reason, "paraphraser unavailable");

    if (pcq) {
      recoverable(
          [&] {
            external_answer = clock.time(stage::kExternal, backends.external,
                                         [&] { return query_external(*pcq, backends.external); });
          },
          reason, "external model unavailable");
    }
    if (pcq && external_answer) {
      recoverable(
          [&] {
            final_answer = clock.time(stage::kAggregate, backends.local, [&] {
              return aggregate(record.query, *pcq, *external_answer, backends.local, prompts);
            });
          },
          reason, "aggregator unavailable");
      if (final_answer && trim(*final_answer).empty()) {
        final_answer.reset();
        reason = "aggregator returned an empty answer";
      }
    }

    if (final_answer) {
      trace.pcq = std::move(pcq);
      trace.external_answer = std::move(external_answer);
      trace.final_answer = std::move(*final_answer);
      trace.path = TracePath::Delegated;
      return trace;
    }
    trace.fallback = reason;
    if (pcq && external_answer) {
      log().warn("query {}: PCQ reached the external model but aggregation failed; trace recorded "
                 "as LocalOnly",
                 record.id);
    }
  }

  trace.final_answer = clock.time(stage::kAnswerLocally, backends.local,
                                  [&] { return answer_locally(record.query, backends.local); });
  trace.path = TracePath::LocalOnly;
  return trace;
}

}  // namespace privgate
