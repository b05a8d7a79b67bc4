#include "privgate/evaluation.hpp"

#include <algorithm>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>

#include "privgate/log.hpp"
#include "privgate/markers.hpp"

namespace privgate {

std::string information_piece(const AttributeInstance& instance) {
  std::string piece = std::string(to_string(instance.type)) + ": " + instance.value;
  if (!instance.owner_id.empty() && instance.owner_id != kUserId) {
    piece = instance.owner_id + ", " + piece;
  }
  return piece;
}

LeakAssessment assess_leak_detailed(const AttributeInstance& instance, const std::string& pcq_text,
                                    const ChatBackend& judge, const PromptLibrary& prompts) {
  if (trim(pcq_text).empty()) throw PreconditionError("assess_leak: empty PCQ text");
  const std::string prompt = render_template(
      prompts.leakage, {{"information", information_piece(instance)}, {"prompt", pcq_text}});
  const std::vector<ChatMessage> messages{{MessageRole::User, prompt}};

  LeakAssessment out;
  for (int attempt = 0; attempt < 2; ++attempt) {
    out.raw = judge.chat(messages, CallOptions{kDeterministicTemperature}).content;
    if (const auto verdict = find_last_yes_no(strip_reasoning(out.raw))) {
      out.leaked = verdict->yes;
      out.parse_failed = false;
      return out;
    }
  }
  out.leaked = true;
  out.parse_failed = true;
  return out;
}

bool assess_leak(const AttributeInstance& instance, const std::string& pcq_text, const ChatBackend& judge,
                 const PromptLibrary& prompts) {
  return assess_leak_detailed(instance, pcq_text, judge, prompts).leaked;
}

std::vector<LeakAudit> audit_trace(const PipelineTrace& trace, const ChatBackend& judge,
                                   const PromptLibrary& prompts) {
  std::vector<LeakAudit> audits;
  for (const auto& person : trace.annotations) {
    for (const auto& inst : person.attributes) {
      LeakAudit audit;
      audit.query_id = trace.query_id;
      audit.trace_id = trace.trace_id;
      audit.instance = inst;
      if (trace.path == TracePath::Delegated && trace.pcq) {
        auto assessment = assess_leak_detailed(inst, trace.pcq->text, judge, prompts);
        audit.leaked = assessment.leaked;
        audit.raw_verdict = std::move(assessment.raw);
        audit.parse_failed = assessment.parse_failed;
        audit.judged_text = trace.pcq->text;
      }
      audits.push_back(std::move(audit));
    }
  }
  return audits;
}

LeakRates leak_rates(const std::vector<LeakAudit>& audits) {
  LeakRates rates;
  for (const auto& a : audits) {
    if (a.instance.disclosure == Disclosure::Protected) {
      ++rates.protected_total;
      rates.protected_leaked += a.leaked ? 1 : 0;
    } else {
      ++rates.authorised_total;
      rates.authorised_leaked += a.leaked ? 1 : 0;
    }
  }
  if (rates.protected_total > 0) {
    rates.leak_pro = static_cast<double>(rates.protected_leaked) / static_cast<double>(rates.protected_total);
  }
  if (rates.authorised_total > 0) {
    rates.leak_aut =
        static_cast<double>(rates.authorised_leaked) / static_cast<double>(rates.authorised_total);
  }
  return rates;
}

std::string_view to_string(Position position) noexcept {
  return position == Position::First ? "first" : "second";
}

Position parse_position(std::string_view text) {
  if (text == "first") return Position::First;
  if (text == "second") return Position::Second;
  throw ValidationError("unknown position '" + std::string(text) + "'");
}

std::string_view to_string(Outcome outcome) noexcept {
  switch (outcome) {
    case Outcome::Win: return "Win";
    case Outcome::Draw: return "Draw";
    case Outcome::Loss: return "Loss";
  }
  return "";
}

Outcome parse_outcome(std::string_view text) {
  if (text == "Win") return Outcome::Win;
  if (text == "Draw") return Outcome::Draw;
  if (text == "Loss") return Outcome::Loss;
  throw ValidationError("unknown outcome '" + std::string(text) + "'");
}

Outcome judge_outcome(Position round1_winner, Position round2_winner) noexcept {
  if (round1_winner == Position::First && round2_winner == Position::Second) return Outcome::Win;
  if (round1_winner == Position::Second && round2_winner == Position::First) return Outcome::Loss;
  return Outcome::Draw;
}

namespace {

struct RoundResult {
  Position winner;
  std::string raw;
  bool parse_failed = false;
};

RoundResult judge_round(const std::string& query, const std::string& first, const std::string& second,
                        Position baseline_position, const ChatBackend& judge,
                        const PromptLibrary& prompts) {
  const std::string prompt = render_template(
      prompts.pairwise_judge, {{"query", query}, {"response_a", first}, {"response_b", second}});
  const std::vector<ChatMessage> messages{{MessageRole::User, prompt}};
  RoundResult out{baseline_position, {}, true};
  for (int attempt = 0; attempt < 2; ++attempt) {
    out.raw = judge.chat(messages, CallOptions{kDeterministicTemperature}).content;
    try {
      out.winner = parse_pairwise_choice(out.raw) == 'A' ? Position::First : Position::Second;
      out.parse_failed = false;
      return out;
    } catch (const ParseError&) {
    }
  }
  out.winner = baseline_position;
  return out;
}

}  // namespace

JudgeVerdict pairwise_judge(const std::string& query, const std::string& pipeline_answer,
                            const std::string& baseline_answer, const ChatBackend& judge,
                            const PromptLibrary& prompts, std::string query_id) {
  if (trim(pipeline_answer).empty() || trim(baseline_answer).empty()) {
    throw PreconditionError("pairwise_judge: both answers must be non-empty");
  }
  const RoundResult r1 =
      judge_round(query, pipeline_answer, baseline_answer, Position::Second, judge, prompts);
  const RoundResult r2 =
      judge_round(query, baseline_answer, pipeline_answer, Position::First, judge, prompts);

  JudgeVerdict verdict;
  verdict.query_id = std::move(query_id);
  verdict.round1_winner = r1.winner;
  verdict.round2_winner = r2.winner;
  verdict.outcome = judge_outcome(r1.winner, r2.winner);
  verdict.raw_round1 = r1.raw;
  verdict.raw_round2 = r2.raw;
  verdict.parse_failures = (r1.parse_failed ? 1 : 0) + (r2.parse_failed ? 1 : 0);
  return verdict;
}

SuccessRates success_rate(const std::vector<JudgeVerdict>& verdicts) {
  if (verdicts.empty()) throw EmptyInput("success_rate needs at least one verdict");
  std::size_t wins = 0;
  std::size_t draws = 0;
  for (const auto& v : verdicts) {
    wins += v.outcome == Outcome::Win ? 1 : 0;
    draws += v.outcome == Outcome::Draw ? 1 : 0;
  }
  const auto n = static_cast<double>(verdicts.size());
  return SuccessRates{static_cast<double>(wins + draws) / n, static_cast<double>(wins) / n};
}

std::optional<int> absolute_score(const std::string& query, const std::string& answer,
                                  const ChatBackend& judge, const PromptLibrary& prompts) {
  if (trim(query).empty() || trim(answer).empty()) {
    throw PreconditionError("absolute_score: empty query or answer");
  }
  const std::string prompt =
      render_template(prompts.absolute_judge, {{"query", query}, {"answer", answer}});
  const std::vector<ChatMessage> messages{{MessageRole::User, prompt}};
  for (int attempt = 0; attempt < 2; ++attempt) {
    const std::string raw = judge.chat(messages, CallOptions{kDeterministicTemperature}).content;
    try {
      return parse_absolute_rating(raw);
    } catch (const ParseError& e) {
      log().debug("absolute judge output rejected: {}", e.what());
    }
  }
  log().warn("absolute score unavailable after retry; item excluded from the mean");
  return std::nullopt;
}

MetricsReport build_report(const std::vector<PipelineTrace>& traces, const std::vector<LeakAudit>& audits,
                           const std::vector<JudgeVerdict>& verdicts,
                           const std::vector<AbsoluteScore>& scores) {
  std::map<std::string, const PipelineTrace*> by_trace_id;
  std::multimap<std::string, const PipelineTrace*> by_query_id;
  MetricsReport report;
  ReportCounts& c = report.counts;

  for (const auto& t : traces) {
    if (!t.trace_id.empty() && !by_trace_id.emplace(t.trace_id, &t).second) {
      throw InconsistentUniverse("duplicate trace id '" + t.trace_id + "'");
    }
    by_query_id.emplace(t.query_id, &t);
    ++c.traces;
    if (t.path == TracePath::LocalOnly) {
      ++c.local_only;
    } else {
      ++c.delegated;
    }
  }

  auto known_query = [&](const std::string& id) { return by_query_id.count(id) > 0; };

  // Audits: a Delegated match makes the audit count in the delegated-only variant.
  std::map<AttributeType, std::pair<std::size_t, std::size_t>> per_type;  // total, leaked
  for (const auto& a : audits) {
    bool delegated = false;
    if (!a.trace_id.empty()) {
      const auto it = by_trace_id.find(a.trace_id);
      if (it == by_trace_id.end()) {
        throw InconsistentUniverse("audit references unknown trace '" + a.trace_id + "'");
      }
      delegated = it->second->path == TracePath::Delegated;
    } else {
      if (!known_query(a.query_id)) {
        throw InconsistentUniverse("audit references unknown query '" + a.query_id + "'");
      }
      const auto [lo, hi] = by_query_id.equal_range(a.query_id);
      delegated = std::any_of(lo, hi, [](const auto& kv) { return kv.second->path == TracePath::Delegated; });
    }
    if (!delegated && a.leaked) {
      throw InconsistentUniverse("audit of LocalOnly query '" + a.query_id + "' is marked leaked");
    }

    const std::size_t leaked = a.leaked ? 1 : 0;
    if (a.instance.disclosure == Disclosure::Protected) {
      ++c.protected_total;
      c.protected_leaked += leaked;
      auto& slot = per_type[a.instance.type];
      ++slot.first;
      slot.second += leaked;
      if (delegated) {
        ++c.delegated_protected_total;
        c.delegated_protected_leaked += leaked;
      }
    } else {
      ++c.authorised_total;
      c.authorised_leaked += leaked;
      if (delegated) {
        ++c.delegated_authorised_total;
        c.delegated_authorised_leaked += leaked;
      }
    }
  }

  for (const auto& v : verdicts) {
    if (!known_query(v.query_id)) {
      throw InconsistentUniverse("verdict references unknown query '" + v.query_id + "'");
    }
    ++c.verdicts;
    switch (v.outcome) {
      case Outcome::Win: ++c.wins; break;
      case Outcome::Draw: ++c.draws; break;
      case Outcome::Loss: ++c.losses; break;
    }
  }

  for (const auto& s : scores) {
    if (!known_query(s.query_id)) {
      throw InconsistentUniverse("score references unknown query '" + s.query_id + "'");
    }
    if (s.score) {
      ++c.scores_present;
      c.score_sum += *s.score;
    } else {
      ++c.scores_missing;
    }
  }

  auto ratio = [](std::size_t num, std::size_t den) -> std::optional<double> {
    if (den == 0) return std::nullopt;
    return static_cast<double>(num) / static_cast<double>(den);
  };
  report.success_rate = ratio(c.wins + c.draws, c.verdicts);
  report.win_rate = ratio(c.wins, c.verdicts);
  report.leak_pro = ratio(c.protected_leaked, c.protected_total);
  report.leak_aut = ratio(c.authorised_leaked, c.authorised_total);
  report.delegated_leak_pro = ratio(c.delegated_protected_leaked, c.delegated_protected_total);
  report.delegated_leak_aut = ratio(c.delegated_authorised_leaked, c.delegated_authorised_total);
  report.reject_rate = ratio(c.local_only, c.traces);
  if (c.scores_present > 0) {
    report.absolute_mean = static_cast<double>(c.score_sum) / static_cast<double>(c.scores_present);
  }

  for (const auto& [type, counts] : per_type) {
    report.per_attribute_leak_pro.push_back(AttributeLeak{
        type, counts.first, counts.second,
        static_cast<double>(counts.second) / static_cast<double>(counts.first)});
  }
  std::stable_sort(report.per_attribute_leak_pro.begin(), report.per_attribute_leak_pro.end(),
                   [](const AttributeLeak& a, const AttributeLeak& b) { return a.leak_pro > b.leak_pro; });
  return report;
}

std::string render_report_text(const MetricsReport& report) {
  const auto& c = report.counts;
  auto rate = [](const std::optional<double>& value) {
    if (!value) return std::string("n/a");
    std::ostringstream s;
    s << std::fixed << std::setprecision(3) << *value;
    return s.str();
  };
  auto frac = [](std::size_t num, std::size_t den) {
    return std::to_string(num) + "/" + std::to_string(den);
  };

  std::ostringstream out;
  auto row = [&out](const std::string& name, const std::string& value, const std::string& backing) {
    out << std::left << std::setw(22) << name << std::right << std::setw(8) << value << "  "
        << backing << '\n';
  };
  row("metric", "value", "counts");
  row("success rate", rate(report.success_rate), frac(c.wins + c.draws, c.verdicts));
  row("win rate", rate(report.win_rate), frac(c.wins, c.verdicts));
  row("leak_pro", rate(report.leak_pro), frac(c.protected_leaked, c.protected_total));
  row("leak_aut", rate(report.leak_aut), frac(c.authorised_leaked, c.authorised_total));
  row("leak_pro (delegated)", rate(report.delegated_leak_pro),
      frac(c.delegated_protected_leaked, c.delegated_protected_total));
  row("leak_aut (delegated)", rate(report.delegated_leak_aut),
      frac(c.delegated_authorised_leaked, c.delegated_authorised_total));
  row("reject rate", rate(report.reject_rate), frac(c.local_only, c.traces));
  row("absolute mean", rate(report.absolute_mean),
      std::to_string(c.score_sum) + "/" + std::to_string(c.scores_present) + " (" +
          std::to_string(c.scores_missing) + " missing)");

  if (!report.per_attribute_leak_pro.empty()) {
    out << '\n' << std::left << std::setw(22) << "attribute" << std::right << std::setw(8)
        << "leak_pro" << "  counts\n";
    for (const auto& a : report.per_attribute_leak_pro) {
      out << std::left << std::setw(22) << to_string(a.type) << std::right << std::setw(8)
          << rate(a.leak_pro) << "  " << frac(a.protected_leaked, a.protected_total) << '\n';
    }
  }
  return out.str();
}

}  // namespace privgate
