#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "privgate/evaluation.hpp"
#include "privgate/serialization.hpp"
#include "testing.hpp"

using namespace privgate;
using namespace privgate::testing;

namespace {

MockBackend judge_mock(std::vector<MockEntry> script) {
  return make_mock(std::move(script), mock_config(BackendRole::Judge, "mock-judge"));
}

std::shared_ptr<ChatBackend> substring_judge(std::shared_ptr<SubstringJudge>& transport) {
  transport = std::make_shared<SubstringJudge>();
  return std::make_shared<ChatBackend>(mock_config(BackendRole::Judge, "oracle"), transport);
}

PipelineTrace delegated_trace(std::string pcq) {
  PipelineTrace t;
  t.trace_id = "tr-1";
  t.query_id = "q-1";
  t.query = "original";
  t.profile_text = "profile";
  t.decision.verdict = RejectVerdict::Paraphrase;
  t.pcq = PrivacyCompliantQuery{std::move(pcq), "", ""};
  t.external_answer = "ext";
  t.final_answer = "final";
  t.path = TracePath::Delegated;
  t.annotations = landlord_record().people;
  return t;
}

}  // namespace

TEST_CASE("information pieces name the owner for third parties") {
  CHECK(information_piece({"USER", AttributeType::Health, "asthma", Disclosure::Protected}) == "health: asthma");
  CHECK(information_piece({"PERSON 2", AttributeType::Name, "Ana", Disclosure::Protected}) ==
        "PERSON 2, name: Ana");
}

TEST_CASE("leak assessment") {
  const AttributeInstance inst{"USER", AttributeType::Health, "asthma", Disclosure::Protected};

  SUBCASE("yes and no") {
    auto judge = judge_mock({reply("", "Reasoning... [[yes]]"), reply("", "[[yes]] no wait [[no]]")});
    CHECK(assess_leak(inst, "my asthma is bad", *judge));
    CHECK_FALSE(assess_leak(inst, "my lungs are bad", *judge));
    const auto calls = judge.transport->calls();
    CHECK(calls[0].temperature == 0.0);
    CHECK(calls[0].last_user_message.find("Information Piece: health: asthma") != std::string::npos);
    CHECK(calls[0].last_user_message.find("Prompt: my asthma is bad") != std::string::npos);
  }
  SUBCASE("unparseable twice counts as leaked") {
    auto judge = judge_mock({reply("", "maybe"), reply("", "unsure")});
    const auto a = assess_leak_detailed(inst, "text", *judge);
    CHECK(a.leaked);
    CHECK(a.parse_failed);
    CHECK(a.raw == "unsure");
  }
  SUBCASE("retry recovers") {
    auto judge = judge_mock({reply("", "maybe"), reply("", "[[no]]")});
    const auto a = assess_leak_detailed(inst, "text", *judge);
    CHECK_FALSE(a.leaked);
    CHECK_FALSE(a.parse_failed);
  }
}

TEST_CASE("auditing a delegated trace with the substring oracle") {
  std::shared_ptr<SubstringJudge> oracle;
  const auto judge = substring_judge(oracle);
  const auto trace = delegated_trace("Write to Mark Jensen, my landlord, that rent is late.");
  const auto audits = audit_trace(trace, *judge);
  REQUIRE(audits.size() == 3);
  CHECK(oracle->calls == 3);
  CHECK_FALSE(audits[0].leaked);  // kidney infection
  CHECK(audits[1].leaked);        // Mark Jensen
  CHECK(audits[2].leaked);        // landlord
  for (const auto& a : audits) {
    CHECK(a.trace_id == "tr-1");
    CHECK(a.query_id == "q-1");
    CHECK(a.judged_text == trace.pcq->text);
  }
  const auto rates = leak_rates(audits);
  CHECK(rates.protected_total == 2);
  CHECK(rates.protected_leaked == 1);
  CHECK(rates.authorised_total == 1);
  CHECK(*rates.leak_pro == 0.5);
  CHECK(*rates.leak_aut == 1.0);
}

TEST_CASE("LocalOnly traces are clean without judge calls") {
  auto judge = judge_mock({});
  PipelineTrace t = delegated_trace("x");
  t.path = TracePath::LocalOnly;
  t.pcq.reset();
  t.external_answer.reset();
  const auto audits = audit_trace(t, *judge);
  CHECK(audits.size() == 3);
  for (const auto& a : audits) {
    CHECK_FALSE(a.leaked);
    CHECK(a.judged_text.empty());
  }
  CHECK(judge.transport->call_count() == 0);
}

TEST_CASE("leak rates are undefined without instances") {
  const auto r = leak_rates({});
  CHECK_FALSE(r.leak_pro);
  CHECK_FALSE(r.leak_aut);
}

TEST_CASE("judge outcome truth table") {
  CHECK(judge_outcome(Position::First, Position::Second) == Outcome::Win);
  CHECK(judge_outcome(Position::Second, Position::First) == Outcome::Loss);
  CHECK(judge_outcome(Position::First, Position::First) == Outcome::Draw);
  CHECK(judge_outcome(Position::Second, Position::Second) == Outcome::Draw);
  for (auto o : {Outcome::Win, Outcome::Draw, Outcome::Loss}) CHECK(parse_outcome(to_string(o)) == o);
  for (auto p : {Position::First, Position::Second}) CHECK(parse_position(to_string(p)) == p);
}

TEST_CASE("pairwise judging swaps positions") {
  SUBCASE("pipeline preferred in both rounds") {
    auto judge = judge_mock({reply("", "[[A]]"), reply("", "[[B]]")});
    const auto v = pairwise_judge("q", "PIPELINE", "BASELINE", *judge, PromptLibrary::builtin(), "q-7");
    CHECK(v.outcome == Outcome::Win);
    CHECK(v.query_id == "q-7");
    CHECK(v.round1_winner == Position::First);
    CHECK(v.round2_winner == Position::Second);
    const auto calls = judge.transport->calls();
    REQUIRE(calls.size() == 2);
    const auto& r1 = calls[0].last_user_message;
    const auto& r2 = calls[1].last_user_message;
    CHECK(r1.find("PIPELINE") < r1.find("BASELINE"));
    CHECK(r2.find("BASELINE") < r2.find("PIPELINE"));
  }
  SUBCASE("position bias gives a draw") {
    auto judge = judge_mock({reply("", "[[A]]"), reply("", "[[A]]")});
    CHECK(pairwise_judge("q", "p", "b", *judge).outcome == Outcome::Draw);
  }
  SUBCASE("baseline preferred in both rounds") {
    auto judge = judge_mock({reply("", "[[B]]"), reply("", "[[A]]")});
    CHECK(pairwise_judge("q", "p", "b", *judge).outcome == Outcome::Loss);
  }
  SUBCASE("an unparseable round prefers the baseline") {
    auto judge = judge_mock({reply("", "?"), reply("", "??"), reply("", "[[B]]")});
    const auto v = pairwise_judge("q", "p", "b", *judge);
    CHECK(v.parse_failures == 1);
    CHECK(v.round1_winner == Position::Second);
    CHECK(v.outcome == Outcome::Draw);
  }
  SUBCASE("empty answers") {
    auto judge = judge_mock({});
    CHECK_THROWS_AS(pairwise_judge("q", "", "b", *judge), PreconditionError);
    CHECK_THROWS_AS(pairwise_judge("q", "p", " ", *judge), PreconditionError);
  }
}

TEST_CASE("success rate") {
  CHECK_THROWS_AS(success_rate({}), EmptyInput);
  std::vector<JudgeVerdict> v(4);
  v[0].outcome = Outcome::Win;
  v[1].outcome = Outcome::Draw;
  v[2].outcome = Outcome::Loss;
  v[3].outcome = Outcome::Win;
  const auto r = success_rate(v);
  CHECK(r.success == 0.75);
  CHECK(r.win == 0.5);
}

TEST_CASE("absolute score") {
  auto judge = judge_mock({reply("", "Rating: [[3]]"), reply("", "[[7]]"), reply("", "[[0]]"), reply("", "[[2]]")});
  CHECK(absolute_score("q", "a", *judge) == 3);
  CHECK_FALSE(absolute_score("q", "a", *judge));
  CHECK(absolute_score("q", "a", *judge) == 2);
}

TEST_CASE("report over the hand-computed fixture") {
  const auto f = metrics_fixture();
  const ExpectedMetrics e;
  const auto r = build_report(f.traces, f.audits, f.verdicts, f.scores);
  CHECK(r.success_rate == e.success);
  CHECK(r.win_rate == e.win);
  CHECK(r.leak_pro == e.leak_pro);
  CHECK(r.leak_aut == e.leak_aut);
  CHECK(r.delegated_leak_pro == e.delegated_leak_pro);
  CHECK(r.delegated_leak_aut == e.delegated_leak_aut);
  CHECK(r.reject_rate == e.reject);
  CHECK(r.absolute_mean == e.absolute_mean);
  CHECK(r.per_attribute_leak_pro == e.per_attribute);
  CHECK(r.counts == e.counts);
  CHECK(build_report(f.traces, f.audits, f.verdicts, f.scores) == r);
}

TEST_CASE("report universe checks") {
  const auto f = metrics_fixture();
  SUBCASE("unknown trace") {
    auto audits = f.audits;
    audits[0].trace_id = "tr-missing";
    CHECK_THROWS_AS(build_report(f.traces, audits, f.verdicts), InconsistentUniverse);
  }
  SUBCASE("unknown query in verdicts") {
    auto verdicts = f.verdicts;
    verdicts[0].query_id = "nope";
    CHECK_THROWS_AS(build_report(f.traces, f.audits, verdicts), InconsistentUniverse);
  }
  SUBCASE("unknown query in scores") {
    CHECK_THROWS_AS(build_report(f.traces, f.audits, f.verdicts, {AbsoluteScore{"nope", 2}}), InconsistentUniverse);
  }
  SUBCASE("duplicate trace ids") {
    auto traces = f.traces;
    traces.push_back(traces[0]);
    CHECK_THROWS_AS(build_report(traces, f.audits, f.verdicts), InconsistentUniverse);
  }
  SUBCASE("leak on a LocalOnly trace") {
    auto audits = f.audits;
    for (auto& a : audits) {
      if (a.query_id == "q03") a.leaked = true;
    }
    CHECK_THROWS_AS(build_report(f.traces, audits, f.verdicts), InconsistentUniverse);
  }
  SUBCASE("audits without trace id resolve by query id") {
    auto audits = f.audits;
    for (auto& a : audits) a.trace_id.clear();
    CHECK(build_report(f.traces, audits, f.verdicts, f.scores) == build_report(f.traces, f.audits, f.verdicts, f.scores));
  }
  SUBCASE("empty universe") {
    const auto r = build_report({}, {}, {});
    CHECK_FALSE(r.success_rate);
    CHECK_FALSE(r.leak_pro);
    CHECK_FALSE(r.reject_rate);
    CHECK_FALSE(r.absolute_mean);
    CHECK(render_report_text(r).find("n/a") != std::string::npos);
  }
}

TEST_CASE("report text lists every headline metric") {
  const auto f = metrics_fixture();
  const auto text = render_report_text(build_report(f.traces, f.audits, f.verdicts, f.scores));
  for (const char* needle : {"success rate", "leak_pro", "leak_aut", "reject rate", "9/12", "0.750", "27/10"}) {
    INFO(needle);
    CHECK(text.find(needle) != std::string::npos);
  }
}

TEST_CASE("random universes agree with a direct count") {
  Rng rng(77);
  for (int round = 0; round < 100; ++round) {
    std::vector<PipelineTrace> traces;
    std::vector<LeakAudit> audits;
    std::size_t pro = 0, pro_leaked = 0, aut = 0, aut_leaked = 0, local = 0;
    const auto n = 1 + pick(rng, 20);
    for (std::size_t i = 0; i < n; ++i) {
      auto t = delegated_trace("pcq");
      t.trace_id = "tr-" + std::to_string(i);
      t.query_id = "q-" + std::to_string(i);
      if (bernoulli(rng, 0.3)) {
        t.path = TracePath::LocalOnly;
        t.pcq.reset();
        t.external_answer.reset();
        ++local;
      }
      for (std::size_t k = pick(rng, 5); k > 0; --k) {
        LeakAudit a;
        a.trace_id = t.trace_id;
        a.query_id = t.query_id;
        a.instance = {"USER", kAllAttributeTypes[pick(rng, 21)], "v", bernoulli(rng, 0.5) ? Disclosure::Protected : Disclosure::Authorised};
        a.leaked = t.path == TracePath::Delegated && bernoulli(rng, 0.4);
        (a.instance.disclosure == Disclosure::Protected ? pro : aut)++;
        if (a.leaked) (a.instance.disclosure == Disclosure::Protected ? pro_leaked : aut_leaked)++;
        audits.push_back(a);
      }
      traces.push_back(t);
    }
    const auto r = build_report(traces, audits, {});
    CHECK(r.reject_rate == static_cast<double>(local) / static_cast<double>(n));
    if (pro) CHECK(r.leak_pro == static_cast<double>(pro_leaked) / static_cast<double>(pro));
    else CHECK_FALSE(r.leak_pro);
    if (aut) CHECK(r.leak_aut == static_cast<double>(aut_leaked) / static_cast<double>(aut));
    else CHECK_FALSE(r.leak_aut);
    for (std::size_t i = 1; i < r.per_attribute_leak_pro.size(); ++i) {
      CHECK(r.per_attribute_leak_pro[i - 1].leak_pro >= r.per_attribute_leak_pro[i].leak_pro);
    }
  }
}

TEST_CASE("evaluation records round-trip through JSON") {
  const auto f = metrics_fixture();
  for (const auto& a : f.audits) CHECK(audit_from_json(to_json(a)) == a);
  for (const auto& v : f.verdicts) CHECK(verdict_from_json(to_json(v)) == v);
  for (const auto& s : f.scores) CHECK(score_from_json(to_json(s)) == s);
  for (const auto& t : f.traces) CHECK(trace_from_json(to_json(t)) == t);

  auto bad = to_json(f.verdicts[0]);
  bad["outcome"] = "Loss";
  CHECK_THROWS_AS(verdict_from_json(bad), ValidationError);
  CHECK_THROWS_AS(score_from_json(Json{{"query_id", "q"}, {"score", 5}}), ValidationError);
}
