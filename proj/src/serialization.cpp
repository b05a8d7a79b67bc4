#include "privgate/serialization.hpp"

#include <fstream>
#include <sstream>

namespace privgate {

namespace {

template <typename F>
auto guarded(const char* what, F&& body) -> decltype(body()) {
  try {
    return body();
  } catch (const Json::exception& e) {
    throw ValidationError(std::string(what) + ": " + e.what());
  }
}

const Json& field(const Json& node, const char* key) {
  if (!node.is_object()) throw ValidationError("expected a JSON object");
  const auto it = node.find(key);
  if (it == node.end()) throw ValidationError(std::string("missing field '") + key + "'");
  return *it;
}

std::string string_field(const Json& node, const char* key) {
  const Json& v = field(node, key);
  if (!v.is_string()) throw ValidationError(std::string("field '") + key + "' must be a string");
  return v.get<std::string>();
}

std::optional<std::string> optional_string(const Json& node, const char* key) {
  const auto it = node.find(key);
  if (it == node.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) throw ValidationError(std::string("field '") + key + "' must be a string or null");
  return it->get<std::string>();
}

bool bool_field(const Json& node, const char* key, bool fallback) {
  const auto it = node.find(key);
  if (it == node.end()) return fallback;
  if (!it->is_boolean()) throw ValidationError(std::string("field '") + key + "' must be a boolean");
  return it->get<bool>();
}

Json optional_number(const std::optional<double>& value) { return value ? Json(*value) : Json(nullptr); }

}  // namespace

Json to_json(const AttributeInstance& instance) {
  return Json{{"type", to_string(instance.type)},
              {"value", instance.value},
              {"disclosure", to_string(instance.disclosure)}};
}

Json to_json(const PersonRecord& person) {
  Json attrs = Json::array();
  for (const auto& a : person.attributes) attrs.push_back(to_json(a));
  return Json{{"id", person.id}, {"attributes", std::move(attrs)}};
}

std::vector<PersonRecord> people_from_json(const Json& array) {
  return guarded("people", [&] {
    if (!array.is_array()) throw ValidationError("'people' must be an array");
    std::vector<PersonRecord> people;
    for (const auto& p : array) {
      PersonRecord person;
      person.id = string_field(p, "id");
      const Json& attrs = field(p, "attributes");
      if (!attrs.is_array()) throw ValidationError("'attributes' must be an array");
      for (const auto& a : attrs) {
        AttributeInstance inst;
        inst.owner_id = person.id;
        inst.type = parse_attribute_type(string_field(a, "type"));
        inst.value = string_field(a, "value");
        inst.disclosure = parse_disclosure(string_field(a, "disclosure"));
        person.attributes.push_back(std::move(inst));
      }
      people.push_back(std::move(person));
    }
    return people;
  });
}

Json to_json(const PrivacyProfile& profile) {
  return Json{{"text", profile.text},
              {"tone", profile.tone ? Json(to_string(*profile.tone)) : Json(nullptr)},
              {"source", to_string(profile.source)}};
}

PrivacyProfile profile_from_json(const Json& node) {
  return guarded("profile", [&] {
    PrivacyProfile profile;
    profile.text = string_field(node, "text");
    if (const auto tone = optional_string(node, "tone")) profile.tone = parse_tone(*tone);
    profile.source = parse_profile_source(string_field(node, "source"));
    return profile;
  });
}

Json to_json(const PeepRecord& record) {
  Json people = Json::array();
  for (const auto& p : record.record.people) people.push_back(to_json(p));
  Json out{{"id", record.record.id}, {"query", record.record.query}};
  if (record.language) out["language"] = *record.language;
  out["people"] = std::move(people);
  out["profile"] = to_json(record.record.profile);
  Json provenance{{"source_id", record.source_id}};
  if (record.construction_seed) provenance["construction_seed"] = *record.construction_seed;
  if (!record.review_flags.empty()) provenance["review_flags"] = record.review_flags;
  out["provenance"] = std::move(provenance);
  return out;
}

PeepRecord peep_from_json(const Json& node) {
  PeepRecord rec = guarded("record", [&] {
    PeepRecord r;
    r.record.id = string_field(node, "id");
    r.record.query = string_field(node, "query");
    r.language = optional_string(node, "language");
    r.record.people = people_from_json(field(node, "people"));
    r.record.profile = profile_from_json(field(node, "profile"));
    const Json& prov = field(node, "provenance");
    r.source_id = string_field(prov, "source_id");
    if (const auto it = prov.find("construction_seed"); it != prov.end() && !it->is_null()) {
      if (!it->is_number_unsigned()) throw ValidationError("'construction_seed' must be an unsigned integer");
      r.construction_seed = it->get<std::uint64_t>();
    }
    if (const auto it = prov.find("review_flags"); it != prov.end()) {
      r.review_flags = it->get<std::vector<std::string>>();
    }
    return r;
  });
  validate(rec);
  return rec;
}

Json to_json(const RawConversation& conversation) {
  Json turns = Json::array();
  for (const auto& t : conversation.turns) turns.push_back(Json{{"role", t.role}, {"text", t.text}});
  return Json{{"id", conversation.id}, {"turns", std::move(turns)}};
}

RawConversation conversation_from_json(const Json& node) {
  return guarded("conversation", [&] {
    RawConversation c;
    c.id = string_field(node, "id");
    if (trim(c.id).empty()) throw ValidationError("conversation id must be non-empty");
    const Json& turns = field(node, "turns");
    if (!turns.is_array()) throw ValidationError("'turns' must be an array");
    for (const auto& t : turns) c.turns.push_back(Turn{string_field(t, "role"), string_field(t, "text")});
    return c;
  });
}

Json to_json(const PipelineTrace& trace) {
  Json people = Json::array();
  for (const auto& p : trace.annotations) people.push_back(to_json(p));
  Json out{{"trace_id", trace.trace_id},
           {"query_id", trace.query_id},
           {"query", trace.query},
           {"profile_text", trace.profile_text},
           {"decision",
            {{"verdict", to_string(trace.decision.verdict)},
             {"rationale", trace.decision.rationale},
             {"raw", trace.decision.raw},
             {"parse_failed", trace.decision.parse_failed}}}};
  out["pcq"] = trace.pcq ? Json{{"text", trace.pcq->text}, {"rationale", trace.pcq->rationale}, {"raw", trace.pcq->raw}}
                         : Json(nullptr);
  out["external_answer"] = trace.external_answer ? Json(*trace.external_answer) : Json(nullptr);
  out["final_answer"] = trace.final_answer;
  out["path"] = to_string(trace.path);
  out["fallback"] = trace.fallback ? Json(*trace.fallback) : Json(nullptr);
  out["timings_ms"] = Json(trace.timings_ms);
  out["backend_ids"] = Json(trace.backend_ids);
  out["created_at"] = trace.created_at;
  out["annotations"] = std::move(people);
  return out;
}

PipelineTrace trace_from_json(const Json& node) {
  PipelineTrace t = guarded("trace", [&] {
    PipelineTrace tr;
    tr.trace_id = string_field(node, "trace_id");
    tr.query_id = string_field(node, "query_id");
    tr.query = string_field(node, "query");
    tr.profile_text = string_field(node, "profile_text");
    const Json& d = field(node, "decision");
    tr.decision.verdict = parse_reject_verdict(string_field(d, "verdict"));
    tr.decision.rationale = string_field(d, "rationale");
    tr.decision.raw = string_field(d, "raw");
    tr.decision.parse_failed = bool_field(d, "parse_failed", false);
    if (const auto it = node.find("pcq"); it != node.end() && !it->is_null()) {
      tr.pcq = PrivacyCompliantQuery{string_field(*it, "text"), string_field(*it, "rationale"),
                                     string_field(*it, "raw")};
    }
    tr.external_answer = optional_string(node, "external_answer");
    tr.final_answer = string_field(node, "final_answer");
    tr.path = parse_trace_path(string_field(node, "path"));
    tr.fallback = optional_string(node, "fallback");
    if (const auto it = node.find("timings_ms"); it != node.end()) {
      tr.timings_ms = it->get<std::map<std::string, double>>();
    }
    if (const auto it = node.find("backend_ids"); it != node.end()) {
      tr.backend_ids = it->get<std::map<std::string, std::string>>();
    }
    tr.created_at = string_field(node, "created_at");
    if (const auto it = node.find("annotations"); it != node.end()) tr.annotations = people_from_json(*it);
    return tr;
  });
  validate(t);
  return t;
}

Json to_json(const LeakAudit& audit) {
  return Json{{"query_id", audit.query_id},
              {"trace_id", audit.trace_id},
              {"owner_id", audit.instance.owner_id},
              {"type", to_string(audit.instance.type)},
              {"value", audit.instance.value},
              {"disclosure", to_string(audit.instance.disclosure)},
              {"leaked", audit.leaked},
              {"judged_text", audit.judged_text},
              {"raw_verdict", audit.raw_verdict},
              {"parse_failed", audit.parse_failed}};
}

LeakAudit audit_from_json(const Json& node) {
  return guarded("audit", [&] {
    LeakAudit a;
    a.query_id = string_field(node, "query_id");
    a.trace_id = optional_string(node, "trace_id").value_or("");
    a.instance.owner_id = string_field(node, "owner_id");
    a.instance.type = parse_attribute_type(string_field(node, "type"));
    a.instance.value = string_field(node, "value");
    a.instance.disclosure = parse_disclosure(string_field(node, "disclosure"));
    const Json& leaked = field(node, "leaked");
    if (!leaked.is_boolean()) throw ValidationError("'leaked' must be a boolean");
    a.leaked = leaked.get<bool>();
    a.judged_text = optional_string(node, "judged_text").value_or("");
    a.raw_verdict = optional_string(node, "raw_verdict").value_or("");
    a.parse_failed = bool_field(node, "parse_failed", false);
    return a;
  });
}

Json to_json(const JudgeVerdict& verdict) {
  return Json{{"query_id", verdict.query_id},
              {"round1_winner", to_string(verdict.round1_winner)},
              {"round2_winner", to_string(verdict.round2_winner)},
              {"outcome", to_string(verdict.outcome)},
              {"raw_round1", verdict.raw_round1},
              {"raw_round2", verdict.raw_round2},
              {"parse_failures", verdict.parse_failures}};
}

JudgeVerdict verdict_from_json(const Json& node) {
  return guarded("verdict", [&] {
    JudgeVerdict v;
    v.query_id = string_field(node, "query_id");
    v.round1_winner = parse_position(string_field(node, "round1_winner"));
    v.round2_winner = parse_position(string_field(node, "round2_winner"));
    v.outcome = parse_outcome(string_field(node, "outcome"));
    if (v.outcome != judge_outcome(v.round1_winner, v.round2_winner)) {
      throw ValidationError("verdict outcome disagrees with its round winners");
    }
    v.raw_round1 = optional_string(node, "raw_round1").value_or("");
    v.raw_round2 = optional_string(node, "raw_round2").value_or("");
    v.parse_failures = node.value("parse_failures", 0);
    return v;
  });
}

Json to_json(const AbsoluteScore& score) {
  return Json{{"query_id", score.query_id}, {"score", score.score ? Json(*score.score) : Json(nullptr)}};
}

AbsoluteScore score_from_json(const Json& node) {
  return guarded("score", [&] {
    AbsoluteScore s;
    s.query_id = string_field(node, "query_id");
    if (const auto it = node.find("score"); it != node.end() && !it->is_null()) {
      const int value = it->get<int>();
      if (value < 1 || value > 4) throw ValidationError("score must lie in 1..4");
      s.score = value;
    }
    return s;
  });
}

Json to_json(const LeakRates& rates) {
  return Json{{"leak_pro", optional_number(rates.leak_pro)},
              {"leak_aut", optional_number(rates.leak_aut)},
              {"protected_total", rates.protected_total},
              {"protected_leaked", rates.protected_leaked},
              {"authorised_total", rates.authorised_total},
              {"authorised_leaked", rates.authorised_leaked}};
}

Json to_json(const MetricsReport& report) {
  const auto& c = report.counts;
  Json per_attribute = Json::array();
  for (const auto& a : report.per_attribute_leak_pro) {
    per_attribute.push_back(Json{{"attribute", to_string(a.type)},
                                 {"leak_pro", a.leak_pro},
                                 {"protected_leaked", a.protected_leaked},
                                 {"protected_total", a.protected_total}});
  }
  return Json{
      {"success_rate", optional_number(report.success_rate)},
      {"win_rate", optional_number(report.win_rate)},
      {"leak_pro", optional_number(report.leak_pro)},
      {"leak_aut", optional_number(report.leak_aut)},
      {"delegated_only",
       {{"leak_pro", optional_number(report.delegated_leak_pro)},
        {"leak_aut", optional_number(report.delegated_leak_aut)}}},
      {"reject_rate", optional_number(report.reject_rate)},
      {"absolute_mean", optional_number(report.absolute_mean)},
      {"per_attribute_leak_pro", std::move(per_attribute)},
      {"counts",
       {{"traces", c.traces},
        {"local_only", c.local_only},
        {"delegated", c.delegated},
        {"verdicts", c.verdicts},
        {"wins", c.wins},
        {"draws", c.draws},
        {"losses", c.losses},
        {"protected_total", c.protected_total},
        {"protected_leaked", c.protected_leaked},
        {"authorised_total", c.authorised_total},
        {"authorised_leaked", c.authorised_leaked},
        {"delegated_protected_total", c.delegated_protected_total},
        {"delegated_protected_leaked", c.delegated_protected_leaked},
        {"delegated_authorised_total", c.delegated_authorised_total},
        {"delegated_authorised_leaked", c.delegated_authorised_leaked},
        {"scores_present", c.scores_present},
        {"scores_missing", c.scores_missing},
        {"score_sum", c.score_sum}}}};
}

std::string dump_line(const Json& node) {
  return node.dump(-1, ' ', false, Json::error_handler_t::replace);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw StorageError("cannot open '" + path + "' for reading");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

}  // namespace privgate
