#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "privgate/core_types.hpp"
#include "privgate/dataset.hpp"
#include "privgate/evaluation.hpp"
#include "privgate/pipeline.hpp"

namespace privgate {

using Json = nlohmann::ordered_json;

// Readers throw ValidationError on missing fields or wrong types.
Json to_json(const AttributeInstance& instance);
Json to_json(const PersonRecord& person);
std::vector<PersonRecord> people_from_json(const Json& array);
Json to_json(const PrivacyProfile& profile);
PrivacyProfile profile_from_json(const Json& node);

Json to_json(const PeepRecord& record);
PeepRecord peep_from_json(const Json& node);

Json to_json(const RawConversation& conversation);
RawConversation conversation_from_json(const Json& node);

Json to_json(const PipelineTrace& trace);
PipelineTrace trace_from_json(const Json& node);

Json to_json(const LeakAudit& audit);
LeakAudit audit_from_json(const Json& node);

Json to_json(const JudgeVerdict& verdict);
JudgeVerdict verdict_from_json(const Json& node);

Json to_json(const AbsoluteScore& score);
AbsoluteScore score_from_json(const Json& node);

Json to_json(const LeakRates& rates);
Json to_json(const MetricsReport& report);

// Compact single-line form used for JSONL files.
std::string dump_line(const Json& node);

// One JSON document per non-blank line; SchemaError names the line.
template <typename T, typename Reader>
std::vector<T> parse_jsonl(std::string_view text, Reader read);

std::string read_text_file(const std::string& path);

}  // namespace privgate

#include "privgate/detail/jsonl.ipp"
