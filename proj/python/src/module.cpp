#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>
#include <string>
#include <vector>

#include "privgate/cli.hpp"
#include "privgate/core_types.hpp"
#include "privgate/dataset.hpp"
#include "privgate/errors.hpp"
#include "privgate/evaluation.hpp"
#include "privgate/markers.hpp"
#include "privgate/redaction.hpp"
#include "privgate/serialization.hpp"

namespace py = pybind11;
using namespace privgate;

namespace {

MetricsReport report_from(const std::string& traces, const std::string& audits, const std::string& verdicts,
                          const std::string& scores) {
  return build_report(parse_jsonl<PipelineTrace>(traces, trace_from_json),
                      parse_jsonl<LeakAudit>(audits, audit_from_json),
                      parse_jsonl<JudgeVerdict>(verdicts, verdict_from_json),
                      parse_jsonl<AbsoluteScore>(scores, score_from_json));
}

template <typename E>
void bind_error(py::module_& m, const char* name, const py::handle& base) {
  py::register_exception<E>(m, name, base);
}

}  // namespace

PYBIND11_MODULE(_privgate, m) {
  m.doc() = "Native core of the privgate delegation gateway";

  static py::exception<Error> error(m, "Error");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      error(e.what());
    }
  });
  bind_error<ConfigError>(m, "ConfigError", error);
  bind_error<TransportError>(m, "TransportError", error);
  bind_error<ProtocolError>(m, "ProtocolError", error);
  bind_error<ParseError>(m, "ParseError", error);
  bind_error<ScriptExhausted>(m, "ScriptExhausted", error);
  bind_error<StorageError>(m, "StorageError", error);
  bind_error<EmptyInput>(m, "EmptyInput", error);
  bind_error<InconsistentUniverse>(m, "InconsistentUniverse", error);
  bind_error<PreconditionError>(m, "PreconditionError", error);
  bind_error<ValidationError>(m, "ValidationError", error);

  static py::exception<SchemaError> schema_error(m, "SchemaError", error);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const SchemaError& e) {
      py::object instance = py::reinterpret_borrow<py::object>(schema_error.ptr())(e.what());
      instance.attr("line") = e.line();
      instance.attr("reason") = e.reason();
      PyErr_SetObject(schema_error.ptr(), instance.ptr());
    }
  });

  m.def("judge_outcome",
        [](const std::string& round1, const std::string& round2) {
          return std::string(to_string(judge_outcome(parse_position(round1), parse_position(round2))));
        },
        py::arg("round1_winner"), py::arg("round2_winner"));

  m.def("parse_rejector_output", [](const std::string& raw) {
    const auto out = parse_rejector_output(raw);
    return py::make_tuple(out.paraphrase, out.rationale);
  });
  m.def("parse_paraphraser_output", [](const std::string& raw) {
    const auto out = parse_paraphraser_output(raw);
    return py::make_tuple(out.text, out.rationale);
  });
  m.def("extract_outermost_brackets", [](const std::string& raw) { return extract_outermost_brackets(raw); });
  m.def("parse_pairwise_choice", [](const std::string& raw) { return std::string(1, parse_pairwise_choice(raw)); });
  m.def("parse_absolute_rating", [](const std::string& raw) { return parse_absolute_rating(raw); });

  m.def("luhn_valid", [](const std::string& digits) { return luhn_valid(digits); });
  m.def("baseline_redact", [](const std::string& text) {
    const auto r = baseline_redact(text);
    return py::make_tuple(r.text, r.mapping);
  });
  m.def("baseline_restore", [](const std::string& answer, const std::map<std::string, std::string>& mapping) {
    return baseline_restore(answer, mapping);
  });

  m.def("persona_shared", [](const std::string& name) {
    std::vector<std::string> out;
    for (const auto type : persona_policy(parse_persona_name(name)).shared) out.emplace_back(to_string(type));
    return out;
  });

  m.def("scramble_characters",
        [](const std::string& value, std::uint64_t seed) {
          Rng rng(seed);
          return scramble_characters(value, rng);
        },
        py::arg("value"), py::arg("seed"));
  m.def("anonymise_json",
        [](const std::string& record, std::uint64_t seed) {
          return dump_line(to_json(anonymise(peep_from_json(Json::parse(record)), NamePool::builtin(), seed)));
        },
        py::arg("record"), py::arg("seed"));
  m.def("parse_corpus_jsonl", [](const std::string& jsonl) {
    std::vector<std::string> out;
    for (const auto& record : parse_corpus(jsonl)) out.push_back(dump_line(to_json(record)));
    return out;
  });

  m.def("build_report_json",
        [](const std::string& traces, const std::string& audits, const std::string& verdicts,
           const std::string& scores) { return dump_line(to_json(report_from(traces, audits, verdicts, scores))); },
        py::arg("traces"), py::arg("audits"), py::arg("verdicts"), py::arg("scores") = "");
  m.def("report_text",
        [](const std::string& traces, const std::string& audits, const std::string& verdicts,
           const std::string& scores) { return render_report_text(report_from(traces, audits, verdicts, scores)); },
        py::arg("traces"), py::arg("audits"), py::arg("verdicts"), py::arg("scores") = "");

  m.def("run_cli", [](const std::vector<std::string>& args) {
    std::vector<const char*> argv{"privgate"};
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out;
    std::ostringstream err;
    int code = 0;
    {
      py::gil_scoped_release release;
      code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    }
    return py::make_tuple(code, out.str(), err.str());
  });
}
