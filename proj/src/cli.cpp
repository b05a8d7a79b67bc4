#include "privgate/cli.hpp"

#include <atomic>
#include <csignal>
#include <fstream>
#include <ostream>
#include <thread>

#include <CLI11.hpp>

#include "privgate/config.hpp"
#include "privgate/dataset.hpp"
#include "privgate/gateway.hpp"
#include "privgate/log.hpp"

namespace privgate {

namespace {

struct CommonOptions {
  std::string config;

  GatewayConfig load() const {
    return resolve_gateway_config(config.empty() ? std::nullopt : std::optional<std::filesystem::path>(config));
  }
};

PromptLibrary prompts_for(const GatewayConfig& cfg) {
  return cfg.prompt_dir ? PromptLibrary::load(cfg.prompt_dir) : PromptLibrary::builtin();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw StorageError("cannot open '" + tmp.string() + "' for writing");
    out << text;
    if (!out.flush()) throw StorageError("write to '" + tmp.string() + "' failed");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw StorageError("cannot move output into '" + path.string() + "'");
}

template <typename T>
std::string to_jsonl(const std::vector<T>& items) {
  std::string out;
  for (const auto& item : items) out += dump_line(to_json(item)) + '\n';
  return out;
}

// Accepts plain audit lines as well as the gateway's per-trace audit sets.
std::vector<LeakAudit> read_audits(const std::string& path) {
  const auto lines = parse_jsonl<std::vector<LeakAudit>>(read_text_file(path), [](const Json& node) {
    std::vector<LeakAudit> out;
    if (node.is_object() && node.contains("audits")) {
      for (const auto& a : node.at("audits")) out.push_back(audit_from_json(a));
    } else {
      out.push_back(audit_from_json(node));
    }
    return out;
  });
  std::vector<LeakAudit> flat;
  for (const auto& l : lines) flat.insert(flat.end(), l.begin(), l.end());
  return flat;
}

int cmd_delegate(const CommonOptions& common, const std::string& query_file, const std::string& profile_file,
                 const std::string& persona, const std::string& people_file, const std::string& query_id,
                 std::ostream& out) {
  QueryRecord record;
  record.id = query_id.empty() ? "cli" : query_id;
  record.query = read_text_file(query_file);
  if (!people_file.empty()) record.people = people_from_json(Json::parse(read_text_file(people_file)));
  if (!persona.empty()) {
    const PersonaPolicy policy = persona_policy(parse_persona_name(persona));
    record.people = apply_persona(std::move(record.people), policy);
    record.profile = {persona_profile_text(policy), std::nullopt, ProfileSource::Persona};
  }
  if (!profile_file.empty()) record.profile = {trim(read_text_file(profile_file)), std::nullopt, ProfileSource::UserWritten};
  if (trim(record.profile.text).empty()) throw PreconditionError("a non-empty profile file or a persona is required");
  validate(record);

  const GatewayConfig cfg = common.load();
  const GatewayBackends backends = make_backends(cfg);
  const PromptLibrary prompts = prompts_for(cfg);
  const PipelineTrace trace =
      run_pipeline(record, PipelineBackends{*backends.local.backend, *backends.external.backend}, prompts);
  out << to_json(trace).dump(2) << '\n';
  return 0;
}

int cmd_evaluate(const CommonOptions& common, const std::string& corpus_path, const std::string& report_path,
                 const std::string& artifacts_dir, std::ostream& out) {
  const auto corpus = load_corpus(corpus_path);
  if (corpus.empty()) throw EmptyInput("corpus '" + corpus_path + "' has no records");
  const GatewayConfig cfg = common.load();
  const GatewayBackends backends = make_backends(cfg);
  const PromptLibrary prompts = prompts_for(cfg);
  const ChatBackend& local = *backends.local.backend;
  const ChatBackend& external = *backends.external.backend;
  const ChatBackend& judge = *backends.judge.backend;

  std::vector<PipelineTrace> traces;
  std::vector<LeakAudit> audits;
  std::vector<JudgeVerdict> verdicts;
  std::vector<AbsoluteScore> scores;
  for (const auto& rec : corpus) {
    PipelineTrace trace = run_pipeline(rec.record, PipelineBackends{local, external}, prompts);
    trace.trace_id = rec.record.id;
    const std::string baseline = external.chat({{MessageRole::User, rec.record.query}}).content;
    verdicts.push_back(pairwise_judge(rec.record.query, trace.final_answer, baseline, judge, prompts, rec.record.id));
    const auto record_audits = audit_trace(trace, judge, prompts);
    audits.insert(audits.end(), record_audits.begin(), record_audits.end());
    scores.push_back({rec.record.id, absolute_score(rec.record.query, trace.final_answer, judge, prompts)});
    traces.push_back(std::move(trace));
    log().info("evaluated {} ({})", rec.record.id, to_string(traces.back().path));
  }

  const MetricsReport report = build_report(traces, audits, verdicts, scores);
  write_text(report_path, to_json(report).dump(2) + "\n");
  if (!artifacts_dir.empty()) {
    std::filesystem::create_directories(artifacts_dir);
    const std::filesystem::path dir(artifacts_dir);
    write_text(dir / "traces.jsonl", to_jsonl(traces));
    write_text(dir / "audits.jsonl", to_jsonl(audits));
    write_text(dir / "verdicts.jsonl", to_jsonl(verdicts));
    write_text(dir / "scores.jsonl", to_jsonl(scores));
  }
  out << render_report_text(report);
  return 0;
}

int cmd_dataset_build(const CommonOptions& common, const std::string& raw_path, const std::string& out_path,
                      std::uint64_t seed, std::ostream& out) {
  const auto raw = load_raw_conversations(raw_path);
  BuildResult result;
  if (!raw.empty()) {
    const GatewayConfig cfg = common.load();
    const GatewayBackends backends = make_backends(cfg);
    result = build_corpus(raw, *backends.construction.backend, BuildOptions{seed, nullptr}, prompts_for(cfg));
  }
  save_corpus(out_path, result.corpus);
  out << dump_line(Json{{"input", raw.size()}, {"records", result.corpus.size()}, {"dropped", Json(result.dropped)}})
      << '\n';
  return 0;
}

int cmd_persona_apply(const CommonOptions& common, const std::string& corpus_path, const std::string& persona,
                      const std::string& out_path, const std::string& tone, std::uint64_t seed, std::ostream& out) {
  const PersonaPolicy policy = persona_policy(parse_persona_name(persona));
  const auto corpus = load_corpus(corpus_path);
  ReprofileResult result;
  if (!corpus.empty()) {
    const GatewayConfig cfg = common.load();
    const GatewayBackends backends = make_backends(cfg);
    const ProfileTone chosen = tone.empty() ? cfg.persona_tone : parse_tone(tone);
    result = reprofile_with_persona(corpus, policy, chosen, *backends.construction.backend, seed, prompts_for(cfg));
  }
  save_corpus(out_path, result.corpus);
  Json failures = Json::array();
  for (const auto& f : result.failures) failures.push_back(Json{{"id", f.id}, {"reason", f.reason}});
  out << dump_line(Json{{"persona", to_string(policy.name)},
                        {"records", result.corpus.size()},
                        {"failures", std::move(failures)}})
      << '\n';
  return 0;
}

int cmd_report(const std::string& traces_path, const std::string& audits_path, const std::string& verdicts_path,
               const std::string& scores_path, bool as_json, std::ostream& out) {
  const auto traces =
      parse_jsonl<PipelineTrace>(read_text_file(traces_path), [](const Json& n) { return trace_from_json(n); });
  const auto audits = audits_path.empty() ? std::vector<LeakAudit>{} : read_audits(audits_path);
  const auto verdicts = verdicts_path.empty()
                            ? std::vector<JudgeVerdict>{}
                            : parse_jsonl<JudgeVerdict>(read_text_file(verdicts_path),
                                                        [](const Json& n) { return verdict_from_json(n); });
  const auto scores = scores_path.empty()
                          ? std::vector<AbsoluteScore>{}
                          : parse_jsonl<AbsoluteScore>(read_text_file(scores_path),
                                                       [](const Json& n) { return score_from_json(n); });
  const MetricsReport report = build_report(traces, audits, verdicts, scores);
  if (as_json) {
    out << to_json(report).dump(2) << '\n';
  } else {
    out << render_report_text(report);
  }
  return 0;
}

int cmd_serve(const CommonOptions& common, const std::string& listen, std::ostream& out) {
  GatewayConfig cfg = common.load();
  if (!listen.empty()) {
    const auto colon = listen.rfind(':');
    if (colon == std::string::npos) throw ConfigError("--listen must be host:port");
    cfg.listen_host = listen.substr(0, colon);
    cfg.listen_port = std::stoi(listen.substr(colon + 1));
  }
  const GatewayBackends backends = make_backends(cfg);
  const PromptLibrary prompts = prompts_for(cfg);
  TraceStore traces(cfg.trace_store_path);
  AuditStore audits(cfg.audit_store_path);
  Gateway gateway(GatewayDeps{*backends.local.backend, *backends.external.backend, *backends.judge.backend, prompts,
                              traces, audits});

  // Signals are taken synchronously by a watcher thread; server threads
  // inherit the blocked mask.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  HttpServer server(gateway);
  const int port = server.bind(cfg.listen_host, cfg.listen_port);
  out << dump_line(Json{{"listening", cfg.listen_host + ":" + std::to_string(port)}}) << std::endl;

  std::atomic<bool> done{false};
  std::thread watcher([&] {
    const timespec tick{0, 200'000'000};
    while (!done) {
      if (sigtimedwait(&signals, nullptr, &tick) > 0) {
        server.stop();
        return;
      }
    }
  });
  server.listen_after_bind();
  done = true;
  watcher.join();
  return 0;
}

void print_error(std::ostream& err, std::string_view kind, std::string_view message) {
  err << dump_line(Json{{"error", kind}, {"message", message}}) << '\n';
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Privacy-conscious delegation gateway", "privgate"};
  app.require_subcommand(1);
  CommonOptions common;
  app.add_option("--config", common.config, "Gateway config file (default: $PRIVGATE_CONFIG)");

  std::function<int()> action;

  auto* delegate = app.add_subcommand("delegate", "Run one query through the pipeline and print the trace");
  std::string query_file, profile_file, persona, people_file, query_id;
  delegate->add_option("--query-file", query_file, "File holding the query")->required()->check(CLI::ExistingFile);
  delegate->add_option("--profile-file", profile_file, "File holding the privacy profile")->check(CLI::ExistingFile);
  delegate->add_option("--persona", persona, "private_user, medical or ecommerce");
  delegate->add_option("--people-file", people_file, "JSON array of annotated people")->check(CLI::ExistingFile);
  delegate->add_option("--query-id", query_id, "Query id recorded in the trace");
  delegate->callback([&] {
    action = [&] { return cmd_delegate(common, query_file, profile_file, persona, people_file, query_id, out); };
  });

  auto* evaluate = app.add_subcommand("evaluate", "Pipeline, audits and judging over a corpus");
  std::string corpus, report_out, artifacts;
  evaluate->add_option("--corpus", corpus, "Corpus JSONL")->required()->check(CLI::ExistingFile);
  evaluate->add_option("--out", report_out, "Report JSON output")->required();
  evaluate->add_option("--artifacts", artifacts, "Directory for traces/audits/verdicts/scores JSONL");
  evaluate->callback([&] { action = [&] { return cmd_evaluate(common, corpus, report_out, artifacts, out); }; });

  auto* dataset = app.add_subcommand("dataset", "Corpus construction");
  dataset->require_subcommand(1);
  auto* build = dataset->add_subcommand("build", "Build a corpus from raw conversations");
  std::string raw_path, build_out;
  std::uint64_t seed = 0;
  build->add_option("--raw", raw_path, "Raw conversations JSONL")->required()->check(CLI::ExistingFile);
  build->add_option("--out", build_out, "Corpus JSONL output")->required();
  build->add_option("--seed", seed, "Construction seed")->required();
  build->callback([&] { action = [&] { return cmd_dataset_build(common, raw_path, build_out, seed, out); }; });

  auto* persona_cmd = app.add_subcommand("persona", "Persona re-profiling");
  persona_cmd->require_subcommand(1);
  auto* apply = persona_cmd->add_subcommand("apply", "Re-profile a corpus under a persona policy");
  std::string persona_corpus, persona_name, persona_out, tone;
  std::uint64_t persona_seed = 0;
  apply->add_option("--corpus", persona_corpus, "Corpus JSONL")->required()->check(CLI::ExistingFile);
  apply->add_option("--persona", persona_name, "private_user, medical or ecommerce")->required();
  apply->add_option("--out", persona_out, "Corpus JSONL output")->required();
  apply->add_option("--tone", tone, "Profile tone (default from config)");
  apply->add_option("--seed", persona_seed, "Generation seed");
  apply->callback([&] {
    action = [&] {
      return cmd_persona_apply(common, persona_corpus, persona_name, persona_out, tone, persona_seed, out);
    };
  });

  auto* report = app.add_subcommand("report", "Metrics from stored traces, audits and verdicts");
  std::string traces_path, audits_path, verdicts_path, scores_path;
  bool as_json = false;
  report->add_option("--traces", traces_path, "Trace JSONL")->required()->check(CLI::ExistingFile);
  report->add_option("--audits", audits_path, "Audit JSONL")->check(CLI::ExistingFile);
  report->add_option("--verdicts", verdicts_path, "Verdict JSONL")->check(CLI::ExistingFile);
  report->add_option("--scores", scores_path, "Absolute score JSONL")->check(CLI::ExistingFile);
  report->add_flag("--json", as_json, "Emit JSON instead of the text tables");
  report->callback([&] {
    action = [&] { return cmd_report(traces_path, audits_path, verdicts_path, scores_path, as_json, out); };
  });

  auto* serve = app.add_subcommand("serve", "Run the HTTP gateway");
  std::string listen;
  serve->add_option("--listen", listen, "host:port (overrides the config)");
  serve->callback([&] { action = [&] { return cmd_serve(common, listen, out); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    print_error(err, "UsageError", e.what());
    return 2;
  }

  try {
    return action ? action() : 2;
  } catch (const Error& e) {
    print_error(err, e.kind(), e.what());
  } catch (const Json::exception& e) {
    print_error(err, "ValidationError", e.what());
  } catch (const std::exception& e) {
    print_error(err, "InternalError", e.what());
  }
  return 1;
}

}  // namespace privgate
