#pragma once

#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "privgate/evaluation.hpp"
#include "privgate/pipeline.hpp"
#include "privgate/random.hpp"

namespace privgate {

// Appends whole lines with a single write followed by fsync. A failed write
// is truncated away so the file never ends in a partial line.
void append_line_durably(const std::filesystem::path& path, const std::string& line);

// Append-only JSONL file of traces with an in-memory id index.
class TraceStore {
 public:
  // Loads an existing file; a missing file is an empty store.
  explicit TraceStore(std::filesystem::path path);

  TraceStore(const TraceStore&) = delete;
  TraceStore& operator=(const TraceStore&) = delete;

  // Assigns a fresh id when trace_id is empty, reusing it as query_id when
  // that is empty too. StorageError on write failure or a duplicate id,
  // ValidationError for a malformed trace.
  std::string persist(PipelineTrace trace);

  [[nodiscard]] std::optional<PipelineTrace> get(const std::string& id) const;
  [[nodiscard]] std::vector<PipelineTrace> snapshot() const;  // append order
  [[nodiscard]] std::size_t size() const;
  [[nodiscard]] const std::filesystem::path& path() const noexcept { return path_; }

 private:
  std::string fresh_id();

  std::filesystem::path path_;
  mutable std::mutex mutex_;
  std::vector<PipelineTrace> traces_;
  std::map<std::string, std::size_t> index_;
  Rng id_rng_;
};

// Audit sets keyed by trace id; a later set for the same trace supersedes
// the earlier one, on reload as well.
class AuditStore {
 public:
  explicit AuditStore(std::filesystem::path path);

  AuditStore(const AuditStore&) = delete;
  AuditStore& operator=(const AuditStore&) = delete;

  void persist(const std::string& trace_id, const std::vector<LeakAudit>& audits);

  [[nodiscard]] std::optional<std::vector<LeakAudit>> get(const std::string& trace_id) const;
  // Latest set per trace, in order of first audit.
  [[nodiscard]] std::vector<LeakAudit> snapshot() const;

 private:
  std::filesystem::path path_;
  mutable std::mutex mutex_;
  std::vector<std::string> order_;
  std::map<std::string, std::vector<LeakAudit>> sets_;
};

}  // namespace privgate
