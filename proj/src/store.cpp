#include "privgate/store.hpp"

#include <cerrno>
#include <cstring>
#include <fcntl.h>
#include <random>
#include <sys/stat.h>
#include <unistd.h>

#include "privgate/serialization.hpp"

namespace privgate {

namespace {

class FileDescriptor {
 public:
  explicit FileDescriptor(int fd) : fd_(fd) {}
  ~FileDescriptor() {
    if (fd_ >= 0) ::close(fd_);
  }
  FileDescriptor(const FileDescriptor&) = delete;
  FileDescriptor& operator=(const FileDescriptor&) = delete;

  int get() const noexcept { return fd_; }

 private:
  int fd_;
};

std::string errno_text() { return std::strerror(errno); }

std::string read_if_exists(const std::filesystem::path& path) {
  std::error_code ec;
  if (!std::filesystem::exists(path, ec)) return {};
  return read_text_file(path.string());
}

}  // namespace

void append_line_durably(const std::filesystem::path& path, const std::string& line) {
  std::string payload = line;
  if (payload.empty() || payload.back() != '\n') payload += '\n';

  FileDescriptor fd(::open(path.c_str(), O_WRONLY | O_APPEND | O_CREAT | O_CLOEXEC, 0644));
  if (fd.get() < 0) throw StorageError("cannot open '" + path.string() + "': " + errno_text());

  struct stat st {};
  if (::fstat(fd.get(), &st) != 0) throw StorageError("cannot stat '" + path.string() + "': " + errno_text());
  const off_t before = st.st_size;

  const ssize_t written = ::write(fd.get(), payload.data(), payload.size());
  if (written != static_cast<ssize_t>(payload.size())) {
    const std::string reason = written < 0 ? errno_text() : "short write";
    if (::ftruncate(fd.get(), before) != 0) {
      throw StorageError("write to '" + path.string() + "' failed (" + reason + ") and could not be rolled back");
    }
    throw StorageError("write to '" + path.string() + "' failed: " + reason);
  }
  if (::fsync(fd.get()) != 0) throw StorageError("fsync of '" + path.string() + "' failed: " + errno_text());
}

TraceStore::TraceStore(std::filesystem::path path) : path_(std::move(path)), id_rng_(std::random_device{}()) {
  auto loaded = parse_jsonl<PipelineTrace>(read_if_exists(path_), [](const Json& n) { return trace_from_json(n); });
  for (auto& t : loaded) {
    if (t.trace_id.empty()) throw StorageError("trace store '" + path_.string() + "' holds a trace without id");
    if (!index_.emplace(t.trace_id, traces_.size()).second) {
      throw StorageError("trace store '" + path_.string() + "' holds duplicate id '" + t.trace_id + "'");
    }
    traces_.push_back(std::move(t));
  }
}

std::string TraceStore::fresh_id() {
  static constexpr char kHex[] = "0123456789abcdef";
  for (;;) {
    std::uint64_t bits = id_rng_();
    std::string id = "tr-";
    for (int i = 0; i < 16; ++i, bits >>= 4) id += kHex[bits & 0xF];
    if (!index_.count(id)) return id;
  }
}

std::string TraceStore::persist(PipelineTrace trace) {
  std::lock_guard lock(mutex_);
  if (trace.trace_id.empty()) {
    trace.trace_id = fresh_id();
    if (trace.query_id.empty()) trace.query_id = trace.trace_id;
  } else if (index_.count(trace.trace_id)) {
    throw StorageError("trace id '" + trace.trace_id + "' already stored");
  }
  validate(trace);
  append_line_durably(path_, dump_line(to_json(trace)));
  index_.emplace(trace.trace_id, traces_.size());
  traces_.push_back(std::move(trace));
  return traces_.back().trace_id;
}

std::optional<PipelineTrace> TraceStore::get(const std::string& id) const {
  std::lock_guard lock(mutex_);
  const auto it = index_.find(id);
  if (it == index_.end()) return std::nullopt;
  return traces_[it->second];
}

std::vector<PipelineTrace> TraceStore::snapshot() const {
  std::lock_guard lock(mutex_);
  return traces_;
}

std::size_t TraceStore::size() const {
  std::lock_guard lock(mutex_);
  return traces_.size();
}

namespace {

struct AuditSet {
  std::string trace_id;
  std::vector<LeakAudit> audits;
};

}  // namespace

AuditStore::AuditStore(std::filesystem::path path) : path_(std::move(path)) {
  const auto sets = parse_jsonl<AuditSet>(read_if_exists(path_), [](const Json& n) {
    AuditSet s;
    s.trace_id = n.at("trace_id").get<std::string>();
    for (const auto& a : n.at("audits")) s.audits.push_back(audit_from_json(a));
    return s;
  });
  for (const auto& s : sets) {
    if (!sets_.count(s.trace_id)) order_.push_back(s.trace_id);
    sets_[s.trace_id] = s.audits;
  }
}

void AuditStore::persist(const std::string& trace_id, const std::vector<LeakAudit>& audits) {
  Json array = Json::array();
  for (const auto& a : audits) array.push_back(to_json(a));
  const std::string line = dump_line(Json{{"trace_id", trace_id}, {"audits", std::move(array)}});

  std::lock_guard lock(mutex_);
  append_line_durably(path_, line);
  if (!sets_.count(trace_id)) order_.push_back(trace_id);
  sets_[trace_id] = audits;
}

std::optional<std::vector<LeakAudit>> AuditStore::get(const std::string& trace_id) const {
  std::lock_guard lock(mutex_);
  const auto it = sets_.find(trace_id);
  if (it == sets_.end()) return std::nullopt;
  return it->second;
}

std::vector<LeakAudit> AuditStore::snapshot() const {
  std::lock_guard lock(mutex_);
  std::vector<LeakAudit> out;
  for (const auto& id : order_) {
    const auto& set = sets_.at(id);
    out.insert(out.end(), set.begin(), set.end());
  }
  return out;
}

}  // namespace privgate
