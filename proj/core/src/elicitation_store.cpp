#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <fstream>

#include "clrmix/errors.h"
#include "clrmix/service.h"

namespace clrmix {

using nlohmann::json;

json to_json(const ElicitationRecord& r) {
  return {
      {"timestamp", r.timestamp},
      {"session_id", r.session_id},
      {"omega", r.omega},
      {"priors", r.priors},
      {"consent", r.consent},
      {"roster_fingerprint", r.roster_fingerprint},
  };
}

ElicitationRecord elicitation_record_from_json(const json& doc) {
  try {
    ElicitationRecord r;
    r.timestamp = doc.at("timestamp").get<std::string>();
    r.session_id = doc.at("session_id").get<std::string>();
    r.omega = doc.at("omega").get<double>();
    r.priors = doc.at("priors").get<std::vector<double>>();
    r.consent = doc.at("consent").get<bool>();
    r.roster_fingerprint = doc.at("roster_fingerprint").get<std::string>();
    return r;
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed elicitation record: ") + e.what(), 1, 0);
  }
}

FileElicitationStore::FileElicitationStore(std::filesystem::path path) : path_(std::move(path)) {}

namespace {

std::string errno_text() { return std::strerror(errno); }

void roll_back(int fd, off_t size) {
  if (::ftruncate(fd, size) != 0) return;
}

class FileDescriptor {
 public:
  explicit FileDescriptor(int fd) : fd_(fd) {}
  ~FileDescriptor() {
    if (fd_ >= 0) ::close(fd_);
  }
  FileDescriptor(const FileDescriptor&) = delete;
  FileDescriptor& operator=(const FileDescriptor&) = delete;
  int get() const { return fd_; }

 private:
  int fd_;
};

}  // namespace

void FileElicitationStore::append(const ElicitationRecord& record) {
  const std::string line = to_json(record).dump() + "\n";

  std::lock_guard<std::mutex> lock(mutex_);
  FileDescriptor fd(::open(path_.c_str(), O_WRONLY | O_APPEND | O_CREAT | O_CLOEXEC, 0644));
  if (fd.get() < 0) {
    throw StorageError("cannot open elicitation log '" + path_.string() + "': " + errno_text());
  }
  struct stat info {};
  if (::fstat(fd.get(), &info) != 0) {
    throw StorageError("cannot stat elicitation log: " + errno_text());
  }
  const off_t original_size = info.st_size;

  std::size_t written = 0;
  while (written < line.size()) {
    const ssize_t n = ::write(fd.get(), line.data() + written, line.size() - written);
    if (n < 0) {
      if (errno == EINTR) continue;
      const std::string reason = errno_text();
      roll_back(fd.get(), original_size);
      throw StorageError("elicitation append failed: " + reason);
    }
    written += static_cast<std::size_t>(n);
  }
  if (::fsync(fd.get()) != 0) {
    const std::string reason = errno_text();
    roll_back(fd.get(), original_size);
    throw StorageError("elicitation fsync failed: " + reason);
  }
}

std::vector<ElicitationRecord> FileElicitationStore::read_all() const {
  std::lock_guard<std::mutex> lock(mutex_);
  std::vector<ElicitationRecord> out;
  if (!std::filesystem::exists(path_)) return out;
  std::ifstream in(path_, std::ios::binary);
  if (!in) throw StorageError("cannot read elicitation log '" + path_.string() + "'");
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json doc;
    try {
      doc = json::parse(line);
    } catch (const json::parse_error&) {
      throw StorageError("elicitation log line " + std::to_string(line_no) + " is corrupt");
    }
    try {
      out.push_back(elicitation_record_from_json(doc));
    } catch (const ParseError& e) {
      throw StorageError("elicitation log line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace clrmix
