#include "adpc/store/atomic_file.h"

#include "adpc/core/error.h"

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <fstream>
#include <mutex>
#include <sstream>

namespace adpc {
namespace {

std::mutex g_hook_mutex;
std::function<void(WriteStage)> g_hook;

void fire(WriteStage stage) {
  std::function<void(WriteStage)> hook;
  {
    std::lock_guard lock(g_hook_mutex);
    hook = g_hook;
  }
  if (hook) hook(stage);
}

[[noreturn]] void io_error(const std::string& what, const std::filesystem::path& p) {
  throw Error(ErrorCode::kIo, what + " '" + p.string() + "': " + std::strerror(errno));
}

class Fd {
 public:
  explicit Fd(int fd) : fd_(fd) {}
  Fd(const Fd&) = delete;
  Fd& operator=(const Fd&) = delete;
  ~Fd() {
    if (fd_ >= 0) ::close(fd_);
  }
  int get() const { return fd_; }
  int release() {
    int fd = fd_;
    fd_ = -1;
    return fd;
  }

 private:
  int fd_;
};

}  // namespace

void set_atomic_write_fault_hook(std::function<void(WriteStage)> hook) {
  std::lock_guard lock(g_hook_mutex);
  g_hook = std::move(hook);
}

void atomic_write_file(const std::filesystem::path& path, std::string_view content, bool durable) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    Fd fd(::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0600));
    if (fd.get() < 0) io_error("cannot create", tmp);
    std::size_t written = 0;
    while (written < content.size()) {
      ssize_t n = ::write(fd.get(), content.data() + written, content.size() - written);
      if (n < 0) {
        if (errno == EINTR) continue;
        io_error("cannot write", tmp);
      }
      written += static_cast<std::size_t>(n);
    }
    if (durable && ::fsync(fd.get()) != 0) io_error("cannot fsync", tmp);
    if (::close(fd.release()) != 0) io_error("cannot close", tmp);
  }
  fire(WriteStage::kTempWritten);
  if (::rename(tmp.c_str(), path.c_str()) != 0) io_error("cannot rename onto", path);
  if (durable) {
    const auto dir = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");
    Fd dfd(::open(dir.c_str(), O_RDONLY | O_DIRECTORY | O_CLOEXEC));
    if (dfd.get() >= 0) ::fsync(dfd.get());
  }
  fire(WriteStage::kRenamed);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) io_error("cannot open", path);
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) io_error("cannot read", path);
  return ss.str();
}

}  // namespace adpc
