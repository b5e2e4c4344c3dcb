#include "pips/sandbox/sandbox.hpp"

#include <fcntl.h>
#include <poll.h>
#include <sched.h>
#include <signal.h>
#include <sys/resource.h>
#include <sys/syscall.h>
#include <sys/wait.h>
#include <unistd.h>

#include <array>
#include <cerrno>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <cstring>

#include "pips/core/errors.hpp"
#include "pips/core/prompts.hpp"

namespace pips {

void ExecLimits::validate() const {
  if (!(wall_seconds > 0.0) || !std::isfinite(wall_seconds)) {
    throw DomainError("ExecLimits.wall_seconds must be a positive number");
  }
  if (memory_bytes <= 0) throw DomainError("ExecLimits.memory_bytes must be positive");
}

RunOutcome Executor::execute(const ProgramArtifact& program,
                             const std::optional<SymbolStore>& symbols, const ExecLimits& limits) {
  limits.validate();
  ++calls_;
  return run(program, symbols, limits);
}

RunOutcome parse_worker_result(std::string_view text) {
  Json doc = Json::parse(text, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) {
    throw SchemaError("worker result is not a JSON object");
  }
  if (!doc.contains("status") || !doc["status"].is_string()) {
    throw SchemaError("worker result has no status");
  }
  RunOutcome out;
  out.status = parse_run_status(doc["status"].get<std::string>());
  if (out.status == RunStatus::ok) out.return_value = doc.value("return", Json());
  out.stdout_text = doc.value("stdout", std::string());
  out.exception_text = doc.value("exc", std::string());
  out.duration_seconds = doc.value("duration", 0.0);
  return out;
}

namespace {

constexpr std::size_t kProtocolCap = std::size_t{64} << 20;
constexpr std::size_t kStderrTail = 8192;

std::string resolve_on_path(const std::string& name) {
  if (name.find('/') != std::string::npos) {
    if (::access(name.c_str(), X_OK) != 0) throw ConfigError("interpreter not executable: " + name);
    return name;
  }
  const char* path = std::getenv("PATH");
  std::string dirs = path ? path : "/usr/local/bin:/usr/bin:/bin";
  std::size_t start = 0;
  while (start <= dirs.size()) {
    std::size_t end = dirs.find(':', start);
    if (end == std::string::npos) end = dirs.size();
    std::string dir = dirs.substr(start, end - start);
    if (dir.empty()) dir = ".";
    std::string candidate = dir + "/" + name;
    if (::access(candidate.c_str(), X_OK) == 0) return candidate;
    start = end + 1;
  }
  throw ConfigError("interpreter not found on PATH: " + name);
}

// Child-side helpers: only async-signal-safe calls from here on.
void child_fail(const char* what) {
  const char* err = std::strerror(errno);
  (void)!::write(2, "sandbox: ", 9);
  (void)!::write(2, what, std::strlen(what));
  (void)!::write(2, ": ", 2);
  (void)!::write(2, err, std::strlen(err));
  (void)!::write(2, "\n", 1);
  ::_exit(127);
}

bool write_file(const char* path, const char* text) {
  int fd = ::open(path, O_WRONLY | O_CLOEXEC);
  if (fd < 0) return false;
  std::size_t n = std::strlen(text);
  bool ok = ::write(fd, text, n) == static_cast<ssize_t>(n);
  ::close(fd);
  return ok;
}

struct UserMaps {
  std::string uid_map;
  std::string gid_map;
};

bool enter_network_namespace(NetworkIsolation mode, const UserMaps& maps) {
  switch (mode) {
    case NetworkIsolation::none:
      return true;
    case NetworkIsolation::net_namespace:
      return ::unshare(CLONE_NEWNET) == 0;
    case NetworkIsolation::user_and_net_namespace:
      if (::unshare(CLONE_NEWUSER | CLONE_NEWNET) != 0) return false;
      write_file("/proc/self/setgroups", "deny");
      return write_file("/proc/self/uid_map", maps.uid_map.c_str()) &&
             write_file("/proc/self/gid_map", maps.gid_map.c_str());
  }
  return false;
}

UserMaps current_user_maps() {
  return {"0 " + std::to_string(::getuid()) + " 1", "0 " + std::to_string(::getgid()) + " 1"};
}

NetworkIsolation probe_isolation() {
  UserMaps maps = current_user_maps();
  for (NetworkIsolation mode :
       {NetworkIsolation::net_namespace, NetworkIsolation::user_and_net_namespace}) {
    pid_t pid = ::fork();
    if (pid < 0) return NetworkIsolation::none;
    if (pid == 0) ::_exit(enter_network_namespace(mode, maps) ? 0 : 1);
    int status = 0;
    while (::waitpid(pid, &status, 0) < 0 && errno == EINTR) {
    }
    if (WIFEXITED(status) && WEXITSTATUS(status) == 0) return mode;
  }
  return NetworkIsolation::none;
}

class Fd {
 public:
  Fd() = default;
  explicit Fd(int fd) : fd_(fd) {}
  Fd(const Fd&) = delete;
  Fd& operator=(const Fd&) = delete;
  ~Fd() { reset(); }
  int get() const { return fd_; }
  void reset() {
    if (fd_ >= 0) ::close(fd_);
    fd_ = -1;
  }

  friend void make_pipe(Fd& read_end, Fd& write_end) {
    int fds[2];
    if (::pipe2(fds, O_CLOEXEC) != 0) throw Error(std::string("pipe2: ") + std::strerror(errno));
    read_end.reset();
    write_end.reset();
    read_end.fd_ = fds[0];
    write_end.fd_ = fds[1];
  }

 private:
  int fd_ = -1;
};

class ScratchDir {
 public:
  explicit ScratchDir(const std::filesystem::path& root) {
    std::filesystem::path base = root.empty() ? std::filesystem::temp_directory_path() : root;
    std::filesystem::create_directories(base);
    std::string pattern = (base / "pips-run-XXXXXX").string();
    if (::mkdtemp(pattern.data()) == nullptr) {
      throw Error("cannot create scratch directory under " + base.string() + ": " +
                  std::strerror(errno));
    }
    path_ = pattern;
  }
  ScratchDir(const ScratchDir&) = delete;
  ScratchDir& operator=(const ScratchDir&) = delete;
  ~ScratchDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

// Blocks SIGPIPE for the calling thread so writes to a dead worker fail with
// EPIPE, then drains any pending SIGPIPE before restoring the mask.
class SigpipeGuard {
 public:
  SigpipeGuard() {
    sigset_t set;
    sigemptyset(&set);
    sigaddset(&set, SIGPIPE);
    ::pthread_sigmask(SIG_BLOCK, &set, &old_);
  }
  ~SigpipeGuard() {
    sigset_t set;
    sigemptyset(&set);
    sigaddset(&set, SIGPIPE);
    timespec zero{0, 0};
    while (::sigtimedwait(&set, nullptr, &zero) > 0) {
    }
    ::pthread_sigmask(SIG_SETMASK, &old_, nullptr);
  }

 private:
  sigset_t old_;
};

void set_nonblocking(int fd) { ::fcntl(fd, F_SETFL, ::fcntl(fd, F_GETFL) | O_NONBLOCK); }

std::string ellipsize_tail(const std::string& text, std::size_t limit) {
  if (text.size() <= limit) return text;
  return "..." + text.substr(text.size() - limit);
}

std::string format_seconds(double s) {
  std::string text = std::to_string(s);
  while (!text.empty() && text.back() == '0') text.pop_back();
  if (!text.empty() && text.back() == '.') text.pop_back();
  return text;
}

}  // namespace

class ProcessSandbox::Slot {
 public:
  explicit Slot(ProcessSandbox& owner) : owner_(owner) {
    std::unique_lock lock(owner_.slots_mutex_);
    owner_.slots_cv_.wait(lock, [&] { return owner_.in_use_ < owner_.config_.max_concurrent; });
    ++owner_.in_use_;
  }
  ~Slot() {
    {
      std::lock_guard lock(owner_.slots_mutex_);
      --owner_.in_use_;
    }
    owner_.slots_cv_.notify_one();
  }

 private:
  ProcessSandbox& owner_;
};

namespace {
std::atomic<int> g_probe_state{-1};

NetworkIsolation cached_isolation() {
  int state = g_probe_state.load();
  if (state < 0) {
    state = static_cast<int>(probe_isolation());
    g_probe_state.store(state);
  }
  return static_cast<NetworkIsolation>(state);
}
}  // namespace

ProcessSandbox::ProcessSandbox(SandboxConfig config) : config_(std::move(config)) {
  if (config_.interpreter.empty()) throw ConfigError("sandbox interpreter command is empty");
  if (config_.max_concurrent < 1) throw ConfigError("sandbox max_concurrent must be >= 1");
  interpreter_path_ = resolve_on_path(config_.interpreter.front());
}

RunOutcome ProcessSandbox::run(const ProgramArtifact& program,
                               const std::optional<SymbolStore>& symbols,
                               const ExecLimits& limits) {
  Slot slot(*this);
  ScratchDir scratch(config_.scratch_root);
  const std::string scratch_str = scratch.path().string();

  Json request = {{"source", program.source},
                  {"entry", program.entry_name},
                  {"symbols", symbols ? symbols->root() : Json()},
                  {"bind_symbols", symbols.has_value()},
                  {"scratch", scratch_str},
                  {"stdout_cap", config_.stdout_cap_bytes}};
  const std::string request_bytes = canonical_dump(request);

  // Everything the child needs is prepared before fork.
  const std::string_view script = assets::lookup("sandbox_worker");
  std::vector<std::string> args(config_.interpreter.begin(), config_.interpreter.end());
  args[0] = interpreter_path_;
  for (const char* flag : {"-s", "-B", "-u", "-c"}) args.emplace_back(flag);
  args.emplace_back(script);
  std::vector<std::string> env = {
      "PATH=/usr/local/bin:/usr/bin:/bin",
      "HOME=" + scratch_str,
      "TMPDIR=" + scratch_str,
      "LANG=C.UTF-8",
      "LC_ALL=C.UTF-8",
      "TZ=UTC",
      "PYTHONHASHSEED=0",
      "PYTHONIOENCODING=utf-8",
      "PYTHONDONTWRITEBYTECODE=1",
      "PYTHONNOUSERSITE=1",
      "OPENBLAS_NUM_THREADS=1",
      "OMP_NUM_THREADS=1",
      "MKL_NUM_THREADS=1",
      "MPLBACKEND=Agg",
      "MPLCONFIGDIR=" + scratch_str,
  };
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  argv.push_back(nullptr);
  std::vector<char*> envp;
  for (auto& e : env) envp.push_back(e.data());
  envp.push_back(nullptr);

  const NetworkIsolation isolation =
      config_.isolate_network ? cached_isolation() : NetworkIsolation::none;
  const UserMaps maps = current_user_maps();
  const rlim_t cpu_seconds = static_cast<rlim_t>(std::ceil(limits.wall_seconds)) + 1;
  const rlim_t memory = static_cast<rlim_t>(limits.memory_bytes);

  Fd in_r, in_w, out_r, out_w, err_r, err_w, mir_r, mir_w;
  make_pipe(in_r, in_w);
  make_pipe(out_r, out_w);
  make_pipe(err_r, err_w);
  make_pipe(mir_r, mir_w);

  SigpipeGuard sigpipe_guard;
  const auto started = std::chrono::steady_clock::now();
  const auto deadline = started + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                      std::chrono::duration<double>(limits.wall_seconds));

  pid_t pid = ::fork();
  if (pid < 0) {
    RunOutcome out;
    out.status = RunStatus::harness_error;
    out.exception_text = std::string("worker startup failed: fork: ") + std::strerror(errno);
    return out;
  }
  if (pid == 0) {
    sigset_t empty;
    sigemptyset(&empty);
    ::sigprocmask(SIG_SETMASK, &empty, nullptr);
    ::setpgid(0, 0);
    if (::dup2(in_r.get(), 0) < 0 || ::dup2(out_w.get(), 1) < 0 || ::dup2(err_w.get(), 2) < 0) {
      child_fail("dup2");
    }
    if (mir_w.get() == 3) {
      ::fcntl(3, F_SETFD, 0);
    } else if (::dup2(mir_w.get(), 3) < 0) {
      child_fail("dup2");
    }
    ::syscall(SYS_close_range, 4U, ~0U, 0U);
    if (!enter_network_namespace(isolation, maps)) child_fail("network namespace");
    if (::chdir(scratch_str.c_str()) != 0) child_fail("chdir");
    rlimit lim{memory, memory};
    if (::setrlimit(RLIMIT_AS, &lim) != 0) child_fail("setrlimit(AS)");
    lim = {cpu_seconds, cpu_seconds + 1};
    if (::setrlimit(RLIMIT_CPU, &lim) != 0) child_fail("setrlimit(CPU)");
    lim = {rlim_t{64} << 20, rlim_t{64} << 20};
    ::setrlimit(RLIMIT_FSIZE, &lim);
    lim = {0, 0};
    ::setrlimit(RLIMIT_CORE, &lim);
    lim = {256, 256};
    ::setrlimit(RLIMIT_NOFILE, &lim);
    ::execve(argv[0], argv.data(), envp.data());
    child_fail("execve");
  }
  ::setpgid(pid, pid);
  last_isolation_.store(isolation);

  in_r.reset();
  out_w.reset();
  err_w.reset();
  mir_w.reset();
  for (int fd : {in_w.get(), out_r.get(), err_r.get(), mir_r.get()}) set_nonblocking(fd);

  std::string protocol, err_text, mirror;
  std::size_t written = 0;
  bool protocol_overflow = false;
  bool timed_out = false;
  bool exited = false;
  int wait_status = 0;

  std::array<char, 65536> buf;
  auto drain = [&](Fd& fd, std::string& sink, std::size_t cap, bool keep_tail) {
    while (true) {
      ssize_t n = ::read(fd.get(), buf.data(), buf.size());
      if (n > 0) {
        if (keep_tail) {
          sink.append(buf.data(), static_cast<std::size_t>(n));
          if (sink.size() > 2 * cap) sink.erase(0, sink.size() - cap);
        } else if (sink.size() < cap) {
          sink.append(buf.data(), std::min(static_cast<std::size_t>(n), cap - sink.size()));
        } else if (&sink == &protocol) {
          protocol_overflow = true;
        }
        continue;
      }
      if (n == 0) fd.reset();
      if (n < 0 && errno == EINTR) continue;
      return;
    }
  };

  while (true) {
    if (in_w.get() >= 0 && written == request_bytes.size()) in_w.reset();
    std::vector<pollfd> fds;
    if (in_w.get() >= 0) fds.push_back({in_w.get(), POLLOUT, 0});
    for (Fd* fd : {&out_r, &err_r, &mir_r}) {
      if (fd->get() >= 0) fds.push_back({fd->get(), POLLIN, 0});
    }
    if (fds.empty()) {
      pid_t r = ::waitpid(pid, &wait_status, WNOHANG);
      if (r == pid) {
        exited = true;
        break;
      }
    }
    auto now = std::chrono::steady_clock::now();
    if (now >= deadline) {
      timed_out = true;
      break;
    }
    int wait_ms = static_cast<int>(
        std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now).count()) + 1;
    if (fds.empty()) wait_ms = std::min(wait_ms, 5);
    int ready = ::poll(fds.empty() ? nullptr : fds.data(), fds.size(), wait_ms);
    if (ready < 0 && errno != EINTR) break;
    if (in_w.get() >= 0) {
      ssize_t n = ::write(in_w.get(), request_bytes.data() + written, request_bytes.size() - written);
      if (n > 0) written += static_cast<std::size_t>(n);
      if (n < 0 && errno != EAGAIN && errno != EINTR) in_w.reset();
    }
    if (out_r.get() >= 0) drain(out_r, protocol, kProtocolCap, false);
    if (err_r.get() >= 0) drain(err_r, err_text, kStderrTail, true);
    if (mir_r.get() >= 0) drain(mir_r, mirror, config_.stdout_cap_bytes, false);
  }

  if (!exited) {
    ::kill(-pid, SIGKILL);
    ::kill(pid, SIGKILL);
    while (::waitpid(pid, &wait_status, 0) < 0 && errno == EINTR) {
    }
  } else {
    ::kill(-pid, SIGKILL);
  }
  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

  RunOutcome out;
  out.duration_seconds = elapsed;
  if (timed_out) {
    out.status = RunStatus::timeout;
    out.stdout_text = mirror;
    out.exception_text =
        "execution exceeded the wall-clock limit of " + format_seconds(limits.wall_seconds) + " s";
    return out;
  }
  if (WIFSIGNALED(wait_status)) {
    int sig = WTERMSIG(wait_status);
    out.stdout_text = mirror;
    if (sig == SIGXCPU || sig == SIGKILL) {
      out.status = RunStatus::resource_exhausted;
      out.exception_text = sig == SIGXCPU ? "CPU time limit exceeded"
                                          : "worker was killed (likely out of memory)";
    } else {
      out.status = RunStatus::harness_error;
      out.exception_text = "worker terminated by signal " + std::to_string(sig) + " (" +
                           strsignal(sig) + ")";
    }
    return out;
  }
  const int code = WIFEXITED(wait_status) ? WEXITSTATUS(wait_status) : -1;
  if (protocol_overflow) {
    out.status = RunStatus::harness_error;
    out.exception_text = "worker result exceeded " + std::to_string(kProtocolCap) + " bytes";
    return out;
  }
  if (code == 0 && !protocol.empty()) {
    try {
      RunOutcome parsed = parse_worker_result(protocol);
      parsed.duration_seconds = elapsed;
      return parsed;
    } catch (const Error& e) {
      out.status = RunStatus::harness_error;
      out.exception_text = std::string("malformed worker result: ") + e.what();
      return out;
    }
  }
  out.status = RunStatus::harness_error;
  out.stdout_text = mirror;
  out.exception_text = "worker exited with code " + std::to_string(code);
  if (!err_text.empty()) out.exception_text += ": " + ellipsize_tail(err_text, kStderrTail);
  return out;
}

}  // namespace pips
