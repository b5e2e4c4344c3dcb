#pragma once

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "pips/core/types.hpp"

namespace pips {

struct ExecLimits {
  double wall_seconds = 10.0;
  std::int64_t memory_bytes = std::int64_t{512} << 20;
  static constexpr bool network_allowed = false;

  // Throws DomainError unless wall_seconds > 0 and memory_bytes > 0.
  void validate() const;
};

// Runs a program's entry function. With symbols the entry is called as
// solve(symbols); without, it is called with no arguments (input-free
// baseline programs).
class Executor {
 public:
  virtual ~Executor() = default;

  RunOutcome execute(const ProgramArtifact& program, const std::optional<SymbolStore>& symbols,
                     const ExecLimits& limits);

  // Number of execute() calls so far.
  std::int64_t calls() const { return calls_.load(); }

 protected:
  virtual RunOutcome run(const ProgramArtifact& program, const std::optional<SymbolStore>& symbols,
                         const ExecLimits& limits) = 0;

 private:
  std::atomic<std::int64_t> calls_{0};
};

enum class NetworkIsolation { none, net_namespace, user_and_net_namespace };

struct SandboxConfig {
  // Interpreter command; a bare name is resolved on PATH.
  std::vector<std::string> interpreter = {"python3"};
  int max_concurrent = 4;
  // Parent of the per-run scratch directories; empty means the system temp dir.
  std::filesystem::path scratch_root;
  std::size_t stdout_cap_bytes = std::size_t{1} << 20;
  // Try a private network namespace for each worker.
  bool isolate_network = true;
};

// One worker process per execution: fork/exec of the interpreter running the
// embedded harness, with rlimits, its own process group, a private network
// namespace when the kernel allows it and a fresh scratch directory.
class ProcessSandbox : public Executor {
 public:
  explicit ProcessSandbox(SandboxConfig config = {});

  const SandboxConfig& config() const { return config_; }

  // What the most recent worker actually got.
  NetworkIsolation last_isolation() const { return last_isolation_.load(); }

 protected:
  RunOutcome run(const ProgramArtifact& program, const std::optional<SymbolStore>& symbols,
                 const ExecLimits& limits) override;

 private:
  class Slot;
  SandboxConfig config_;
  std::string interpreter_path_;
  std::mutex slots_mutex_;
  std::condition_variable slots_cv_;
  int in_use_ = 0;
  std::atomic<NetworkIsolation> last_isolation_{NetworkIsolation::none};
};

// Worker protocol result, exposed for tests.
RunOutcome parse_worker_result(std::string_view text);

}  // namespace pips
