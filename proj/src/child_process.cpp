#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <array>
#include <cerrno>
#include <cstdlib>
#include <cstring>
#include <filesystem>

#include "sdse/evaluator.hpp"

extern char** environ;

namespace sdse {

namespace {

struct Pipe {
  int fds[2] = {-1, -1};
  Pipe() {
    if (::pipe(fds) != 0) throw Error(std::string("pipe: ") + std::strerror(errno));
  }
  ~Pipe() {
    for (int fd : fds) {
      if (fd >= 0) ::close(fd);
    }
  }
  void close_end(int i) {
    if (fds[i] >= 0) ::close(fds[i]);
    fds[i] = -1;
  }
};

std::string run_and_capture(const std::vector<std::string>& argv) {
  Pipe out;
  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_adddup2(&actions, out.fds[1], STDOUT_FILENO);
  posix_spawn_file_actions_addclose(&actions, out.fds[0]);

  std::vector<char*> args;
  for (const auto& a : argv) args.push_back(const_cast<char*>(a.c_str()));
  args.push_back(nullptr);

  pid_t pid = 0;
  int rc = posix_spawn(&pid, argv[0].c_str(), &actions, nullptr, args.data(), environ);
  posix_spawn_file_actions_destroy(&actions);
  if (rc != 0) throw Error("cannot spawn " + argv[0] + ": " + std::strerror(rc));
  out.close_end(1);

  std::string captured;
  std::array<char, 256> buf{};
  for (;;) {
    ssize_t n = ::read(out.fds[0], buf.data(), buf.size());
    if (n > 0) {
      captured.append(buf.data(), static_cast<std::size_t>(n));
    } else if (n == 0 || errno != EINTR) {
      break;
    }
  }

  int status = 0;
  while (::waitpid(pid, &status, 0) < 0 && errno == EINTR) {
  }
  if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) {
    throw Error("child evaluation failed: " + argv[0]);
  }
  return captured;
}

}  // namespace

ScenarioMetrics evaluate_scenario_in_child(const std::string& exe, const std::string& config_path,
                                           const Mapping& mapping, std::size_t scenario) {
  const std::string text = run_and_capture({exe, "--eval-one", "--config", config_path, "--genes",
                                            format_genes(mapping), "--scenario",
                                            std::to_string(scenario)});
  ScenarioMetrics m;
  char* end = nullptr;
  m.makespan = std::strtod(text.c_str(), &end);
  if (end == text.c_str() || *end != ',') throw Error("malformed child output: " + text);
  const char* second = end + 1;
  m.energy = std::strtod(second, &end);
  if (end == second) throw Error("malformed child output: " + text);
  return m;
}

Fitness evaluate_mapping_in_child(const std::string& exe, const std::string& config_path,
                                  std::size_t scenario_count, const Mapping& mapping,
                                  std::span<const std::size_t> subset, Aggregate aggregate) {
  const auto order = normalize_subset(subset, scenario_count);
  std::vector<ScenarioMetrics> metrics;
  for (auto s : order) metrics.push_back(evaluate_scenario_in_child(exe, config_path, mapping, s));
  return aggregate_metrics(metrics, aggregate);
}

std::string self_executable_path() {
  std::error_code ec;
  auto p = std::filesystem::read_symlink("/proc/self/exe", ec);
  if (ec) throw Error("cannot resolve executable path: " + ec.message());
  return p.string();
}

}  // namespace sdse
