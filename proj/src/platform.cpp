#include <sched.h>
#include <sys/resource.h>

#include <fstream>
#include <set>
#include <string>
#include <thread>

#include "sdse/bench.hpp"

namespace sdse {

std::size_t physical_core_count() {
#ifdef __linux__
  cpu_set_t set;
  CPU_ZERO(&set);
  if (sched_getaffinity(0, sizeof set, &set) == 0) {
    std::set<std::string> cores;
    for (int cpu = 0; cpu < CPU_SETSIZE; ++cpu) {
      if (!CPU_ISSET(cpu, &set)) continue;
      const std::string base = "/sys/devices/system/cpu/cpu" + std::to_string(cpu) + "/topology/";
      std::ifstream pkg(base + "physical_package_id");
      std::ifstream core(base + "core_id");
      std::string p, c;
      if (pkg >> p && core >> c) {
        cores.insert(p + ":" + c);
      } else {
        cores.insert("cpu" + std::to_string(cpu));
      }
    }
    if (!cores.empty()) return cores.size();
  }
#endif
  const auto hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : hc;
}

CtxSwitches read_ctx_switches() {
  CtxSwitches out;
#if defined(__linux__) || defined(__APPLE__) || defined(__FreeBSD__)
  rusage usage{};
  if (getrusage(RUSAGE_SELF, &usage) == 0) {
    out.voluntary = usage.ru_nvcsw;
    out.involuntary = usage.ru_nivcsw;
  }
#endif
  return out;
}

}  // namespace sdse
