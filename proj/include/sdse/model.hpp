#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sdse/error.hpp"

namespace sdse {

using Rng = std::mt19937_64;

struct Channel {
  std::string from;
  std::string to;

  /// Key used for channel demands in configuration documents.
  std::string key() const { return from + "->" + to; }

  friend bool operator==(const Channel&, const Channel&) = default;
};

/// A Kahn process network: processes connected by unidirectional channels.
struct Application {
  std::string name;
  std::vector<std::string> processes;
  std::vector<Channel> channels;

  friend bool operator==(const Application&, const Application&) = default;
};

struct Processor {
  std::string name;
  double speed = 1.0;  // ops per time unit, > 0
  double power = 0.0;  // energy per time unit, >= 0

  friend bool operator==(const Processor&, const Processor&) = default;
};

/// Single shared interconnect carrying every channel whose endpoints sit on
/// distinct processors.
struct Interconnect {
  double bandwidth = 1.0;        // data units per time unit, > 0
  double energy_per_unit = 0.0;  // energy per data unit, >= 0

  friend bool operator==(const Interconnect&, const Interconnect&) = default;
};

struct Architecture {
  std::vector<Processor> processors;
  Interconnect interconnect;

  friend bool operator==(const Architecture&, const Architecture&) = default;
};

/// One workload case. Demands are dense and indexed by the global process /
/// channel ordering of the owning SystemSpec.
struct Scenario {
  std::string name;
  std::set<std::string> active_apps;
  std::vector<double> comp;
  std::vector<double> data;

  friend bool operator==(const Scenario&, const Scenario&) = default;
};

/// Global index view of a channel.
struct ChannelEndpoints {
  std::size_t app = 0;
  std::size_t from = 0;  // global process index
  std::size_t to = 0;    // global process index
};

/// Validated, immutable system description. Global process order is document
/// order of applications, then of processes within each application; global
/// channel order follows the same rule.
class SystemSpec {
 public:
  /// Throws ConfigError naming the offending key when an invariant fails.
  SystemSpec(std::vector<Application> applications, Architecture architecture,
             std::vector<Scenario> scenarios);

  const std::vector<Application>& applications() const noexcept { return applications_; }
  const Architecture& architecture() const noexcept { return architecture_; }
  const std::vector<Scenario>& scenarios() const noexcept { return scenarios_; }

  std::size_t process_count() const noexcept { return process_names_.size(); }
  std::size_t channel_count() const noexcept { return channels_.size(); }
  std::size_t processor_count() const noexcept { return architecture_.processors.size(); }
  std::size_t scenario_count() const noexcept { return scenarios_.size(); }

  const std::string& process_name(std::size_t p) const { return process_names_.at(p); }
  std::size_t process_app(std::size_t p) const { return process_app_.at(p); }
  const ChannelEndpoints& channel(std::size_t c) const { return channels_.at(c); }
  std::span<const ChannelEndpoints> channels() const noexcept { return channels_; }
  std::string channel_key(std::size_t c) const;

  /// Global index of a process name, or npos.
  std::size_t find_process(std::string_view name) const noexcept;
  std::size_t find_channel(std::string_view key) const noexcept;

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  friend bool operator==(const SystemSpec& a, const SystemSpec& b) {
    return a.applications_ == b.applications_ && a.architecture_ == b.architecture_ &&
           a.scenarios_ == b.scenarios_;
  }

 private:
  std::vector<Application> applications_;
  Architecture architecture_;
  std::vector<Scenario> scenarios_;

  std::vector<std::string> process_names_;
  std::vector<std::size_t> process_app_;
  std::vector<ChannelEndpoints> channels_;
  std::vector<std::string> channel_keys_;
};

/// Process-to-processor assignment; genes follow the global process order.
struct Mapping {
  std::vector<std::uint32_t> genes;

  friend bool operator==(const Mapping&, const Mapping&) = default;
  friend auto operator<=>(const Mapping&, const Mapping&) = default;
};

/// Throws std::invalid_argument when the mapping does not fit the spec.
void validate_mapping(const SystemSpec& spec, const Mapping& mapping);

/// Parses a JSON configuration document. Syntax errors report the byte
/// offset; semantic errors name the offending key.
SystemSpec parse_config(std::string_view text);
SystemSpec load_config(const std::string& path);

/// Inverse of parse_config: parse_config(render_config(s)) == s.
std::string render_config(const SystemSpec& spec);

Mapping random_mapping(const SystemSpec& spec, Rng& rng);

/// "0,1,2" <-> Mapping.
std::string format_genes(const Mapping& mapping, char separator = ',');
Mapping parse_genes(std::string_view text);

}  // namespace sdse

template <>
struct std::hash<sdse::Mapping> {
  std::size_t operator()(const sdse::Mapping& m) const noexcept {
    std::size_t h = 0xcbf29ce484222325ull;
    for (auto g : m.genes) {
      h ^= g;
      h *= 0x100000001b3ull;
    }
    return h ^ m.genes.size();
  }
};
