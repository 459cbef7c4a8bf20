#include "sdse/model.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

namespace sdse {

namespace {

using json = nlohmann::json;

[[noreturn]] void semantic(const std::string& what, const std::string& key) {
  throw ConfigError(what + ": '" + key + "'", key);
}

bool non_negative(double v) { return std::isfinite(v) && v >= 0.0; }
bool positive(double v) { return std::isfinite(v) && v > 0.0; }

}  // namespace

SystemSpec::SystemSpec(std::vector<Application> applications, Architecture architecture,
                       std::vector<Scenario> scenarios)
    : applications_(std::move(applications)),
      architecture_(std::move(architecture)),
      scenarios_(std::move(scenarios)) {
  if (applications_.empty()) throw ConfigError("no applications", "applications");
  if (architecture_.processors.empty()) throw ConfigError("no processors", "processors");
  if (scenarios_.empty()) throw ConfigError("no scenarios", "scenarios");

  std::unordered_set<std::string> app_names;
  std::unordered_map<std::string, std::size_t> process_index;
  for (std::size_t a = 0; a < applications_.size(); ++a) {
    const auto& app = applications_[a];
    if (!app_names.insert(app.name).second) semantic("duplicate application", app.name);
    if (app.processes.empty()) semantic("application without processes", app.name);
    for (const auto& p : app.processes) {
      if (!process_index.emplace(p, process_names_.size()).second) {
        semantic("duplicate process", p);
      }
      process_names_.push_back(p);
      process_app_.push_back(a);
    }
  }

  std::unordered_set<std::string> channel_seen;
  for (std::size_t a = 0; a < applications_.size(); ++a) {
    for (const auto& ch : applications_[a].channels) {
      const std::string key = ch.key();
      if (ch.from == ch.to) semantic("self-channel", key);
      for (const auto* end : {&ch.from, &ch.to}) {
        auto it = process_index.find(*end);
        if (it == process_index.end() || process_app_[it->second] != a) {
          semantic("channel endpoint is not a process of application " + applications_[a].name,
                   *end);
        }
      }
      if (!channel_seen.insert(key).second) semantic("duplicate channel", key);
      channels_.push_back({a, process_index[ch.from], process_index[ch.to]});
      channel_keys_.push_back(key);
    }
  }

  std::unordered_set<std::string> proc_names;
  for (const auto& r : architecture_.processors) {
    if (!proc_names.insert(r.name).second) semantic("duplicate processor", r.name);
    if (!positive(r.speed)) semantic("processor speed must be > 0", r.name);
    if (!non_negative(r.power)) semantic("processor power must be >= 0", r.name);
  }
  if (!positive(architecture_.interconnect.bandwidth)) {
    semantic("interconnect bandwidth must be > 0", "bandwidth");
  }
  if (!non_negative(architecture_.interconnect.energy_per_unit)) {
    semantic("interconnect energy_per_unit must be >= 0", "energy_per_unit");
  }

  std::unordered_set<std::string> scenario_names;
  for (const auto& s : scenarios_) {
    if (!scenario_names.insert(s.name).second) semantic("duplicate scenario", s.name);
    for (const auto& name : s.active_apps) {
      if (!app_names.contains(name)) semantic("unknown application in scenario " + s.name, name);
    }
    if (s.comp.size() != process_count()) semantic("compute demand vector size mismatch", s.name);
    if (s.data.size() != channel_count()) semantic("data demand vector size mismatch", s.name);
    for (std::size_t p = 0; p < s.comp.size(); ++p) {
      if (!non_negative(s.comp[p])) semantic("compute demand must be >= 0", process_names_[p]);
      const bool active = s.active_apps.contains(applications_[process_app_[p]].name);
      if (!active && s.comp[p] != 0.0) {
        semantic("non-zero demand for inactive application process", process_names_[p]);
      }
    }
    for (std::size_t c = 0; c < s.data.size(); ++c) {
      if (!non_negative(s.data[c])) semantic("data demand must be >= 0", channel_keys_[c]);
      const bool active = s.active_apps.contains(applications_[channels_[c].app].name);
      if (!active && s.data[c] != 0.0) {
        semantic("non-zero demand for inactive application channel", channel_keys_[c]);
      }
    }
  }
}

std::string SystemSpec::channel_key(std::size_t c) const { return channel_keys_.at(c); }

std::size_t SystemSpec::find_process(std::string_view name) const noexcept {
  for (std::size_t p = 0; p < process_names_.size(); ++p) {
    if (process_names_[p] == name) return p;
  }
  return npos;
}

std::size_t SystemSpec::find_channel(std::string_view key) const noexcept {
  for (std::size_t c = 0; c < channel_keys_.size(); ++c) {
    if (channel_keys_[c] == key) return c;
  }
  return npos;
}

void validate_mapping(const SystemSpec& spec, const Mapping& mapping) {
  if (mapping.genes.size() != spec.process_count()) {
    throw std::invalid_argument("mapping has " + std::to_string(mapping.genes.size()) +
                                " genes, expected " + std::to_string(spec.process_count()));
  }
  for (auto g : mapping.genes) {
    if (g >= spec.processor_count()) {
      throw std::invalid_argument("gene " + std::to_string(g) + " exceeds processor count " +
                                  std::to_string(spec.processor_count()));
    }
  }
}

// ---------------------------------------------------------------------------
// Configuration documents

namespace {

void check_keys(const json& obj, const std::string& where,
                std::initializer_list<std::string_view> allowed) {
  if (!obj.is_object()) throw ConfigError(where + " must be an object", where);
  for (const auto& [k, v] : obj.items()) {
    bool ok = false;
    for (auto a : allowed) ok = ok || a == k;
    if (!ok) throw ConfigError("unknown key '" + k + "' in " + where, k);
  }
}

const json& require(const json& obj, const std::string& key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ConfigError("missing key '" + key + "' in " + where, key);
  return *it;
}

std::string as_string(const json& v, const std::string& key) {
  if (!v.is_string()) throw ConfigError("'" + key + "' must be a string", key);
  return v.get<std::string>();
}

double as_number(const json& v, const std::string& key) {
  if (!v.is_number()) throw ConfigError("'" + key + "' must be a number", key);
  return v.get<double>();
}

const json& as_array(const json& v, const std::string& key) {
  if (!v.is_array()) throw ConfigError("'" + key + "' must be an array", key);
  return v;
}

}  // namespace

SystemSpec parse_config(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ConfigError("syntax error at byte " + std::to_string(e.byte) + ": " + e.what(), "");
  }
  check_keys(doc, "document", {"applications", "architecture", "scenarios"});

  std::vector<Application> apps;
  for (const auto& ja : as_array(require(doc, "applications", "document"), "applications")) {
    check_keys(ja, "application", {"name", "processes", "channels"});
    Application app;
    app.name = as_string(require(ja, "name", "application"), "name");
    for (const auto& jp : as_array(require(ja, "processes", app.name), "processes")) {
      app.processes.push_back(as_string(jp, "processes"));
    }
    if (auto it = ja.find("channels"); it != ja.end()) {
      for (const auto& jc : as_array(*it, "channels")) {
        if (!jc.is_array() || jc.size() != 2) {
          throw ConfigError("channel must be a [from, to] pair in " + app.name, "channels");
        }
        app.channels.push_back({as_string(jc[0], "channels"), as_string(jc[1], "channels")});
      }
    }
    apps.push_back(std::move(app));
  }

  Architecture arch;
  const auto& jarch = require(doc, "architecture", "document");
  check_keys(jarch, "architecture", {"processors", "interconnect"});
  for (const auto& jr : as_array(require(jarch, "processors", "architecture"), "processors")) {
    check_keys(jr, "processor", {"name", "speed", "power"});
    Processor r;
    r.name = as_string(require(jr, "name", "processor"), "name");
    r.speed = as_number(require(jr, "speed", r.name), "speed");
    r.power = as_number(require(jr, "power", r.name), "power");
    arch.processors.push_back(std::move(r));
  }
  if (auto it = jarch.find("interconnect"); it != jarch.end()) {
    check_keys(*it, "interconnect", {"bandwidth", "energy_per_unit"});
    arch.interconnect.bandwidth = as_number(require(*it, "bandwidth", "interconnect"), "bandwidth");
    if (auto e = it->find("energy_per_unit"); e != it->end()) {
      arch.interconnect.energy_per_unit = as_number(*e, "energy_per_unit");
    }
  }

  // Name lookup for the dense demand vectors, in global order.
  std::vector<std::string> process_names;
  std::vector<std::string> channel_keys;
  std::unordered_map<std::string, std::size_t> app_of_process;
  for (std::size_t a = 0; a < apps.size(); ++a) {
    for (const auto& p : apps[a].processes) {
      process_names.push_back(p);
      app_of_process.emplace(p, a);
    }
    for (const auto& c : apps[a].channels) channel_keys.push_back(c.key());
  }
  auto index_of = [](const std::vector<std::string>& names, const std::string& key) {
    for (std::size_t i = 0; i < names.size(); ++i) {
      if (names[i] == key) return i;
    }
    return SystemSpec::npos;
  };

  std::vector<Scenario> scenarios;
  for (const auto& js : as_array(require(doc, "scenarios", "document"), "scenarios")) {
    check_keys(js, "scenario", {"name", "active_apps", "comp", "data"});
    Scenario s;
    s.name = as_string(require(js, "name", "scenario"), "name");
    s.comp.assign(process_names.size(), 0.0);
    s.data.assign(channel_keys.size(), 0.0);
    if (auto it = js.find("active_apps"); it != js.end()) {
      for (const auto& jn : as_array(*it, "active_apps")) {
        s.active_apps.insert(as_string(jn, "active_apps"));
      }
    } else {
      for (const auto& app : apps) s.active_apps.insert(app.name);
    }
    if (auto it = js.find("comp"); it != js.end()) {
      if (!it->is_object()) throw ConfigError("'comp' must be an object", "comp");
      for (const auto& [k, v] : it->items()) {
        auto idx = index_of(process_names, k);
        if (idx == SystemSpec::npos) semantic("unknown process in scenario " + s.name, k);
        s.comp[idx] = as_number(v, k);
      }
    }
    if (auto it = js.find("data"); it != js.end()) {
      if (!it->is_object()) throw ConfigError("'data' must be an object", "data");
      for (const auto& [k, v] : it->items()) {
        auto idx = index_of(channel_keys, k);
        if (idx == SystemSpec::npos) semantic("unknown channel in scenario " + s.name, k);
        s.data[idx] = as_number(v, k);
      }
    }
    scenarios.push_back(std::move(s));
  }

  return SystemSpec(std::move(apps), std::move(arch), std::move(scenarios));
}

SystemSpec load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file " + path, path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string render_config(const SystemSpec& spec) {
  json doc;
  doc["applications"] = json::array();
  for (const auto& app : spec.applications()) {
    json ja;
    ja["name"] = app.name;
    ja["processes"] = app.processes;
    ja["channels"] = json::array();
    for (const auto& c : app.channels) ja["channels"].push_back({c.from, c.to});
    doc["applications"].push_back(std::move(ja));
  }
  json jarch;
  jarch["processors"] = json::array();
  for (const auto& r : spec.architecture().processors) {
    jarch["processors"].push_back({{"name", r.name}, {"speed", r.speed}, {"power", r.power}});
  }
  jarch["interconnect"] = {{"bandwidth", spec.architecture().interconnect.bandwidth},
                           {"energy_per_unit", spec.architecture().interconnect.energy_per_unit}};
  doc["architecture"] = std::move(jarch);
  doc["scenarios"] = json::array();
  for (const auto& s : spec.scenarios()) {
    json js;
    js["name"] = s.name;
    js["active_apps"] = s.active_apps;
    js["comp"] = json::object();
    for (std::size_t p = 0; p < s.comp.size(); ++p) js["comp"][spec.process_name(p)] = s.comp[p];
    js["data"] = json::object();
    for (std::size_t c = 0; c < s.data.size(); ++c) js["data"][spec.channel_key(c)] = s.data[c];
    doc["scenarios"].push_back(std::move(js));
  }
  return doc.dump(2) + "\n";
}

Mapping random_mapping(const SystemSpec& spec, Rng& rng) {
  std::uniform_int_distribution<std::uint32_t> pick(
      0, static_cast<std::uint32_t>(spec.processor_count() - 1));
  Mapping m;
  m.genes.resize(spec.process_count());
  for (auto& g : m.genes) g = pick(rng);
  return m;
}

std::string format_genes(const Mapping& mapping, char separator) {
  std::string out;
  for (std::size_t i = 0; i < mapping.genes.size(); ++i) {
    if (i) out += separator;
    out += std::to_string(mapping.genes[i]);
  }
  return out;
}

Mapping parse_genes(std::string_view text) {
  Mapping m;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto next = text.find(',', pos);
    if (next == std::string_view::npos) next = text.size();
    auto token = text.substr(pos, next - pos);
    std::uint32_t value = 0;
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (token.empty() || ec != std::errc{} || ptr != token.data() + token.size()) {
      throw std::invalid_argument("bad gene list '" + std::string(text) + "'");
    }
    m.genes.push_back(value);
    pos = next + 1;
  }
  return m;
}

}  // namespace sdse
