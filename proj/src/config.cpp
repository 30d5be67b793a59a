#include "crharq/config.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

namespace crharq {

namespace {

class Reader {
 public:
  explicit Reader(std::string source) : source_(std::move(source)) {}

  [[noreturn]] void fail(const YAML::Node& node, const std::string& why) const {
    const YAML::Mark m = node.Mark();
    throw ConfigError(source_ + ":" + std::to_string(m.line + 1) + ":" + std::to_string(m.column + 1) + ": " + why);
  }

  void require_map(const YAML::Node& node, const std::string& what, const std::set<std::string>& keys) const {
    if (!node.IsMap()) fail(node, what + " must be a mapping");
    for (const auto& kv : node) {
      const auto key = kv.first.as<std::string>();
      if (!keys.count(key)) fail(kv.first, "unknown key '" + key + "' in " + what);
    }
  }

  template <typename T>
  T scalar(const YAML::Node& node, const std::string& what) const {
    if (!node.IsScalar()) fail(node, what + " must be a scalar");
    try {
      return node.as<T>();
    } catch (const YAML::Exception&) {
      fail(node, "invalid value '" + node.Scalar() + "' for " + what);
    }
  }

  /// Applies a scenario field through the sweep field table so file and
  /// sweep assignments share one parser.
  void assign(ScenarioConfig& cfg, const YAML::Node& node, const std::string& field) const {
    try {
      assign_field(cfg, field, scalar<std::string>(node, field));
    } catch (const ConfigError& e) {
      fail(node, e.what());
    }
  }

 private:
  std::string source_;
};

void read_scenario(const Reader& rd, const YAML::Node& n, ScenarioConfig& cfg) {
  rd.require_map(n, "scenario",
                 {"snr_db", "snr", "m_t", "m_r", "L", "k", "r", "n_max", "p_th", "b", "b_prime", "l_f", "protocol",
                  "policy", "ps_min", "seed"});
  if (n["snr_db"] && n["snr"]) rd.fail(n["snr"], "give either snr_db or snr, not both");
  if (n["m_r"] && n["m_r"].IsSequence()) {
    cfg.m_r_per_rrh.clear();
    for (const auto& v : n["m_r"]) cfg.m_r_per_rrh.push_back(rd.scalar<int>(v, "m_r"));
    if (n["L"]) rd.fail(n["L"], "L is implied by the m_r list");
  }
  for (const char* f : {"L", "snr_db", "snr", "m_t", "k", "r", "n_max", "p_th", "b", "l_f", "ps_min", "seed"})
    if (n[f]) rd.assign(cfg, n[f], f);
  if (n["m_r"] && !n["m_r"].IsSequence()) rd.assign(cfg, n["m_r"], "m_r");
  if (n["b_prime"]) rd.assign(cfg, n["b_prime"], "b_prime");
  try {
    if (n["protocol"]) cfg.protocol = parse_protocol(rd.scalar<std::string>(n["protocol"], "protocol"));
  } catch (const ConfigError& e) {
    rd.fail(n["protocol"], e.what());
  }
  try {
    if (n["policy"]) cfg.policy = parse_policy(rd.scalar<std::string>(n["policy"], "policy"));
  } catch (const ConfigError& e) {
    rd.fail(n["policy"], e.what());
  }
  try {
    cfg.validate();
  } catch (const ConfigError& e) {
    rd.fail(n, e.what());
  }
}

void read_sweep(const Reader& rd, const YAML::Node& n, SweepSpec& spec) {
  rd.require_map(n, "sweep", {"axis", "values", "engine", "sessions", "optimize", "output", "series"});
  if (n["axis"]) {
    spec.axis = rd.scalar<std::string>(n["axis"], "axis");
    const auto& fields = sweep_fields();
    if (std::find(fields.begin(), fields.end(), spec.axis) == fields.end())
      rd.fail(n["axis"], "unknown axis '" + spec.axis + "'");
  }
  if (n["values"]) {
    if (!n["values"].IsSequence()) rd.fail(n["values"], "values must be a list");
    spec.values.clear();
    for (const auto& v : n["values"]) spec.values.push_back(rd.scalar<double>(v, "values"));
  }
  if (n["engine"]) {
    try {
      spec.engine = parse_engine(rd.scalar<std::string>(n["engine"], "engine"));
    } catch (const ConfigError& e) {
      rd.fail(n["engine"], e.what());
    }
  }
  if (n["sessions"]) spec.sessions = rd.scalar<std::uint64_t>(n["sessions"], "sessions");
  if (n["optimize"]) spec.optimize = rd.scalar<bool>(n["optimize"], "optimize");
  if (n["output"]) spec.output_path = rd.scalar<std::string>(n["output"], "output");
  if (n["series"]) {
    if (!n["series"].IsSequence()) rd.fail(n["series"], "series must be a list");
    spec.series.clear();
    for (const auto& s : n["series"]) {
      rd.require_map(s, "series entry", {"name", "set", "schemes"});
      Series ser;
      if (s["name"]) ser.name = rd.scalar<std::string>(s["name"], "name");
      if (s["set"]) {
        rd.require_map(s["set"], "set",
                       std::set<std::string>(sweep_fields().begin(), sweep_fields().end()));
        for (const auto& kv : s["set"]) {
          FieldAssignment a{kv.first.as<std::string>(), rd.scalar<std::string>(kv.second, "set value")};
          if (a.value != "axis") {
            ScenarioConfig probe = spec.base;
            rd.assign(probe, kv.second, a.field);
          }
          ser.set.push_back(std::move(a));
        }
      }
      if (s["schemes"]) {
        if (!s["schemes"].IsSequence()) rd.fail(s["schemes"], "schemes must be a list");
        for (const auto& sc : s["schemes"]) {
          try {
            ser.schemes.push_back(Scheme::parse(rd.scalar<std::string>(sc, "scheme")));
          } catch (const ConfigError& e) {
            rd.fail(sc, e.what());
          }
        }
      }
      spec.series.push_back(std::move(ser));
    }
  }
}

void read_threshold(const Reader& rd, const YAML::Node& n, ThresholdSearch& t) {
  rd.require_map(n, "threshold_search", {"min", "max", "grid_points", "relative_tolerance"});
  if (n["min"]) t.min = rd.scalar<double>(n["min"], "min");
  if (n["max"]) t.max = rd.scalar<double>(n["max"], "max");
  if (n["grid_points"]) t.grid_points = rd.scalar<int>(n["grid_points"], "grid_points");
  if (n["relative_tolerance"]) t.relative_tolerance = rd.scalar<double>(n["relative_tolerance"], "relative_tolerance");
  try {
    threshold_grid(t);
  } catch (const ConfigError& e) {
    rd.fail(n, e.what());
  }
}

void read_codebook(const Reader& rd, const YAML::Node& n, CodebookSearchOptions& c) {
  rd.require_map(n, "codebook_search", {"max_trials", "sessions", "amplitude_samples"});
  if (n["max_trials"]) c.max_trials = rd.scalar<int>(n["max_trials"], "max_trials");
  if (n["sessions"]) c.sessions = rd.scalar<std::uint64_t>(n["sessions"], "sessions");
  if (n["amplitude_samples"]) c.amplitude_samples = rd.scalar<std::uint64_t>(n["amplitude_samples"], "amplitude_samples");
  if (c.max_trials < 1) rd.fail(n, "max_trials must be at least 1");
}

}  // namespace

SweepSpec parse_config(const std::string& text, const std::string& source_name) {
  const Reader rd(source_name);
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError(source_name + ":" + std::to_string(e.mark.line + 1) + ":" + std::to_string(e.mark.column + 1) +
                      ": " + e.msg);
  }
  SweepSpec spec;
  if (root.IsNull()) return spec;
  rd.require_map(root, "configuration", {"scenario", "sweep", "threshold_search", "codebook_search"});
  if (root["scenario"]) read_scenario(rd, root["scenario"], spec.base);
  if (root["sweep"]) read_sweep(rd, root["sweep"], spec);
  if (root["threshold_search"]) read_threshold(rd, root["threshold_search"], spec.threshold);
  if (root["codebook_search"]) read_codebook(rd, root["codebook_search"], spec.codebook);
  return spec;
}

SweepSpec load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open configuration file");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path);
}

}  // namespace crharq
