#include "crharq/sweep.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <memory>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <tuple>

namespace crharq {

namespace {

double parse_number(std::string_view text, std::string_view what) {
  double v = 0.0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end)
    throw ConfigError("invalid number '" + std::string(text) + "' for " + std::string(what));
  return v;
}

int parse_int(std::string_view text, std::string_view what) {
  const double v = parse_number(text, what);
  if (v != std::floor(v) || std::abs(v) > 2e9)
    throw ConfigError("'" + std::string(text) + "' is not an integer for " + std::string(what));
  return static_cast<int>(v);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = s.find(sep, start);
    out.push_back(s.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string format_axis(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace

SweepEngine parse_engine(std::string_view name) {
  if (name == "mc") return SweepEngine::kMonteCarlo;
  if (name == "analytic") return SweepEngine::kAnalytic;
  if (name == "both") return SweepEngine::kBoth;
  throw ConfigError("unknown engine '" + std::string(name) + "' (mc, analytic, both)");
}

std::string_view to_string(SweepEngine e) {
  switch (e) {
    case SweepEngine::kMonteCarlo: return "mc";
    case SweepEngine::kAnalytic: return "analytic";
    case SweepEngine::kBoth: return "both";
  }
  return "?";
}

Scheme Scheme::parse(std::string_view text) {
  const auto parts = split(text, ':');
  if (parts.size() < 2 || parts.size() > 3)
    throw ConfigError("scheme '" + std::string(text) + "' is not protocol:policy[:bits]");
  Scheme s;
  s.protocol = parse_protocol(parts[0]);
  s.policy = parse_policy(parts[1]);
  if (parts.size() == 3) {
    if (s.policy != Policy::kSoft) throw ConfigError("only soft feedback takes a bit budget");
    if (parts[2] != "inf") s.b = parse_int(parts[2], "feedback bits");
  }
  return s;
}

std::string Scheme::policy_label() const {
  std::string p(to_string(policy));
  if (policy == Policy::kSoft) p += ":" + (b ? std::to_string(*b) : std::string("inf"));
  return p;
}

std::string Scheme::label() const { return std::string(to_string(protocol)) + ":" + policy_label(); }

const std::vector<std::string>& sweep_fields() {
  static const std::vector<std::string> fields{"snr_db", "snr",  "m",       "m_t", "m_r",    "L",
                                               "k",      "r",    "n_max",   "p_th", "b",     "b_prime",
                                               "l_f",    "ps_min", "seed"};
  return fields;
}

void assign_field(ScenarioConfig& cfg, std::string_view field, std::string_view value) {
  const std::string f(field);
  if (f == "snr_db") cfg.snr = db_to_linear(parse_number(value, f));
  else if (f == "snr") cfg.snr = parse_number(value, f);
  else if (f == "m") {
    const int m = parse_int(value, f);
    cfg.m_t = m;
    std::fill(cfg.m_r_per_rrh.begin(), cfg.m_r_per_rrh.end(), m);
  } else if (f == "m_t") cfg.m_t = parse_int(value, f);
  else if (f == "m_r") std::fill(cfg.m_r_per_rrh.begin(), cfg.m_r_per_rrh.end(), parse_int(value, f));
  else if (f == "L") {
    const int L = parse_int(value, f);
    if (L < 1) throw ConfigError("L must be >= 1");
    cfg.m_r_per_rrh.assign(static_cast<std::size_t>(L), cfg.m_r_per_rrh.empty() ? 1 : cfg.m_r_per_rrh[0]);
  } else if (f == "k") cfg.k = parse_int(value, f);
  else if (f == "r") cfg.r = parse_number(value, f);
  else if (f == "n_max") cfg.n_max = parse_int(value, f);
  else if (f == "p_th") cfg.p_th = parse_number(value, f);
  else if (f == "b") {
    if (value == "inf") cfg.b.reset();
    else {
      cfg.b = parse_int(value, f);
      cfg.b_prime = default_direction_bits(*cfg.b);
    }
  } else if (f == "b_prime") cfg.b_prime = parse_int(value, f);
  else if (f == "l_f") cfg.l_f = parse_number(value, f);
  else if (f == "ps_min") cfg.ps_min = parse_number(value, f);
  else if (f == "seed") cfg.seed = static_cast<std::uint64_t>(parse_number(value, f));
  else throw ConfigError("unknown scenario field '" + f + "'");
}

namespace {

struct RowKey {
  std::size_t value, series, scheme, engine;
  auto tie() const { return std::tie(value, series, scheme, engine); }
};

SweepRow make_row(double axis_value, const Series& series, const Scheme& scheme, const ScenarioConfig& cfg,
                  double p_th, bool feasible, const MetricsReport& m) {
  SweepRow row;
  row.axis_value = axis_value;
  row.series = series.name;
  row.scheme = scheme;
  row.p_th_used = cfg.policy == Policy::kIdeal ? std::nan("") : p_th;
  row.feasible = feasible;
  row.report = m;
  row.engine = m.source;
  row.seed = cfg.seed;
  row.r = cfg.r;
  row.l_f = cfg.l_f;
  return row;
}

std::string axis_text(double v) { return format_double(v); }

}  // namespace

SweepResult run_sweep(const SweepSpec& spec) {
  SweepResult result;
  std::vector<Series> series = spec.series;
  if (series.empty()) series.push_back({"", {}, {}});
  for (auto& s : series)
    if (s.schemes.empty()) s.schemes.push_back({spec.base.protocol, spec.base.policy, spec.base.b});

  std::vector<EngineKind> engines;
  if (spec.engine != SweepEngine::kAnalytic) engines.push_back(EngineKind::kMonteCarlo);
  if (spec.engine != SweepEngine::kMonteCarlo) engines.push_back(EngineKind::kAnalytic);

  // Only the threshold changes along a p_th axis, so one evaluator serves
  // every axis value.
  const bool threshold_axis = spec.axis == "p_th";
  std::vector<std::pair<RowKey, SweepRow>> keyed;

  for (std::size_t si = 0; si < series.size(); ++si) {
    const Series& ser = series[si];
    for (std::size_t ci = 0; ci < ser.schemes.size(); ++ci) {
      const Scheme& scheme = ser.schemes[ci];
      for (std::size_t ei = 0; ei < engines.size(); ++ei) {
        const EngineKind engine = engines[ei];
        ThresholdEvaluator cached;
        std::optional<Codebook> cached_codebook;
        for (std::size_t vi = 0; vi < spec.values.size(); ++vi) {
          const double value = spec.values[vi];
          ++result.attempted;
          const std::string where = "axis " + spec.axis + "=" + format_axis(value) +
                                    (ser.name.empty() ? "" : " series " + ser.name) + " scheme " +
                                    scheme.label() + (engine == EngineKind::kAnalytic ? " analytic" : " mc");
          try {
            ScenarioConfig cfg = spec.base;
            for (const auto& a : ser.set)
              if (a.field != "b") assign_field(cfg, a.field, a.value == "axis" ? axis_text(value) : a.value);
            cfg.protocol = scheme.protocol;
            cfg.policy = scheme.policy;
            if (scheme.policy == Policy::kSoft) assign_field(cfg, "b", scheme.b ? std::to_string(*scheme.b) : "inf");
            for (const auto& a : ser.set)
              if (a.field == "b" || a.field == "b_prime")
                assign_field(cfg, a.field, a.value == "axis" ? axis_text(value) : a.value);
            const bool routed = std::any_of(ser.set.begin(), ser.set.end(),
                                            [](const FieldAssignment& a) { return a.value == "axis"; });
            if (!routed) assign_field(cfg, spec.axis, axis_text(value));
            cfg.validate();
            if (engine == EngineKind::kAnalytic &&
                (cfg.policy == Policy::kHard || cfg.policy == Policy::kSoft))
              throw ConfigError("no analytic evaluator for " + std::string(to_string(cfg.policy)) + " feedback");

            const Codebook* codebook = nullptr;
            if (cfg.policy == Policy::kSoft) {
              if (!cached_codebook || !threshold_axis) {
                if (spec.optimize) {
                  CodebookSearchResult found = search_codebook(cfg, spec.codebook);
                  cached_codebook.emplace(std::move(found.codebook));
                } else {
                  cached_codebook.emplace(generate_candidate_codebook(cfg, 0, spec.codebook.amplitude_samples));
                }
              }
              codebook = &*cached_codebook;
            }
            if (!cached || !threshold_axis) cached = make_evaluator(cfg, engine, spec.sessions, codebook);

            double p_th = cfg.p_th;
            bool feasible = true;
            MetricsReport m;
            if (spec.optimize && cfg.policy != Policy::kIdeal) {
              const OptimizationResult opt = optimize_threshold(cached, cfg.ps_min, spec.threshold);
              p_th = opt.p_th;
              feasible = opt.feasible;
              m = opt.report;
            } else {
              m = cached(p_th);
              feasible = m.ps_lower >= cfg.ps_min || !spec.optimize;
            }
            keyed.push_back({{vi, si, ci, ei}, make_row(value, ser, scheme, cfg, p_th, feasible, m)});
          } catch (const CodebookSearchFailure& e) {
            result.skipped.push_back(where + ": " + e.what() + " (best Ps " + format_double(e.best_ps()) + ")");
          } catch (const ConfigError& e) {
            result.skipped.push_back(where + ": " + e.what());
          }
        }
      }
    }
  }
  std::stable_sort(keyed.begin(), keyed.end(),
                   [](const auto& a, const auto& b) { return a.first.tie() < b.first.tie(); });
  for (auto& [key, row] : keyed) result.rows.push_back(std::move(row));
  return result;
}

const std::vector<std::string>& csv_columns() {
  static const std::vector<std::string> cols{"axis", "protocol", "policy", "p_th_used", "T",      "T_se",
                                             "Ps",   "Ps_se",    "EN",     "EN_se",     "Dc",     "Ds",
                                             "engine", "seed",   "series", "feasible",  "r",      "l_f"};
  return cols;
}

void write_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
  const auto& cols = csv_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
  out << '\n';
  for (const auto& row : rows) {
    const MetricsReport& m = row.report;
    out << format_axis(row.axis_value) << ',' << to_string(row.scheme.protocol) << ','
        << row.scheme.policy_label() << ',' << format_double(row.p_th_used) << ','
        << format_double(m.throughput_t) << ',' << format_double(m.throughput_se) << ','
        << format_double(m.ps) << ',' << format_double(m.ps_se) << ',' << format_double(m.expected_n) << ','
        << format_double(m.expected_n_se) << ',' << format_double(m.d_conventional) << ','
        << format_double(m.d_separated) << ',' << to_string(row.engine) << ',' << row.seed << ','
        << row.series << ',' << (row.feasible ? 1 : 0) << ',' << format_double(row.r) << ','
        << format_double(row.l_f) << '\n';
  }
}

std::size_t validate_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty CSV");
  const auto& cols = csv_columns();
  std::string expected;
  for (std::size_t i = 0; i < cols.size(); ++i) expected += (i ? "," : "") + cols[i];
  if (line != expected) throw std::runtime_error("line 1: unexpected header");
  std::size_t n = 0;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto f = split(line, ',');
    const auto fail = [&](const std::string& why) {
      throw std::runtime_error("line " + std::to_string(lineno) + ": " + why);
    };
    if (f.size() != cols.size()) fail("expected " + std::to_string(cols.size()) + " fields");
    const auto num = [&](std::size_t i) {
      if (f[i] == "nan") return std::nan("");
      try {
        return parse_number(f[i], cols[i]);
      } catch (const ConfigError& e) {
        fail(e.what());
      }
      return 0.0;
    };
    const double t = num(4), ps = num(6), en = num(8), dc = num(10), ds = num(11), r = num(16), lf = num(17);
    if (!(ps >= 0.0 && ps <= 1.0)) fail("Ps outside [0, 1]");
    if (!(en >= 1.0)) fail("E[N] below 1");
    const auto close = [](double a, double b) { return std::abs(a - b) <= 1e-9 * std::max(1.0, std::abs(b)); };
    if (!close(t, r * ps / en)) fail("T differs from r Ps / E[N]");
    if (!close(ds, en)) fail("D_s differs from E[N]");
    if (!close(dc, en * (1.0 + lf))) fail("D_c differs from E[N] (1 + L_f)");
    ++n;
  }
  return n;
}

namespace {

std::vector<Scheme> schemes(std::initializer_list<const char*> names) {
  std::vector<Scheme> out;
  for (const char* n : names) out.push_back(Scheme::parse(n));
  return out;
}

ScenarioConfig siso(double snr_db, int n_max, double r, int k) {
  ScenarioConfig c;
  c.snr = db_to_linear(snr_db);
  c.n_max = n_max;
  c.r = r;
  c.k = k;
  return c;
}

}  // namespace

const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names{"fig4", "fig5", "fig6", "fig7", "fig8", "fig9", "fig10"};
  return names;
}

SweepSpec preset(std::string_view name) {
  SweepSpec s;
  if (name == "fig4" || name == "fig5") {
    s.base = siso(3.0, 5, 2.0, 50);
    s.axis = "p_th";
    s.values = threshold_grid({1e-6, 1.0, 49, 1e-4});
    s.engine = SweepEngine::kBoth;
    s.optimize = false;
    s.series = {{"bbu", {}, schemes({"ti:ideal", "ti:local", "cc:ideal", "cc:local", "ir:ideal", "ir:local"})}};
  } else if (name == "fig6") {
    s.base = siso(4.0, 10, 1.0, 50);
    s.axis = "k";
    s.values = {50, 100, 200, 500, 1000};
    s.engine = SweepEngine::kAnalytic;
    const auto sch = schemes({"cc:ideal", "cc:local", "ir:ideal", "ir:local"});
    s.series = {{"r1", {{"r", "1"}}, sch}, {"r3", {{"r", "3"}}, sch}};
  } else if (name == "fig7" || name == "fig8") {
    s.base = siso(1.0, 10, 5.0, 100);
    s.axis = "m";
    s.values = {1, 2, 4, 8, 16, 32};
    const auto sch = schemes({"ir:ideal", "ir:local"});
    s.series = {{"miso", {{"m_t", "axis"}, {"m_r", "1"}}, sch},
                {"simo", {{"m_t", "1"}, {"m_r", "axis"}}, sch},
                {"mimo", {{"m_t", "axis"}, {"m_r", "axis"}}, sch}};
  } else if (name == "fig9") {
    s.base = siso(0.0, 10, 5.0, 100);
    s.base.m_t = 4;
    s.axis = "snr_db";
    s.values = {0, 5, 10, 15, 20};
    s.series = {{"bbu", {{"L", "1"}}, schemes({"ir:ideal", "ir:local"})},
                {"cran", {{"L", "3"}},
                 schemes({"ir:ideal", "ir:hard", "ir:soft:3", "ir:soft:6", "ir:soft:9", "ir:soft:16",
                          "ir:soft:inf"})}};
  } else if (name == "fig10") {
    s.base = siso(4.0, 10, 5.0, 100);
    s.base.m_t = 4;
    s.axis = "k";
    s.values = {50, 100, 200, 500, 1000};
    const auto sch = schemes({"ir:ideal", "ir:hard", "ir:soft:9", "ir:soft:16"});
    s.series = {{"L2", {{"L", "2"}}, sch}, {"L3", {{"L", "3"}}, sch}};
  } else {
    throw ConfigError("unknown preset '" + std::string(name) + "'");
  }
  s.output_path = std::string(name) + ".csv";
  return s;
}

}  // namespace crharq
