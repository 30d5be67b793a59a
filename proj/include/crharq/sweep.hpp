#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "crharq/codebook_search.hpp"
#include "crharq/metrics.hpp"
#include "crharq/optimize.hpp"
#include "crharq/scenario.hpp"

namespace crharq {

enum class SweepEngine { kMonteCarlo, kAnalytic, kBoth };

SweepEngine parse_engine(std::string_view name);
std::string_view to_string(SweepEngine e);

/// One protocol/policy pair; soft feedback also names its bit budget
/// (nullopt = unquantized).
struct Scheme {
  Protocol protocol = Protocol::kTypeI;
  Policy policy = Policy::kIdeal;
  std::optional<int> b;

  /// "ti:ideal", "ir:hard", "ir:soft:3", "ir:soft:inf".
  static Scheme parse(std::string_view text);
  std::string label() const;
  /// Policy column text: "soft:3" etc. for soft feedback.
  std::string policy_label() const;
};

/// Field assignment applied to the base scenario. A value of "axis" takes
/// the current axis value; a series with such assignments routes the axis
/// only through them.
struct FieldAssignment {
  std::string field;
  std::string value;
};

struct Series {
  std::string name;
  std::vector<FieldAssignment> set;
  std::vector<Scheme> schemes;
};

struct SweepSpec {
  ScenarioConfig base;
  std::string axis = "p_th";
  std::vector<double> values;
  SweepEngine engine = SweepEngine::kMonteCarlo;
  std::uint64_t sessions = 100000;
  std::string output_path;
  /// Optimize p_th under base.ps_min; otherwise the axis or base p_th is used.
  bool optimize = true;
  std::vector<Series> series;
  ThresholdSearch threshold;
  CodebookSearchOptions codebook;
};

/// Names accepted as axis or assignment fields.
const std::vector<std::string>& sweep_fields();

/// Sets one scenario field from text. "m" sets both m_t and every m_r;
/// "m_r" sets every RRH; "L" resizes the RRH list keeping the first m_r.
void assign_field(ScenarioConfig& cfg, std::string_view field, std::string_view value);

struct SweepRow {
  double axis_value = 0.0;
  std::string series;
  Scheme scheme;
  double p_th_used = 0.0;
  bool feasible = true;
  MetricsReport report;
  MetricsSource engine = MetricsSource::kMonteCarlo;
  std::uint64_t seed = 0;
  double r = 0.0;
  double l_f = 0.0;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  std::vector<std::string> skipped;  ///< reasons for rows that could not be evaluated
  std::size_t attempted = 0;
};

SweepResult run_sweep(const SweepSpec& spec);

/// Column order of the CSV output.
const std::vector<std::string>& csv_columns();
void write_csv(std::ostream& out, const std::vector<SweepRow>& rows);

/// Parses a sweep CSV and checks every row's algebraic invariants
/// (T = r Ps / E[N], D_c = E[N] (1 + L_f), D_s = E[N], ranges). Returns the
/// number of rows; throws std::runtime_error naming the first bad line.
std::size_t validate_csv(std::istream& in);

/// Scenario sweeps of the paper figures: fig4 ... fig10.
SweepSpec preset(std::string_view name);
const std::vector<std::string>& preset_names();

}  // namespace crharq
