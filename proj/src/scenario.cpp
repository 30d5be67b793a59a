#include "crharq/scenario.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>

namespace crharq {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

}  // namespace

int ScenarioConfig::total_receive_antennas() const {
  return std::accumulate(m_r_per_rrh.begin(), m_r_per_rrh.end(), 0);
}

void ScenarioConfig::validate() const {
  if (!(snr >= 0.0) || !std::isfinite(snr)) throw ConfigError("snr must be finite and >= 0");
  if (m_t < 1) throw ConfigError("m_t must be >= 1");
  if (m_r_per_rrh.empty()) throw ConfigError("at least one RRH is required");
  for (int m : m_r_per_rrh)
    if (m < 1) throw ConfigError("every RRH needs at least one receive antenna");
  if (k < 1) throw ConfigError("k must be >= 1");
  if (!(r > 0.0) || !std::isfinite(r)) throw ConfigError("r must be > 0");
  if (n_max < 1) throw ConfigError("n_max must be >= 1");
  if (!(p_th >= 0.0 && p_th <= 1.0)) throw ConfigError("p_th must lie in [0, 1]");
  if (!(ps_min >= 0.0 && ps_min <= 1.0)) throw ConfigError("ps_min must lie in [0, 1]");
  if (!(l_f >= 0.0)) throw ConfigError("l_f must be >= 0");
  if (b) {
    if (*b < 0 || b_prime < 0 || b_prime > *b)
      throw ConfigError("feedback bits must satisfy 0 <= b_prime <= b");
    if (b_prime > 24 || *b - b_prime > 24)
      throw ConfigError("feedback bit budget too large");
  }
  if (protocol == Protocol::kChaseCombining && !is_siso())
    throw ConfigError("CC requires a SISO link (m_t = 1, one RRH, m_r = 1)");
  if (policy == Policy::kLocal && rrh_count() != 1)
    throw ConfigError("local feedback applies to BBU Hoteling (one RRH)");
  if (policy == Policy::kSoft)
    for (int m : m_r_per_rrh)
      if (m != 1) throw ConfigError("soft feedback requires single-antenna RRHs");
}

double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
double linear_to_db(double linear) { return 10.0 * std::log10(linear); }

int default_direction_bits(int b) {
  switch (b) {
    case 3: return 1;
    case 6: return 4;
    case 9: return 5;
    case 16: return 12;
    default: return std::max(0, b - 2);
  }
}

std::string_view to_string(Protocol p) {
  switch (p) {
    case Protocol::kTypeI: return "TI";
    case Protocol::kChaseCombining: return "CC";
    case Protocol::kIncrementalRedundancy: return "IR";
  }
  return "?";
}

std::string_view to_string(Policy p) {
  switch (p) {
    case Policy::kIdeal: return "ideal";
    case Policy::kLocal: return "local";
    case Policy::kHard: return "hard";
    case Policy::kSoft: return "soft";
  }
  return "?";
}

Protocol parse_protocol(std::string_view name) {
  const std::string n = lower(name);
  if (n == "ti") return Protocol::kTypeI;
  if (n == "cc") return Protocol::kChaseCombining;
  if (n == "ir") return Protocol::kIncrementalRedundancy;
  throw ConfigError("unknown protocol '" + std::string(name) + "'");
}

Policy parse_policy(std::string_view name) {
  const std::string n = lower(name);
  if (n == "ideal") return Policy::kIdeal;
  if (n == "local") return Policy::kLocal;
  if (n == "hard") return Policy::kHard;
  if (n == "soft") return Policy::kSoft;
  throw ConfigError("unknown policy '" + std::string(name) + "'");
}

}  // namespace crharq
