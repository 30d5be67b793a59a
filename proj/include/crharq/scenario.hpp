#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace crharq {

/// Invalid scenario or protocol/antenna mismatch.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class Protocol { kTypeI, kChaseCombining, kIncrementalRedundancy };

/// Who decides STOP/RTX: the BBU itself (ideal), the serving RRH from full local
/// CSI (local), the UE from one ACK/NAK bit per RRH (hard), or the UE from b-bit
/// quantized CSI per RRH (soft).
enum class Policy { kIdeal, kLocal, kHard, kSoft };

struct ScenarioConfig {
  double snr = 1.0;                   ///< linear, average SNR per receive antenna
  int m_t = 1;                        ///< UE transmit antennas
  std::vector<int> m_r_per_rrh{1};    ///< receive antennas of each RRH; size is L
  int k = 50;                         ///< channel uses per packet
  double r = 2.0;                     ///< bit/symbol
  int n_max = 5;
  double p_th = 0.5;
  std::optional<int> b;               ///< soft feedback bits per RRH; empty = unquantized
  int b_prime = 0;                    ///< direction bits, the rest quantize amplitude
  double l_f = 3.0;                   ///< two-way fronthaul latency, in slots
  Protocol protocol = Protocol::kTypeI;
  Policy policy = Policy::kIdeal;
  double ps_min = 0.99;
  std::uint64_t seed = 1;

  int rrh_count() const { return static_cast<int>(m_r_per_rrh.size()); }
  int total_receive_antennas() const;
  bool is_siso() const { return m_t == 1 && rrh_count() == 1 && m_r_per_rrh[0] == 1; }

  /// Throws ConfigError describing the first violated constraint.
  void validate() const;
};

double db_to_linear(double db);
double linear_to_db(double linear);

/// Direction bits used for a given soft-feedback budget: (3,1), (6,4), (9,5),
/// (16,12); other budgets use b-2 direction bits (two amplitude bits).
int default_direction_bits(int b);

std::string_view to_string(Protocol p);
std::string_view to_string(Policy p);
Protocol parse_protocol(std::string_view name);
Policy parse_policy(std::string_view name);

}  // namespace crharq
