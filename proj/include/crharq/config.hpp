#pragma once

#include <string>

#include "crharq/sweep.hpp"

namespace crharq {

/// Loads a YAML experiment file. Keys:
///   scenario: snr_db | snr, m_t, m_r (int or list), k, r, n_max, p_th, b
///             (int or "inf"), b_prime, l_f, protocol, policy, ps_min, seed
///   sweep: axis, values, engine, sessions, optimize, output, series
///          (list of {name, set: {field: value}, schemes: [...]})
///   threshold_search: min, max, grid_points, relative_tolerance
///   codebook_search: max_trials, sessions, amplitude_samples
/// Missing sections keep their defaults. Errors are ConfigError messages
/// prefixed with "<file>:<line>:<column>:".
SweepSpec load_config(const std::string& path);
SweepSpec parse_config(const std::string& text, const std::string& source_name = "<config>");

}  // namespace crharq
