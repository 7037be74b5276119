#pragma once

#include "edmstab/design.hpp"
#include "edmstab/simulator.hpp"

#include <filesystem>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

namespace edmstab {

/// %.17g, with "nan", "inf" and "-inf" for non-finite values.
std::string format_double(double v);

/// t,<state labels>,x_1..x_n,q_1..q_n,p_1..p_n,r_1..r_n,cost,L_total,U,V_norm
std::string trajectory_header(const Trajectory& trajectory);

/// Header plus one row per recorded sample. L_total is "nan" for rules
/// without a closed-form storage function.
void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory);

/// k1,k2,I_max,feasible in k1-major order; failed cells print I_max as nan.
void write_sweep_csv(std::ostream& out, const SweepResult& sweep);

using KeyValues = std::vector<std::pair<std::string, std::string>>;

/// One "key=value" line per entry, in the given order.
void write_key_values(std::ostream& out, const KeyValues& entries);

/// Writes `content` to `path`, creating parent directories. Throws IoError.
void write_text_file(const std::filesystem::path& path, const std::string& content);

}  // namespace edmstab
