#include "edmstab/outputs.hpp"

#include "edmstab/errors.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace edmstab {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string trajectory_header(const Trajectory& trajectory) {
  std::string h = "t";
  for (const auto& label : trajectory.state_labels) h += "," + label;
  const auto n = trajectory.samples.empty() ? 0 : trajectory.samples.front().x.size();
  for (const char* prefix : {"x", "q", "p", "r"})
    for (Eigen::Index i = 1; i <= n; ++i) h += "," + std::string(prefix) + "_" + std::to_string(i);
  h += ",cost,L_total,U,V_norm";
  return h;
}

namespace {

void append(std::string& row, double v) {
  row += ',';
  row += format_double(v);
}

void append(std::string& row, const Vector& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) append(row, v(i));
}

}  // namespace

void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory) {
  out << trajectory_header(trajectory) << '\n';
  std::string row;
  for (const auto& s : trajectory.samples) {
    row = format_double(s.t);
    append(row, s.y);
    append(row, s.x);
    append(row, s.q);
    append(row, s.p);
    append(row, s.r);
    append(row, s.cost);
    append(row, s.lyapunov_total.value_or(std::nan("")));
    append(row, s.exo_lyapunov);
    append(row, s.v_norm);
    out << row << '\n';
  }
}

void write_sweep_csv(std::ostream& out, const SweepResult& sweep) {
  out << "k1,k2,I_max,feasible\n";
  for (const auto& c : sweep.cells) {
    out << format_double(c.k1) << ',' << format_double(c.k2) << ','
        << (c.failed ? "nan" : format_double(c.i_max)) << ',' << (c.feasible ? 1 : 0) << '\n';
  }
}

void write_key_values(std::ostream& out, const KeyValues& entries) {
  for (const auto& [key, value] : entries) out << key << '=' << value << '\n';
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  if (ec) throw IoError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open " + path.string() + " for writing");
  f << content;
  f.flush();
  if (!f) throw IoError("write failed for " + path.string());
}

}  // namespace edmstab
