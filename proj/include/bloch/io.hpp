#pragma once

// Plain-text file formats.
//
//   profile CSV      omega,x,y,z                      one row per node
//   rotation CSV     omega,r00,r01,r02,r10,...,r22    row-major entries
//   trajectory CSV   t,lyapunov,u1,u2,linf_to_target  linf empty except at t = 2kT
//   summary          "key: value" lines
//
// Reals are written with 17 significant digits so files round-trip exactly.

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "bloch/error.hpp"
#include "bloch/omega_grid.hpp"
#include "bloch/rotation_field.hpp"
#include "bloch/simulator.hpp"

namespace bloch {

inline std::string format_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace detail {

inline std::ofstream open_for_write(const std::filesystem::path& path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw io_error("cannot create directory " + path.parent_path().string() + ": " + ec.message());
  }
  std::ofstream out(path);
  if (!out) throw io_error("cannot open " + path.string() + " for writing");
  return out;
}

inline std::ifstream open_for_read(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw io_error("file not found: " + path.string());
  std::ifstream in(path);
  if (!in) throw io_error("cannot open " + path.string());
  return in;
}

inline double parse_real(std::string_view field, const std::string& where) {
  while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) field.remove_prefix(1);
  while (!field.empty() && (field.back() == ' ' || field.back() == '\t' || field.back() == '\r')) field.remove_suffix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc{} || ptr != field.data() + field.size() || !std::isfinite(v)) {
    throw io_error(where + ": not a finite real: '" + std::string(field) + "'");
  }
  return v;
}

/// Numeric rows of a CSV with a mandatory header of `columns` fields.
inline std::vector<std::vector<double>> read_numeric_csv(const std::filesystem::path& path, std::size_t columns) {
  std::ifstream in = open_for_read(path);
  std::string line;
  if (!std::getline(in, line)) throw io_error(path.string() + ": empty file (header required)");
  std::vector<std::vector<double>> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    std::vector<double> row;
    std::string_view rest = line;
    const std::string where = path.string() + ":" + std::to_string(line_no);
    while (true) {
      const auto comma = rest.find(',');
      row.push_back(parse_real(rest.substr(0, comma), where));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (row.size() != columns) {
      throw io_error(where + ": expected " + std::to_string(columns) + " columns, got " + std::to_string(row.size()));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

/// Rebuilds the regular grid from the omega column.
inline OmegaGrid grid_from_omegas(const std::vector<std::vector<double>>& rows, const std::string& who) {
  if (rows.size() < 3) throw config_error(who + ": need at least 3 nodes");
  const OmegaGrid grid(rows.front()[0], rows.back()[0], static_cast<int>(rows.size()) - 1);
  const double tol = 1e-9 * grid.width();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (std::abs(rows[i][0] - grid.node(i)) > tol) {
      throw config_error(who + ": omega column is not a regular grid at node " + std::to_string(i));
    }
  }
  return grid;
}

}  // namespace detail

inline void write_profile_csv(const std::filesystem::path& path, const SpinProfile& p) {
  std::ofstream out = detail::open_for_write(path);
  out << "omega,x,y,z\n";
  for (std::size_t i = 0; i < p.size(); ++i) {
    out << format_real(p.grid.node(i)) << ',' << format_real(p[i].x) << ',' << format_real(p[i].y) << ','
        << format_real(p[i].z) << '\n';
  }
  if (!out) throw io_error("write failed: " + path.string());
}

/// Reads a profile; does not check that values are unit vectors.
inline SpinProfile read_profile_csv(const std::filesystem::path& path) {
  const auto rows = detail::read_numeric_csv(path, 4);
  SpinProfile p{detail::grid_from_omegas(rows, path.string()), {}};
  p.values.reserve(rows.size());
  for (const auto& r : rows) p.values.push_back({r[1], r[2], r[3]});
  return p;
}

/// Throws a config error naming the first node whose norm is off by more than tol.
inline void require_unit_profile(const SpinProfile& p, double tol, const std::string& who) {
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double dev = std::abs(norm(p[i]) - 1.0);
    if (dev > tol) {
      throw config_error(who + ": off-sphere value at node " + std::to_string(i) + " (omega=" +
                         format_real(p.grid.node(i)) + ", |norm-1|=" + format_real(dev) + ")");
    }
  }
}

inline void write_rotation_csv(const std::filesystem::path& path, const RotationField& r) {
  std::ofstream out = detail::open_for_write(path);
  out << "omega,r00,r01,r02,r10,r11,r12,r20,r21,r22\n";
  for (std::size_t i = 0; i < r.size(); ++i) {
    out << format_real(r.grid.node(i));
    for (double v : r.mats[i].entries) out << ',' << format_real(v);
    out << '\n';
  }
  if (!out) throw io_error("write failed: " + path.string());
}

/// Reads a rotation field, checks every entry is a rotation (tol 1e-10), and
/// fills the omega-derivative by finite differences.
inline RotationField read_rotation_csv(const std::filesystem::path& path) {
  const auto rows = detail::read_numeric_csv(path, 10);
  RotationField r{detail::grid_from_omegas(rows, path.string()), {}, std::nullopt};
  for (std::size_t i = 0; i < rows.size(); ++i) {
    Mat3 m;
    for (int k = 0; k < 9; ++k) m.entries[k] = rows[i][k + 1];
    if (!is_rotation(m, 1e-10)) {
      throw config_error(path.string() + ": entry at node " + std::to_string(i) + " is not a rotation");
    }
    r.mats.push_back(m);
  }
  return with_derivative(std::move(r));
}

inline void write_trajectory_csv(const std::filesystem::path& path, const std::vector<TrajectoryRecord>& records) {
  std::ofstream out = detail::open_for_write(path);
  out << "t,lyapunov,u1,u2,linf_to_target\n";
  for (const auto& rec : records) {
    out << format_real(rec.t) << ',' << format_real(rec.lyapunov) << ',' << format_real(rec.u1) << ','
        << format_real(rec.u2) << ',';
    if (rec.linf_to_target) out << format_real(*rec.linf_to_target);
    out << '\n';
  }
  if (!out) throw io_error("write failed: " + path.string());
}

using Report = std::vector<std::pair<std::string, std::string>>;

inline void write_report(const std::filesystem::path& path, const Report& report) {
  std::ofstream out = detail::open_for_write(path);
  for (const auto& [k, v] : report) out << k << ": " << v << '\n';
  if (!out) throw io_error("write failed: " + path.string());
}

inline Report summary_report(const SimResult& res, double period) {
  const SimSummary& s = res.summary;
  Report r{{"lyapunov_initial", format_real(s.lyapunov_initial)},
           {"lyapunov_final", format_real(s.lyapunov_final)},
           {"lyapunov_ratio", format_real(s.lyapunov_initial > 0 ? s.lyapunov_final / s.lyapunov_initial : 0.0)},
           {"u1_min", format_real(s.u1_min)},
           {"u1_max", format_real(s.u1_max)},
           {"u2_min", format_real(s.u2_min)},
           {"u2_max", format_real(s.u2_max)},
           {"steps", std::to_string(s.steps)},
           {"wall_seconds", format_real(s.wall_seconds)}};
  for (const auto& [k, d] : res.echo_distances(period)) r.emplace_back("linf_to_target_k" + std::to_string(k), format_real(d));
  if (s.lab_frame_max_delta) r.emplace_back("lab_frame_max_delta", format_real(*s.lab_frame_max_delta));
  return r;
}

}  // namespace bloch
