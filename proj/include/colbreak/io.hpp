#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "colbreak/solver.hpp"
#include "colbreak/verification.hpp"

namespace colbreak {

namespace detail {

// All floating-point output uses 17 significant digits so that parsing the
// file back reproduces the exact double.
inline void append_g17(std::string& out, double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  out += buf;
}

}  // namespace detail

/// Writes content to path via a temporary file and rename, so a failure
/// never leaves a partial file behind.
inline void atomic_write(const std::filesystem::path& path,
                         const std::string& content) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out)
      throw std::runtime_error("cannot open '" + tmp.string() + "' for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) {
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      throw std::runtime_error("write failed for '" + tmp.string() + "'");
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw std::runtime_error("cannot rename temporary into '" + path.string() + "'");
  }
}

inline std::string trajectory_csv(const Trajectory& traj) {
  std::string out = "t,z,g\n";
  for (const DensityField& snap : traj.snapshots) {
    const Mesh& m = *snap.mesh;
    for (std::size_t i = 0; i < m.size(); ++i) {
      detail::append_g17(out, snap.time);
      out += ',';
      detail::append_g17(out, m.center(i));
      out += ',';
      detail::append_g17(out, snap.values[i]);
      out += '\n';
    }
  }
  return out;
}

inline std::string moments_csv(const Trajectory& traj) {
  std::string out = "t,M_neg,M0,M1,M2,flux_out\n";
  for (const MomentRecord& r : traj.moment_log) {
    detail::append_g17(out, r.t);
    out += ',';
    detail::append_g17(out, r.m_neg);
    out += ',';
    detail::append_g17(out, r.m0);
    out += ',';
    detail::append_g17(out, r.m1);
    out += ',';
    detail::append_g17(out, r.m2);
    out += ',';
    detail::append_g17(out, r.flux_out);
    out += '\n';
  }
  return out;
}

inline void write_trajectory(const Trajectory& traj,
                             const std::filesystem::path& trajectory_path,
                             const std::filesystem::path& moments_path) {
  atomic_write(trajectory_path, trajectory_csv(traj));
  atomic_write(moments_path, moments_csv(traj));
}

// Parsed-back trajectory rows, grouped into snapshot blocks by time.
struct TrajectoryData {
  std::vector<double> times;
  std::vector<std::vector<double>> z;
  std::vector<std::vector<double>> g;
};

inline TrajectoryData read_trajectory_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
  TrajectoryData data;
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    double t, z, g;
    if (std::sscanf(line.c_str(), "%lf,%lf,%lf", &t, &z, &g) != 3)
      throw std::runtime_error("malformed trajectory row in '" + path.string() + "'");
    if (data.times.empty() || data.times.back() != t) {
      data.times.push_back(t);
      data.z.emplace_back();
      data.g.emplace_back();
    }
    data.z.back().push_back(z);
    data.g.back().push_back(g);
  }
  return data;
}

inline std::vector<MomentRecord> read_moments_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
  std::vector<MomentRecord> rows;
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    MomentRecord r{};
    if (std::sscanf(line.c_str(), "%lf,%lf,%lf,%lf,%lf,%lf", &r.t, &r.m_neg, &r.m0,
                    &r.m1, &r.m2, &r.flux_out) != 6)
      throw std::runtime_error("malformed moments row in '" + path.string() + "'");
    rows.push_back(r);
  }
  return rows;
}

// Flat machine-readable verification report: the scenario fingerprint, the
// computed bound constants, and one `<check>=<status> margin=<value>` line
// per executed check.
struct VerificationReport {
  std::string fingerprint;
  std::vector<std::pair<std::string, double>> ledger_echo;
  std::vector<CheckResult> checks;

  bool all_pass() const {
    for (const CheckResult& c : checks)
      if (!c.pass) return false;
    return true;
  }
};

inline std::string report_text(const VerificationReport& report) {
  std::string out;
  out += "fingerprint=" + report.fingerprint + "\n";
  for (const auto& [key, value] : report.ledger_echo) {
    out += "ledger." + key + "=";
    detail::append_g17(out, value);
    out += '\n';
  }
  for (const CheckResult& c : report.checks) {
    out += c.name;
    out += c.pass ? "=pass margin=" : "=fail margin=";
    detail::append_g17(out, c.margin);
    if (!c.detail.empty()) out += " detail=\"" + c.detail + "\"";
    out += '\n';
  }
  return out;
}

inline void write_report(const VerificationReport& report,
                         const std::filesystem::path& path) {
  atomic_write(path, report_text(report));
}

}  // namespace colbreak
