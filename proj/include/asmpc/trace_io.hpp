#ifndef ASMPC_TRACE_IO_HPP
#define ASMPC_TRACE_IO_HPP

#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "asmpc/sim.hpp"

namespace asmpc {

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string tok;
  while (std::getline(ss, tok, sep)) out.push_back(tok);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

}  // namespace detail

/// Trace CSV, one row per step.  Column layout (v1):
///   t, u*, y*, w*, stage_cost, solver_status, fps_rows, fps_vertices,
///   fps_volume, mu*, cheb*, violation, witness_residual
/// where starred groups repeat per component.
inline void export_trace(const RunTrace& trace, const std::string& path) {
  if (path.empty()) throw IoError("export_trace: empty path");
  if (trace.steps.empty()) throw IoError("export_trace: empty trace");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("export_trace: cannot open " + path);

  const StepRecord& first = trace.steps.front();
  const int nu = static_cast<int>(first.u.size());
  const int ny = static_cast<int>(first.y.size());
  const int nc = static_cast<int>(first.estimate_mean.size());

  char meta[160];
  std::snprintf(meta, sizeof(meta),
                "# asmpc-trace v1 mode=%s seed=%llu w_hash=%016llx\n",
                trace.mode.c_str(),
                static_cast<unsigned long long>(trace.seed),
                static_cast<unsigned long long>(trace.disturbance_hash));
  out << meta << "t";
  for (int i = 0; i < nu; ++i) out << ",u" << i;
  for (int i = 0; i < ny; ++i) out << ",y" << i;
  for (int i = 0; i < ny; ++i) out << ",w" << i;
  out << ",stage_cost,solver_status,fps_rows,fps_vertices,fps_volume";
  for (int i = 0; i < nc; ++i) out << ",mu" << i;
  for (int i = 0; i < nc; ++i) out << ",cheb" << i;
  out << ",violation,witness_residual\n";

  for (const StepRecord& s : trace.steps) {
    out << s.t;
    for (int i = 0; i < nu; ++i)
      out << ',' << detail::fmt_double(i < s.u.size() ? s.u(i) : 0.0);
    for (int i = 0; i < ny; ++i) out << ',' << detail::fmt_double(s.y(i));
    for (int i = 0; i < ny; ++i) out << ',' << detail::fmt_double(s.w(i));
    out << ',' << detail::fmt_double(s.stage_cost);
    out << ',' << to_string(s.solver_status);
    out << ',' << s.fps_rows << ',' << s.fps_vertices << ','
        << detail::fmt_double(s.fps_volume);
    for (int i = 0; i < nc; ++i)
      out << ','
          << detail::fmt_double(i < s.estimate_mean.size() ? s.estimate_mean(i)
                                                           : 0.0);
    for (int i = 0; i < nc; ++i)
      out << ','
          << detail::fmt_double(i < s.cheb_center.size() ? s.cheb_center(i)
                                                         : 0.0);
    out << ',' << (s.violation ? 1 : 0) << ','
        << detail::fmt_double(s.witness_residual) << '\n';
  }
  if (!out) throw IoError("export_trace: write failure on " + path);
}

inline RunTrace import_trace(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("import_trace: cannot open " + path);
  RunTrace trace;
  std::string line;
  if (!std::getline(in, line) || line.rfind("# asmpc-trace v1", 0) != 0) {
    throw IoError("import_trace: missing or unsupported trace header");
  }
  {
    auto grab = [&](const std::string& key) -> std::string {
      auto pos = line.find(key + "=");
      if (pos == std::string::npos) return {};
      auto end = line.find(' ', pos);
      return line.substr(pos + key.size() + 1, end - pos - key.size() - 1);
    };
    trace.mode = grab("mode");
    trace.seed = std::stoull(grab("seed"));
    trace.disturbance_hash = std::stoull(grab("w_hash"), nullptr, 16);
  }
  if (!std::getline(in, line)) throw IoError("import_trace: missing columns");
  auto cols = detail::split(line, ',');
  int nu = 0, ny = 0, nc = 0;
  for (const auto& c : cols) {
    if (c.rfind("u", 0) == 0 && c.size() > 1 && std::isdigit(c[1])) ++nu;
    if (c.rfind("y", 0) == 0 && c.size() > 1 && std::isdigit(c[1])) ++ny;
    if (c.rfind("mu", 0) == 0 && c.size() > 2 && std::isdigit(c[2])) ++nc;
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto f = detail::split(line, ',');
    StepRecord s;
    size_t k = 0;
    s.t = std::stoi(f[k++]);
    s.u = Vec(nu);
    for (int i = 0; i < nu; ++i) s.u(i) = std::strtod(f[k++].c_str(), nullptr);
    s.y = Vec(ny);
    for (int i = 0; i < ny; ++i) s.y(i) = std::strtod(f[k++].c_str(), nullptr);
    s.w = Vec(ny);
    for (int i = 0; i < ny; ++i) s.w(i) = std::strtod(f[k++].c_str(), nullptr);
    s.stage_cost = std::strtod(f[k++].c_str(), nullptr);
    const std::string st = f[k++];
    s.solver_status = st == "optimal"      ? SolveStatus::optimal
                      : st == "infeasible" ? SolveStatus::infeasible
                      : st == "unbounded"  ? SolveStatus::unbounded
                                           : SolveStatus::failure;
    s.fps_rows = std::stoi(f[k++]);
    s.fps_vertices = std::stoi(f[k++]);
    s.fps_volume = std::strtod(f[k++].c_str(), nullptr);
    s.estimate_mean = Vec(nc);
    for (int i = 0; i < nc; ++i)
      s.estimate_mean(i) = std::strtod(f[k++].c_str(), nullptr);
    s.cheb_center = Vec(nc);
    for (int i = 0; i < nc; ++i)
      s.cheb_center(i) = std::strtod(f[k++].c_str(), nullptr);
    s.violation = f[k++] == "1";
    s.witness_residual = std::strtod(f[k++].c_str(), nullptr);
    trace.total_cost += s.stage_cost;
    trace.steps.push_back(std::move(s));
  }
  return trace;
}

inline void export_summary(const MonteCarloSummary& sum,
                           const std::string& path) {
  if (path.empty()) throw IoError("export_summary: empty path");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("export_summary: cannot open " + path);
  auto arr = [](const std::vector<double>& v) {
    std::string s;
    for (size_t i = 0; i < v.size(); ++i) {
      if (i) s += ',';
      s += detail::fmt_double(v[i]);
    }
    return s;
  };
  out << "asmpc_summary_version = 1\n";
  out << "mode = " << sum.mode << "\n";
  out << "n_runs = " << sum.n_runs << "\n";
  out << "paired = " << (sum.paired ? 1 : 0) << "\n";
  out << "feasibility_failures = " << sum.feasibility_failures << "\n";
  out << "max_violation_freq = " << detail::fmt_double(sum.max_violation_freq)
      << "\n";
  out << "mean_initial_error = " << detail::fmt_double(sum.mean_initial_error)
      << "\n";
  out << "mean_final_error = " << detail::fmt_double(sum.mean_final_error)
      << "\n";
  out << "mean_cheb_error = " << detail::fmt_double(sum.mean_cheb_error)
      << "\n";
  out << "rls_closer_count = " << sum.rls_closer_count << "\n";
  out << "violation_freq = " << arr(sum.violation_freq) << "\n";
  out << "cost = " << arr(sum.cost) << "\n";
  if (sum.paired) out << "cost_paired = " << arr(sum.cost_paired) << "\n";
  if (!out) throw IoError("export_summary: write failure on " + path);
}

}  // namespace asmpc

#endif  // ASMPC_TRACE_IO_HPP
