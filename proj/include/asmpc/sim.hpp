#ifndef ASMPC_SIM_HPP
#define ASMPC_SIM_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <functional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "asmpc/chance.hpp"
#include "asmpc/fir.hpp"
#include "asmpc/fps.hpp"
#include "asmpc/mpc.hpp"
#include "asmpc/polytope.hpp"
#include "asmpc/rls.hpp"
#include "asmpc/scenario.hpp"

namespace asmpc {

/// Seeded i.i.d. zero-mean disturbance sequence, componentwise inside
/// [-w_bar, w_bar].  The same seed always yields the same sequence, and the
/// sequence does not depend on the controller mode.
inline std::vector<Vec> generate_disturbance(std::uint64_t seed, int steps,
                                             const DisturbanceSpec& spec) {
  std::mt19937_64 rng(seed);
  const int n_y = static_cast<int>(spec.w_bar.size());
  std::vector<Vec> out(steps, Vec::Zero(n_y));
  for (int t = 0; t < steps; ++t) {
    for (int j = 0; j < n_y; ++j) {
      const double bound = spec.w_bar(j);
      if (bound == 0.0) continue;
      if (spec.family == DisturbanceFamily::uniform) {
        std::uniform_real_distribution<double> dist(-bound, bound);
        out[t](j) = dist(rng);
      } else {
        // Truncated gaussian via rejection; sigma from the declared variance.
        const double sigma = std::sqrt(spec.variance(j, j));
        std::normal_distribution<double> dist(0.0, sigma);
        double v;
        do {
          v = dist(rng);
        } while (std::abs(v) > bound);
        out[t](j) = v;
      }
    }
  }
  return out;
}

inline std::uint64_t fnv1a_hash(const std::vector<Vec>& seq) {
  std::uint64_t h = 1469598103934665603ull;
  for (const Vec& v : seq) {
    for (int i = 0; i < v.size(); ++i) {
      double d = v(i);
      unsigned char bytes[sizeof(double)];
      std::memcpy(bytes, &d, sizeof(double));
      for (unsigned char b : bytes) {
        h ^= b;
        h *= 1099511628211ull;
      }
    }
  }
  return h;
}

/// Volume of the convex hull of a 3-D polytope's vertices, used as a
/// shrinking proxy for the FPS.  Facets are fan-triangulated around their
/// centroid and coned to the hull centroid.
inline double hull_volume_3d(const HPolytope& p, const VertexSet& verts) {
  if (p.dim() != 3 || verts.size() < 4) return 0.0;
  Vec centroid = Vec::Zero(3);
  for (const Vec& v : verts) centroid += v;
  centroid /= static_cast<double>(verts.size());
  double vol = 0.0;
  for (int i = 0; i < p.rows(); ++i) {
    std::vector<Vec> face;
    for (const Vec& v : verts) {
      if (std::abs(p.a_mat().row(i).dot(v) - p.b_vec()(i)) <= 1e-7) {
        face.push_back(v);
      }
    }
    if (face.size() < 3) continue;
    Vec fc = Vec::Zero(3);
    for (const Vec& v : face) fc += v;
    fc /= static_cast<double>(face.size());
    // Order face vertices by angle in the facet plane.
    Eigen::Vector3d n = p.a_mat().row(i).transpose().normalized();
    Eigen::Vector3d ref = (face[0] - fc).normalized();
    Eigen::Vector3d perp = n.cross(ref);
    std::sort(face.begin(), face.end(), [&](const Vec& a, const Vec& b) {
      Eigen::Vector3d da = a - fc, db = b - fc;
      double aa = std::atan2(perp.dot(da), ref.dot(da));
      double ab = std::atan2(perp.dot(db), ref.dot(db));
      return aa < ab;
    });
    for (size_t k = 0; k < face.size(); ++k) {
      Eigen::Vector3d e1 = face[k] - centroid;
      Eigen::Vector3d e2 = face[(k + 1) % face.size()] - centroid;
      Eigen::Vector3d e3 = fc - centroid;
      vol += std::abs(e1.dot(e2.cross(e3))) / 6.0;
    }
  }
  return vol;
}

enum class RunStatus { completed, infeasible_at_start, solver_failure };

inline const char* to_string(RunStatus s) {
  switch (s) {
    case RunStatus::completed: return "completed";
    case RunStatus::infeasible_at_start: return "infeasible_at_start";
    case RunStatus::solver_failure: return "solver_failure";
  }
  return "?";
}

struct StepRecord {
  int t = 0;
  Vec u;
  Vec y;
  Vec w;
  double stage_cost = 0.0;
  SolveStatus solver_status = SolveStatus::failure;
  int fps_rows = 0;
  int fps_vertices = 0;
  double fps_volume = 0.0;
  Vec estimate_mean;  // projected control-design mean
  Vec cheb_center;
  bool violation = false;
  double witness_residual = 0.0;  // NaN at t = 0
};

struct RunTrace {
  std::vector<StepRecord> steps;
  RunStatus status = RunStatus::completed;
  double total_cost = 0.0;
  std::uint64_t disturbance_hash = 0;
  std::uint64_t seed = 0;
  std::string mode;
};

namespace detail {

inline FirModel chebyshev_model(const FeasibleParamSet& fps,
                                const FirDims& dims) {
  Mat h(dims.n_y, dims.regressor_len());
  for (int j = 0; j < dims.n_y; ++j) {
    h.row(j) = chebyshev_center(fps.row(j)).first.transpose();
  }
  return FirModel(std::move(h));
}

}  // namespace detail

/// Per-step hook receiving the FPS in force at time t, for property checks.
using FpsObserver = std::function<void(int, const FeasibleParamSet&)>;

/// One closed-loop run: solve the receding-horizon program, apply the first
/// input to the true system, measure, update the FPS, update and project
/// the estimate, repeat.
inline RunTrace run_closed_loop(const ScenarioConfig& cfg, std::uint64_t seed,
                                const std::vector<Vec>& disturbance,
                                const FpsObserver& observer = {}) {
  const FirDims& dims = cfg.dims;
  const int t_end = cfg.steps;
  if (static_cast<int>(disturbance.size()) < t_end + 1) {
    throw ScenarioError("run_closed_loop: disturbance sequence too short");
  }

  RunTrace trace;
  trace.seed = seed;
  trace.mode = to_string(cfg.mpc.mode);
  trace.disturbance_hash = fnv1a_hash(disturbance);

  FeasibleParamSet fps = init_fps(cfg.fps_init, dims, cfg.disturbance.w_bar);
  ModelEstimate est{cfg.est_mean0, cfg.est_cov0, cfg.disturbance.variance};
  Vec design_mean = project_estimate(est, fps);
  Regressor phi = cfg.phi0;
  Vec y = simulate_output(cfg.true_model, phi, disturbance[0]);
  AppendedCovariance gamma =
      build_gamma(cfg.chance, cfg.disturbance.variance, dims);

  std::optional<MpcSolution> prev;
  for (int t = 0; t <= t_end; ++t) {
    if (observer) observer(t, fps);
    std::vector<FirModel> vertices = fps_vertices(fps);
    FirModel cheb = detail::chebyshev_model(fps, dims);

    ConicProgram prog;
    if (cfg.mpc.mode == ControllerMode::stochastic) {
      prog = assemble_stochastic(phi, y, mean_as_matrix(design_mean, dims),
                                 vertices, cfg.chance, gamma, dims, cfg.mpc);
    } else {
      prog = assemble_robust(phi, y, cheb, vertices, cfg.chance.e_row,
                             cfg.chance.p, cfg.disturbance.w_bar, dims,
                             cfg.mpc);
    }

    StepRecord rec;
    rec.t = t;
    rec.y = y;
    rec.w = disturbance[t];
    rec.witness_residual = std::numeric_limits<double>::quiet_NaN();

    std::optional<Vec> warm;
    if (prev) {
      Vec cand = stack_inputs(shifted_candidate(*prev));
      rec.witness_residual = max_constraint_residual(prog, cand);
      if (rec.witness_residual <= 1e-6) warm = cand;
    }

    MpcSolution sol = solve(prog, warm);
    rec.solver_status = sol.status;
    if (sol.status != SolveStatus::optimal) {
      trace.status = (t == 0) ? RunStatus::infeasible_at_start
                              : RunStatus::solver_failure;
      trace.steps.push_back(std::move(rec));
      return trace;
    }

    rec.u = first_input(sol);
    rec.stage_cost = y.dot(cfg.mpc.q_weight * y) +
                     rec.u.dot(cfg.mpc.s_weight * rec.u);
    rec.violation = (cfg.chance.e_row * y)(0) > cfg.chance.p;
    rec.estimate_mean = design_mean;
    rec.cheb_center = matrix_as_mean(cheb);
    rec.fps_rows = 0;
    for (int jr = 0; jr < fps.n_y(); ++jr) rec.fps_rows += fps.row(jr).rows();
    rec.fps_vertices = static_cast<int>(vertices.size());
    if (dims.regressor_len() == 3 && dims.n_y == 1) {
      VertexSet vs;
      vs.reserve(vertices.size());
      for (const auto& f : vertices) vs.push_back(f.h.row(0).transpose());
      rec.fps_volume = hull_volume_3d(fps.row(0), vs);
    }
    trace.total_cost += rec.stage_cost;
    trace.steps.push_back(std::move(rec));
    prev = std::move(sol);

    if (t == t_end) break;

    phi = advance_regressor(phi, trace.steps.back().u, dims);
    y = simulate_output(cfg.true_model, phi, disturbance[t + 1]);
    fps = update_fps(fps, phi, y);
    est = rls_update(est, build_block_regressor(phi, dims.n_y), y);
    design_mean = project_estimate(est, fps);
  }
  return trace;
}

inline RunTrace run_closed_loop(const ScenarioConfig& cfg,
                                std::uint64_t seed) {
  return run_closed_loop(
      cfg, seed, generate_disturbance(seed, cfg.steps + 1, cfg.disturbance));
}

struct MonteCarloSummary {
  int n_runs = 0;
  bool paired = false;
  std::vector<double> cost;         // primary-mode cost per run
  std::vector<double> cost_paired;  // other-mode cost per run (paired only)
  std::vector<double> violation_freq;  // per time step, across runs
  double max_violation_freq = 0.0;
  int feasibility_failures = 0;
  double mean_initial_error = 0.0;
  double mean_final_error = 0.0;
  double mean_cheb_error = 0.0;
  int rls_closer_count = 0;  // runs where the estimate beats the Chebyshev center
  std::string mode;
};

/// Independent seeded runs; in paired mode both controllers see the same
/// disturbance sequence per seed.  Parallel over runs only.
inline MonteCarloSummary run_monte_carlo(const ScenarioConfig& cfg, int n_runs,
                                         std::uint64_t base_seed,
                                         bool paired = false,
                                         int n_threads = 0) {
  if (n_runs < 1) throw ScenarioError("run_monte_carlo: n_runs must be >= 1");
  std::vector<RunTrace> traces(n_runs);
  std::vector<RunTrace> other(paired ? n_runs : 0);

  ScenarioConfig alt = cfg;
  alt.mpc.mode = (cfg.mpc.mode == ControllerMode::stochastic)
                     ? ControllerMode::robust
                     : ControllerMode::stochastic;

  auto worker = [&](int begin, int end) {
    for (int i = begin; i < end; ++i) {
      const std::uint64_t seed = base_seed + static_cast<std::uint64_t>(i);
      auto w = generate_disturbance(seed, cfg.steps + 1, cfg.disturbance);
      traces[i] = run_closed_loop(cfg, seed, w);
      if (paired) other[i] = run_closed_loop(alt, seed, w);
    }
  };

  int hw = n_threads > 0 ? n_threads
                         : static_cast<int>(std::thread::hardware_concurrency());
  hw = std::max(1, std::min(hw, n_runs));
  std::vector<std::thread> pool;
  const int chunk = (n_runs + hw - 1) / hw;
  for (int k = 0; k < hw; ++k) {
    int b = k * chunk;
    int e = std::min(n_runs, b + chunk);
    if (b >= e) break;
    pool.emplace_back(worker, b, e);
  }
  for (auto& th : pool) th.join();

  MonteCarloSummary sum;
  sum.n_runs = n_runs;
  sum.paired = paired;
  sum.mode = to_string(cfg.mpc.mode);
  sum.violation_freq.assign(cfg.steps + 1, 0.0);
  const Vec truth = matrix_as_mean(cfg.true_model);
  int ok_runs = 0;
  for (int i = 0; i < n_runs; ++i) {
    const RunTrace& tr = traces[i];
    if (tr.status != RunStatus::completed) {
      ++sum.feasibility_failures;
      continue;
    }
    ++ok_runs;
    sum.cost.push_back(tr.total_cost);
    if (paired) sum.cost_paired.push_back(other[i].total_cost);
    for (const StepRecord& s : tr.steps) {
      if (s.violation) sum.violation_freq[s.t] += 1.0;
    }
    const double e0 = (cfg.est_mean0 - truth).norm();
    const double eT = (tr.steps.back().estimate_mean - truth).norm();
    const double ec = (tr.steps.back().cheb_center - truth).norm();
    sum.mean_initial_error += e0;
    sum.mean_final_error += eT;
    sum.mean_cheb_error += ec;
    if (eT < ec) ++sum.rls_closer_count;
  }
  if (ok_runs > 0) {
    for (double& f : sum.violation_freq) f /= ok_runs;
    sum.max_violation_freq =
        *std::max_element(sum.violation_freq.begin(), sum.violation_freq.end());
    sum.mean_initial_error /= ok_runs;
    sum.mean_final_error /= ok_runs;
    sum.mean_cheb_error /= ok_runs;
  }
  return sum;
}

/// Identification-only rollout: excite the system with seeded inputs inside
/// the input constraints and track the FPS / estimate evolution.
inline RunTrace run_estimate_only(const ScenarioConfig& cfg,
                                  std::uint64_t seed) {
  const FirDims& dims = cfg.dims;
  auto disturbance = generate_disturbance(seed, cfg.steps + 1, cfg.disturbance);
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ull);
  // Input amplitude from the tightest row of C u <= g.
  double amp = 3.0;
  for (int i = 0; i < cfg.mpc.c_mat.rows(); ++i) {
    double nrm = cfg.mpc.c_mat.row(i).lpNorm<1>();
    if (nrm > 0) amp = std::min(amp, cfg.mpc.g_vec(i) / nrm);
  }
  std::uniform_real_distribution<double> dist(-amp, amp);

  RunTrace trace;
  trace.seed = seed;
  trace.mode = "estimate-only";
  trace.disturbance_hash = fnv1a_hash(disturbance);

  FeasibleParamSet fps = init_fps(cfg.fps_init, dims, cfg.disturbance.w_bar);
  ModelEstimate est{cfg.est_mean0, cfg.est_cov0, cfg.disturbance.variance};
  Vec design_mean = project_estimate(est, fps);
  Regressor phi = cfg.phi0;
  Vec y = simulate_output(cfg.true_model, phi, disturbance[0]);

  for (int t = 0; t <= cfg.steps; ++t) {
    Vec u(dims.n_u);
    for (int i = 0; i < dims.n_u; ++i) u(i) = dist(rng);

    StepRecord rec;
    rec.t = t;
    rec.u = u;
    rec.y = y;
    rec.w = disturbance[t];
    rec.solver_status = SolveStatus::optimal;
    rec.stage_cost = y.dot(cfg.mpc.q_weight * y) + u.dot(cfg.mpc.s_weight * u);
    rec.violation = (cfg.chance.e_row * y)(0) > cfg.chance.p;
    rec.estimate_mean = design_mean;
    rec.cheb_center = matrix_as_mean(detail::chebyshev_model(fps, dims));
    rec.witness_residual = std::numeric_limits<double>::quiet_NaN();
    rec.fps_rows = 0;
    for (int jr = 0; jr < fps.n_y(); ++jr) rec.fps_rows += fps.row(jr).rows();
    std::vector<FirModel> vertices = fps_vertices(fps);
    rec.fps_vertices = static_cast<int>(vertices.size());
    if (dims.regressor_len() == 3 && dims.n_y == 1) {
      VertexSet vs;
      for (const auto& f : vertices) vs.push_back(f.h.row(0).transpose());
      rec.fps_volume = hull_volume_3d(fps.row(0), vs);
    }
    trace.total_cost += rec.stage_cost;
    trace.steps.push_back(std::move(rec));
    if (t == cfg.steps) break;

    phi = advance_regressor(phi, u, dims);
    y = simulate_output(cfg.true_model, phi, disturbance[t + 1]);
    fps = update_fps(fps, phi, y);
    est = rls_update(est, build_block_regressor(phi, dims.n_y), y);
    design_mean = project_estimate(est, fps);
  }
  return trace;
}

}  // namespace asmpc

#endif  // ASMPC_SIM_HPP
