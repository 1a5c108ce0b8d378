#ifndef ASMPC_MPC_HPP
#define ASMPC_MPC_HPP

#include <stdexcept>
#include <vector>

#include "asmpc/chance.hpp"
#include "asmpc/fir.hpp"
#include "asmpc/solver.hpp"

namespace asmpc {

enum class ControllerMode { stochastic, robust };

inline const char* to_string(ControllerMode m) {
  return m == ControllerMode::stochastic ? "stochastic" : "robust";
}

struct MpcConfig {
  int horizon;    ///< N, must exceed the regressor length m
  Mat q_weight;   ///< n_y x n_y, PSD
  Mat s_weight;   ///< n_u x n_u, PD
  Mat c_mat;      ///< input-constraint rows, C u <= g
  Vec g_vec;
  ControllerMode mode = ControllerMode::stochastic;
  bool use_cone_rows = false;  ///< pose chance rows in cone form instead of
                               ///< the equivalent linear form
};

/// Assembled finite-horizon program over the stacked input sequence U,
/// together with the affine maps needed to reconstruct predictions.
struct ConicProgram {
  QpProblem qp;
  std::vector<ConeRow> cones;
  double cost_offset = 0.0;  // constant cost term (current output stage)
  FirDims dims{1, 1, 1};
  int horizon = 0;
  // Regressor maps: Phi(t+j|t) = reg_lin[j-1] * U + reg_off[j-1], j=1..N.
  std::vector<Mat> reg_lin;
  std::vector<Vec> reg_off;
};

struct MpcSolution {
  SolveStatus status = SolveStatus::failure;
  Mat u_seq;  // N x n_u
  double objective = 0.0;
  std::vector<Regressor> predicted_regressors;  // Phi(t+1|t) .. Phi(t+N|t)
  SolveReport report;
};

namespace detail {

struct HorizonMaps {
  std::vector<Mat> p;  // p[j]: Phi(t+j|t) linear part, j=0..N
  std::vector<Vec> c;  // c[j]: offset
};

inline HorizonMaps build_horizon_maps(const Regressor& phi_t,
                                      const FirDims& dims, int horizon) {
  const int nm = dims.regressor_len();
  const int nv = horizon * dims.n_u;
  ShiftOperators ops = build_shift_operators(dims);
  HorizonMaps maps;
  maps.p.resize(horizon + 1);
  maps.c.resize(horizon + 1);
  maps.p[0] = Mat::Zero(nm, nv);
  maps.c[0] = phi_t;
  for (int j = 1; j <= horizon; ++j) {
    maps.p[j] = ops.w_op * maps.p[j - 1];
    maps.p[j].middleCols((j - 1) * dims.n_u, dims.n_u) += ops.z_op;
    maps.c[j] = ops.w_op * maps.c[j - 1];
  }
  return maps;
}

inline void check_cfg(const MpcConfig& cfg, const FirDims& dims) {
  if (cfg.horizon <= dims.m) {
    throw std::invalid_argument("MpcConfig: horizon must exceed regressor length");
  }
  if (cfg.c_mat.rows() != cfg.g_vec.size() || cfg.c_mat.cols() != dims.n_u) {
    throw std::invalid_argument("MpcConfig: input constraint dimension mismatch");
  }
  if (cfg.q_weight.rows() != dims.n_y || cfg.s_weight.rows() != dims.n_u) {
    throw std::invalid_argument("MpcConfig: weight dimension mismatch");
  }
}

// Cost, input rows and terminal equality shared by both controller modes.
inline ConicProgram base_program(const Regressor& phi_t, const Vec& y_t,
                                 const FirModel& nominal, const FirDims& dims,
                                 const MpcConfig& cfg) {
  check_cfg(cfg, dims);
  const int n_steps = cfg.horizon;
  const int nv = n_steps * dims.n_u;
  const int nm = dims.regressor_len();
  HorizonMaps maps = build_horizon_maps(phi_t, dims, n_steps);

  ConicProgram prog;
  prog.dims = dims;
  prog.horizon = n_steps;
  prog.reg_lin.assign(maps.p.begin() + 1, maps.p.end());
  prog.reg_off.assign(maps.c.begin() + 1, maps.c.end());

  Mat hess = Mat::Zero(nv, nv);
  Vec lin = Vec::Zero(nv);
  double offset = y_t.dot(cfg.q_weight * y_t);
  const Mat qn = nominal.h.transpose() * cfg.q_weight * nominal.h;
  for (int j = 1; j <= n_steps; ++j) {
    hess += maps.p[j].transpose() * qn * maps.p[j];
    lin += maps.p[j].transpose() * (qn * maps.c[j]);
    offset += maps.c[j].dot(qn * maps.c[j]);
  }
  for (int i = 0; i < n_steps; ++i) {
    hess.block(i * dims.n_u, i * dims.n_u, dims.n_u, dims.n_u) += cfg.s_weight;
  }
  prog.qp.p = 2.0 * hess;
  prog.qp.q = 2.0 * lin;
  prog.cost_offset = offset;

  const int cr = static_cast<int>(cfg.c_mat.rows());
  prog.qp.g_ineq = Mat::Zero(n_steps * cr, nv);
  prog.qp.h_ineq = Vec(n_steps * cr);
  for (int i = 0; i < n_steps; ++i) {
    prog.qp.g_ineq.block(i * cr, i * dims.n_u, cr, dims.n_u) = cfg.c_mat;
    prog.qp.h_ineq.segment(i * cr, cr) = cfg.g_vec;
  }

  // Terminal steady state: (I - W) Phi(t+N|t) = Z u(t+N-1|t).
  ShiftOperators ops = build_shift_operators(dims);
  Mat iw = Mat::Identity(nm, nm) - ops.w_op;
  prog.qp.a_eq = iw * maps.p[n_steps];
  prog.qp.a_eq.middleCols((n_steps - 1) * dims.n_u, dims.n_u) -= ops.z_op;
  prog.qp.b_eq = -(iw * maps.c[n_steps]);
  return prog;
}

inline void append_linear_rows(ConicProgram& prog, const Mat& rows,
                               const Vec& bounds) {
  const int old = static_cast<int>(prog.qp.g_ineq.rows());
  Mat g(old + rows.rows(), prog.qp.g_ineq.cols());
  Vec h(old + rows.rows());
  g.topRows(old) = prog.qp.g_ineq;
  h.head(old) = prog.qp.h_ineq;
  g.bottomRows(rows.rows()) = rows;
  h.tail(rows.rows()) = bounds;
  prog.qp.g_ineq = std::move(g);
  prog.qp.h_ineq = std::move(h);
}

}  // namespace detail

/// Finite-horizon program with per-vertex distributionally robust chance
/// rows.  When gamma carries variance only at the constant slot the rows
/// are posed as equivalent linear constraints; cone form is available via
/// cfg.use_cone_rows.
inline ConicProgram assemble_stochastic(const Regressor& phi_t, const Vec& y_t,
                                        const FirModel& nominal,
                                        const std::vector<FirModel>& vertices,
                                        const ChanceSpec& cc,
                                        const AppendedCovariance& gamma,
                                        const FirDims& dims,
                                        const MpcConfig& cfg) {
  if (vertices.empty()) {
    throw std::invalid_argument("assemble_stochastic: need at least one vertex");
  }
  ConicProgram prog = detail::base_program(phi_t, y_t, nominal, dims, cfg);
  const int n_steps = prog.horizon;
  const int nv = static_cast<int>(prog.qp.q.size());
  const int nm = dims.regressor_len();
  const double kappa = cc.kappa();

  if (!cfg.use_cone_rows && gamma_is_constant_slot(gamma)) {
    const double tighten = kappa * std::sqrt(std::max(gamma.gamma(nm, nm), 0.0));
    Mat rows(n_steps * vertices.size(), nv);
    Vec bounds(n_steps * vertices.size());
    int r = 0;
    for (const FirModel& f : vertices) {
      Eigen::RowVectorXd ef = cc.e_row * f.h;  // 1 x nm
      for (int j = 1; j <= n_steps; ++j) {
        rows.row(r) = ef * prog.reg_lin[j - 1];
        bounds(r) = cc.p - tighten - ef * prog.reg_off[j - 1];
        ++r;
      }
    }
    detail::append_linear_rows(prog, rows, bounds);
    return prog;
  }

  // General cone form with Gamma^(1/2) applied to the appended regressor.
  Eigen::SelfAdjointEigenSolver<Mat> eig(gamma.gamma);
  Mat half = eig.eigenvectors() *
             eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
             eig.eigenvectors().transpose();
  for (const FirModel& f : vertices) {
    Eigen::RowVectorXd ef = cc.e_row * f.h;
    for (int j = 1; j <= n_steps; ++j) {
      ConeRow row;
      Mat bar_lin = Mat::Zero(nm + 2, nv);
      bar_lin.topRows(nm) = prog.reg_lin[j - 1];
      Vec bar_off(nm + 2);
      bar_off.head(nm) = prog.reg_off[j - 1];
      bar_off(nm) = 1.0;
      bar_off(nm + 1) = 1.0;
      row.a = kappa * half * bar_lin;
      row.b = kappa * half * bar_off;
      row.c = -(ef * prog.reg_lin[j - 1]).transpose();
      row.d = cc.p - ef * prog.reg_off[j - 1];
      prog.cones.push_back(std::move(row));
    }
  }
  return prog;
}

/// Reconstructed robust baseline: hard output rows for every vertex with
/// worst-case disturbance absorbed through |E| w_bar, nominal model given
/// by the Chebyshev center of the FPS.
inline ConicProgram assemble_robust(const Regressor& phi_t, const Vec& y_t,
                                    const FirModel& cheb_center,
                                    const std::vector<FirModel>& vertices,
                                    const Eigen::RowVectorXd& e_row, double p,
                                    const Vec& w_bar, const FirDims& dims,
                                    const MpcConfig& cfg) {
  if (vertices.empty()) {
    throw std::invalid_argument("assemble_robust: need at least one vertex");
  }
  ConicProgram prog = detail::base_program(phi_t, y_t, cheb_center, dims, cfg);
  const int n_steps = prog.horizon;
  const int nv = static_cast<int>(prog.qp.q.size());
  const double margin = e_row.cwiseAbs() * w_bar;

  Mat rows(n_steps * vertices.size(), nv);
  Vec bounds(n_steps * vertices.size());
  int r = 0;
  for (const FirModel& f : vertices) {
    Eigen::RowVectorXd ef = e_row * f.h;
    for (int j = 1; j <= n_steps; ++j) {
      rows.row(r) = ef * prog.reg_lin[j - 1];
      bounds(r) = p - margin - ef * prog.reg_off[j - 1];
      ++r;
    }
  }
  detail::append_linear_rows(prog, rows, bounds);
  return prog;
}

/// Worst violation of the program's constraints at a fixed input sequence.
inline double max_constraint_residual(const ConicProgram& prog, const Vec& u) {
  double resid = 0.0;
  if (prog.qp.g_ineq.rows() > 0) {
    resid = std::max(resid, (prog.qp.g_ineq * u - prog.qp.h_ineq).maxCoeff());
  }
  if (prog.qp.a_eq.rows() > 0) {
    resid = std::max(resid,
                     (prog.qp.a_eq * u - prog.qp.b_eq).lpNorm<Eigen::Infinity>());
  }
  for (const ConeRow& cr : prog.cones) {
    resid = std::max(resid, (cr.a * u + cr.b).norm() - cr.c.dot(u) - cr.d);
  }
  return resid;
}

inline double evaluate_objective(const ConicProgram& prog, const Vec& u) {
  return 0.5 * u.dot(prog.qp.p * u) + prog.qp.q.dot(u) + prog.cost_offset;
}

inline MpcSolution solve(const ConicProgram& prog,
                         const std::optional<Vec>& warm_start = std::nullopt,
                         SolverOptions opt = {}) {
  QpProblem qp = prog.qp;
  qp.warm_start = warm_start;
  SolveReport rep =
      prog.cones.empty() ? solve_qp(qp, opt) : solve_qp_soc(qp, prog.cones, opt);
  MpcSolution sol;
  sol.status = rep.status;
  sol.report = rep;
  if (rep.status != SolveStatus::optimal) return sol;
  const int n_u = prog.dims.n_u;
  sol.u_seq = Mat(prog.horizon, n_u);
  for (int i = 0; i < prog.horizon; ++i) {
    sol.u_seq.row(i) = rep.x.segment(i * n_u, n_u).transpose();
  }
  sol.objective = rep.objective + prog.cost_offset;
  sol.predicted_regressors.reserve(prog.horizon);
  for (int j = 0; j < prog.horizon; ++j) {
    sol.predicted_regressors.push_back(prog.reg_lin[j] * rep.x +
                                       prog.reg_off[j]);
  }
  return sol;
}

inline Vec first_input(const MpcSolution& sol) {
  if (sol.status != SolveStatus::optimal) {
    throw std::logic_error("first_input: solution is not optimal");
  }
  return sol.u_seq.row(0).transpose();
}

/// Feasibility witness for the next step: drop the first input, repeat the
/// last one.
inline Mat shifted_candidate(const MpcSolution& prev) {
  if (prev.status != SolveStatus::optimal) {
    throw std::logic_error("shifted_candidate: solution is not optimal");
  }
  const int n = static_cast<int>(prev.u_seq.rows());
  Mat out(n, prev.u_seq.cols());
  out.topRows(n - 1) = prev.u_seq.bottomRows(n - 1);
  out.row(n - 1) = prev.u_seq.row(n - 1);
  return out;
}

inline Vec stack_inputs(const Mat& u_seq) {
  Vec u(u_seq.rows() * u_seq.cols());
  for (int i = 0; i < u_seq.rows(); ++i) {
    u.segment(i * u_seq.cols(), u_seq.cols()) = u_seq.row(i).transpose();
  }
  return u;
}

}  // namespace asmpc

#endif  // ASMPC_MPC_HPP
