#ifndef ASMPC_RLS_HPP
#define ASMPC_RLS_HPP

#include <stdexcept>

#include "asmpc/fir.hpp"
#include "asmpc/fps.hpp"
#include "asmpc/solver.hpp"

namespace asmpc {

/// Mean and covariance of the vectorized FIR coefficients, plus the known
/// disturbance covariance driving the recursion.
struct ModelEstimate {
  Vec mean;       ///< length n_y*n_u*m
  Mat cov;        ///< symmetric PSD, same dimension squared
  Mat noise_var;  ///< n_y x n_y, symmetric PD
};

struct RlsOptions {
  bool joseph_form = false;       // stabilized covariance update
  double cond_limit = 1e12;       // regularize M beyond this condition number
  double ridge = 1e-10;
};

/// Block-diagonal regressor, n_y copies of phi' on the diagonal.
inline Mat build_block_regressor(const Regressor& phi, int n_y) {
  const int nm = static_cast<int>(phi.size());
  Mat blk = Mat::Zero(n_y, n_y * nm);
  for (int j = 0; j < n_y; ++j) {
    blk.block(j, j * nm, 1, nm) = phi.transpose();
  }
  return blk;
}

/// Kalman measurement update for the coefficient distribution.
inline ModelEstimate rls_update(const ModelEstimate& est, const Mat& phi_blk,
                                const Vec& y, const RlsOptions& opt = {}) {
  const int n = static_cast<int>(est.mean.size());
  if (phi_blk.cols() != n || phi_blk.rows() != y.size()) {
    throw std::invalid_argument("rls_update: dimension mismatch");
  }
  Mat innov = phi_blk * est.cov * phi_blk.transpose() + est.noise_var;
  Eigen::LDLT<Mat> ldlt(innov);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
    throw std::runtime_error("rls_update: singular innovation covariance");
  }
  Mat gain = est.cov * phi_blk.transpose() * ldlt.solve(Mat::Identity(y.size(), y.size()));
  ModelEstimate out;
  out.mean = est.mean + gain * (y - phi_blk * est.mean);
  Mat ikh = Mat::Identity(n, n) - gain * phi_blk;
  if (opt.joseph_form) {
    out.cov = ikh * est.cov * ikh.transpose() +
              gain * est.noise_var * gain.transpose();
  } else {
    out.cov = ikh * est.cov;
  }
  out.cov = 0.5 * (out.cov + out.cov.transpose());
  out.noise_var = est.noise_var;
  return out;
}

/// Minimum-variance projection of the mean onto the FPS:
/// argmin over X in F of (X-mu)' M (X-mu) with M the inverse covariance.
inline Vec project_estimate(const ModelEstimate& est,
                            const FeasibleParamSet& fps,
                            const RlsOptions& opt = {}) {
  const int n = static_cast<int>(est.mean.size());
  const int d = fps.dim();
  if (n != fps.n_y() * d) {
    throw std::invalid_argument("project_estimate: dimension mismatch");
  }

  bool inside = true;
  for (int j = 0; j < fps.n_y() && inside; ++j) {
    inside = contains(fps.row(j), est.mean.segment(j * d, d), 1e-9);
  }
  if (inside) return est.mean;

  Mat cov = est.cov;
  {
    Eigen::SelfAdjointEigenSolver<Mat> eig(cov);
    double lo = eig.eigenvalues().minCoeff();
    double hi = eig.eigenvalues().maxCoeff();
    if (lo <= 0.0 || hi / lo > opt.cond_limit) {
      cov += opt.ridge * Mat::Identity(n, n);
    }
  }
  Mat m_weight = cov.ldlt().solve(Mat::Identity(n, n));
  m_weight = 0.5 * (m_weight + m_weight.transpose());

  QpProblem qp;
  qp.p = 2.0 * m_weight;
  qp.q = -2.0 * (m_weight * est.mean);
  int total_rows = 0;
  for (int j = 0; j < fps.n_y(); ++j) total_rows += fps.row(j).rows();
  qp.g_ineq = Mat::Zero(total_rows, n);
  qp.h_ineq = Vec(total_rows);
  int r = 0;
  for (int j = 0; j < fps.n_y(); ++j) {
    const HPolytope& pj = fps.row(j);
    qp.g_ineq.block(r, j * d, pj.rows(), d) = pj.a_mat();
    qp.h_ineq.segment(r, pj.rows()) = pj.b_vec();
    r += pj.rows();
  }
  qp.a_eq = Mat(0, n);
  qp.b_eq = Vec(0);
  SolveReport rep = solve_qp(qp);
  if (rep.status != SolveStatus::optimal) {
    throw std::runtime_error("project_estimate: projection QP failed");
  }
  return rep.x;
}

/// Reshape the stacked coefficient vector into the n_y x (n_u*m) matrix.
inline FirModel mean_as_matrix(const Vec& mean, const FirDims& dims) {
  if (mean.size() != dims.coeff_count()) {
    throw std::invalid_argument("mean_as_matrix: length mismatch");
  }
  const int d = dims.regressor_len();
  Mat h(dims.n_y, d);
  for (int j = 0; j < dims.n_y; ++j) {
    h.row(j) = mean.segment(j * d, d).transpose();
  }
  return FirModel(std::move(h));
}

inline Vec matrix_as_mean(const FirModel& model) {
  const int d = model.regressor_len();
  Vec v(model.n_y() * d);
  for (int j = 0; j < model.n_y(); ++j) {
    v.segment(j * d, d) = model.h.row(j).transpose();
  }
  return v;
}

}  // namespace asmpc

#endif  // ASMPC_RLS_HPP
