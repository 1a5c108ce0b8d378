#ifndef ASMPC_CHANCE_HPP
#define ASMPC_CHANCE_HPP

#include <cmath>
#include <stdexcept>

#include "asmpc/fir.hpp"

namespace asmpc {

/// Distributionally robust tightening factor sqrt((1-eps)/eps).
inline double kappa_of(double epsilon) {
  if (epsilon <= 0.0 || epsilon >= 1.0) {
    throw std::invalid_argument("kappa_of: epsilon must be in (0,1)");
  }
  return std::sqrt((1.0 - epsilon) / epsilon);
}

/// Single-row output chance constraint P{E y <= p} >= 1 - eps.
struct ChanceSpec {
  Eigen::RowVectorXd e_row;
  double p;
  double epsilon;

  ChanceSpec(Eigen::RowVectorXd e, double p_, double eps)
      : e_row(std::move(e)), p(p_), epsilon(eps) {
    kappa_of(eps);  // validates range
  }

  double kappa() const { return kappa_of(epsilon); }
};

/// Covariance of the appended vector [E H, E w, -p]: only the disturbance
/// slot carries variance, the model rows are treated as deterministic
/// within the FPS.
struct AppendedCovariance {
  Mat gamma;  // (n_u*m + 2) square
};

inline AppendedCovariance build_gamma(const ChanceSpec& spec,
                                      const Mat& sigma_w2,
                                      const FirDims& dims) {
  if (sigma_w2.rows() != dims.n_y || sigma_w2.cols() != dims.n_y) {
    throw std::invalid_argument("build_gamma: noise covariance dimension mismatch");
  }
  const int nm = dims.regressor_len();
  AppendedCovariance out;
  out.gamma = Mat::Zero(nm + 2, nm + 2);
  out.gamma(nm, nm) = (spec.e_row * sigma_w2 * spec.e_row.transpose())(0, 0);
  return out;
}

/// True when gamma has its single nonzero at the constant slot, which makes
/// the cone term independent of the regressor.
inline bool gamma_is_constant_slot(const AppendedCovariance& gamma,
                                   double tol = 0.0) {
  const int n = static_cast<int>(gamma.gamma.rows());
  Mat probe = gamma.gamma;
  probe(n - 2, n - 2) = 0.0;
  return probe.cwiseAbs().maxCoeff() <= tol;
}

/// kappa * sqrt(phi_bar' Gamma phi_bar) + E H phi - p, with
/// phi_bar = [phi' 1 1]'.  Constraint satisfied iff the result is <= 0.
inline double cone_row_residual(const Regressor& phi,
                                const AppendedCovariance& gamma,
                                const ChanceSpec& spec,
                                const FirModel& vertex) {
  const int nm = static_cast<int>(phi.size());
  if (gamma.gamma.rows() != nm + 2) {
    throw std::invalid_argument("cone_row_residual: gamma dimension mismatch");
  }
  if (vertex.h.cols() != nm || vertex.h.rows() != spec.e_row.cols()) {
    throw std::invalid_argument("cone_row_residual: vertex dimension mismatch");
  }
  Vec phi_bar(nm + 2);
  phi_bar.head(nm) = phi;
  phi_bar(nm) = 1.0;
  phi_bar(nm + 1) = 1.0;
  double quad = phi_bar.dot(gamma.gamma * phi_bar);
  double tighten = spec.kappa() * std::sqrt(std::max(quad, 0.0));
  double nominal = (spec.e_row * (vertex.h * phi))(0, 0);
  return tighten + nominal - spec.p;
}

}  // namespace asmpc

#endif  // ASMPC_CHANCE_HPP
