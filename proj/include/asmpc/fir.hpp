#ifndef ASMPC_FIR_HPP
#define ASMPC_FIR_HPP

#include <Eigen/Dense>

#include <stdexcept>

namespace asmpc {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Dimensions of a multi-input multi-output FIR system.
struct FirDims {
  int n_u;  ///< number of inputs
  int n_y;  ///< number of outputs
  int m;    ///< regressor length per input channel

  FirDims(int n_u_, int n_y_, int m_) : n_u(n_u_), n_y(n_y_), m(m_) {
    if (n_u < 1 || n_y < 1 || m < 1) {
      throw std::invalid_argument("FirDims: all dimensions must be >= 1");
    }
  }

  int regressor_len() const { return n_u * m; }
  int coeff_count() const { return n_y * n_u * m; }
};

/// Regressor vector: past inputs grouped by channel, newest first,
/// [u_1(t-1)..u_1(t-m), ..., u_{n_u}(t-1)..u_{n_u}(t-m)].
using Regressor = Vec;

/// Impulse-response coefficient matrix, n_y x (n_u*m).
struct FirModel {
  Mat h;

  FirModel() = default;
  explicit FirModel(Mat h_) : h(std::move(h_)) {}

  int n_y() const { return static_cast<int>(h.rows()); }
  int regressor_len() const { return static_cast<int>(h.cols()); }
};

/// Shift operators acting on the regressor: phi' = W phi + Z u.
struct ShiftOperators {
  Mat w_op;  ///< (n_u*m) x (n_u*m), block-diagonal subdiagonal shifts
  Mat z_op;  ///< (n_u*m) x n_u, block-diagonal unit columns
};

inline ShiftOperators build_shift_operators(const FirDims& dims) {
  const int nm = dims.regressor_len();
  ShiftOperators ops;
  ops.w_op = Mat::Zero(nm, nm);
  ops.z_op = Mat::Zero(nm, dims.n_u);
  for (int i = 0; i < dims.n_u; ++i) {
    const int off = i * dims.m;
    for (int k = 1; k < dims.m; ++k) {
      ops.w_op(off + k, off + k - 1) = 1.0;
    }
    ops.z_op(off, i) = 1.0;
  }
  return ops;
}

/// Shift each channel block by one and insert the new input at the front.
inline Regressor advance_regressor(const Regressor& phi, const Vec& u,
                                   const FirDims& dims) {
  if (phi.size() != dims.regressor_len()) {
    throw std::invalid_argument("advance_regressor: phi length mismatch");
  }
  if (u.size() != dims.n_u) {
    throw std::invalid_argument("advance_regressor: input length mismatch");
  }
  Regressor out(phi.size());
  for (int i = 0; i < dims.n_u; ++i) {
    const int off = i * dims.m;
    out(off) = u(i);
    for (int k = 1; k < dims.m; ++k) {
      out(off + k) = phi(off + k - 1);
    }
  }
  return out;
}

/// y = H * phi + w.
inline Vec simulate_output(const FirModel& model, const Regressor& phi,
                           const Vec& w) {
  if (model.h.cols() != phi.size()) {
    throw std::invalid_argument("simulate_output: phi length mismatch");
  }
  if (model.h.rows() != w.size()) {
    throw std::invalid_argument("simulate_output: disturbance length mismatch");
  }
  return model.h * phi + w;
}

/// Fixed point of phi = W phi + Z u: each channel block is m copies of u_i.
inline Regressor steady_state_regressor(const Vec& u, const FirDims& dims) {
  if (u.size() != dims.n_u) {
    throw std::invalid_argument("steady_state_regressor: input length mismatch");
  }
  Regressor phi(dims.regressor_len());
  for (int i = 0; i < dims.n_u; ++i) {
    phi.segment(i * dims.m, dims.m).setConstant(u(i));
  }
  return phi;
}

}  // namespace asmpc

#endif  // ASMPC_FIR_HPP
