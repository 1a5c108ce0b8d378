#ifndef ASMPC_FPS_HPP
#define ASMPC_FPS_HPP

#include <cmath>
#include <stdexcept>
#include <vector>

#include "asmpc/fir.hpp"
#include "asmpc/polytope.hpp"

namespace asmpc {

struct ModelInconsistency : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Prior bounds on the FIR coefficients:
/// |h_{j,(i,k)} - center_{(i,k)}| <= L * rho^(k-1).  A zero center gives the
/// plain magnitude/decay box.
struct FpsInitSpec {
  double magnitude;  ///< L > 0
  double decay;      ///< rho in (0, 1]
  Vec center;        ///< length n_u*m, empty means origin

  FpsInitSpec(double l, double rho, Vec c = Vec())
      : magnitude(l), decay(rho), center(std::move(c)) {
    if (l <= 0.0 || rho <= 0.0 || rho > 1.0) {
      throw std::invalid_argument("FpsInitSpec: need L > 0 and rho in (0,1]");
    }
  }
};

/// Feasible parameter set, factored per output row of H.  Each row polytope
/// lives in R^{n_u*m}; the full set is their product.
class FeasibleParamSet {
 public:
  FeasibleParamSet(std::vector<HPolytope> rows, Vec w_bar)
      : rows_(std::move(rows)), w_bar_(std::move(w_bar)) {
    if (rows_.size() != static_cast<size_t>(w_bar_.size())) {
      throw std::invalid_argument("FeasibleParamSet: row/bound count mismatch");
    }
    if ((w_bar_.array() <= 0.0).any()) {
      throw std::invalid_argument("FeasibleParamSet: w_bar must be > 0");
    }
  }

  const std::vector<HPolytope>& rows() const { return rows_; }
  const HPolytope& row(int j) const { return rows_.at(j); }
  const Vec& w_bar() const { return w_bar_; }
  int n_y() const { return static_cast<int>(rows_.size()); }
  int dim() const { return rows_.front().dim(); }

 private:
  std::vector<HPolytope> rows_;
  Vec w_bar_;
};

inline FeasibleParamSet init_fps(const FpsInitSpec& spec, const FirDims& dims,
                                 const Vec& w_bar) {
  const int nm = dims.regressor_len();
  Vec half(nm);
  for (int i = 0; i < dims.n_u; ++i) {
    for (int k = 0; k < dims.m; ++k) {
      half(i * dims.m + k) = spec.magnitude * std::pow(spec.decay, k);
    }
  }
  Vec center = spec.center.size() == 0 ? Vec(Vec::Zero(nm)) : spec.center;
  if (center.size() != nm) {
    throw std::invalid_argument("init_fps: center length mismatch");
  }
  std::vector<HPolytope> rows(dims.n_y, HPolytope::box(center, half));
  return FeasibleParamSet(std::move(rows), w_bar);
}

/// Set-membership update: two cuts per output row,
///   phi'h_j <= y_j + wbar_j  and  -phi'h_j <= -y_j + wbar_j,
/// followed by redundancy removal.  Uninformative (zero) regressors leave
/// the set unchanged but still get a consistency check.
inline FeasibleParamSet update_fps(const FeasibleParamSet& fps,
                                   const Regressor& phi, const Vec& y,
                                   const PolytopeOptions& opt = {}) {
  if (phi.size() != fps.dim() || y.size() != fps.n_y()) {
    throw std::invalid_argument("update_fps: dimension mismatch");
  }
  std::vector<HPolytope> rows;
  rows.reserve(fps.n_y());
  const bool zero_phi = phi.lpNorm<Eigen::Infinity>() == 0.0;
  for (int j = 0; j < fps.n_y(); ++j) {
    if (zero_phi) {
      if (std::abs(y(j)) > fps.w_bar()(j) + opt.feas_tol) {
        throw ModelInconsistency("update_fps: measurement outside disturbance bound");
      }
      rows.push_back(fps.row(j));
      continue;
    }
    HPolytope cut = add_halfspace(fps.row(j), phi, y(j) + fps.w_bar()(j));
    cut = add_halfspace(cut, -phi, -y(j) + fps.w_bar()(j));
    try {
      rows.push_back(remove_redundant(cut, opt));
    } catch (const GeometryError&) {
      throw ModelInconsistency("update_fps: empty intersection");
    }
  }
  return FeasibleParamSet(std::move(rows), fps.w_bar());
}

inline bool fps_contains(const FeasibleParamSet& fps, const FirModel& model,
                         double tol) {
  for (int j = 0; j < fps.n_y(); ++j) {
    if (!contains(fps.row(j), model.h.row(j).transpose(), tol)) return false;
  }
  return true;
}

/// Vertices of the product set assembled into full coefficient matrices
/// (Cartesian product of the per-row vertex sets).
inline std::vector<FirModel> fps_vertices(const FeasibleParamSet& fps,
                                          const PolytopeOptions& opt = {}) {
  std::vector<VertexSet> per_row;
  per_row.reserve(fps.n_y());
  for (int j = 0; j < fps.n_y(); ++j) {
    per_row.push_back(enumerate_vertices(fps.row(j), opt));
  }
  std::vector<FirModel> out;
  std::vector<size_t> idx(fps.n_y(), 0);
  const int d = fps.dim();
  while (true) {
    Mat h(fps.n_y(), d);
    for (int j = 0; j < fps.n_y(); ++j) {
      h.row(j) = per_row[j][idx[j]].transpose();
    }
    out.emplace_back(std::move(h));
    int j = fps.n_y() - 1;
    while (j >= 0 && ++idx[j] == per_row[j].size()) {
      idx[j] = 0;
      --j;
    }
    if (j < 0) break;
  }
  return out;
}

}  // namespace asmpc

#endif  // ASMPC_FPS_HPP
