#ifndef ASMPC_POLYTOPE_HPP
#define ASMPC_POLYTOPE_HPP

#include <Eigen/Dense>

#include <functional>
#include <stdexcept>
#include <vector>

#include "asmpc/solver.hpp"

namespace asmpc {

struct GeometryError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct PolytopeOptions {
  double rank_tol = 1e-8;
  double dup_tol = 1e-8;
  double feas_tol = 1e-6;
  int max_vertex_dim = 6;  // combinatorial enumeration cutoff
};

/// Halfspace-representation polytope {x : a_mat x <= b_vec}.
/// Immutable value type; cuts return a new polytope.
class HPolytope {
 public:
  HPolytope(Mat a, Vec b) : a_mat_(std::move(a)), b_vec_(std::move(b)) {
    if (a_mat_.rows() != b_vec_.size()) {
      throw std::invalid_argument("HPolytope: row count mismatch");
    }
    if (a_mat_.cols() < 1) {
      throw std::invalid_argument("HPolytope: dimension must be >= 1");
    }
    for (int i = 0; i < a_mat_.rows(); ++i) {
      check_row(a_mat_.row(i), b_vec_(i));
    }
  }

  /// Axis-aligned box given per-coordinate half-widths (centered at 0).
  static HPolytope box(const Vec& half_widths) {
    return box(Vec::Zero(half_widths.size()), half_widths);
  }

  static HPolytope box(const Vec& center, const Vec& half_widths) {
    const int d = static_cast<int>(half_widths.size());
    Mat a(2 * d, d);
    Vec b(2 * d);
    a.setZero();
    for (int i = 0; i < d; ++i) {
      a(2 * i, i) = 1.0;
      b(2 * i) = center(i) + half_widths(i);
      a(2 * i + 1, i) = -1.0;
      b(2 * i + 1) = -center(i) + half_widths(i);
    }
    return HPolytope(std::move(a), std::move(b));
  }

  const Mat& a_mat() const { return a_mat_; }
  const Vec& b_vec() const { return b_vec_; }
  int dim() const { return static_cast<int>(a_mat_.cols()); }
  int rows() const { return static_cast<int>(a_mat_.rows()); }

 private:
  static void check_row(const Eigen::RowVectorXd& a, double b) {
    if (a.lpNorm<Eigen::Infinity>() == 0.0) {
      if (b < 0.0) {
        throw std::invalid_argument("HPolytope: trivially infeasible row");
      }
      throw std::invalid_argument("HPolytope: zero normal vector");
    }
  }

  friend HPolytope add_halfspace(const HPolytope&, const Vec&, double);

  Mat a_mat_;
  Vec b_vec_;
};

using VertexSet = std::vector<Vec>;

inline HPolytope add_halfspace(const HPolytope& p, const Vec& a, double b) {
  if (a.size() != p.dim()) {
    throw std::invalid_argument("add_halfspace: dimension mismatch");
  }
  HPolytope::check_row(a.transpose(), b);
  Mat a2(p.rows() + 1, p.dim());
  a2.topRows(p.rows()) = p.a_mat();
  a2.row(p.rows()) = a.transpose();
  Vec b2(p.rows() + 1);
  b2.head(p.rows()) = p.b_vec();
  b2(p.rows()) = b;
  return HPolytope(std::move(a2), std::move(b2));
}

inline bool contains(const HPolytope& p, const Vec& x, double tol) {
  if (x.size() != p.dim()) {
    throw std::invalid_argument("contains: dimension mismatch");
  }
  return ((p.a_mat() * x - p.b_vec()).array() <= tol).all();
}

/// Largest inscribed ball: maximize r s.t. a_i'c + r||a_i|| <= b_i.
inline std::pair<Vec, double> chebyshev_center(const HPolytope& p) {
  const int d = p.dim();
  const int k = p.rows();
  LpProblem lp;
  lp.c = Vec::Zero(d + 1);
  lp.c(d) = -1.0;  // maximize r
  lp.g_ineq = Mat(k + 1, d + 1);
  lp.h_ineq = Vec(k + 1);
  for (int i = 0; i < k; ++i) {
    lp.g_ineq.block(i, 0, 1, d) = p.a_mat().row(i);
    lp.g_ineq(i, d) = p.a_mat().row(i).norm();
    lp.h_ineq(i) = p.b_vec()(i);
  }
  lp.g_ineq.row(k).setZero();
  lp.g_ineq(k, d) = -1.0;  // r >= 0
  lp.h_ineq(k) = 0.0;
  SolveReport r = solve_lp(lp);
  if (r.status == SolveStatus::infeasible) {
    throw GeometryError("chebyshev_center: empty polytope");
  }
  if (r.status == SolveStatus::unbounded) {
    throw GeometryError("chebyshev_center: unbounded polytope");
  }
  if (r.status != SolveStatus::optimal) {
    throw GeometryError("chebyshev_center: LP failure");
  }
  return {r.x.segment(0, d), r.x(d)};
}

/// Per-row LP redundancy test: row i is redundant when max a_i'x over the
/// remaining rows stays below b_i.  Removal is sequential so the kept rows
/// are jointly irredundant.
inline HPolytope remove_redundant(const HPolytope& p,
                                  const PolytopeOptions& opt = {}) {
  const int d = p.dim();
  std::vector<int> kept;
  for (int i = 0; i < p.rows(); ++i) kept.push_back(i);

  // Feasibility check up front.
  {
    LpProblem lp;
    lp.c = Vec::Zero(d);
    lp.g_ineq = p.a_mat();
    lp.h_ineq = p.b_vec();
    SolveReport r = solve_lp(lp);
    if (r.status == SolveStatus::infeasible) {
      throw GeometryError("remove_redundant: empty polytope");
    }
  }

  for (size_t pos = 0; pos < kept.size();) {
    const int i = kept[pos];
    LpProblem lp;
    lp.c = -p.a_mat().row(i).transpose();  // maximize a_i'x
    lp.g_ineq = Mat(kept.size(), d);
    lp.h_ineq = Vec(kept.size());
    for (size_t k = 0; k < kept.size(); ++k) {
      lp.g_ineq.row(k) = p.a_mat().row(kept[k]);
      // Relax the row under test so the LP stays bounded on its facet.
      lp.h_ineq(k) = p.b_vec()(kept[k]) + (kept[k] == i ? 1.0 : 0.0);
    }
    SolveReport r = solve_lp(lp);
    bool redundant = false;
    if (r.status == SolveStatus::optimal) {
      redundant = (-r.objective <= p.b_vec()(i) + opt.feas_tol);
    } else if (r.status == SolveStatus::unbounded) {
      redundant = false;
    } else {
      throw GeometryError("remove_redundant: LP failure");
    }
    if (redundant) {
      kept.erase(kept.begin() + pos);
    } else {
      ++pos;
    }
  }

  Mat a2(kept.size(), d);
  Vec b2(kept.size());
  for (size_t k = 0; k < kept.size(); ++k) {
    a2.row(k) = p.a_mat().row(kept[k]);
    b2(k) = p.b_vec()(kept[k]);
  }
  return HPolytope(std::move(a2), std::move(b2));
}

namespace detail {

inline void combinations(int n, int k, const std::function<void(const std::vector<int>&)>& fn) {
  std::vector<int> idx(k);
  for (int i = 0; i < k; ++i) idx[i] = i;
  while (true) {
    fn(idx);
    int i = k - 1;
    while (i >= 0 && idx[i] == n - k + i) --i;
    if (i < 0) return;
    ++idx[i];
    for (int j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
  }
}

}  // namespace detail

/// Combinatorial vertex enumeration over active-set d-tuples.
inline VertexSet enumerate_vertices(const HPolytope& p,
                                    const PolytopeOptions& opt = {}) {
  const int d = p.dim();
  const int k = p.rows();
  if (d > opt.max_vertex_dim) {
    throw GeometryError("enumerate_vertices: dimension above enumeration cutoff");
  }
  if (k < d) {
    throw GeometryError("enumerate_vertices: unbounded polytope");
  }

  // Boundedness and emptiness via coordinate-range LPs.
  for (int j = 0; j < d; ++j) {
    for (double sgn : {1.0, -1.0}) {
      LpProblem lp;
      lp.c = Vec::Zero(d);
      lp.c(j) = sgn;
      lp.g_ineq = p.a_mat();
      lp.h_ineq = p.b_vec();
      SolveReport r = solve_lp(lp);
      if (r.status == SolveStatus::infeasible) {
        throw GeometryError("enumerate_vertices: empty polytope");
      }
      if (r.status == SolveStatus::unbounded) {
        throw GeometryError("enumerate_vertices: unbounded polytope");
      }
      if (r.status != SolveStatus::optimal) {
        throw GeometryError("enumerate_vertices: LP failure");
      }
    }
  }

  VertexSet verts;
  Mat sub(d, d);
  Vec rhs(d);
  detail::combinations(k, d, [&](const std::vector<int>& idx) {
    for (int j = 0; j < d; ++j) {
      sub.row(j) = p.a_mat().row(idx[j]);
      rhs(j) = p.b_vec()(idx[j]);
    }
    Eigen::FullPivLU<Mat> lu(sub);
    lu.setThreshold(opt.rank_tol);
    if (lu.rank() < d) return;
    Vec v = lu.solve(rhs);
    if (!contains(p, v, opt.feas_tol)) return;
    for (const Vec& w : verts) {
      if ((w - v).norm() <= opt.dup_tol) return;
    }
    verts.push_back(v);
  });
  return verts;
}

}  // namespace asmpc

#endif  // ASMPC_POLYTOPE_HPP
