#ifndef ASMPC_SOLVER_HPP
#define ASMPC_SOLVER_HPP

#include <Eigen/Dense>

#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "asmpc/fir.hpp"

namespace asmpc {

enum class SolveStatus { optimal, infeasible, unbounded, failure };

inline const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::optimal: return "optimal";
    case SolveStatus::infeasible: return "infeasible";
    case SolveStatus::unbounded: return "unbounded";
    case SolveStatus::failure: return "failure";
  }
  return "?";
}

struct SolveReport {
  SolveStatus status = SolveStatus::failure;
  Vec x;
  double objective = std::numeric_limits<double>::quiet_NaN();
  double dual_bound = -std::numeric_limits<double>::infinity();
  double max_primal_residual = std::numeric_limits<double>::infinity();
  double max_dual_residual = std::numeric_limits<double>::infinity();
  int iterations = 0;
  Vec dual_ineq;  // multipliers for inequality rows (>= 0 at optimum)
  Vec dual_eq;    // multipliers for equality rows
};

/// min c'x  s.t.  g_ineq x <= h_ineq,  a_eq x = b_eq,  x free.
struct LpProblem {
  Vec c;
  Mat g_ineq;  // may have zero rows
  Vec h_ineq;
  Mat a_eq;  // may have zero rows
  Vec b_eq;
};

/// min 1/2 x'P x + q'x  s.t.  g_ineq x <= h_ineq,  a_eq x = b_eq.
struct QpProblem {
  Mat p;
  Vec q;
  Mat g_ineq;
  Vec h_ineq;
  Mat a_eq;
  Vec b_eq;
  std::optional<Vec> warm_start;  // feasible point hint, used when valid
};

/// Second-order cone row  ||a x + b||_2 <= c'x + d.
struct ConeRow {
  Mat a;
  Vec b;
  Vec c;
  double d = 0.0;
};

struct SolverOptions {
  double feas_tol = 1e-6;
  double opt_tol = 1e-8;
  // Stationarity check floor.  Degenerate working sets (near-duplicate
  // active rows) leave a small dual residual even at the optimizer, so the
  // dual guard is looser than the primal one.
  double dual_tol = 1e-4;
  int qp_max_iter = 500;
  int soc_max_outer = 100;
};

namespace detail {

// Dense two-phase tableau simplex on standard form.  Free variables are
// split, every row receives an artificial so the initial basis is trivial
// and duals can be read off the artificial columns afterwards.  Pivot rule
// is most-negative reduced cost with lowest-index ties, switching to
// Bland's rule after a fixed iteration budget to preclude cycling.
class Simplex {
 public:
  SolveReport minimize(const LpProblem& lp) {
    const int n = static_cast<int>(lp.c.size());
    const int mi = static_cast<int>(lp.g_ineq.rows());
    const int me = static_cast<int>(lp.a_eq.rows());
    const int m = mi + me;
    SolveReport rep;

    if (m == 0) {
      rep.x = Vec::Zero(n);
      if (lp.c.lpNorm<Eigen::Infinity>() > 0) {
        rep.status = SolveStatus::unbounded;
      } else {
        rep.status = SolveStatus::optimal;
        rep.objective = 0.0;
        rep.dual_bound = 0.0;
        rep.max_primal_residual = 0.0;
        rep.max_dual_residual = 0.0;
      }
      return rep;
    }

    // Columns: x+ (n), x- (n), slacks (mi), artificials (m).
    const int col_slack = 2 * n;
    const int col_art = 2 * n + mi;
    const int ncols = col_art + m;

    Mat tab = Mat::Zero(m, ncols + 1);
    std::vector<double> row_sign(m, 1.0);
    for (int i = 0; i < m; ++i) {
      Vec a;
      double rhs;
      if (i < mi) {
        a = lp.g_ineq.row(i).transpose();
        rhs = lp.h_ineq(i);
      } else {
        a = lp.a_eq.row(i - mi).transpose();
        rhs = lp.b_eq(i - mi);
      }
      double s = (rhs < 0) ? -1.0 : 1.0;
      row_sign[i] = s;
      tab.block(i, 0, 1, n) = s * a.transpose();
      tab.block(i, n, 1, n) = -s * a.transpose();
      if (i < mi) tab(i, col_slack + i) = s;
      tab(i, col_art + i) = 1.0;
      tab(i, ncols) = s * rhs;
    }

    basis_.assign(m, 0);
    for (int i = 0; i < m; ++i) basis_[i] = col_art + i;
    tab0_ = tab;

    // Phase I: minimize sum of artificials.
    Vec cost1 = Vec::Zero(ncols);
    cost1.segment(col_art, m).setOnes();
    int it1 = run(tab, cost1, col_art, ncols, /*allow_art=*/false);
    rep.iterations = it1;
    if (it1 < 0) {
      rep.status = SolveStatus::failure;
      return rep;
    }
    double phase1 = 0.0;
    for (int i = 0; i < m; ++i) {
      if (basis_[i] >= col_art) phase1 += tab(i, ncols);
    }
    if (phase1 > 1e-7) {
      rep.status = SolveStatus::infeasible;
      rep.iterations = it1;
      return rep;
    }
    // Pivot remaining artificials out of the basis where possible.
    for (int i = 0; i < m; ++i) {
      if (basis_[i] < col_art) continue;
      int enter = -1;
      for (int j = 0; j < col_art; ++j) {
        if (std::abs(tab(i, j)) > 1e-9) { enter = j; break; }
      }
      if (enter >= 0) pivot(tab, i, enter, ncols);
      // else: redundant row, the artificial stays basic at zero and is
      // barred from re-entering.
    }

    // Phase II.
    Vec cost2 = Vec::Zero(ncols);
    cost2.segment(0, n) = lp.c;
    cost2.segment(n, n) = -lp.c;
    int it2 = run(tab, cost2, col_art, ncols, /*allow_art=*/false);
    if (it2 == INT_UNBOUNDED) {
      rep.status = SolveStatus::unbounded;
      rep.iterations = it1;
      return rep;
    }
    if (it2 < 0) {
      rep.status = SolveStatus::failure;
      rep.iterations = it1;
      return rep;
    }
    rep.iterations = it1 + it2;

    Vec z = Vec::Zero(ncols);
    for (int i = 0; i < m; ++i) z(basis_[i]) = tab(i, ncols);
    rep.x = z.segment(0, n) - z.segment(n, n);
    rep.objective = lp.c.dot(rep.x);

    // Duals from the reduced costs of the artificial columns:
    // redcost(art_i) = -y_i on the sign-normalized row.
    Vec red = reduced_costs(tab, cost2, ncols);
    Vec y(m);
    for (int i = 0; i < m; ++i) y(i) = -red(col_art + i) * row_sign[i];
    // Multipliers in the KKT convention c + G'lam + A'nu = 0.
    rep.dual_ineq = -y.segment(0, mi);  // >= 0 for <= rows at optimum
    rep.dual_eq = -y.segment(mi, me);
    double db = 0.0;
    if (mi > 0) db -= rep.dual_ineq.dot(lp.h_ineq);
    if (me > 0) db -= rep.dual_eq.dot(lp.b_eq);
    rep.dual_bound = db;

    double pr = 0.0;
    if (mi > 0) pr = std::max(pr, (lp.g_ineq * rep.x - lp.h_ineq).maxCoeff());
    if (me > 0)
      pr = std::max(pr, (lp.a_eq * rep.x - lp.b_eq).lpNorm<Eigen::Infinity>());
    rep.max_primal_residual = std::max(0.0, pr);
    Vec grad = lp.c;
    if (mi > 0) grad += lp.g_ineq.transpose() * rep.dual_ineq;
    if (me > 0) grad += lp.a_eq.transpose() * rep.dual_eq;
    rep.max_dual_residual = grad.lpNorm<Eigen::Infinity>();
    rep.status = SolveStatus::optimal;
    return rep;
  }

 private:
  static constexpr int INT_UNBOUNDED = std::numeric_limits<int>::min();
  std::vector<int> basis_;
  Mat tab0_;  // initial tableau, kept for reinversion

  // Rebuild the tableau from the original data and the current basis to
  // shed the roundoff accumulated by successive pivots.
  void refactorize(Mat& tab) const {
    const int m = static_cast<int>(tab.rows());
    Mat b(m, m);
    for (int i = 0; i < m; ++i) b.col(i) = tab0_.col(basis_[i]);
    tab = b.partialPivLu().solve(tab0_);
  }

  Vec reduced_costs(const Mat& tab, const Vec& cost, int ncols) const {
    const int m = static_cast<int>(tab.rows());
    Vec cb(m);
    for (int i = 0; i < m; ++i) cb(i) = cost(basis_[i]);
    Vec red = cost - tab.leftCols(ncols).transpose() * cb;
    return red;
  }

  void pivot(Mat& tab, int row, int col, int ncols) {
    tab.row(row) /= tab(row, col);
    for (int i = 0; i < tab.rows(); ++i) {
      if (i == row) continue;
      double f = tab(i, col);
      if (f != 0.0) tab.row(i) -= f * tab.row(row);
    }
    basis_[row] = col;
  }

  // Returns iteration count, INT_UNBOUNDED on unboundedness, -1 on
  // iteration-cap failure.
  int run(Mat& tab, const Vec& cost, int col_art, int ncols, bool allow_art) {
    const int m = static_cast<int>(tab.rows());
    const int cap = 200 + 25 * (m + ncols);
    const int bland_after = 100 + 5 * (m + ncols);
    bool polished = false;
    for (int it = 0; it < cap; ++it) {
      if (it > 0 && it % 40 == 0 && !polished) {
        refactorize(tab);
        polished = true;
      }
      Vec red = reduced_costs(tab, cost, ncols);
      int enter = -1;
      if (it < bland_after) {
        double best = -1e-9;
        for (int j = 0; j < ncols; ++j) {
          if (!allow_art && j >= col_art) continue;
          if (red(j) < best) { best = red(j); enter = j; }
        }
      } else {
        for (int j = 0; j < ncols; ++j) {
          if (!allow_art && j >= col_art) continue;
          if (red(j) < -1e-9) { enter = j; break; }
        }
      }
      if (enter < 0) {
        // Re-derive the tableau from original data before accepting the
        // basis, then re-test optimality on the clean numbers.
        if (!polished) {
          refactorize(tab);
          polished = true;
          --it;
          continue;
        }
        return it;
      }
      polished = false;

      int leave = -1;
      double best_ratio = std::numeric_limits<double>::infinity();
      for (int i = 0; i < m; ++i) {
        double a = tab(i, enter);
        if (a > 1e-10) {
          double ratio = tab(i, ncols) / a;
          if (ratio < best_ratio - 1e-12 ||
              (ratio < best_ratio + 1e-12 &&
               (leave < 0 || basis_[i] < basis_[leave]))) {
            best_ratio = ratio;
            leave = i;
          }
        }
      }
      if (leave < 0) return INT_UNBOUNDED;
      pivot(tab, leave, enter, ncols);
    }
    return -1;
  }
};

}  // namespace detail

inline SolveReport solve_lp(const LpProblem& lp) {
  detail::Simplex s;
  return s.minimize(lp);
}

namespace detail {

inline double qp_objective(const QpProblem& qp, const Vec& x) {
  return 0.5 * x.dot(qp.p * x) + qp.q.dot(x);
}

inline double qp_primal_residual(const QpProblem& qp, const Vec& x) {
  double pr = 0.0;
  if (qp.g_ineq.rows() > 0)
    pr = std::max(pr, (qp.g_ineq * x - qp.h_ineq).maxCoeff());
  if (qp.a_eq.rows() > 0)
    pr = std::max(pr, (qp.a_eq * x - qp.b_eq).lpNorm<Eigen::Infinity>());
  return std::max(0.0, pr);
}

// Phase-I LP: min t s.t. Gx - t <= h, Ax = b, t >= 0.
inline std::optional<Vec> qp_feasible_point(const QpProblem& qp,
                                            const SolverOptions& opt) {
  const int n = static_cast<int>(qp.q.size());
  const int mi = static_cast<int>(qp.g_ineq.rows());
  LpProblem lp;
  lp.c = Vec::Zero(n + 1);
  lp.c(n) = 1.0;
  lp.g_ineq = Mat::Zero(mi + 1, n + 1);
  lp.h_ineq = Vec::Zero(mi + 1);
  if (mi > 0) {
    lp.g_ineq.block(0, 0, mi, n) = qp.g_ineq;
    lp.g_ineq.block(0, n, mi, 1).setConstant(-1.0);
    lp.h_ineq.segment(0, mi) = qp.h_ineq;
  }
  lp.g_ineq(mi, n) = -1.0;  // t >= 0
  lp.h_ineq(mi) = 0.0;
  lp.a_eq = Mat::Zero(qp.a_eq.rows(), n + 1);
  if (qp.a_eq.rows() > 0) lp.a_eq.block(0, 0, qp.a_eq.rows(), n) = qp.a_eq;
  lp.b_eq = qp.b_eq;
  SolveReport r = solve_lp(lp);
  if (r.status != SolveStatus::optimal || r.objective > opt.feas_tol) {
    return std::nullopt;
  }
  return r.x.segment(0, n);
}

}  // namespace detail

/// Primal active-set method for strictly convex QPs.  Equality rows stay in
/// the working set permanently; inequality rows enter and leave with
/// lowest-index tie breaking for determinism.
inline SolveReport solve_qp(const QpProblem& qp_in, SolverOptions opt = {}) {
  QpProblem qp = qp_in;
  const int n = static_cast<int>(qp.q.size());
  const int mi = static_cast<int>(qp.g_ineq.rows());
  SolveReport rep;

  Vec x;
  if (qp.warm_start && qp.warm_start->size() == n &&
      detail::qp_primal_residual(qp, *qp.warm_start) <= opt.feas_tol) {
    x = *qp.warm_start;
  } else {
    auto x0 = detail::qp_feasible_point(qp, opt);
    if (!x0) {
      rep.status = SolveStatus::infeasible;
      return rep;
    }
    x = *x0;
  }

  // Drop equality rows that do not increase rank; feasibility of the full
  // system was already certified, so dependent rows are consistent.
  if (qp.a_eq.rows() > 0) {
    std::vector<int> eq_keep;
    Mat stacked(qp.a_eq.rows(), n);
    for (int i = 0; i < qp.a_eq.rows(); ++i) {
      stacked.row(eq_keep.size()) = qp.a_eq.row(i);
      Eigen::ColPivHouseholderQR<Mat> qr(
          stacked.topRows(eq_keep.size() + 1).transpose());
      if (qr.rank() == static_cast<int>(eq_keep.size()) + 1) eq_keep.push_back(i);
    }
    Mat a2(eq_keep.size(), n);
    Vec b2(eq_keep.size());
    for (size_t k = 0; k < eq_keep.size(); ++k) {
      a2.row(k) = qp.a_eq.row(eq_keep[k]);
      b2(k) = qp.b_eq(eq_keep[k]);
    }
    qp.a_eq = std::move(a2);
    qp.b_eq = std::move(b2);
  }
  const int me = static_cast<int>(qp.a_eq.rows());

  Mat reg = qp.p;
  {
    // Ridge keeps the reduced Hessian invertible for semidefinite costs.
    double scale = std::max(1.0, qp.p.cwiseAbs().maxCoeff());
    reg += 1e-10 * scale * Mat::Identity(n, n);
  }

  std::vector<int> work;  // active inequality indices, sorted
  const double act_tol = 1e-8;
  for (int i = 0; i < mi; ++i) {
    if (std::abs(qp.g_ineq.row(i).dot(x) - qp.h_ineq(i)) <= act_tol) {
      work.push_back(i);
    }
  }

  auto working_matrix = [&](const std::vector<int>& w) {
    Mat c(me + w.size(), n);
    for (int i = 0; i < me; ++i) c.row(i) = qp.a_eq.row(i);
    for (size_t k = 0; k < w.size(); ++k) c.row(me + k) = qp.g_ineq.row(w[k]);
    return c;
  };

  // Drop dependent rows from the initial active set.
  {
    std::vector<int> keep;
    for (int idx : work) {
      std::vector<int> trial = keep;
      trial.push_back(idx);
      Mat c = working_matrix(trial);
      Eigen::ColPivHouseholderQR<Mat> qr(c.transpose());
      if (qr.rank() == me + static_cast<int>(trial.size())) keep = trial;
    }
    work = keep;
  }

  int iter = 0;
  for (; iter < opt.qp_max_iter; ++iter) {
    Mat c_work = working_matrix(work);
    const int mw = static_cast<int>(c_work.rows());
    Vec grad = qp.p * x + qp.q;

    Vec p_step;
    if (mw == 0) {
      p_step = reg.ldlt().solve(-grad);
    } else {
      Eigen::HouseholderQR<Mat> qr(c_work.transpose());
      Mat qfull = qr.householderQ();
      Mat z = qfull.rightCols(n - mw);
      if (z.cols() == 0) {
        p_step = Vec::Zero(n);
      } else {
        Mat hr = z.transpose() * reg * z;
        p_step = z * hr.ldlt().solve(-(z.transpose() * grad));
      }
    }

    if (p_step.lpNorm<Eigen::Infinity>() <= 1e-10 * (1.0 + x.norm())) {
      // Stationary on the working set; check multipliers.
      Vec lam;
      if (mw > 0) {
        lam = (c_work.transpose())
                  .completeOrthogonalDecomposition()
                  .solve(-grad);
      } else {
        lam = Vec();
      }
      int drop = -1;
      double most_neg = -opt.feas_tol;
      for (size_t k = 0; k < work.size(); ++k) {
        double v = lam(me + k);
        if (v < most_neg) { most_neg = v; drop = static_cast<int>(k); }
      }
      if (drop < 0) {
        rep.status = SolveStatus::optimal;
        rep.x = x;
        rep.objective = detail::qp_objective(qp, x);
        rep.iterations = iter + 1;
        rep.dual_ineq = Vec::Zero(mi);
        for (size_t k = 0; k < work.size(); ++k)
          rep.dual_ineq(work[k]) = std::max(0.0, lam(me + k));
        rep.dual_eq = (me > 0) ? Vec(lam.segment(0, me)) : Vec();
        rep.max_primal_residual = detail::qp_primal_residual(qp, x);
        Vec kkt = grad;
        if (mi > 0) kkt += qp.g_ineq.transpose() * rep.dual_ineq;
        if (me > 0) kkt += qp.a_eq.transpose() * rep.dual_eq;
        rep.max_dual_residual = kkt.lpNorm<Eigen::Infinity>();
        // Lagrangian dual value at the returned multipliers.
        Vec lin = qp.q;
        if (mi > 0) lin += qp.g_ineq.transpose() * rep.dual_ineq;
        if (me > 0) lin += qp.a_eq.transpose() * rep.dual_eq;
        Vec xin = reg.ldlt().solve(lin);
        double db = -0.5 * xin.dot(reg * xin);
        if (mi > 0) db -= rep.dual_ineq.dot(qp.h_ineq);
        if (me > 0) db -= rep.dual_eq.dot(qp.b_eq);
        rep.dual_bound = db;
        // Relative scale for the stationarity check: the residual is a
        // difference of these terms, so measure it against their size.
        Vec aty = qp.q - lin;  // -(G'lam + A'nu)
        const double kkt_scale =
            1.0 + qp.q.lpNorm<Eigen::Infinity>() +
            (qp.p * x).lpNorm<Eigen::Infinity>() +
            aty.lpNorm<Eigen::Infinity>();
        if (rep.max_primal_residual > opt.feas_tol ||
            rep.max_dual_residual >
                std::max(opt.dual_tol, opt.feas_tol * kkt_scale)) {
          rep.status = SolveStatus::failure;
        }
        return rep;
      }
      work.erase(work.begin() + drop);
      continue;
    }

    // Line search to the nearest blocking constraint.
    double alpha = 1.0;
    int blocker = -1;
    for (int i = 0; i < mi; ++i) {
      bool in_work = false;
      for (int w : work) {
        if (w == i) { in_work = true; break; }
      }
      if (in_work) continue;
      double d = qp.g_ineq.row(i).dot(p_step);
      if (d > 1e-12) {
        double a = (qp.h_ineq(i) - qp.g_ineq.row(i).dot(x)) / d;
        if (a < alpha - 1e-14) { alpha = a; blocker = i; }
      }
    }
    alpha = std::max(alpha, 0.0);
    x += alpha * p_step;
    if (blocker >= 0 && me + static_cast<int>(work.size()) < n) {
      // A positive directional derivative along p (which lies in the null
      // space of the working rows) certifies the blocker is independent of
      // the working set, so it can be added without a rank check.
      work.insert(std::lower_bound(work.begin(), work.end(), blocker),
                  blocker);
    }
  }

  rep.status = SolveStatus::failure;
  rep.x = x;
  rep.iterations = iter;
  return rep;
}

/// Strictly convex QP with second-order cone rows, solved by outer
/// linearization: violated cone rows contribute supporting-hyperplane cuts
/// until all cone residuals clear the tolerance.
inline SolveReport solve_qp_soc(const QpProblem& qp,
                                const std::vector<ConeRow>& cones,
                                SolverOptions opt = {}) {
  const int n = static_cast<int>(qp.q.size());
  QpProblem cur = qp;
  SolveReport rep;
  for (int outer = 0; outer < opt.soc_max_outer; ++outer) {
    rep = solve_qp(cur, opt);
    if (rep.status != SolveStatus::optimal) return rep;
    double worst = 0.0;
    std::vector<std::pair<Vec, double>> cuts;
    for (const auto& cr : cones) {
      Vec v = cr.a * rep.x + cr.b;
      double lhs = v.norm();
      double rhs = cr.c.dot(rep.x) + cr.d;
      double resid = lhs - rhs;
      worst = std::max(worst, resid);
      if (resid > opt.opt_tol) {
        Vec u = (lhs > 1e-12) ? Vec(v / lhs) : Vec(Vec::Zero(v.size()));
        // ||Ax+b|| >= u'(Ax+b), so u'(Ax+b) <= c'x + d is a valid cut.
        Vec row = cr.a.transpose() * u - cr.c;
        double bound = cr.d - u.dot(cr.b);
        cuts.emplace_back(row, bound);
      }
    }
    if (worst <= opt.opt_tol) {
      rep.max_primal_residual = std::max(rep.max_primal_residual, worst);
      return rep;
    }
    const int old = static_cast<int>(cur.g_ineq.rows());
    Mat g2(old + cuts.size(), n);
    Vec h2(old + cuts.size());
    if (old > 0) {
      g2.topRows(old) = cur.g_ineq;
      h2.head(old) = cur.h_ineq;
    }
    for (size_t k = 0; k < cuts.size(); ++k) {
      g2.row(old + k) = cuts[k].first.transpose();
      h2(old + k) = cuts[k].second;
    }
    cur.g_ineq = std::move(g2);
    cur.h_ineq = std::move(h2);
    cur.warm_start = std::nullopt;
  }
  rep.status = SolveStatus::failure;
  return rep;
}

}  // namespace asmpc

#endif  // ASMPC_SOLVER_HPP
