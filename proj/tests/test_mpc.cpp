#include <catch_amalgamated.hpp>

#include <string>

#include "asmpc/mpc.hpp"
#include "asmpc/rls.hpp"
#include "asmpc/scenario.hpp"

using namespace asmpc;

namespace {

ScenarioConfig default_scenario() {
  return load_scenario(std::string(ASMPC_SCENARIO_DIR) + "/siso_fir3.json");
}

struct ScenarioState {
  ScenarioConfig cfg;
  FeasibleParamSet fps;
  std::vector<FirModel> vertices;
  FirModel nominal;
  AppendedCovariance gamma;

  ScenarioState()
      : cfg(default_scenario()),
        fps(init_fps(cfg.fps_init, cfg.dims, cfg.disturbance.w_bar)),
        vertices(fps_vertices(fps)),
        nominal(mean_as_matrix(cfg.est_mean0, cfg.dims)),
        gamma(build_gamma(cfg.chance, cfg.disturbance.variance, cfg.dims)) {}
};

Vec initial_output(const ScenarioConfig& cfg) {
  return simulate_output(cfg.true_model, cfg.phi0, Vec::Zero(cfg.dims.n_y));
}

}  // namespace

TEST_CASE("zero state with slack limits gives zero inputs") {
  FirDims dims(1, 1, 3);
  MpcConfig cfg;
  cfg.horizon = 6;
  cfg.q_weight = 2.0 * Mat::Identity(1, 1);
  cfg.s_weight = 2.0 * Mat::Identity(1, 1);
  cfg.c_mat = (Mat(2, 1) << 1, -1).finished();
  cfg.g_vec = Vec::Constant(2, 3.0);
  Mat h(1, 3);
  h << -4, 8, -9;
  FirModel nominal(h);
  Eigen::RowVectorXd e(1);
  e << 1.0;
  ChanceSpec cc(e, 1e6, 0.3);  // effectively inactive output bound
  auto gamma = build_gamma(cc, Mat::Constant(1, 1, 1.0 / 3.0), dims);
  Vec y0 = Vec::Constant(1, 4.0);
  auto prog = assemble_stochastic(Vec::Zero(3), y0, nominal, {nominal}, cc,
                                  gamma, dims, cfg);
  auto sol = solve(prog);
  REQUIRE(sol.status == SolveStatus::optimal);
  CHECK(sol.u_seq.lpNorm<Eigen::Infinity>() <= 1e-7);
  // only the current-output stage cost remains
  CHECK(sol.objective == Catch::Approx(y0.dot(cfg.q_weight * y0)).margin(1e-6));
}

TEST_CASE("program sizes at the initial state") {
  ScenarioState ts;
  auto prog = assemble_stochastic(ts.cfg.phi0, initial_output(ts.cfg),
                                  ts.nominal, ts.vertices, ts.cfg.chance,
                                  ts.gamma, ts.cfg.dims, ts.cfg.mpc);
  CHECK(prog.qp.q.size() == 12);             // N=12 scalar decisions
  CHECK(ts.vertices.size() == 8);            // box FPS
  CHECK(prog.qp.g_ineq.rows() == 24 + 12 * 8);  // input rows + chance rows
  CHECK(prog.qp.a_eq.rows() == 3);           // terminal steady-state rows
  CHECK(prog.cones.empty());                 // degenerate gamma -> linear form
}

TEST_CASE("zero-variance stochastic equals zero-bound robust") {
  ScenarioState ts;
  AppendedCovariance zero_gamma;
  zero_gamma.gamma = Mat::Zero(5, 5);
  Vec y0 = initial_output(ts.cfg);
  auto sto = assemble_stochastic(ts.cfg.phi0, y0, ts.nominal, {ts.nominal},
                                 ts.cfg.chance, zero_gamma, ts.cfg.dims,
                                 ts.cfg.mpc);
  auto rob = assemble_robust(ts.cfg.phi0, y0, ts.nominal, {ts.nominal},
                             ts.cfg.chance.e_row, ts.cfg.chance.p,
                             Vec::Zero(1), ts.cfg.dims, ts.cfg.mpc);
  auto s1 = solve(sto);
  auto s2 = solve(rob);
  REQUIRE(s1.status == SolveStatus::optimal);
  REQUIRE(s2.status == SolveStatus::optimal);
  CHECK((s1.u_seq - s2.u_seq).lpNorm<Eigen::Infinity>() <= 1e-6);
  CHECK(s1.objective == Catch::Approx(s2.objective).margin(1e-6));
}

TEST_CASE("robust rows are tighter than the chance rows") {
  ScenarioState ts;
  Vec y0 = initial_output(ts.cfg);
  auto sto = assemble_stochastic(ts.cfg.phi0, y0, ts.nominal, ts.vertices,
                                 ts.cfg.chance, ts.gamma, ts.cfg.dims,
                                 ts.cfg.mpc);
  auto [cheb, rad] = chebyshev_center(ts.fps.row(0));
  FirModel cheb_model(cheb.transpose());
  auto rob = assemble_robust(ts.cfg.phi0, y0, cheb_model, ts.vertices,
                             ts.cfg.chance.e_row, ts.cfg.chance.p,
                             ts.cfg.disturbance.w_bar, ts.cfg.dims, ts.cfg.mpc);
  // identical row normals beyond the shared input rows, smaller bounds
  const int shared = 24;
  REQUIRE(sto.qp.g_ineq.rows() == rob.qp.g_ineq.rows());
  double tighten = ts.cfg.chance.kappa() * std::sqrt(1.0 / 3.0);
  for (int r = shared; r < sto.qp.g_ineq.rows(); ++r) {
    CHECK((sto.qp.g_ineq.row(r) - rob.qp.g_ineq.row(r))
              .lpNorm<Eigen::Infinity>() <= 1e-12);
    CHECK(rob.qp.h_ineq(r) ==
          Catch::Approx(sto.qp.h_ineq(r) - (1.0 - tighten)).margin(1e-12));
    CHECK(rob.qp.h_ineq(r) < sto.qp.h_ineq(r));
  }
  auto s1 = solve(sto);
  auto s2 = solve(rob);
  REQUIRE(s1.status == SolveStatus::optimal);
  REQUIRE(s2.status == SolveStatus::optimal);
  CHECK(s1.objective <= s2.objective + 1e-8);
  // the robust solution is feasible for the looser stochastic rows
  CHECK(max_constraint_residual(sto, stack_inputs(s2.u_seq)) <= 1e-7);
}

TEST_CASE("terminal predicted regressor is the steady state") {
  ScenarioState ts;
  auto prog = assemble_stochastic(ts.cfg.phi0, initial_output(ts.cfg),
                                  ts.nominal, ts.vertices, ts.cfg.chance,
                                  ts.gamma, ts.cfg.dims, ts.cfg.mpc);
  auto sol = solve(prog);
  REQUIRE(sol.status == SolveStatus::optimal);
  Vec u_last = sol.u_seq.row(ts.cfg.mpc.horizon - 1).transpose();
  Vec ss = steady_state_regressor(u_last, ts.cfg.dims);
  CHECK((sol.predicted_regressors.back() - ss).lpNorm<Eigen::Infinity>() <=
        1e-8);
}

TEST_CASE("predicted regressors follow the shift recursion") {
  ScenarioState ts;
  auto prog = assemble_stochastic(ts.cfg.phi0, initial_output(ts.cfg),
                                  ts.nominal, ts.vertices, ts.cfg.chance,
                                  ts.gamma, ts.cfg.dims, ts.cfg.mpc);
  auto sol = solve(prog);
  REQUIRE(sol.status == SolveStatus::optimal);
  Vec phi = ts.cfg.phi0;
  for (int j = 0; j < ts.cfg.mpc.horizon; ++j) {
    phi = advance_regressor(phi, sol.u_seq.row(j).transpose(), ts.cfg.dims);
    CHECK((sol.predicted_regressors[j] - phi).lpNorm<Eigen::Infinity>() <=
          1e-9);
  }
}

TEST_CASE("cone form matches the linear fast path") {
  ScenarioState ts;
  Vec y0 = initial_output(ts.cfg);
  auto lin = assemble_stochastic(ts.cfg.phi0, y0, ts.nominal, ts.vertices,
                                 ts.cfg.chance, ts.gamma, ts.cfg.dims,
                                 ts.cfg.mpc);
  MpcConfig cone_cfg = ts.cfg.mpc;
  cone_cfg.use_cone_rows = true;
  auto con = assemble_stochastic(ts.cfg.phi0, y0, ts.nominal, ts.vertices,
                                 ts.cfg.chance, ts.gamma, ts.cfg.dims,
                                 cone_cfg);
  CHECK(con.cones.size() == 12 * 8);
  auto s1 = solve(lin);
  auto s2 = solve(con);
  REQUIRE(s1.status == SolveStatus::optimal);
  REQUIRE(s2.status == SolveStatus::optimal);
  CHECK((s1.u_seq - s2.u_seq).lpNorm<Eigen::Infinity>() <= 1e-6);
  CHECK(s1.objective == Catch::Approx(s2.objective).margin(1e-5));
}

TEST_CASE("objective is reproducible from the program data") {
  ScenarioState ts;
  auto prog = assemble_stochastic(ts.cfg.phi0, initial_output(ts.cfg),
                                  ts.nominal, ts.vertices, ts.cfg.chance,
                                  ts.gamma, ts.cfg.dims, ts.cfg.mpc);
  auto sol = solve(prog);
  REQUIRE(sol.status == SolveStatus::optimal);
  Vec u = stack_inputs(sol.u_seq);
  CHECK(evaluate_objective(prog, u) ==
        Catch::Approx(sol.objective).margin(1e-6));
  CHECK(max_constraint_residual(prog, u) <= 1e-6);
}

TEST_CASE("shifted candidate drops the head and repeats the tail") {
  MpcSolution sol;
  sol.status = SolveStatus::optimal;
  sol.u_seq = (Mat(3, 1) << 1, 2, 3).finished();
  Mat shifted = shifted_candidate(sol);
  CHECK(shifted(0, 0) == 2.0);
  CHECK(shifted(1, 0) == 3.0);
  CHECK(shifted(2, 0) == 3.0);
  CHECK(first_input(sol)(0) == 1.0);

  MpcSolution bad;
  bad.status = SolveStatus::infeasible;
  CHECK_THROWS(first_input(bad));
  CHECK_THROWS(shifted_candidate(bad));
}

TEST_CASE("configuration validation") {
  ScenarioState ts;
  MpcConfig bad = ts.cfg.mpc;
  bad.horizon = 3;  // must exceed m
  CHECK_THROWS(assemble_stochastic(ts.cfg.phi0, initial_output(ts.cfg),
                                   ts.nominal, ts.vertices, ts.cfg.chance,
                                   ts.gamma, ts.cfg.dims, bad));
  CHECK_THROWS(assemble_stochastic(ts.cfg.phi0, initial_output(ts.cfg),
                                   ts.nominal, {}, ts.cfg.chance, ts.gamma,
                                   ts.cfg.dims, ts.cfg.mpc));
}
