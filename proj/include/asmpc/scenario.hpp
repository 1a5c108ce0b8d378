#ifndef ASMPC_SCENARIO_HPP
#define ASMPC_SCENARIO_HPP

#include <fstream>
#include <set>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "asmpc/chance.hpp"
#include "asmpc/fir.hpp"
#include "asmpc/fps.hpp"
#include "asmpc/mpc.hpp"

namespace asmpc {

struct ScenarioError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class DisturbanceFamily { uniform, truncated_gaussian };

struct DisturbanceSpec {
  Vec w_bar;
  DisturbanceFamily family = DisturbanceFamily::uniform;
  Mat variance;  // n_y x n_y
};

/// Full description of a closed-loop experiment.
struct ScenarioConfig {
  FirDims dims{1, 1, 1};
  MpcConfig mpc;
  ChanceSpec chance{Eigen::RowVectorXd::Ones(1), 1.0, 0.3};
  DisturbanceSpec disturbance;
  FirModel true_model;
  Regressor phi0;
  FpsInitSpec fps_init{10.0, 1.0};
  Vec est_mean0;
  Mat est_cov0;
  int steps = 20;  // run length T; trace has T+1 entries
};

namespace detail {

using json = nlohmann::json;

inline void require_keys(const json& j, const std::string& where,
                         const std::set<std::string>& required,
                         const std::set<std::string>& optional = {}) {
  if (!j.is_object()) throw ScenarioError(where + ": expected an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!required.count(it.key()) && !optional.count(it.key())) {
      throw ScenarioError(where + ": unknown key '" + it.key() + "'");
    }
  }
  for (const auto& k : required) {
    if (!j.contains(k)) {
      throw ScenarioError(where + ": missing key '" + k + "'");
    }
  }
}

inline Vec parse_vec(const json& j, const std::string& where) {
  if (!j.is_array()) throw ScenarioError(where + ": expected an array");
  Vec v(j.size());
  for (size_t i = 0; i < j.size(); ++i) v(i) = j[i].get<double>();
  return v;
}

inline Mat parse_mat(const json& j, const std::string& where) {
  if (!j.is_array() || j.empty() || !j[0].is_array()) {
    throw ScenarioError(where + ": expected an array of rows");
  }
  const size_t cols = j[0].size();
  Mat m(j.size(), cols);
  for (size_t r = 0; r < j.size(); ++r) {
    if (j[r].size() != cols) throw ScenarioError(where + ": ragged rows");
    for (size_t c = 0; c < cols; ++c) m(r, c) = j[r][c].get<double>();
  }
  return m;
}

}  // namespace detail

inline ScenarioConfig parse_scenario(const nlohmann::json& j) {
  using detail::parse_mat;
  using detail::parse_vec;
  using detail::require_keys;

  require_keys(j, "scenario",
               {"dims", "horizon", "steps", "mode", "weights",
                "input_constraints", "chance", "disturbance", "true_model",
                "initial_regressor", "fps_init", "estimator_init"});
  require_keys(j["dims"], "dims", {"n_u", "n_y", "m"});
  FirDims dims(j["dims"]["n_u"].get<int>(), j["dims"]["n_y"].get<int>(),
               j["dims"]["m"].get<int>());

  require_keys(j["weights"], "weights", {"q", "s"});
  require_keys(j["input_constraints"], "input_constraints", {"c", "g"});
  require_keys(j["chance"], "chance", {"e", "p", "epsilon"});
  require_keys(j["disturbance"], "disturbance", {"bound", "family", "variance"});
  require_keys(j["fps_init"], "fps_init", {"magnitude", "decay"}, {"center"});
  require_keys(j["estimator_init"], "estimator_init", {"mean", "covariance"});

  MpcConfig mpc;
  mpc.horizon = j["horizon"].get<int>();
  mpc.q_weight = parse_mat(j["weights"]["q"], "weights.q");
  mpc.s_weight = parse_mat(j["weights"]["s"], "weights.s");
  mpc.c_mat = parse_mat(j["input_constraints"]["c"], "input_constraints.c");
  mpc.g_vec = parse_vec(j["input_constraints"]["g"], "input_constraints.g");
  const std::string mode = j["mode"].get<std::string>();
  if (mode == "stochastic") {
    mpc.mode = ControllerMode::stochastic;
  } else if (mode == "robust") {
    mpc.mode = ControllerMode::robust;
  } else {
    throw ScenarioError("mode: expected 'stochastic' or 'robust'");
  }

  Vec e = parse_vec(j["chance"]["e"], "chance.e");
  ChanceSpec chance(e.transpose(), j["chance"]["p"].get<double>(),
                    j["chance"]["epsilon"].get<double>());

  DisturbanceSpec dist;
  dist.w_bar = parse_vec(j["disturbance"]["bound"], "disturbance.bound");
  const std::string fam = j["disturbance"]["family"].get<std::string>();
  if (fam == "uniform") {
    dist.family = DisturbanceFamily::uniform;
  } else if (fam == "truncated_gaussian") {
    dist.family = DisturbanceFamily::truncated_gaussian;
  } else {
    throw ScenarioError("disturbance.family: unknown family '" + fam + "'");
  }
  dist.variance = parse_mat(j["disturbance"]["variance"], "disturbance.variance");

  ScenarioConfig cfg{dims,
                     mpc,
                     chance,
                     dist,
                     FirModel(parse_mat(j["true_model"], "true_model")),
                     parse_vec(j["initial_regressor"], "initial_regressor"),
                     FpsInitSpec(j["fps_init"]["magnitude"].get<double>(),
                                 j["fps_init"]["decay"].get<double>(),
                                 j["fps_init"].contains("center")
                                     ? parse_vec(j["fps_init"]["center"],
                                                 "fps_init.center")
                                     : Vec()),
                     parse_vec(j["estimator_init"]["mean"], "estimator_init.mean"),
                     parse_mat(j["estimator_init"]["covariance"],
                               "estimator_init.covariance"),
                     j["steps"].get<int>()};

  if (cfg.true_model.h.rows() != dims.n_y ||
      cfg.true_model.h.cols() != dims.regressor_len()) {
    throw ScenarioError("true_model: dimension mismatch");
  }
  if (cfg.phi0.size() != dims.regressor_len()) {
    throw ScenarioError("initial_regressor: length mismatch");
  }
  if (cfg.est_mean0.size() != dims.coeff_count() ||
      cfg.est_cov0.rows() != dims.coeff_count()) {
    throw ScenarioError("estimator_init: dimension mismatch");
  }
  if (cfg.disturbance.w_bar.size() != dims.n_y ||
      cfg.disturbance.variance.rows() != dims.n_y) {
    throw ScenarioError("disturbance: dimension mismatch");
  }
  if (cfg.chance.e_row.cols() != dims.n_y) {
    throw ScenarioError("chance.e: length mismatch");
  }
  if (cfg.steps < 1) throw ScenarioError("steps: must be >= 1");
  return cfg;
}

inline ScenarioConfig load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError("cannot open scenario file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw ScenarioError("scenario parse error: " + std::string(e.what()));
  }
  return parse_scenario(j);
}

}  // namespace asmpc

#endif  // ASMPC_SCENARIO_HPP
