#include <catch_amalgamated.hpp>

#include <random>

#include "asmpc/chance.hpp"

using namespace asmpc;

namespace {

ChanceSpec unit_spec() {
  Eigen::RowVectorXd e(1);
  e << 1.0;
  return ChanceSpec(e, 1.0, 0.3);
}

}  // namespace

TEST_CASE("tightening factor values") {
  CHECK(kappa_of(0.3) == Catch::Approx(1.5275).margin(5e-5));
  CHECK(kappa_of(0.5) == Catch::Approx(1.0).margin(1e-12));
  CHECK(kappa_of(0.1) == Catch::Approx(3.0).margin(1e-12));
  CHECK_THROWS(kappa_of(0.0));
  CHECK_THROWS(kappa_of(1.0));
  CHECK_THROWS(kappa_of(-0.2));
}

TEST_CASE("kappa decreases in the risk level") {
  double prev = 1e100;
  for (double eps = 0.05; eps < 1.0; eps += 0.05) {
    double k = kappa_of(eps);
    CHECK(k < prev);
    prev = k;
  }
}

TEST_CASE("appended covariance puts all mass in the disturbance slot") {
  FirDims dims(1, 1, 3);
  auto gamma = build_gamma(unit_spec(), Mat::Constant(1, 1, 1.0 / 3.0), dims);
  REQUIRE(gamma.gamma.rows() == 5);
  REQUIRE(gamma.gamma.cols() == 5);
  CHECK(gamma.gamma(3, 3) == Catch::Approx(1.0 / 3.0).margin(1e-15));
  Mat probe = gamma.gamma;
  probe(3, 3) = 0.0;
  CHECK(probe.cwiseAbs().maxCoeff() == 0.0);
  CHECK(gamma_is_constant_slot(gamma));

  auto zero = build_gamma(unit_spec(), Mat::Zero(1, 1), dims);
  CHECK(zero.gamma.isZero());

  Eigen::RowVectorXd e2(2);
  e2 << 1, -1;
  ChanceSpec spec2(e2, 1.0, 0.3);
  auto g2 = build_gamma(spec2, Mat::Identity(2, 2), FirDims(1, 2, 3));
  CHECK(g2.gamma(3, 3) == Catch::Approx(2.0).margin(1e-15));
}

TEST_CASE("residual at the nominal scenario") {
  FirDims dims(1, 1, 3);
  ChanceSpec spec = unit_spec();
  auto gamma = build_gamma(spec, Mat::Constant(1, 1, 1.0 / 3.0), dims);
  // tightening alone: kappa * sigma_w = sqrt(7/3)/sqrt(3) ~ 0.8819
  double tighten = spec.kappa() * std::sqrt(1.0 / 3.0);
  CHECK(tighten == Catch::Approx(0.8819).margin(5e-4));

  FirModel zero_model(Mat::Zero(1, 3));
  Vec phi = Vec::Constant(3, 2.0);
  double res = cone_row_residual(phi, gamma, spec, zero_model);
  CHECK(res == Catch::Approx(tighten - 1.0).margin(1e-12));

  // boundary: pick h so E h phi = p - tighten exactly
  Mat h(1, 3);
  h << (1.0 - tighten) / 6.0, (1.0 - tighten) / 6.0, (1.0 - tighten) / 6.0;
  CHECK(cone_row_residual(phi, gamma, spec, FirModel(h)) ==
        Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("constant-slot gamma makes the cone term regressor independent") {
  FirDims dims(1, 1, 3);
  ChanceSpec spec = unit_spec();
  auto gamma = build_gamma(spec, Mat::Constant(1, 1, 1.0 / 3.0), dims);
  double tighten = spec.kappa() * std::sqrt(1.0 / 3.0);
  Mat h(1, 3);
  h << -4, 8, -9;
  FirModel model(h);
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> dist(-3.0, 3.0);
  for (int k = 0; k < 50; ++k) {
    Vec phi(3);
    for (int i = 0; i < 3; ++i) phi(i) = dist(rng);
    double res = cone_row_residual(phi, gamma, spec, model);
    double lin = tighten + (h * phi)(0, 0) - spec.p;
    CHECK(res == Catch::Approx(lin).margin(1e-12));
  }
}

TEST_CASE("residual is monotone in epsilon") {
  FirDims dims(1, 1, 3);
  Vec phi = Vec::Constant(3, 1.0);
  FirModel model(Mat::Zero(1, 3));
  double prev = 1e100;
  for (double eps = 0.1; eps <= 0.9; eps += 0.1) {
    Eigen::RowVectorXd e(1);
    e << 1.0;
    ChanceSpec spec(e, 1.0, eps);
    auto gamma = build_gamma(spec, Mat::Constant(1, 1, 1.0 / 3.0), dims);
    double res = cone_row_residual(phi, gamma, spec, model);
    CHECK(res < prev);
    prev = res;
  }
}

TEST_CASE("tightened rows control the empirical violation rate") {
  // y = f phi + w with w ~ U[-1,1]; at the tightened boundary the
  // chance constraint E y <= p must hold with probability >= 1 - eps.
  ChanceSpec spec = unit_spec();
  double sigma2 = 1.0 / 3.0;
  double tighten = spec.kappa() * std::sqrt(sigma2);
  double nominal = spec.p - tighten;  // realized E f phi at the boundary
  std::mt19937_64 rng(97);
  std::uniform_real_distribution<double> w_dist(-1.0, 1.0);
  int viol = 0;
  const int draws = 100000;
  for (int k = 0; k < draws; ++k) {
    if (nominal + w_dist(rng) > spec.p) ++viol;
  }
  CHECK(static_cast<double>(viol) / draws <= spec.epsilon + 0.01);
}

TEST_CASE("dimension mismatches are rejected") {
  FirDims dims(1, 1, 3);
  ChanceSpec spec = unit_spec();
  auto gamma = build_gamma(spec, Mat::Constant(1, 1, 1.0 / 3.0), dims);
  CHECK_THROWS(build_gamma(spec, Mat::Identity(2, 2), dims));
  CHECK_THROWS(
      cone_row_residual(Vec::Zero(4), gamma, spec, FirModel(Mat::Zero(1, 4))));
  CHECK_THROWS(
      cone_row_residual(Vec::Zero(3), gamma, spec, FirModel(Mat::Zero(2, 3))));
}
