#include <catch_amalgamated.hpp>

#include <random>

#include "asmpc/fps.hpp"

using namespace asmpc;

namespace {

Mat truth_h() {
  Mat h(1, 3);
  h << -4, 8, -9;
  return h;
}

}  // namespace

TEST_CASE("initial fps is the magnitude/decay box") {
  FirDims dims(1, 1, 3);
  auto fps = init_fps(FpsInitSpec(10.0, 1.0), dims, Vec::Ones(1));
  REQUIRE(fps.n_y() == 1);
  VertexSet vs = enumerate_vertices(fps.row(0));
  CHECK(vs.size() == 8);
  CHECK(contains(fps.row(0), Vec::Constant(3, 10.0), 1e-9));
  CHECK_FALSE(contains(fps.row(0), Vec::Constant(3, 10.1), 1e-6));
  CHECK(fps_contains(fps, FirModel(truth_h()), 1e-9));
}

TEST_CASE("decay scales the per-lag bounds") {
  FirDims dims(1, 1, 2);
  auto fps = init_fps(FpsInitSpec(8.0, 0.5), dims, Vec::Ones(1));
  CHECK(contains(fps.row(0), (Vec(2) << 8, 4).finished(), 1e-9));
  CHECK_FALSE(contains(fps.row(0), (Vec(2) << 8, 4.1).finished(), 1e-6));
  CHECK_FALSE(contains(fps.row(0), (Vec(2) << 8.1, 4).finished(), 1e-6));
}

TEST_CASE("centered boxes shift the bounds") {
  FirDims dims(1, 1, 3);
  Vec c(3);
  c << -3.5, 7.5, -8.5;
  auto fps = init_fps(FpsInitSpec(1.5, 1.0, c), dims, Vec::Ones(1));
  CHECK(fps_contains(fps, FirModel(truth_h()), 1e-9));
  CHECK_FALSE(contains(fps.row(0), Vec::Zero(3), 1e-6));
}

TEST_CASE("update applies the two measurement cuts") {
  FirDims dims(1, 1, 3);
  auto fps = init_fps(FpsInitSpec(10.0, 1.0), dims, Vec::Ones(1));
  Vec phi = Vec::Constant(3, 2.0);
  Vec y = Vec::Ones(1);
  auto next = update_fps(fps, phi, y);
  // cuts: 2(h1+h2+h3) <= 2 and -2(h1+h2+h3) <= 0, i.e. sum in [0, 1]
  CHECK(contains(next.row(0), Vec::Constant(3, 1.0 / 6.0), 1e-9));
  CHECK_FALSE(contains(next.row(0), Vec::Constant(3, 0.4), 1e-6));
  CHECK_FALSE(contains(next.row(0), Vec::Constant(3, -0.1), 1e-6));
}

TEST_CASE("zero regressor leaves the set unchanged but checks consistency") {
  FirDims dims(1, 1, 3);
  auto fps = init_fps(FpsInitSpec(10.0, 1.0), dims, Vec::Ones(1));
  auto same = update_fps(fps, Vec::Zero(3), Vec::Constant(1, 0.5));
  CHECK(same.row(0).rows() == fps.row(0).rows());
  CHECK_THROWS_AS(update_fps(fps, Vec::Zero(3), Vec::Constant(1, 1.5)),
                  ModelInconsistency);
}

TEST_CASE("inconsistent measurements empty the set and are reported") {
  FirDims dims(1, 1, 1);
  auto fps = init_fps(FpsInitSpec(1.0, 1.0), dims, Vec::Constant(1, 0.1));
  // h in [-1, 1]; phi=1, y=5 forces h in [4.9, 5.1]
  CHECK_THROWS_AS(update_fps(fps, Vec::Ones(1), Vec::Constant(1, 5.0)),
                  ModelInconsistency);
}

TEST_CASE("twenty updates retain the truth and shrink monotonically") {
  FirDims dims(1, 1, 3);
  FirModel truth(truth_h());
  auto fps = init_fps(FpsInitSpec(10.0, 1.0), dims, Vec::Ones(1));
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> u_dist(-3.0, 3.0);
  std::uniform_real_distribution<double> w_dist(-1.0, 1.0);
  Vec phi = Vec::Constant(3, 2.0);
  for (int t = 0; t < 20; ++t) {
    Vec u(1);
    u << u_dist(rng);
    phi = advance_regressor(phi, u, dims);
    Vec w(1);
    w << w_dist(rng);
    Vec y = simulate_output(truth, phi, w);
    auto prev = fps;
    fps = update_fps(fps, phi, y);
    CHECK(fps_contains(fps, truth, 1e-7));
    for (const Vec& v : enumerate_vertices(fps.row(0))) {
      CHECK(contains(prev.row(0), v, 1e-7));
    }
  }
}

TEST_CASE("repeated identical update is idempotent as a point set") {
  FirDims dims(1, 1, 2);
  auto fps = init_fps(FpsInitSpec(5.0, 1.0), dims, Vec::Ones(1));
  Vec phi(2);
  phi << 1.0, -2.0;
  Vec y = Vec::Constant(1, 0.7);
  auto once = update_fps(fps, phi, y);
  auto twice = update_fps(once, phi, y);
  auto va = enumerate_vertices(once.row(0));
  auto vb = enumerate_vertices(twice.row(0));
  REQUIRE(va.size() == vb.size());
  for (const Vec& v : va) {
    bool found = false;
    for (const Vec& w : vb) {
      if ((v - w).norm() <= 1e-7) found = true;
    }
    CHECK(found);
  }
}

TEST_CASE("model vertices are the cartesian product across output rows") {
  FirDims dims(1, 1, 3);
  auto fps1 = init_fps(FpsInitSpec(1.0, 1.0), dims, Vec::Ones(1));
  CHECK(fps_vertices(fps1).size() == 8);

  // two output rows: cut one down to a simplex-like count
  FirDims dims2(1, 2, 2);
  auto fps2 = init_fps(FpsInitSpec(1.0, 1.0), dims2, Vec::Ones(2));
  auto cut = update_fps(fps2, (Vec(2) << 1, 0).finished(),
                        (Vec(2) << 0.5, 0.0).finished());
  size_t expect = enumerate_vertices(cut.row(0)).size() *
                  enumerate_vertices(cut.row(1)).size();
  CHECK(fps_vertices(cut).size() == expect);
  for (const FirModel& f : fps_vertices(cut)) {
    CHECK(f.h.rows() == 2);
    CHECK(f.h.cols() == 2);
  }
}

TEST_CASE("init validation") {
  CHECK_THROWS(FpsInitSpec(0.0, 1.0));
  CHECK_THROWS(FpsInitSpec(1.0, 0.0));
  CHECK_THROWS(FpsInitSpec(1.0, 1.5));
  FirDims dims(1, 1, 2);
  CHECK_THROWS(init_fps(FpsInitSpec(1.0, 1.0), dims, Vec::Zero(1)));
}
