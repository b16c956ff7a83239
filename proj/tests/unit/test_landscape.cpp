#include <cmath>

#include "doctest.h"
#include "gclab/gp_surface.hpp"
#include "gclab/landscape.hpp"
#include "gclab/rng.hpp"

using namespace gclab;

namespace {

PhaseScores table(int phase, std::vector<double> scores) {
  PhaseScores t;
  t.phase = phase;
  for (std::size_t i = 0; i < scores.size(); ++i)
    t.scores[static_cast<int>(i)] = scores[i];
  return t;
}

}  // namespace

TEST_SUITE("landscape") {

TEST_CASE("epsilon mass counts near-optimal configurations") {
  const auto t = table(1, {1.0, 0.95, 0.5, 0.1});
  CHECK(epsilon_mass(t, 0.9) == doctest::Approx(0.5));
  CHECK(epsilon_mass(t, 0.0) == 1.0);
  CHECK(epsilon_mass(table(1, {0.4, 0.4, 0.4}), 1.0) == 1.0);
  CHECK_THROWS_AS(epsilon_mass(table(1, {-0.5, -0.2}), 0.9),
                  UndefinedMetricError);
  // monotone non-increasing in epsilon
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> scores;
    for (int i = 0; i < 32; ++i) scores.push_back(rng.uniform(0.01, 1.0));
    const auto tt = table(1, scores);
    double prev = 1.0;
    for (double eps : {0.0, 0.2, 0.4, 0.6, 0.8, 0.9, 1.0}) {
      const double m = epsilon_mass(tt, eps);
      CHECK(m <= prev);
      prev = m;
    }
  }
}

TEST_CASE("phase drift measures normalized reordering") {
  const auto a = table(1, {1.0, 0.5});
  const auto b = table(2, {0.5, 1.0});
  CHECK(phase_drift(a, b) == doctest::Approx(0.5));
  CHECK(phase_drift(a, a) == 0.0);
  // scale invariance: multiplying a phase by c > 0 changes nothing
  auto scaled = table(2, {0.25, 0.5});  // 0.5 * {0.5, 1.0}
  CHECK(phase_drift(a, scaled) == doctest::Approx(0.5));
  auto self_scaled = table(2, {3.0, 1.5});  // 3 * a
  CHECK(phase_drift(a, self_scaled) == doctest::Approx(0.0));
  CHECK_THROWS_AS(phase_drift(a, table(2, {1.0, 2.0, 3.0})),
                  std::invalid_argument);
}

TEST_CASE("early regret relative to the later-phase optimum") {
  const auto future = table(3, {1.0, 0.5, 0.25});
  CHECK(early_regret(future, 0) == 0.0);  // the argmax
  CHECK(early_regret(future, 1) == doctest::Approx(0.5));
  CHECK(early_regret(future, 2) == doctest::Approx(0.75));
  CHECK_THROWS_AS(early_regret(future, 99), std::invalid_argument);
  const auto equal = table(3, {0.7, 0.7});
  CHECK(early_regret(equal, 0) == 0.0);
  CHECK(early_regret(equal, 1) == 0.0);
}

TEST_CASE("optimum overlap is the Jaccard index of top sets") {
  // 20 configs, top-10% = ceil(2) members
  std::vector<double> a(20), b(20);
  for (int i = 0; i < 20; ++i) a[i] = b[i] = double(i);
  CHECK(optimum_overlap(table(1, a), table(2, b)) == 1.0);
  // disjoint top sets
  std::reverse(b.begin(), b.end());
  CHECK(optimum_overlap(table(1, a), table(2, b)) == 0.0);
  // |Top|=4 each with 2 shared -> 2/6
  std::vector<double> c(40), d(40);
  for (int i = 0; i < 40; ++i) {
    c[i] = i;          // top4 = {39, 38, 37, 36}
    d[i] = 0.0;
  }
  d[39] = 4;
  d[38] = 3;
  d[1] = 2;
  d[2] = 1;  // top4 = {39, 38, 1, 2}
  CHECK(optimum_overlap(table(1, c), table(2, d)) == doctest::Approx(2.0 / 6.0));
  // rank invariance: monotone transform preserves the overlap
  std::vector<double> e(40);
  for (int i = 0; i < 40; ++i) e[i] = std::exp(c[i] / 10.0);
  CHECK(optimum_overlap(table(1, c), table(2, e)) == 1.0);
}

TEST_CASE("across-phase change is the mean of consecutive drifts") {
  const auto p1 = table(1, {1.0, 0.5});
  const auto p2 = table(2, {0.5, 1.0});  // drift 0.5
  const auto p3 = table(3, {0.5, 1.0});  // drift 0
  CHECK(across_phase_change({p1, p2, p3}) == doctest::Approx(0.25));
  CHECK(across_phase_change({p1, p2}) == doctest::Approx(phase_drift(p1, p2)));
  CHECK(across_phase_change({p1, p1, p1}) == 0.0);
  CHECK_THROWS_AS(across_phase_change({p1}), std::invalid_argument);
}

TEST_CASE("GP with vanishing noise interpolates the training points") {
  std::vector<SurfacePoint> pts = {
      {0.0, 0.0, 1.0}, {1.0, 0.0, 2.0}, {0.0, 1.0, 3.0}, {1.0, 1.0, 2.5},
      {0.5, 0.5, 1.7}};
  std::vector<std::pair<double, double>> queries;
  for (const auto& p : pts) queries.push_back({p.x, p.y});
  const auto pred = gp_predict(pts, queries, 0.4, 1e-10);
  for (std::size_t i = 0; i < pts.size(); ++i)
    CHECK(pred[i] == doctest::Approx(pts[i].score).epsilon(1e-6));
}

TEST_CASE("constant scores fit a constant surface") {
  std::vector<SurfacePoint> pts;
  for (int i = 0; i < 9; ++i)
    pts.push_back({double(i % 3), double(i / 3), 0.7});
  const auto grid = fit_surface(pts, 8);
  for (double z : grid.z) CHECK(z == doctest::Approx(0.7));
}

TEST_CASE("1-D sine is recovered within 0.05") {
  std::vector<SurfacePoint> pts;
  for (int i = 0; i < 20; ++i) {
    const double x = double(i) / 19.0;
    pts.push_back({x, 0.0, std::sin(2.0 * M_PI * x)});
  }
  const auto grid = fit_surface(pts, 33);
  double worst = 0.0;
  for (std::size_t ix = 0; ix < grid.xs.size(); ++ix) {
    const double truth = std::sin(2.0 * M_PI * grid.xs[ix]);
    worst = std::max(worst, std::abs(grid.z[ix] - truth));
  }
  CHECK(worst < 0.05);
}

TEST_CASE("surface fitting input validation") {
  std::vector<SurfacePoint> pts = {{0, 0, 1}, {1, 0, 2}, {0, 1, 3}};
  CHECK_THROWS_AS(fit_surface(pts, 8), std::invalid_argument);  // < 4 points
  pts.push_back({1, 1, 4});
  CHECK_THROWS_AS(fit_surface(pts, 1), std::invalid_argument);
}

}  // TEST_SUITE
