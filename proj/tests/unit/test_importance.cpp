#include <cmath>

#include "doctest.h"
#include "gclab/importance.hpp"
#include "gclab/rng.hpp"

using namespace gclab;

namespace {

ConfigSpace unit_space(int d) {
  std::vector<HyperparamDim> dims;
  for (int i = 0; i < d; ++i)
    dims.push_back({"x" + std::to_string(i), 0.0, 1.0, false,
                    DimKind::continuous});
  return ConfigSpace(dims);
}

}  // namespace

TEST_SUITE("importance") {

TEST_CASE("f = x1 puts all importance on the first dimension") {
  const auto space = unit_space(2);
  const auto configs = sobol_sample(space, 256, 1);
  std::vector<double> scores;
  for (const auto& c : configs) scores.push_back(c.values[0]);
  const auto v = fanova(configs, scores, space, 32, 7);
  CHECK(v.importances[0] > 0.95);
  CHECK(v.importances[1] < 0.05);
  CHECK(v.importances[0] + v.importances[1] == doctest::Approx(1.0));
}

TEST_CASE("f = x1 + x2 splits importance evenly") {
  const auto space = unit_space(2);
  const auto configs = sobol_sample(space, 256, 2);
  std::vector<double> scores;
  for (const auto& c : configs) scores.push_back(c.values[0] + c.values[1]);
  const auto v = fanova(configs, scores, space, 32, 8);
  CHECK(v.importances[0] == doctest::Approx(0.5).epsilon(0.12));
  CHECK(v.importances[1] == doctest::Approx(0.5).epsilon(0.12));
}

TEST_CASE("constant scores are a degenerate error") {
  const auto space = unit_space(2);
  const auto configs = sobol_sample(space, 64, 3);
  std::vector<double> scores(configs.size(), 0.25);
  CHECK_THROWS_AS(fanova(configs, scores, space, 8, 1), DegenerateError);
}

TEST_CASE("too few observations are rejected") {
  const auto space = unit_space(2);
  const auto configs = sobol_sample(space, 8, 3);
  std::vector<double> scores(configs.size(), 0.0);
  for (std::size_t i = 0; i < scores.size(); ++i) scores[i] = double(i);
  CHECK_THROWS_AS(fanova(configs, scores, space, 8, 1), std::invalid_argument);
}

TEST_CASE("permutation equivariance") {
  const auto space = unit_space(3);
  const auto configs = sobol_sample(space, 256, 5);
  std::vector<double> scores;
  for (const auto& c : configs)
    scores.push_back(2.0 * c.values[0] + 0.5 * c.values[2]);
  const auto v = fanova(configs, scores, space, 32, 9);

  // permute dims (0,1,2) -> (2,0,1) in the data, same generator seed
  std::vector<Configuration> permuted = configs;
  for (auto& c : permuted) {
    const auto old = c.values;
    c.values[2] = old[0];
    c.values[0] = old[1];
    c.values[1] = old[2];
  }
  std::vector<double> pscores;
  for (const auto& c : permuted)
    pscores.push_back(2.0 * c.values[2] + 0.5 * c.values[1]);
  const auto pv = fanova(permuted, pscores, space, 32, 9);
  CHECK(pv.importances[2] == doctest::Approx(v.importances[0]).epsilon(0.05));
  CHECK(pv.importances[1] == doctest::Approx(v.importances[2]).epsilon(0.05));
}

TEST_CASE("a pure-noise dimension barely disturbs importances") {
  const auto space2 = unit_space(2);
  const auto configs2 = sobol_sample(space2, 512, 6);
  std::vector<double> scores;
  for (const auto& c : configs2) scores.push_back(c.values[0] + c.values[1]);
  const auto base = fanova(configs2, scores, space2, 32, 10);

  const auto space3 = unit_space(3);
  Rng rng(11);
  std::vector<Configuration> configs3;
  for (const auto& c : configs2) {
    Configuration e = c;
    e.values.push_back(rng.uniform01());  // independent of the score
    configs3.push_back(e);
  }
  const auto ext = fanova(configs3, scores, space3, 32, 10);
  CHECK(std::abs(ext.importances[0] - base.importances[0]) < 0.05);
  CHECK(std::abs(ext.importances[1] - base.importances[1]) < 0.05);
  CHECK(ext.importances[2] < 0.05);
}

TEST_CASE("log-scale dimensions are attributed in log space") {
  ConfigSpace space({{"lr", 1e-6, 1e-1, true, DimKind::continuous},
                     {"z", 0.0, 1.0, false, DimKind::continuous}});
  const auto configs = sobol_sample(space, 512, 12);
  std::vector<double> scores;
  // response linear in log(lr): uniform in log space, so variance splits
  for (const auto& c : configs) scores.push_back(std::log(c.values[0]));
  const auto v = fanova(configs, scores, space, 32, 13);
  CHECK(v.importances[0] > 0.9);
}

TEST_CASE("cosine distance of importance vectors") {
  CHECK(importance_cosine_distance({0.5, 0.5}, {0.5, 0.5}) ==
        doctest::Approx(0.0));
  CHECK(importance_cosine_distance({1, 0}, {0, 1}) == doctest::Approx(1.0));
  CHECK(importance_cosine_distance({0.8, 0.2}, {0.2, 0.8}) ==
        doctest::Approx(1.0 - 0.32 / 0.68).epsilon(1e-9));
  CHECK_THROWS_AS(importance_cosine_distance({0, 0}, {1, 0}),
                  std::invalid_argument);
  CHECK_THROWS_AS(importance_cosine_distance({1, 0}, {1, 0, 0}),
                  std::invalid_argument);
}

TEST_CASE("perplexity of importance distributions") {
  CHECK(importance_perplexity({0.25, 0.25, 0.25, 0.25}) ==
        doctest::Approx(4.0));
  CHECK(importance_perplexity({1.0, 0.0, 0.0}) == doctest::Approx(1.0));
  CHECK(importance_perplexity({0.5, 0.5, 0.0, 0.0}) == doctest::Approx(2.0));
}

TEST_CASE("importance-weighted Kendall tau") {
  CHECK(weighted_kendall_tau({0.5, 0.3, 0.2}, {0.6, 0.3, 0.1}) ==
        doctest::Approx(1.0));
  // fully reversed rankings with equal pair weights
  CHECK(weighted_kendall_tau({0.5, 0.3, 0.2}, {0.2, 0.4, 0.5}) ==
        doctest::Approx(-1.0));
  // one discordant pair among (near-)equal-weight pairs -> (2-1)/3; exactly
  // equal weights force a full reversal, so approach the limit instead
  const double eps = 1e-9;
  const double third = 1.0 / 3.0;
  CHECK(weighted_kendall_tau({third + eps, third, third - eps},
                             {third + eps, third - eps, third}) ==
        doctest::Approx(third).epsilon(1e-6));
  CHECK_THROWS_AS(weighted_kendall_tau({1.0}, {1.0}), std::invalid_argument);
}

}  // TEST_SUITE
