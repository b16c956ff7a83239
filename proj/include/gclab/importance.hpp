#pragma once

#include <cstdint>
#include <vector>

#include "gclab/config_space.hpp"
#include "gclab/phased.hpp"  // DegenerateError

namespace gclab {

struct ImportanceVector {
  int phase = 0;
  std::vector<double> importances;  // per dimension, normalized to sum to 1
};

// Tree-ensemble fANOVA main effects: a random forest of CART regression
// trees (bootstrap rows, random feature subsets of ceil(d/2), minimum leaf
// size 3) fitted on (configuration -> score) with log-scale dimensions in
// log space; per tree, exact main-effect variances come from marginalizing
// over the axis-aligned leaf partition; importances are the per-tree
// V_j / V_total averaged over trees and normalized.
ImportanceVector fanova(const std::vector<Configuration>& configs,
                        const std::vector<double>& scores,
                        const ConfigSpace& space, int n_trees,
                        std::uint64_t seed);

inline constexpr int kFanovaDefaultTrees = 32;
inline constexpr int kFanovaMinLeaf = 3;
inline constexpr int kFanovaMinObservations = 16;

// 1 - cos(v_t, v_t1); in [0,1] for nonnegative vectors.
double importance_cosine_distance(const std::vector<double>& v_t,
                                  const std::vector<double>& v_t1);

// exp(entropy) of a normalized importance vector; in [1, d].
double importance_perplexity(const std::vector<double>& v);

// Kendall's tau over dimension rankings, each pair weighted by the mean of
// the four involved importances; ties contribute zero signed weight but
// count toward the normalizer.
double weighted_kendall_tau(const std::vector<double>& v_t,
                            const std::vector<double>& v_t1);

}  // namespace gclab
