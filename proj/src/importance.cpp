#include "gclab/importance.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "gclab/rng.hpp"

namespace gclab {

namespace {

struct TreeNode {
  int feature = -1;  // -1: leaf
  double threshold = 0.0;
  int left = -1, right = -1;
  double value = 0.0;  // leaf mean
};

struct Tree {
  std::vector<TreeNode> nodes;
};

struct Matrix {
  int rows = 0, cols = 0;
  std::vector<double> data;
  double at(int r, int c) const { return data[r * cols + c]; }
};

int build_node(Tree& tree, const Matrix& x, const std::vector<double>& y,
               std::vector<int>& rows, int begin, int end, Rng& rng) {
  const int n = end - begin;
  double sum = 0.0, sumsq = 0.0;
  for (int i = begin; i < end; ++i) {
    sum += y[rows[i]];
    sumsq += y[rows[i]] * y[rows[i]];
  }
  const double mean = sum / n;
  const double sse = sumsq - sum * sum / n;

  const int node_index = static_cast<int>(tree.nodes.size());
  tree.nodes.push_back({});
  tree.nodes[node_index].value = mean;
  if (n < 2 * kFanovaMinLeaf || sse <= 1e-12) return node_index;

  // random feature subset of size ceil(d/2)
  const int d = x.cols;
  const int m = (d + 1) / 2;
  std::vector<int> feats(d);
  std::iota(feats.begin(), feats.end(), 0);
  for (int i = 0; i < m; ++i) {
    const int j = i + static_cast<int>(rng.uniform_index(d - i));
    std::swap(feats[i], feats[j]);
  }

  double best_gain = 0.0;
  int best_feat = -1;
  double best_thr = 0.0;
  std::vector<std::pair<double, double>> vals(n);  // (x, y) sorted per feature
  for (int fi = 0; fi < m; ++fi) {
    const int f = feats[fi];
    for (int i = 0; i < n; ++i)
      vals[i] = {x.at(rows[begin + i], f), y[rows[begin + i]]};
    std::sort(vals.begin(), vals.end());
    double left_sum = 0.0, left_sumsq = 0.0;
    for (int k = 1; k < n; ++k) {
      left_sum += vals[k - 1].second;
      left_sumsq += vals[k - 1].second * vals[k - 1].second;
      if (vals[k].first == vals[k - 1].first) continue;  // no boundary here
      if (k < kFanovaMinLeaf || n - k < kFanovaMinLeaf) continue;
      const double right_sum = sum - left_sum;
      const double right_sumsq = sumsq - left_sumsq;
      const double sse_split = (left_sumsq - left_sum * left_sum / k) +
                               (right_sumsq - right_sum * right_sum / (n - k));
      const double gain = sse - sse_split;
      if (gain > best_gain) {
        best_gain = gain;
        best_feat = f;
        best_thr = 0.5 * (vals[k - 1].first + vals[k].first);
      }
    }
  }
  if (best_feat < 0) return node_index;

  const auto mid = std::partition(rows.begin() + begin, rows.begin() + end,
                                  [&](int r) { return x.at(r, best_feat) <= best_thr; });
  const int split = static_cast<int>(mid - rows.begin());
  if (split == begin || split == end) return node_index;

  tree.nodes[node_index].feature = best_feat;
  tree.nodes[node_index].threshold = best_thr;
  const int left = build_node(tree, x, y, rows, begin, split, rng);
  tree.nodes[node_index].left = left;
  const int right = build_node(tree, x, y, rows, split, end, rng);
  tree.nodes[node_index].right = right;
  return node_index;
}

struct Leaf {
  std::vector<double> lo, hi;
  double value = 0.0;
  double weight = 0.0;  // volume fraction of the input box
};

void collect_leaves(const Tree& tree, int node, std::vector<double>& lo,
                    std::vector<double>& hi, const std::vector<double>& range,
                    std::vector<Leaf>& out) {
  const TreeNode& nd = tree.nodes[node];
  if (nd.feature < 0) {
    Leaf leaf;
    leaf.lo = lo;
    leaf.hi = hi;
    leaf.value = nd.value;
    double w = 1.0;
    for (std::size_t j = 0; j < lo.size(); ++j)
      w *= (hi[j] - lo[j]) / range[j];
    leaf.weight = w;
    out.push_back(std::move(leaf));
    return;
  }
  const double saved_hi = hi[nd.feature];
  hi[nd.feature] = std::min(saved_hi, nd.threshold);
  collect_leaves(tree, nd.left, lo, hi, range, out);
  hi[nd.feature] = saved_hi;
  const double saved_lo = lo[nd.feature];
  lo[nd.feature] = std::max(saved_lo, nd.threshold);
  collect_leaves(tree, nd.right, lo, hi, range, out);
  lo[nd.feature] = saved_lo;
}

// Exact main-effect variances of the tree's piecewise-constant predictor
// under the uniform design over the (transformed) input box.
std::vector<double> tree_main_effects(const std::vector<Leaf>& leaves,
                                      const std::vector<double>& lo_bound,
                                      const std::vector<double>& hi_bound,
                                      double* v_total_out) {
  const int d = static_cast<int>(lo_bound.size());
  double mean = 0.0;
  for (const auto& leaf : leaves) mean += leaf.weight * leaf.value;
  double v_total = 0.0;
  for (const auto& leaf : leaves)
    v_total += leaf.weight * (leaf.value - mean) * (leaf.value - mean);
  *v_total_out = v_total;

  std::vector<double> v(d, 0.0);
  for (int j = 0; j < d; ++j) {
    const double range_j = hi_bound[j] - lo_bound[j];
    std::vector<double> cuts;
    cuts.reserve(leaves.size() * 2);
    for (const auto& leaf : leaves) {
      cuts.push_back(leaf.lo[j]);
      cuts.push_back(leaf.hi[j]);
    }
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    double var_j = 0.0;
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
      const double a = cuts[k], b = cuts[k + 1];
      const double mid = 0.5 * (a + b);
      // marginal prediction over x_j in [a,b): leaves spanning the segment,
      // weighted by their volume in the remaining dimensions
      double marginal = 0.0;
      for (const auto& leaf : leaves) {
        if (leaf.lo[j] <= mid && mid < leaf.hi[j]) {
          const double w_rest =
              leaf.weight * range_j / (leaf.hi[j] - leaf.lo[j]);
          marginal += w_rest * leaf.value;
        }
      }
      var_j += ((b - a) / range_j) * (marginal - mean) * (marginal - mean);
    }
    v[j] = var_j;
  }
  return v;
}

}  // namespace

ImportanceVector fanova(const std::vector<Configuration>& configs,
                        const std::vector<double>& scores,
                        const ConfigSpace& space, int n_trees,
                        std::uint64_t seed) {
  const int n = static_cast<int>(configs.size());
  const int d = space.size();
  if (n != static_cast<int>(scores.size()))
    throw std::invalid_argument("fanova: configs/scores length mismatch");
  if (n < kFanovaMinObservations)
    throw std::invalid_argument("fanova: need at least 16 observations");
  if (n_trees < 1) throw std::invalid_argument("fanova: need trees");

  double mean = 0.0;
  for (double s : scores) mean += s / n;
  double var = 0.0;
  for (double s : scores) var += (s - mean) * (s - mean) / n;
  if (var <= 0.0)
    throw DegenerateError("fanova: zero score variance, importances undefined");

  // transformed design matrix and box bounds
  Matrix x;
  x.rows = n;
  x.cols = d;
  x.data.resize(n * d);
  std::vector<double> lo(d), hi(d);
  for (int j = 0; j < d; ++j) {
    const auto& dim = space.dim(j);
    lo[j] = dim.log_scale ? std::log(dim.lower) : dim.lower;
    hi[j] = dim.log_scale ? std::log(dim.upper) : dim.upper;
  }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) {
      const double v = configs[i].values[j];
      x.data[i * d + j] = space.dim(j).log_scale ? std::log(v) : v;
    }

  std::vector<double> acc(d, 0.0);
  int used_trees = 0;
  for (int t = 0; t < n_trees; ++t) {
    Rng rng = substream_rng(seed, "fanova-tree",
                            {static_cast<std::uint64_t>(t)});
    std::vector<int> rows(n);
    for (int i = 0; i < n; ++i)
      rows[i] = static_cast<int>(rng.uniform_index(n));  // bootstrap
    std::vector<double> y(scores);

    Tree tree;
    build_node(tree, x, y, rows, 0, n, rng);

    std::vector<Leaf> leaves;
    std::vector<double> box_lo = lo, box_hi = hi;
    std::vector<double> range(d);
    for (int j = 0; j < d; ++j) range[j] = hi[j] - lo[j];
    collect_leaves(tree, 0, box_lo, box_hi, range, leaves);

    double v_total = 0.0;
    auto v = tree_main_effects(leaves, lo, hi, &v_total);
    if (v_total <= 0.0) continue;
    for (int j = 0; j < d; ++j) acc[j] += v[j] / v_total;
    ++used_trees;
  }
  if (used_trees == 0)
    throw DegenerateError("fanova: every tree collapsed to a constant");

  double total = 0.0;
  for (double& a : acc) {
    a /= used_trees;
    total += a;
  }
  if (total <= 0.0)
    throw DegenerateError("fanova: zero main-effect mass");
  ImportanceVector out;
  out.importances.resize(d);
  for (int j = 0; j < d; ++j) out.importances[j] = acc[j] / total;
  return out;
}

double importance_cosine_distance(const std::vector<double>& v_t,
                                  const std::vector<double>& v_t1) {
  if (v_t.size() != v_t1.size() || v_t.empty())
    throw std::invalid_argument("cosine distance: size mismatch");
  double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < v_t.size(); ++i) {
    dot += v_t[i] * v_t1[i];
    na += v_t[i] * v_t[i];
    nb += v_t1[i] * v_t1[i];
  }
  if (na == 0.0 || nb == 0.0)
    throw std::invalid_argument("cosine distance: zero vector");
  return 1.0 - dot / std::sqrt(na * nb);
}

double importance_perplexity(const std::vector<double>& v) {
  double entropy = 0.0;
  for (double p : v)
    if (p > 0.0) entropy -= p * std::log(p);
  return std::exp(entropy);
}

double weighted_kendall_tau(const std::vector<double>& v_t,
                            const std::vector<double>& v_t1) {
  if (v_t.size() != v_t1.size() || v_t.size() < 2)
    throw std::invalid_argument("weighted_kendall_tau: need matched length >= 2");
  double signed_weight = 0.0, total_weight = 0.0;
  for (std::size_t i = 0; i < v_t.size(); ++i) {
    for (std::size_t j = i + 1; j < v_t.size(); ++j) {
      const double w = (v_t[i] + v_t[j] + v_t1[i] + v_t1[j]) / 4.0;
      total_weight += w;
      const double a = v_t[i] - v_t[j];
      const double b = v_t1[i] - v_t1[j];
      if (a == 0.0 || b == 0.0) continue;  // ties contribute nothing signed
      signed_weight += ((a > 0) == (b > 0)) ? w : -w;
    }
  }
  if (total_weight == 0.0)
    throw std::invalid_argument("weighted_kendall_tau: zero total weight");
  return signed_weight / total_weight;
}

}  // namespace gclab
