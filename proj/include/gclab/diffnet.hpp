#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "gclab/rng.hpp"

namespace gclab {

// Raised when a forward/backward pass produces a non-finite value.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class HeadKind : std::uint8_t { scalar, logits, quasimetric };

// Layer sizes plus head tag. Hidden layers are ReLU (subgradient 0 at 0),
// the output layer is linear. For the quasimetric head the final layer is
// the latent encoder with output_dim == qm_groups * qm_group_size.
struct Topology {
  std::vector<int> sizes;  // input, hidden..., output
  HeadKind head = HeadKind::scalar;
  int qm_groups = 0;
  int qm_group_size = 0;

  static Topology mlp(int input, std::vector<int> hidden, int output,
                      HeadKind head = HeadKind::scalar);
  static Topology quasimetric(int input, std::vector<int> hidden, int groups,
                              int group_size);

  int layers() const { return static_cast<int>(sizes.size()) - 1; }
  int input_dim() const { return sizes.front(); }
  int output_dim() const { return sizes.back(); }
  int param_count() const;

  bool operator==(const Topology&) const = default;
};

struct ParamVector {
  Topology topo;
  std::vector<double> values;
};

struct Gradient {
  std::vector<double> values;

  void reset(std::size_t n) { values.assign(n, 0.0); }
  void scale(double s) {
    for (auto& v : values) v *= s;
  }
};

// Glorot-uniform weights, zero biases.
ParamVector init_params(const Topology& topo, Rng& rng);

// Per-layer post-activation values; acts[0] is the input copy.
struct ForwardCache {
  std::vector<std::vector<double>> acts;
};

// Deterministic forward pass; throws NumericError on non-finite output.
std::span<const double> mlp_forward(const ParamVector& p,
                                    std::span<const double> input,
                                    ForwardCache& cache);
std::vector<double> mlp_forward(const ParamVector& p,
                                std::span<const double> input);

// Accumulates dLoss/dparams into grad given dLoss/doutput. The cache must
// come from a matching mlp_forward call.
void mlp_backward(const ParamVector& p, const ForwardCache& cache,
                  std::span<const double> d_output, Gradient& grad);

// Expectile loss |tau - 1[u<0]| * u^2 and its derivative in u.
double expectile_loss(double u, double tau);
double expectile_loss_du(double u, double tau);

struct QuasimetricCache {
  ForwardCache s, g;
  std::vector<int> argmax;  // per group; -1 when the group max is <= 0
};

// d(s,g) = sum over groups of max_i ReLU(f_i(s) - f_i(g)) with a shared
// encoder f; zero at s == g and triangle inequality hold by construction.
double quasimetric_dist(const ParamVector& p, std::span<const double> s_feat,
                        std::span<const double> g_feat, QuasimetricCache& cache);
double quasimetric_dist(const ParamVector& p, std::span<const double> s_feat,
                        std::span<const double> g_feat);
void quasimetric_backward(const ParamVector& p, const QuasimetricCache& cache,
                          double d_dist, Gradient& grad);

// SGD update p -= lr * g.
void apply_sgd(ParamVector& p, const Gradient& g, double lr);

// target = (1 - tau) * target + tau * online (element-wise).
void polyak_update(ParamVector& target, const ParamVector& online, double tau);

// Versioned binary checkpoint of topology + flat values; the flat values
// round-trip bit-exactly.
std::string params_to_bytes(const ParamVector& p);
ParamVector params_from_bytes(const std::string& bytes);

std::uint64_t params_hash(const ParamVector& p);

}  // namespace gclab
