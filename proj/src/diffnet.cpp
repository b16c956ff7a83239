#include "gclab/diffnet.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>

namespace gclab {

Topology Topology::mlp(int input, std::vector<int> hidden, int output,
                       HeadKind head) {
  Topology t;
  t.sizes.push_back(input);
  for (int h : hidden) t.sizes.push_back(h);
  t.sizes.push_back(output);
  t.head = head;
  for (int s : t.sizes)
    if (s < 1) throw std::invalid_argument("Topology: layer sizes must be >= 1");
  return t;
}

Topology Topology::quasimetric(int input, std::vector<int> hidden, int groups,
                               int group_size) {
  if (groups < 1 || group_size < 1)
    throw std::invalid_argument("Topology: quasimetric groups/size must be >= 1");
  Topology t = mlp(input, std::move(hidden), groups * group_size,
                   HeadKind::quasimetric);
  t.qm_groups = groups;
  t.qm_group_size = group_size;
  return t;
}

int Topology::param_count() const {
  int n = 0;
  for (int l = 0; l < layers(); ++l) n += sizes[l + 1] * (sizes[l] + 1);
  return n;
}

ParamVector init_params(const Topology& topo, Rng& rng) {
  ParamVector p;
  p.topo = topo;
  p.values.resize(topo.param_count());
  double* w = p.values.data();
  for (int l = 0; l < topo.layers(); ++l) {
    const int fan_in = topo.sizes[l], fan_out = topo.sizes[l + 1];
    const double bound = std::sqrt(6.0 / (fan_in + fan_out));
    for (int i = 0; i < fan_out * fan_in; ++i) *w++ = rng.uniform(-bound, bound);
    for (int i = 0; i < fan_out; ++i) *w++ = 0.0;  // biases
  }
  return p;
}

std::span<const double> mlp_forward(const ParamVector& p,
                                    std::span<const double> input,
                                    ForwardCache& cache) {
  const Topology& t = p.topo;
  if (static_cast<int>(input.size()) != t.input_dim())
    throw std::invalid_argument("mlp_forward: input size mismatch");
  const int L = t.layers();
  cache.acts.resize(L + 1);
  cache.acts[0].assign(input.begin(), input.end());

  const double* w = p.values.data();
  for (int l = 0; l < L; ++l) {
    const int in = t.sizes[l], out = t.sizes[l + 1];
    const bool is_output = (l == L - 1);
    const std::vector<double>& a = cache.acts[l];
    std::vector<double>& z = cache.acts[l + 1];
    z.resize(out);
    const double* bias = w + out * in;
    for (int o = 0; o < out; ++o) {
      const double* row = w + o * in;
      double acc = bias[o];
      for (int i = 0; i < in; ++i) acc += row[i] * a[i];
      z[o] = (!is_output && acc < 0.0) ? 0.0 : acc;  // ReLU on hidden layers
    }
    w += out * (in + 1);
  }
  for (double v : cache.acts[L])
    if (!std::isfinite(v))
      throw NumericError("mlp_forward: non-finite output");
  return cache.acts[L];
}

std::vector<double> mlp_forward(const ParamVector& p,
                                std::span<const double> input) {
  ForwardCache cache;
  auto out = mlp_forward(p, input, cache);
  return {out.begin(), out.end()};
}

void mlp_backward(const ParamVector& p, const ForwardCache& cache,
                  std::span<const double> d_output, Gradient& grad) {
  const Topology& t = p.topo;
  const int L = t.layers();
  if (grad.values.size() != p.values.size())
    throw std::invalid_argument("mlp_backward: gradient size mismatch");
  if (static_cast<int>(d_output.size()) != t.output_dim())
    throw std::invalid_argument("mlp_backward: d_output size mismatch");

  std::vector<double> delta(d_output.begin(), d_output.end());
  std::vector<double> next;
  // offset of layer L-1's weight block
  std::size_t off = p.values.size();
  for (int l = L - 1; l >= 0; --l) {
    const int in = t.sizes[l], out = t.sizes[l + 1];
    off -= static_cast<std::size_t>(out) * (in + 1);
    const double* w = p.values.data() + off;
    double* gw = grad.values.data() + off;
    const std::vector<double>& a = cache.acts[l];

    for (int o = 0; o < out; ++o) {
      const double d = delta[o];
      if (d == 0.0) continue;
      double* grow = gw + o * in;
      for (int i = 0; i < in; ++i) grow[i] += d * a[i];
      gw[out * in + o] += d;  // bias
    }
    if (l == 0) break;
    next.assign(in, 0.0);
    for (int o = 0; o < out; ++o) {
      const double d = delta[o];
      if (d == 0.0) continue;
      const double* row = w + o * in;
      for (int i = 0; i < in; ++i) next[i] += d * row[i];
    }
    // ReLU mask: activation > 0 iff pre-activation > 0 (subgradient 0 at 0)
    for (int i = 0; i < in; ++i)
      if (a[i] <= 0.0) next[i] = 0.0;
    delta.swap(next);
  }
}

double expectile_loss(double u, double tau) {
  if (tau <= 0.0 || tau >= 1.0)
    throw std::invalid_argument("expectile_loss: tau must be in (0,1)");
  const double w = std::abs(tau - (u < 0.0 ? 1.0 : 0.0));
  return w * u * u;
}

double expectile_loss_du(double u, double tau) {
  const double w = std::abs(tau - (u < 0.0 ? 1.0 : 0.0));
  return 2.0 * w * u;
}

double quasimetric_dist(const ParamVector& p, std::span<const double> s_feat,
                        std::span<const double> g_feat,
                        QuasimetricCache& cache) {
  const Topology& t = p.topo;
  if (t.head != HeadKind::quasimetric)
    throw std::invalid_argument("quasimetric_dist: wrong head kind");
  auto fs = mlp_forward(p, s_feat, cache.s);
  auto fg = mlp_forward(p, g_feat, cache.g);
  cache.argmax.assign(t.qm_groups, -1);
  double dist = 0.0;
  for (int g = 0; g < t.qm_groups; ++g) {
    double best = 0.0;
    int best_i = -1;
    for (int i = 0; i < t.qm_group_size; ++i) {
      const int idx = g * t.qm_group_size + i;
      const double diff = fs[idx] - fg[idx];
      if (diff > best) {
        best = diff;
        best_i = idx;
      }
    }
    cache.argmax[g] = best_i;  // -1 when every component difference <= 0
    dist += best;
  }
  return dist;
}

double quasimetric_dist(const ParamVector& p, std::span<const double> s_feat,
                        std::span<const double> g_feat) {
  QuasimetricCache cache;
  return quasimetric_dist(p, s_feat, g_feat, cache);
}

void quasimetric_backward(const ParamVector& p, const QuasimetricCache& cache,
                          double d_dist, Gradient& grad) {
  const Topology& t = p.topo;
  std::vector<double> ds(t.output_dim(), 0.0), dg(t.output_dim(), 0.0);
  for (int g = 0; g < t.qm_groups; ++g) {
    const int i = cache.argmax[g];
    if (i < 0) continue;  // ReLU'd max was zero: no gradient from this group
    ds[i] += d_dist;
    dg[i] -= d_dist;
  }
  mlp_backward(p, cache.s, ds, grad);
  mlp_backward(p, cache.g, dg, grad);
}

void apply_sgd(ParamVector& p, const Gradient& g, double lr) {
  if (g.values.size() != p.values.size())
    throw std::invalid_argument("apply_sgd: size mismatch");
  for (std::size_t i = 0; i < p.values.size(); ++i) {
    // check before store so a throw never leaves non-finite parameters behind
    const double nv = p.values[i] - lr * g.values[i];
    if (!std::isfinite(nv))
      throw NumericError("apply_sgd: parameter became non-finite at index " +
                         std::to_string(i));
    p.values[i] = nv;
  }
}

void polyak_update(ParamVector& target, const ParamVector& online, double tau) {
  if (!(target.topo == online.topo))
    throw std::invalid_argument("polyak_update: topology mismatch");
  for (std::size_t i = 0; i < target.values.size(); ++i)
    target.values[i] = (1.0 - tau) * target.values[i] + tau * online.values[i];
}

namespace {

constexpr std::uint32_t kCheckpointMagic = 0x474b5031;  // "GKP1"
constexpr std::uint32_t kCheckpointVersion = 1;

template <typename T>
void put(std::string& out, const T& v) {
  out.append(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T take(const std::string& in, std::size_t& pos) {
  if (pos + sizeof(T) > in.size())
    throw std::runtime_error("checkpoint: truncated data");
  T v;
  std::memcpy(&v, in.data() + pos, sizeof v);
  pos += sizeof v;
  return v;
}

}  // namespace

std::string params_to_bytes(const ParamVector& p) {
  std::string out;
  put(out, kCheckpointMagic);
  put(out, kCheckpointVersion);
  put(out, static_cast<std::uint32_t>(p.topo.head));
  put(out, static_cast<std::int32_t>(p.topo.qm_groups));
  put(out, static_cast<std::int32_t>(p.topo.qm_group_size));
  put(out, static_cast<std::uint32_t>(p.topo.sizes.size()));
  for (int s : p.topo.sizes) put(out, static_cast<std::int32_t>(s));
  put(out, static_cast<std::uint64_t>(p.values.size()));
  for (double v : p.values) put(out, v);
  return out;
}

ParamVector params_from_bytes(const std::string& bytes) {
  std::size_t pos = 0;
  if (take<std::uint32_t>(bytes, pos) != kCheckpointMagic)
    throw std::runtime_error("checkpoint: bad magic");
  if (take<std::uint32_t>(bytes, pos) != kCheckpointVersion)
    throw std::runtime_error("checkpoint: unsupported version");
  ParamVector p;
  p.topo.head = static_cast<HeadKind>(take<std::uint32_t>(bytes, pos));
  p.topo.qm_groups = take<std::int32_t>(bytes, pos);
  p.topo.qm_group_size = take<std::int32_t>(bytes, pos);
  const auto n_sizes = take<std::uint32_t>(bytes, pos);
  p.topo.sizes.resize(n_sizes);
  for (auto& s : p.topo.sizes) s = take<std::int32_t>(bytes, pos);
  const auto n_vals = take<std::uint64_t>(bytes, pos);
  if (n_vals != static_cast<std::uint64_t>(p.topo.param_count()))
    throw std::runtime_error("checkpoint: value count does not match topology");
  p.values.resize(n_vals);
  for (auto& v : p.values) v = take<double>(bytes, pos);
  return p;
}

std::uint64_t params_hash(const ParamVector& p) {
  std::uint64_t h = fnv1a(p.values.data(), p.values.size() * sizeof(double));
  for (int s : p.topo.sizes) h = fnv1a(&s, sizeof s, h);
  return h;
}

}  // namespace gclab
