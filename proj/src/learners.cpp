#include "gclab/learners.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>

namespace gclab {

namespace {

constexpr double kAwrClip = 100.0;
const double kLogAwrClip = std::log(kAwrClip);

void pair_features(const Maze& maze, Cell a, Cell b, double* out4) {
  maze.features(a, out4);
  maze.features(b, out4 + 2);
}

// dL/dlogits of -w * log softmax(logits)[a], accumulated in place.
void awr_logits_grad(std::span<const double> logits, int action, double w,
                     double inv_batch, std::vector<double>& d_logits) {
  double mx = logits[0];
  for (double v : logits) mx = std::max(mx, v);
  double z = 0.0;
  for (double v : logits) z += std::exp(v - mx);
  d_logits.resize(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) {
    const double p = std::exp(logits[i] - mx) / z;
    d_logits[i] = w * inv_batch * (p - (static_cast<int>(i) == action ? 1.0 : 0.0));
  }
}

}  // namespace

const char* algo_name(Algo a) { return a == Algo::hiql ? "hiql" : "qrl"; }

double awr_weight(double alpha, double advantage) {
  const double x = alpha * advantage;
  if (!std::isfinite(x)) throw NumericError("AWR weight is non-finite");
  return x >= kLogAwrClip ? kAwrClip : std::exp(x);
}

Algo algo_from_name(const std::string& s) {
  if (s == "hiql") return Algo::hiql;
  if (s == "qrl") return Algo::qrl;
  throw std::invalid_argument("unknown algorithm: " + s);
}

LearnerHyper hiql_default_hyper() {
  LearnerHyper h;
  h.lr = 1e-3;
  h.discount = 0.99;
  h.alpha = 3.0;
  h.batch = 64;
  h.expectile = 0.7;
  h.tau_polyak = 0.005;
  h.subgoal_steps = 3;
  h.value_sampler = {0.5, 0.4, true, h.discount};
  h.actor_sampler = {1.0, 0.0, false, h.discount};
  return h;
}

LearnerHyper qrl_default_hyper() {
  LearnerHyper h;
  h.lr = 1e-3;
  h.discount = 0.99;
  h.alpha = 3.0;
  h.batch = 64;
  h.eps_slack = 0.05;
  h.value_sampler = {0.0, 0.0, true, h.discount};  // random goals
  h.actor_sampler = {1.0, 0.0, false, h.discount};
  return h;
}

LearnerHyper default_hyper(Algo a) {
  return a == Algo::hiql ? hiql_default_hyper() : qrl_default_hyper();
}

const std::string& builtin_space_text(Algo a) {
  static const std::string hiql_space =
      "dim name=lr lower=1e-06 upper=0.01 log_scale=true kind=continuous\n"
      "dim name=discount lower=0.8 upper=0.9999 log_scale=false kind=continuous\n"
      "dim name=alpha lower=0 upper=30 log_scale=false kind=continuous\n"
      "dim name=tau_polyak lower=0.0001 upper=1 log_scale=true kind=continuous\n"
      "dim name=expectile lower=0.5 upper=0.995 log_scale=false kind=continuous\n"
      "dim name=batch lower=8 upper=128 log_scale=false kind=integer\n"
      "dim name=subgoal_steps lower=1 upper=10 log_scale=false kind=integer\n"
      "dim name=value_p_trajgoal lower=0 upper=1 log_scale=false kind=continuous\n"
      "dim name=value_p_curgoalshare lower=0 upper=1 log_scale=false kind=continuous\n"
      "dim name=value_geom_sample kind=boolean\n"
      "dim name=actor_p_trajgoal lower=0 upper=1 log_scale=false kind=continuous\n"
      "dim name=actor_p_curgoalshare lower=0 upper=1 log_scale=false kind=continuous\n"
      "dim name=actor_geom_sample kind=boolean\n";
  static const std::string qrl_space =
      "dim name=lr lower=1e-06 upper=0.01 log_scale=true kind=continuous\n"
      "dim name=discount lower=0.8 upper=0.9999 log_scale=false kind=continuous\n"
      "dim name=alpha lower=0 upper=30 log_scale=false kind=continuous\n"
      "dim name=eps lower=1e-06 upper=1 log_scale=true kind=continuous\n"
      "dim name=batch lower=8 upper=128 log_scale=false kind=integer\n"
      "dim name=value_p_trajgoal lower=0 upper=1 log_scale=false kind=continuous\n"
      "dim name=value_p_curgoalshare lower=0 upper=1 log_scale=false kind=continuous\n"
      "dim name=value_geom_sample kind=boolean\n"
      "dim name=actor_p_trajgoal lower=0 upper=1 log_scale=false kind=continuous\n"
      "dim name=actor_p_curgoalshare lower=0 upper=1 log_scale=false kind=continuous\n"
      "dim name=actor_geom_sample kind=boolean\n";
  return a == Algo::hiql ? hiql_space : qrl_space;
}

LearnerHyper resolve_hyper(const ConfigSpace& space, const Configuration& c,
                           const LearnerHyper& defaults) {
  LearnerHyper h = defaults;
  auto get = [&](const char* name, double& out) {
    for (int i = 0; i < space.size(); ++i)
      if (space.dim(i).name == name) {
        out = c.values.at(i);
        return;
      }
  };
  double batch = h.batch, subgoal = h.subgoal_steps;
  double vgeom = h.value_sampler.geom_sample ? 1.0 : 0.0;
  double ageom = h.actor_sampler.geom_sample ? 1.0 : 0.0;
  get("lr", h.lr);
  get("discount", h.discount);
  get("alpha", h.alpha);
  get("batch", batch);
  get("expectile", h.expectile);
  get("tau_polyak", h.tau_polyak);
  get("subgoal_steps", subgoal);
  get("eps", h.eps_slack);
  get("value_p_trajgoal", h.value_sampler.p_trajgoal);
  get("value_p_curgoalshare", h.value_sampler.p_curgoalshare);
  get("value_geom_sample", vgeom);
  get("actor_p_trajgoal", h.actor_sampler.p_trajgoal);
  get("actor_p_curgoalshare", h.actor_sampler.p_curgoalshare);
  get("actor_geom_sample", ageom);
  h.batch = static_cast<int>(std::llround(batch));
  h.subgoal_steps = static_cast<int>(std::llround(subgoal));
  h.value_sampler.geom_sample = vgeom >= 0.5;
  h.actor_sampler.geom_sample = ageom >= 0.5;
  h.value_sampler.gamma = h.discount;
  h.actor_sampler.gamma = h.discount;
  return h;
}

Configuration hyper_to_config(const ConfigSpace& space,
                              const LearnerHyper& hyper) {
  Configuration c;
  c.id = -1;
  c.values.resize(space.size());
  for (int i = 0; i < space.size(); ++i) {
    const std::string& n = space.dim(i).name;
    double v;
    if (n == "lr") v = hyper.lr;
    else if (n == "discount") v = hyper.discount;
    else if (n == "alpha") v = hyper.alpha;
    else if (n == "batch") v = hyper.batch;
    else if (n == "expectile") v = hyper.expectile;
    else if (n == "tau_polyak") v = hyper.tau_polyak;
    else if (n == "subgoal_steps") v = hyper.subgoal_steps;
    else if (n == "eps") v = hyper.eps_slack;
    else if (n == "value_p_trajgoal") v = hyper.value_sampler.p_trajgoal;
    else if (n == "value_p_curgoalshare") v = hyper.value_sampler.p_curgoalshare;
    else if (n == "value_geom_sample") v = hyper.value_sampler.geom_sample;
    else if (n == "actor_p_trajgoal") v = hyper.actor_sampler.p_trajgoal;
    else if (n == "actor_p_curgoalshare") v = hyper.actor_sampler.p_curgoalshare;
    else if (n == "actor_geom_sample") v = hyper.actor_sampler.geom_sample;
    else throw std::invalid_argument("hyper_to_config: unknown dimension " + n);
    c.values[i] = v;
  }
  return c;
}

HiqlState make_hiql_state(const Maze& maze, const LearnerHyper& hp,
                          const NetSpec& net, Rng& rng) {
  HiqlState s;
  s.hp = hp;
  auto value_topo = Topology::mlp(4, net.hidden, 1);
  s.value = init_params(value_topo, rng);
  s.target = s.value;
  s.hi_policy = init_params(
      Topology::mlp(4, net.hidden, maze.width() * maze.height(),
                    HeadKind::logits),
      rng);
  s.lo_policy =
      init_params(Topology::mlp(4, net.hidden, kNumActions, HeadKind::logits),
                  rng);
  return s;
}

QrlState make_qrl_state(const Maze& maze, const LearnerHyper& hp,
                        const NetSpec& net, Rng& rng) {
  (void)maze;
  QrlState s;
  s.hp = hp;
  s.dist = init_params(
      Topology::quasimetric(2, net.hidden, net.qm_groups, net.qm_group_size),
      rng);
  s.policy =
      init_params(Topology::mlp(4, net.hidden, kNumActions, HeadKind::logits),
                  rng);
  s.lagrange = 1.0;
  return s;
}

BatchSampler::BatchSampler(const OfflineDataset& ds)
    : ds_(&ds), states_(ds) {
  trans_cumulative_.reserve(ds.trajectories.size());
  for (const auto& t : ds.trajectories) {
    trans_cumulative_.push_back(trans_total_);
    trans_total_ += t.actions.size();
  }
  if (trans_total_ == 0)
    throw std::invalid_argument("BatchSampler: dataset has no transitions");
}

std::pair<std::size_t, std::size_t> BatchSampler::sample_transition(
    Rng& rng) const {
  const std::size_t flat = rng.uniform_index(trans_total_);
  std::size_t lo = 0, hi = trans_cumulative_.size() - 1;
  while (lo < hi) {
    std::size_t mid = (lo + hi + 1) / 2;
    if (trans_cumulative_[mid] <= flat) lo = mid;
    else hi = mid - 1;
  }
  return {lo, flat - trans_cumulative_[lo]};
}

Cell BatchSampler::relabel(const GoalSamplerSpec& spec, std::size_t traj,
                           std::size_t t, Rng& rng) const {
  return sample_goal(spec, *ds_, states_, traj, t, rng);
}

std::vector<Cell> BatchSampler::sample_goal_set(const GoalSamplerSpec& spec,
                                                int m, Rng& rng) const {
  std::vector<Cell> goals;
  goals.reserve(m);
  for (int i = 0; i < m; ++i) {
    auto [traj, t] = sample_transition(rng);
    goals.push_back(relabel(spec, traj, t, rng));
  }
  return goals;
}

CriticBatch sample_critic_batch(const BatchSampler& sampler,
                                const GoalSamplerSpec& spec, int n, Rng& rng) {
  CriticBatch b;
  b.s.reserve(n);
  b.s_next.reserve(n);
  b.goal.reserve(n);
  for (int i = 0; i < n; ++i) {
    auto [traj, t] = sampler.sample_transition(rng);
    const auto& tr = sampler.dataset().trajectories[traj];
    b.s.push_back(tr.states[t]);
    b.s_next.push_back(tr.states[t + 1]);
    b.goal.push_back(sampler.relabel(spec, traj, t, rng));
  }
  return b;
}

CriticBatch sample_transition_batch(const BatchSampler& sampler, int n,
                                    Rng& rng) {
  CriticBatch b;
  b.s.reserve(n);
  b.s_next.reserve(n);
  for (int i = 0; i < n; ++i) {
    auto [traj, t] = sampler.sample_transition(rng);
    const auto& tr = sampler.dataset().trajectories[traj];
    b.s.push_back(tr.states[t]);
    b.s_next.push_back(tr.states[t + 1]);
  }
  return b;
}

PolicyBatch sample_policy_batch(const BatchSampler& sampler,
                                const GoalSamplerSpec& spec, int n,
                                int subgoal_steps, Rng& rng) {
  PolicyBatch b;
  b.s.reserve(n);
  b.s_next.reserve(n);
  b.subgoal.reserve(n);
  b.goal.reserve(n);
  b.a.reserve(n);
  for (int i = 0; i < n; ++i) {
    auto [traj, t] = sampler.sample_transition(rng);
    const auto& tr = sampler.dataset().trajectories[traj];
    const std::size_t sub =
        std::min(t + static_cast<std::size_t>(subgoal_steps),
                 tr.states.size() - 1);  // truncated at trajectory end
    b.s.push_back(tr.states[t]);
    b.s_next.push_back(tr.states[t + 1]);
    b.subgoal.push_back(tr.states[sub]);
    b.goal.push_back(sampler.relabel(spec, traj, t, rng));
    b.a.push_back(tr.actions[t]);
  }
  return b;
}

double hiql_critic_step(HiqlState& state, const Maze& maze,
                        const CriticBatch& batch) {
  const std::size_t n = batch.s.size();
  if (n == 0) throw std::invalid_argument("hiql_critic_step: empty batch");
  Gradient grad;
  grad.reset(state.value.values.size());
  ForwardCache value_cache, target_cache;
  double feat[4];
  double loss = 0.0;
  const double inv_n = 1.0 / double(n);
  std::vector<double> d_out(1);

  for (std::size_t i = 0; i < n; ++i) {
    // r = -1 per step while away from the goal, r = 0 once there; the
    // bootstrap is masked with the structural V(g,g) = 0 at arrival, so the
    // one-step fixed point is V = -1. Samples already sitting on the goal
    // anchor V(g,g) toward 0.
    double y;
    if (batch.s[i] == batch.goal[i]) {
      y = 0.0;
    } else if (batch.s_next[i] == batch.goal[i]) {
      y = -1.0;  // r + discount * 0
    } else {
      pair_features(maze, batch.s_next[i], batch.goal[i], feat);
      const double v_next = mlp_forward(state.target, feat, target_cache)[0];
      y = -1.0 + state.hp.discount * v_next;
    }
    pair_features(maze, batch.s[i], batch.goal[i], feat);
    const double v = mlp_forward(state.value, feat, value_cache)[0];
    const double u = y - v;
    loss += expectile_loss(u, state.hp.expectile) * inv_n;
    d_out[0] = -expectile_loss_du(u, state.hp.expectile) * inv_n;
    mlp_backward(state.value, value_cache, d_out, grad);
  }
  if (!std::isfinite(loss)) throw NumericError("hiql_critic_step: loss non-finite");
  apply_sgd(state.value, grad, state.hp.lr);
  polyak_update(state.target, state.value, state.hp.tau_polyak);
  return loss;
}

void hiql_policy_step(HiqlState& state, const Maze& maze,
                      const PolicyBatch& batch) {
  const std::size_t n = batch.s.size();
  if (n == 0) throw std::invalid_argument("hiql_policy_step: empty batch");
  const double inv_n = 1.0 / double(n);
  Gradient lo_grad, hi_grad;
  lo_grad.reset(state.lo_policy.values.size());
  hi_grad.reset(state.hi_policy.values.size());
  ForwardCache vc, pc;
  double feat[4];
  std::vector<double> d_logits;

  auto value_of = [&](Cell a, Cell b) {
    pair_features(maze, a, b, feat);
    return mlp_forward(state.value, feat, vc)[0];
  };

  for (std::size_t i = 0; i < n; ++i) {
    // low level: advantage of the taken action toward the subgoal
    const double adv_lo =
        value_of(batch.s_next[i], batch.subgoal[i]) -
        value_of(batch.s[i], batch.subgoal[i]);
    const double w_lo = awr_weight(state.hp.alpha, adv_lo);
    pair_features(maze, batch.s[i], batch.subgoal[i], feat);
    auto logits = mlp_forward(state.lo_policy, feat, pc);
    awr_logits_grad(logits, static_cast<int>(batch.a[i]), w_lo, inv_n, d_logits);
    mlp_backward(state.lo_policy, pc, d_logits, lo_grad);

    // high level: subgoal selection toward the relabeled goal
    const double adv_hi = value_of(batch.subgoal[i], batch.goal[i]) -
                          value_of(batch.s[i], batch.goal[i]);
    const double w_hi = awr_weight(state.hp.alpha, adv_hi);
    pair_features(maze, batch.s[i], batch.goal[i], feat);
    auto hi_logits = mlp_forward(state.hi_policy, feat, pc);
    const int sub_index = batch.subgoal[i].y * maze.width() + batch.subgoal[i].x;
    awr_logits_grad(hi_logits, sub_index, w_hi, inv_n, d_logits);
    mlp_backward(state.hi_policy, pc, d_logits, hi_grad);
  }
  apply_sgd(state.lo_policy, lo_grad, state.hp.lr);
  apply_sgd(state.hi_policy, hi_grad, state.hp.lr);
}

QrlStepResult qrl_step(QrlState& state, const Maze& maze,
                       const CriticBatch& batch) {
  const std::size_t n = batch.s.size();
  if (n == 0) throw std::invalid_argument("qrl_step: empty batch");
  const double inv_n = 1.0 / double(n);
  Gradient grad;
  grad.reset(state.dist.values.size());
  QuasimetricCache qc;
  double fa[2], fb[2];

  double mean_dist = 0.0, constraint = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    maze.features(batch.s[i], fa);
    maze.features(batch.goal[i], fb);
    const double dsg = quasimetric_dist(state.dist, fa, fb, qc);
    mean_dist += dsg * inv_n;
    quasimetric_backward(state.dist, qc, -inv_n, grad);

    maze.features(batch.s_next[i], fb);
    const double dss = quasimetric_dist(state.dist, fa, fb, qc);
    constraint += (dss - 1.0) * (dss - 1.0) * inv_n;
    quasimetric_backward(state.dist, qc,
                         state.lagrange * 2.0 * (dss - 1.0) * inv_n, grad);
  }
  QrlStepResult r;
  r.constraint_violation = constraint - state.hp.eps_slack;
  r.loss = -mean_dist + state.lagrange * r.constraint_violation;
  if (!std::isfinite(r.loss)) throw NumericError("qrl_step: loss non-finite");
  apply_sgd(state.dist, grad, state.hp.lr);
  const double eta = 0.01 * state.hp.lr;
  state.lagrange = std::max(0.0, state.lagrange + eta * r.constraint_violation);
  return r;
}

void qrl_policy_step(QrlState& state, const Maze& maze,
                     const PolicyBatch& batch) {
  const std::size_t n = batch.s.size();
  if (n == 0) throw std::invalid_argument("qrl_policy_step: empty batch");
  const double inv_n = 1.0 / double(n);
  Gradient grad;
  grad.reset(state.policy.values.size());
  ForwardCache pc;
  double fa[2], fb[2], feat[4];
  std::vector<double> d_logits;

  for (std::size_t i = 0; i < n; ++i) {
    maze.features(batch.s[i], fa);
    maze.features(batch.goal[i], fb);
    const double d_s = quasimetric_dist(state.dist, fa, fb);
    maze.features(batch.s_next[i], fa);
    const double d_next = quasimetric_dist(state.dist, fa, fb);
    const double adv = d_s - d_next;  // distance decrease
    const double w = awr_weight(state.hp.alpha, adv);
    pair_features(maze, batch.s[i], batch.goal[i], feat);
    auto logits = mlp_forward(state.policy, feat, pc);
    awr_logits_grad(logits, static_cast<int>(batch.a[i]), w, inv_n, d_logits);
    mlp_backward(state.policy, pc, d_logits, grad);
  }
  apply_sgd(state.policy, grad, state.hp.lr);
}

double hiql_critic_loss_for_goal(const HiqlState& state, const Maze& maze,
                                 const CriticBatch& batch, Cell goal) {
  const std::size_t n = batch.s.size();
  ForwardCache vc;
  double feat[4];
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double y;
    if (batch.s[i] == goal) y = 0.0;
    else if (batch.s_next[i] == goal) y = -1.0;
    else {
      pair_features(maze, batch.s_next[i], goal, feat);
      y = -1.0 + state.hp.discount * mlp_forward(state.target, feat, vc)[0];
    }
    pair_features(maze, batch.s[i], goal, feat);
    const double v = mlp_forward(state.value, feat, vc)[0];
    loss += expectile_loss(y - v, state.hp.expectile) / double(n);
  }
  return loss;
}

Gradient hiql_critic_grad_for_goal(const HiqlState& state, const Maze& maze,
                                   const CriticBatch& batch, Cell goal) {
  const std::size_t n = batch.s.size();
  Gradient grad;
  grad.reset(state.value.values.size());
  ForwardCache vc, tc;
  double feat[4];
  std::vector<double> d_out(1);
  for (std::size_t i = 0; i < n; ++i) {
    double y;
    if (batch.s[i] == goal) y = 0.0;
    else if (batch.s_next[i] == goal) y = -1.0;
    else {
      pair_features(maze, batch.s_next[i], goal, feat);
      y = -1.0 + state.hp.discount * mlp_forward(state.target, feat, tc)[0];
    }
    pair_features(maze, batch.s[i], goal, feat);
    const double v = mlp_forward(state.value, feat, vc)[0];
    d_out[0] = -expectile_loss_du(y - v, state.hp.expectile) / double(n);
    mlp_backward(state.value, vc, d_out, grad);
  }
  return grad;
}

double qrl_critic_loss_for_goal(const QrlState& state, const Maze& maze,
                                const CriticBatch& batch, Cell goal) {
  const std::size_t n = batch.s.size();
  double fa[2], fb[2];
  double mean_dist = 0.0, constraint = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    maze.features(batch.s[i], fa);
    maze.features(goal, fb);
    mean_dist += quasimetric_dist(state.dist, fa, fb) / double(n);
    maze.features(batch.s_next[i], fb);
    const double dss = quasimetric_dist(state.dist, fa, fb);
    constraint += (dss - 1.0) * (dss - 1.0) / double(n);
  }
  return -mean_dist +
         state.lagrange * (constraint - state.hp.eps_slack);
}

Gradient qrl_critic_grad_for_goal(const QrlState& state, const Maze& maze,
                                  const CriticBatch& batch, Cell goal) {
  // Penalty form of the quasimetric objective, matching the training loss.
  const std::size_t n = batch.s.size();
  const double inv_n = 1.0 / double(n);
  Gradient grad;
  grad.reset(state.dist.values.size());
  QuasimetricCache qc;
  double fa[2], fb[2];
  for (std::size_t i = 0; i < n; ++i) {
    maze.features(batch.s[i], fa);
    maze.features(goal, fb);
    quasimetric_dist(state.dist, fa, fb, qc);
    quasimetric_backward(state.dist, qc, -inv_n, grad);
    maze.features(batch.s_next[i], fb);
    const double dss = quasimetric_dist(state.dist, fa, fb, qc);
    quasimetric_backward(state.dist, qc,
                         state.lagrange * 2.0 * (dss - 1.0) * inv_n, grad);
  }
  return grad;
}

Gradient hiql_actor_grad_for_goal(const HiqlState& state, const Maze& maze,
                                  const PolicyBatch& batch, Cell goal) {
  const std::size_t n = batch.s.size();
  const double inv_n = 1.0 / double(n);
  Gradient grad;
  grad.reset(state.lo_policy.values.size());
  ForwardCache vc, pc;
  double feat[4];
  std::vector<double> d_logits;
  for (std::size_t i = 0; i < n; ++i) {
    pair_features(maze, batch.s_next[i], goal, feat);
    const double v_next = mlp_forward(state.value, feat, vc)[0];
    pair_features(maze, batch.s[i], goal, feat);
    const double v = mlp_forward(state.value, feat, vc)[0];
    const double w = awr_weight(state.hp.alpha, v_next - v);
    auto logits = mlp_forward(state.lo_policy, feat, pc);
    awr_logits_grad(logits, static_cast<int>(batch.a[i]), w, inv_n, d_logits);
    mlp_backward(state.lo_policy, pc, d_logits, grad);
  }
  return grad;
}

Gradient qrl_actor_grad_for_goal(const QrlState& state, const Maze& maze,
                                 const PolicyBatch& batch, Cell goal) {
  const std::size_t n = batch.s.size();
  const double inv_n = 1.0 / double(n);
  Gradient grad;
  grad.reset(state.policy.values.size());
  ForwardCache pc;
  double fa[2], fb[2], feat[4];
  std::vector<double> d_logits;
  for (std::size_t i = 0; i < n; ++i) {
    maze.features(batch.s[i], fa);
    maze.features(goal, fb);
    const double d_s = quasimetric_dist(state.dist, fa, fb);
    maze.features(batch.s_next[i], fa);
    const double d_next = quasimetric_dist(state.dist, fa, fb);
    const double w = awr_weight(state.hp.alpha, d_s - d_next);
    pair_features(maze, batch.s[i], goal, feat);
    auto logits = mlp_forward(state.policy, feat, pc);
    awr_logits_grad(logits, static_cast<int>(batch.a[i]), w, inv_n, d_logits);
    mlp_backward(state.policy, pc, d_logits, grad);
  }
  return grad;
}

PolicyFn hiql_greedy_policy(const HiqlState& state, const Maze& maze) {
  // Copies keep the policy valid after the learner state moves on.
  auto hi = state.hi_policy;
  auto lo = state.lo_policy;
  const int w = maze.width();
  return [hi = std::move(hi), lo = std::move(lo), &maze, w](Cell s, Cell g) {
    double feat[4];
    maze.features(s, feat);
    maze.features(g, feat + 2);
    auto hi_logits = mlp_forward(hi, feat);
    int best = 0;
    for (std::size_t i = 1; i < hi_logits.size(); ++i)
      if (hi_logits[i] > hi_logits[best]) best = static_cast<int>(i);
    Cell subgoal{best % w, best / w};
    maze.features(subgoal, feat + 2);
    auto lo_logits = mlp_forward(lo, feat);
    int a = 0;
    for (std::size_t i = 1; i < lo_logits.size(); ++i)
      if (lo_logits[i] > lo_logits[a]) a = static_cast<int>(i);
    return static_cast<Action>(a);
  };
}

PolicyFn qrl_greedy_policy(const QrlState& state, const Maze& maze) {
  auto policy = state.policy;
  return [policy = std::move(policy), &maze](Cell s, Cell g) {
    double feat[4];
    maze.features(s, feat);
    maze.features(g, feat + 2);
    auto logits = mlp_forward(policy, feat);
    int a = 0;
    for (std::size_t i = 1; i < logits.size(); ++i)
      if (logits[i] > logits[a]) a = static_cast<int>(i);
    return static_cast<Action>(a);
  };
}

double distance_return(Cell s0, Cell sT, Cell goal) {
  const double d0 = std::hypot(double(s0.x - goal.x), double(s0.y - goal.y));
  const double dT = std::hypot(double(sT.x - goal.x), double(sT.y - goal.y));
  return 1.0 - dT / d0;
}

EvalResult evaluate(const PolicyFn& policy, const Maze& maze,
                    const std::vector<Cell>& goals, int episodes_per_goal,
                    std::uint64_t eval_seed) {
  EvalResult res;
  if (goals.empty() || episodes_per_goal < 1)
    throw std::invalid_argument("evaluate: need goals and episodes");
  const int horizon = maze.horizon();
  double total_success = 0.0, total_ret = 0.0;
  for (std::size_t gi = 0; gi < goals.size(); ++gi) {
    const Cell goal = goals[gi];
    if (!maze.is_free(goal))
      throw std::invalid_argument("evaluate: goal is not a free cell");
    GoalEval ge;
    ge.goal = goal;
    auto dist = maze.bfs_distances(goal);
    for (int ep = 0; ep < episodes_per_goal; ++ep) {
      Rng rng = substream_rng(eval_seed, "episode",
                              {static_cast<std::uint64_t>(gi),
                               static_cast<std::uint64_t>(ep)});
      Cell start;
      do {
        start = maze.random_free_cell(rng);
      } while (start == goal);
      const bool reachable = dist[start.y * maze.width() + start.x] >= 0;
      if (!reachable) ge.reachable = false;

      Cell s = start;
      for (int t = 0; t < horizon && !(s == goal); ++t)
        s = maze.step(s, policy(s, goal));
      const bool success = reachable && s == goal;
      ge.success_ratio += success ? 1.0 : 0.0;
      ge.distance_return += distance_return(start, s, goal);
    }
    ge.success_ratio /= episodes_per_goal;
    ge.distance_return /= episodes_per_goal;
    total_success += ge.success_ratio;
    total_ret += ge.distance_return;
    res.per_goal.push_back(ge);
  }
  res.success_ratio = total_success / double(goals.size());
  res.distance_return = total_ret / double(goals.size());
  return res;
}

std::vector<Cell> pick_eval_goals(const Maze& maze, int n, std::uint64_t seed) {
  auto free = maze.free_cells();
  if (n > static_cast<int>(free.size()))
    throw std::invalid_argument("pick_eval_goals: not enough free cells");
  Rng rng = substream_rng(seed, "eval-goals");
  std::vector<Cell> goals;
  while (static_cast<int>(goals.size()) < n) {
    Cell c = free[rng.uniform_index(free.size())];
    if (std::find(goals.begin(), goals.end(), c) == goals.end())
      goals.push_back(c);
  }
  return goals;
}

void hiql_train_step(HiqlState& state, const Maze& maze,
                     const BatchSampler& sampler, Rng& rng) {
  auto cb = sample_critic_batch(sampler, state.hp.value_sampler, state.hp.batch,
                                rng);
  hiql_critic_step(state, maze, cb);
  auto pb = sample_policy_batch(sampler, state.hp.actor_sampler, state.hp.batch,
                                state.hp.subgoal_steps, rng);
  hiql_policy_step(state, maze, pb);
  ++state.step;
}

void qrl_train_step(QrlState& state, const Maze& maze,
                    const BatchSampler& sampler, Rng& rng) {
  auto cb = sample_critic_batch(sampler, state.hp.value_sampler, state.hp.batch,
                                rng);
  qrl_step(state, maze, cb);
  auto pb = sample_policy_batch(sampler, state.hp.actor_sampler, state.hp.batch,
                                1, rng);
  qrl_policy_step(state, maze, pb);
  ++state.step;
}

namespace {

void put_bytes(std::string& out, const std::string& s) {
  std::uint64_t n = s.size();
  out.append(reinterpret_cast<const char*>(&n), sizeof n);
  out.append(s);
}

std::string take_bytes(const std::string& in, std::size_t& pos) {
  std::uint64_t n;
  if (pos + sizeof n > in.size()) throw std::runtime_error("checkpoint truncated");
  std::memcpy(&n, in.data() + pos, sizeof n);
  pos += sizeof n;
  if (pos + n > in.size()) throw std::runtime_error("checkpoint truncated");
  std::string s = in.substr(pos, n);
  pos += n;
  return s;
}

template <typename T>
void put_pod(std::string& out, const T& v) {
  out.append(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T take_pod(const std::string& in, std::size_t& pos) {
  T v;
  if (pos + sizeof v > in.size()) throw std::runtime_error("checkpoint truncated");
  std::memcpy(&v, in.data() + pos, sizeof v);
  pos += sizeof v;
  return v;
}

}  // namespace

std::string hiql_to_bytes(const HiqlState& s) {
  std::string out = "HIQL1";
  put_pod(out, s.step);
  put_bytes(out, params_to_bytes(s.value));
  put_bytes(out, params_to_bytes(s.target));
  put_bytes(out, params_to_bytes(s.hi_policy));
  put_bytes(out, params_to_bytes(s.lo_policy));
  return out;
}

HiqlState hiql_from_bytes(const std::string& bytes) {
  if (bytes.rfind("HIQL1", 0) != 0)
    throw std::runtime_error("not a HIQL checkpoint");
  std::size_t pos = 5;
  HiqlState s;
  s.step = take_pod<std::int64_t>(bytes, pos);
  s.value = params_from_bytes(take_bytes(bytes, pos));
  s.target = params_from_bytes(take_bytes(bytes, pos));
  s.hi_policy = params_from_bytes(take_bytes(bytes, pos));
  s.lo_policy = params_from_bytes(take_bytes(bytes, pos));
  return s;
}

std::string qrl_to_bytes(const QrlState& s) {
  std::string out = "QRLv1";
  put_pod(out, s.step);
  put_pod(out, s.lagrange);
  put_bytes(out, params_to_bytes(s.dist));
  put_bytes(out, params_to_bytes(s.policy));
  return out;
}

QrlState qrl_from_bytes(const std::string& bytes) {
  if (bytes.rfind("QRLv1", 0) != 0)
    throw std::runtime_error("not a QRL checkpoint");
  std::size_t pos = 5;
  QrlState s;
  s.step = take_pod<std::int64_t>(bytes, pos);
  s.lagrange = take_pod<double>(bytes, pos);
  s.dist = params_from_bytes(take_bytes(bytes, pos));
  s.policy = params_from_bytes(take_bytes(bytes, pos));
  return s;
}

std::uint64_t hiql_params_hash(const HiqlState& s) {
  std::uint64_t h = params_hash(s.value);
  h ^= params_hash(s.target) * 0x9e3779b97f4a7c15ULL;
  h ^= params_hash(s.hi_policy) * 0xc2b2ae3d27d4eb4fULL;
  h ^= params_hash(s.lo_policy) * 0x165667b19e3779f9ULL;
  return h;
}

std::uint64_t qrl_params_hash(const QrlState& s) {
  std::uint64_t h = params_hash(s.dist);
  h ^= params_hash(s.policy) * 0x9e3779b97f4a7c15ULL;
  std::uint64_t lam;
  std::memcpy(&lam, &s.lagrange, sizeof lam);
  h ^= lam * 0xc2b2ae3d27d4eb4fULL;
  return h;
}

}  // namespace gclab
