#include <cmath>

#include "doctest.h"
#include "gclab/learners.hpp"
#include "../common/gradcheck.hpp"

using namespace gclab;

namespace {

Maze corridor5() {
  return Maze::from_text(".....\n", "corridor5");
}

OfflineDataset one_step_dataset() {
  OfflineDataset ds;
  ds.maze_id = "corridor5";
  Trajectory t;
  t.states = {{0, 0}, {1, 0}};
  t.actions = {Action::right};
  t.tag = SourceTag::expert;
  ds.trajectories = {t};
  return ds;
}

NetSpec tiny_net() {
  NetSpec n;
  n.hidden = {16, 16};
  n.qm_groups = 3;
  n.qm_group_size = 3;
  return n;
}

}  // namespace

TEST_SUITE("learners") {

TEST_CASE("terminal target arithmetic: arriving transitions regress to -1") {
  const Maze m = corridor5();
  Rng rng(1);
  auto st = make_hiql_state(m, hiql_default_hyper(), tiny_net(), rng);
  CriticBatch b;
  b.s = {{0, 0}};
  b.s_next = {{1, 0}};
  b.goal = {{1, 0}};  // s' == g
  double feat[4];
  m.features(b.s[0], feat);
  m.features(b.goal[0], feat + 2);
  const double v = mlp_forward(st.value, feat)[0];
  const double loss = hiql_critic_step(st, m, b);
  // y = r + discount * 0 = -1, so the loss is the expectile loss of -1 - V
  CHECK(loss ==
        doctest::Approx(expectile_loss(-1.0 - v, st.hp.expectile)).epsilon(1e-12));

  // a sample already on the goal anchors V(g,g) toward 0
  CriticBatch on_goal;
  on_goal.s = {{1, 0}};
  on_goal.s_next = {{2, 0}};
  on_goal.goal = {{1, 0}};
  m.features(on_goal.s[0], feat);
  m.features(on_goal.goal[0], feat + 2);
  const double vg = mlp_forward(st.value, feat)[0];
  const double loss2 = hiql_critic_step(st, m, on_goal);
  CHECK(loss2 ==
        doctest::Approx(expectile_loss(0.0 - vg, st.hp.expectile)).epsilon(1e-12));
}

TEST_CASE("polyak tau = 1 makes the target equal the online net") {
  const Maze m = corridor5();
  Rng rng(2);
  auto hp = hiql_default_hyper();
  hp.tau_polyak = 1.0;
  auto st = make_hiql_state(m, hp, tiny_net(), rng);
  CriticBatch b;
  b.s = {{0, 0}};
  b.s_next = {{1, 0}};
  b.goal = {{3, 0}};
  hiql_critic_step(st, m, b);
  CHECK(st.target.values == st.value.values);
}

TEST_CASE("polyak matches the scalar closed form") {
  // target_n = (1-tau)^n t0 + (1 - (1-tau)^n) v for a constant online value
  ParamVector online{Topology::mlp(1, {}, 1), {2.0, 0.0}};
  ParamVector target{Topology::mlp(1, {}, 1), {10.0, 0.0}};
  const double tau = 0.1;
  const int n = 25;
  for (int i = 0; i < n; ++i) polyak_update(target, online, tau);
  const double expect = std::pow(1 - tau, n) * 10.0 +
                        (1 - std::pow(1 - tau, n)) * 2.0;
  CHECK(target.values[0] == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("single-transition critic converges to the -1 fixed point") {
  const Maze m = corridor5();
  Rng rng(3);
  auto hp = hiql_default_hyper();
  hp.lr = 1e-2;
  hp.discount = 0.9;
  auto st = make_hiql_state(m, hp, tiny_net(), rng);
  CriticBatch b;
  b.s = {{0, 0}};
  b.s_next = {{1, 0}};
  b.goal = {{1, 0}};
  for (int i = 0; i < 500; ++i) hiql_critic_step(st, m, b);
  double feat[4];
  m.features(b.s[0], feat);
  m.features(b.goal[0], feat + 2);
  CHECK(mlp_forward(st.value, feat)[0] == doctest::Approx(-1.0).epsilon(0.05));
}

TEST_CASE("bootstrap isolation: the HIQL gradient depends on the target net") {
  const Maze m = corridor5();
  Rng rng(4);
  auto st = make_hiql_state(m, hiql_default_hyper(), tiny_net(), rng);
  CriticBatch b;
  b.s = {{0, 0}, {1, 0}};
  b.s_next = {{1, 0}, {2, 0}};
  b.goal = {{4, 0}, {4, 0}};  // bootstrapped targets in play
  const auto g1 = hiql_critic_grad_for_goal(st, m, b, {4, 0});
  for (auto& v : st.target.values) v = 0.0;
  const auto g2 = hiql_critic_grad_for_goal(st, m, b, {4, 0});
  CHECK(g1.values != g2.values);
}

TEST_CASE("AWR weights: positivity and clipping") {
  CHECK(awr_weight(30.0, 10.0) == 100.0);  // min(exp(300), 100)
  CHECK(awr_weight(0.0, 123.0) == 1.0);
  CHECK(awr_weight(3.0, -2.0) == doctest::Approx(std::exp(-6.0)));
  CHECK(awr_weight(3.0, -1000.0) > 0.0);
  // greedy action toward the goal gets the largest weight when the distance
  // is the exact corridor shortest path
  auto dist = [](Cell a, Cell b) { return std::abs(a.x - b.x); };
  const Cell s{1, 0}, g{4, 0};
  const Maze m = corridor5();
  double best_w = -1.0;
  Action best = Action::stay;
  for (int a = 0; a < kNumActions; ++a) {
    const Cell nxt = m.step(s, static_cast<Action>(a));
    const double w = awr_weight(3.0, dist(s, g) - dist(nxt, g));
    if (w > best_w) {
      best_w = w;
      best = static_cast<Action>(a);
    }
  }
  CHECK(best == Action::right);
}

TEST_CASE("alpha = 0 policy update reduces to behavioral cloning") {
  const Maze m = corridor5();
  Rng rng(5);
  auto hp = qrl_default_hyper();
  hp.alpha = 0.0;
  hp.lr = 0.1;
  auto st = make_qrl_state(m, hp, tiny_net(), rng);
  const auto init = st.policy;

  PolicyBatch b;
  b.s = {{0, 0}, {2, 0}};
  b.s_next = {{1, 0}, {3, 0}};
  b.subgoal = b.s_next;
  b.goal = {{4, 0}, {4, 0}};
  b.a = {Action::right, Action::right};
  qrl_policy_step(st, m, b);

  // hand-built behavioral cloning step: weights identically 1
  ParamVector expect = init;
  Gradient grad;
  grad.reset(expect.values.size());
  ForwardCache pc;
  for (std::size_t i = 0; i < b.s.size(); ++i) {
    double feat[4];
    m.features(b.s[i], feat);
    m.features(b.goal[i], feat + 2);
    auto logits = mlp_forward(expect, feat, pc);
    double mx = logits[0];
    for (double v : logits) mx = std::max(mx, v);
    double z = 0;
    for (double v : logits) z += std::exp(v - mx);
    std::vector<double> d(logits.size());
    for (std::size_t k = 0; k < logits.size(); ++k)
      d[k] = (std::exp(logits[k] - mx) / z -
              (k == std::size_t(b.a[i]) ? 1.0 : 0.0)) /
             double(b.s.size());
    mlp_backward(expect, pc, d, grad);
  }
  apply_sgd(expect, grad, hp.lr);
  for (std::size_t i = 0; i < expect.values.size(); ++i)
    CHECK(st.policy.values[i] == doctest::Approx(expect.values[i]).epsilon(1e-12));
}

TEST_CASE("qrl step with lambda = 0 only increases mean distance") {
  const Maze m = corridor5();
  Rng rng(6);
  auto st = make_qrl_state(m, qrl_default_hyper(), tiny_net(), rng);
  st.lagrange = 0.0;
  const auto before = st.dist;
  CriticBatch b;
  b.s = {{0, 0}, {1, 0}};
  b.s_next = {{1, 0}, {2, 0}};
  b.goal = {{4, 0}, {3, 0}};
  qrl_step(st, m, b);

  // expected update: gradient of -mean d(s,g) only
  Gradient grad;
  grad.reset(before.values.size());
  QuasimetricCache qc;
  for (std::size_t i = 0; i < b.s.size(); ++i) {
    double fa[2], fb[2];
    m.features(b.s[i], fa);
    m.features(b.goal[i], fb);
    quasimetric_dist(before, fa, fb, qc);
    quasimetric_backward(before, qc, -0.5, grad);
  }
  ParamVector expect = before;
  apply_sgd(expect, grad, st.hp.lr);
  for (std::size_t i = 0; i < expect.values.size(); ++i)
    CHECK(st.dist.values[i] == doctest::Approx(expect.values[i]).epsilon(1e-12));
}

TEST_CASE("dual variable decays to zero and clamps when the constraint holds") {
  const Maze m = corridor5();
  Rng rng(7);
  auto hp = qrl_default_hyper();
  hp.lr = 0.05;
  hp.eps_slack = 4.0;  // slack so large the constraint is always satisfied
  auto st = make_qrl_state(m, hp, tiny_net(), rng);
  CriticBatch b;
  b.s = {{0, 0}};
  b.s_next = {{1, 0}};
  b.goal = {{4, 0}};
  for (int i = 0; i < 5000; ++i) {
    const auto r = qrl_step(st, m, b);
    CHECK(r.constraint_violation < 0.0);
    CHECK(st.lagrange >= 0.0);
  }
  CHECK(st.lagrange == 0.0);
}

TEST_CASE("two-state chain drives d(s, s') near 1") {
  const Maze m = corridor5();
  Rng rng(8);
  auto hp = qrl_default_hyper();
  hp.lr = 0.05;
  hp.eps_slack = 1e-4;
  hp.batch = 16;
  auto st = make_qrl_state(m, hp, tiny_net(), rng);
  st.lagrange = 5.0;
  const auto ds = one_step_dataset();
  BatchSampler sampler(ds);
  Rng train(9);
  for (int i = 0; i < 5000; ++i) {
    auto b = sample_critic_batch(sampler, hp.value_sampler, hp.batch, train);
    qrl_step(st, m, b);
  }
  double fa[2], fb[2];
  m.features({0, 0}, fa);
  m.features({1, 0}, fb);
  CHECK(quasimetric_dist(st.dist, fa, fb) == doctest::Approx(1.0).epsilon(0.1));
}

TEST_CASE("distance return arithmetic") {
  CHECK(distance_return({0, 0}, {4, 0}, {4, 0}) == 1.0);
  CHECK(distance_return({0, 0}, {0, 0}, {4, 0}) == 0.0);
  CHECK(distance_return({0, 0}, {2, 0}, {4, 0}) == doctest::Approx(0.5));
  CHECK(distance_return({0, 0}, {6, 0}, {3, 0}) == doctest::Approx(0.0));
  // moving away goes negative
  CHECK(distance_return({2, 0}, {0, 0}, {4, 0}) < 0.0);
}

TEST_CASE("evaluate: stay policy scores zero, oracle policy scores one") {
  const Maze m = Maze::builtin("medium");
  const auto goals = pick_eval_goals(m, 6, 42);
  PolicyFn stay = [](Cell, Cell) { return Action::stay; };
  const auto r0 = evaluate(stay, m, goals, 10, 7);
  CHECK(r0.success_ratio == 0.0);
  CHECK(r0.distance_return == doctest::Approx(0.0));

  PolicyFn oracle_policy = [&m](Cell s, Cell g) {
    const auto path = m.shortest_path(s, g);
    if (path.size() < 2) return Action::stay;
    const Cell nxt = path[1];
    if (nxt.x > s.x) return Action::right;
    if (nxt.x < s.x) return Action::left;
    if (nxt.y > s.y) return Action::down;
    return Action::up;
  };
  const auto r1 = evaluate(oracle_policy, m, goals, 10, 7);
  CHECK(r1.success_ratio == 1.0);
  CHECK(r1.distance_return == 1.0);

  // determinism
  const auto r2 = evaluate(oracle_policy, m, goals, 10, 7);
  CHECK(r2.success_ratio == r1.success_ratio);
  CHECK(r2.distance_return == r1.distance_return);
}

TEST_CASE("unreachable goals are flagged and count as failures") {
  const std::string split = "..#..\n..#..\n..#..\n..#..\n..#..\n";
  const Maze m = Maze::from_text(split, "split", /*validate=*/false);
  PolicyFn stay = [](Cell, Cell) { return Action::stay; };
  const std::vector<Cell> goals{{4, 2}};
  const auto r = evaluate(stay, m, goals, 20, 3);
  CHECK(r.per_goal[0].reachable == false);
  CHECK(r.success_ratio == 0.0);
}

TEST_CASE("critic gradients match finite differences for both learners") {
  const Maze m = corridor5();
  Rng rng(10);
  auto hiql = make_hiql_state(m, hiql_default_hyper(), tiny_net(), rng);
  CriticBatch b;
  b.s = {{0, 0}, {1, 0}, {2, 0}};
  b.s_next = {{1, 0}, {2, 0}, {3, 0}};
  const Cell goal{4, 0};
  {
    const auto grad = hiql_critic_grad_for_goal(hiql, m, b, goal);
    auto loss = [&](const ParamVector& q) {
      HiqlState tmp = hiql;
      tmp.value = q;
      return hiql_critic_loss_for_goal(tmp, m, b, goal);
    };
    const auto fd = oracle::finite_diff(hiql.value, loss);
    CHECK(oracle::max_rel_error(grad.values, fd) < 1e-4);
  }
  auto qrl = make_qrl_state(m, qrl_default_hyper(), tiny_net(), rng);
  qrl.lagrange = 1.7;
  {
    const auto grad = qrl_critic_grad_for_goal(qrl, m, b, goal);
    auto loss = [&](const ParamVector& q) {
      QrlState tmp = qrl;
      tmp.dist = q;
      return qrl_critic_loss_for_goal(tmp, m, b, goal);
    };
    const auto fd = oracle::finite_diff(qrl.dist, loss);
    CHECK(oracle::max_rel_error(grad.values, fd) < 1e-4);
  }
}

TEST_CASE("resolve_hyper reads configuration dimensions by name") {
  const auto space = ConfigSpace::parse(builtin_space_text(Algo::hiql));
  auto defaults = hiql_default_hyper();
  auto config = hyper_to_config(space, defaults);
  config.values[space.index_of("lr")] = 3e-4;
  config.values[space.index_of("batch")] = 32;
  config.values[space.index_of("value_geom_sample")] = 0.0;
  const auto h = resolve_hyper(space, config, defaults);
  CHECK(h.lr == 3e-4);
  CHECK(h.batch == 32);
  CHECK(h.value_sampler.geom_sample == false);
  CHECK(h.actor_sampler.gamma == h.discount);
}

TEST_CASE("learner state serialization round trips exactly") {
  const Maze m = corridor5();
  Rng rng(11);
  auto hiql = make_hiql_state(m, hiql_default_hyper(), tiny_net(), rng);
  hiql.step = 1234;
  auto h2 = hiql_from_bytes(hiql_to_bytes(hiql));
  CHECK(h2.step == hiql.step);
  CHECK(h2.value.values == hiql.value.values);
  CHECK(h2.target.values == hiql.target.values);
  CHECK(h2.hi_policy.values == hiql.hi_policy.values);
  CHECK(h2.lo_policy.values == hiql.lo_policy.values);

  auto qrl = make_qrl_state(m, qrl_default_hyper(), tiny_net(), rng);
  qrl.lagrange = 2.5;
  qrl.step = 77;
  auto q2 = qrl_from_bytes(qrl_to_bytes(qrl));
  CHECK(q2.lagrange == qrl.lagrange);
  CHECK(q2.step == qrl.step);
  CHECK(q2.dist.values == qrl.dist.values);
  CHECK(q2.policy.values == qrl.policy.values);
  CHECK(qrl_params_hash(q2) == qrl_params_hash(qrl));
}

}  // TEST_SUITE
