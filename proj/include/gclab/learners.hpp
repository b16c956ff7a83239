#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "gclab/config_space.hpp"
#include "gclab/diffnet.hpp"
#include "gclab/goal_sampling.hpp"
#include "gclab/maze.hpp"

namespace gclab {

enum class Algo { hiql, qrl };
const char* algo_name(Algo a);
Algo algo_from_name(const std::string& s);

// Resolved hyperparameters; any dimension present in the configuration's
// space overrides the default. Goal-sampler gammas track `discount`.
struct LearnerHyper {
  double lr = 1e-3;
  double discount = 0.99;
  double alpha = 3.0;
  int batch = 64;
  GoalSamplerSpec value_sampler;
  GoalSamplerSpec actor_sampler;
  // HIQL
  double expectile = 0.7;
  double tau_polyak = 0.005;
  int subgoal_steps = 3;
  // QRL; used directly as the squared slack bound in the Lagrangian
  double eps_slack = 0.05;
};

LearnerHyper hiql_default_hyper();
LearnerHyper qrl_default_hyper();
LearnerHyper default_hyper(Algo a);

// Desk-scale search-space schema for each algorithm (see assets/spaces/).
const std::string& builtin_space_text(Algo a);
LearnerHyper resolve_hyper(const ConfigSpace& space, const Configuration& c,
                           const LearnerHyper& defaults);
// Inverse mapping, for slice defaults: writes known names into a Configuration.
Configuration hyper_to_config(const ConfigSpace& space,
                              const LearnerHyper& hyper);

// Desk-scale network shapes.
struct NetSpec {
  std::vector<int> hidden{64, 64};
  int qm_groups = 4;
  int qm_group_size = 4;
};

struct HiqlState {
  ParamVector value, target;      // target topology mirrors value
  ParamVector hi_policy;          // logits over width*height subgoal cells
  ParamVector lo_policy;          // logits over the 5 actions
  LearnerHyper hp;
  std::int64_t step = 0;
};

struct QrlState {
  ParamVector dist;               // quasimetric encoder
  ParamVector policy;             // flat logits over the 5 actions
  double lagrange = 1.0;
  LearnerHyper hp;
  std::int64_t step = 0;
};

HiqlState make_hiql_state(const Maze& maze, const LearnerHyper& hp,
                          const NetSpec& net, Rng& rng);
QrlState make_qrl_state(const Maze& maze, const LearnerHyper& hp,
                        const NetSpec& net, Rng& rng);

// Exact learner-state serialization (params + duals + step counter).
std::string hiql_to_bytes(const HiqlState& s);
HiqlState hiql_from_bytes(const std::string& bytes);
std::string qrl_to_bytes(const QrlState& s);
QrlState qrl_from_bytes(const std::string& bytes);
std::uint64_t hiql_params_hash(const HiqlState& s);
std::uint64_t qrl_params_hash(const QrlState& s);

// Uniform sampling of dataset transitions plus goal relabeling.
class BatchSampler {
 public:
  explicit BatchSampler(const OfflineDataset& ds);
  const OfflineDataset& dataset() const { return *ds_; }
  const StateIndex& state_index() const { return states_; }
  // Uniform over all transitions; returns (trajectory, t).
  std::pair<std::size_t, std::size_t> sample_transition(Rng& rng) const;
  Cell relabel(const GoalSamplerSpec& spec, std::size_t traj, std::size_t t,
               Rng& rng) const;
  // m goals drawn from the relabeling distribution at random positions.
  std::vector<Cell> sample_goal_set(const GoalSamplerSpec& spec, int m,
                                    Rng& rng) const;

 private:
  const OfflineDataset* ds_;
  StateIndex states_;
  std::vector<std::size_t> trans_cumulative_;
  std::size_t trans_total_ = 0;
};

struct CriticBatch {
  std::vector<Cell> s, s_next, goal;
};
struct PolicyBatch {
  std::vector<Cell> s, s_next, subgoal, goal;
  std::vector<Action> a;
};

CriticBatch sample_critic_batch(const BatchSampler& sampler,
                                const GoalSamplerSpec& spec, int n, Rng& rng);
// Transitions without relabeled goals (gradient-diagnostic minibatches).
CriticBatch sample_transition_batch(const BatchSampler& sampler, int n,
                                    Rng& rng);
PolicyBatch sample_policy_batch(const BatchSampler& sampler,
                                const GoalSamplerSpec& spec, int n,
                                int subgoal_steps, Rng& rng);

// AWR weight exp(alpha * advantage), clipped at 100.
double awr_weight(double alpha, double advantage);

// One expectile-TD step on the bootstrapped target (no gradient through the
// target network), then a Polyak update of the target. Returns the loss.
double hiql_critic_step(HiqlState& state, const Maze& maze,
                        const CriticBatch& batch);

// AWR updates of both policies; weights exp(alpha * advantage) clipped at 100.
void hiql_policy_step(HiqlState& state, const Maze& maze,
                      const PolicyBatch& batch);

struct QrlStepResult {
  double loss = 0.0;
  double constraint_violation = 0.0;  // mean (d(s,s')-1)^2 - slack
};

// Gradient step on L = -mean d(s,g) + lambda * (mean (d(s,s')-1)^2 - slack),
// then dual ascent on lambda (clamped at 0) with step 0.01 * lr.
QrlStepResult qrl_step(QrlState& state, const Maze& maze,
                       const CriticBatch& batch);

// AWR on the flat policy with advantage d(s,g) - d(s',g).
void qrl_policy_step(QrlState& state, const Maze& maze,
                     const PolicyBatch& batch);

// Critic-loss gradient for a single fixed goal on a fixed minibatch, taken
// w.r.t. the critic parameters (value net / distance encoder).
Gradient hiql_critic_grad_for_goal(const HiqlState& state, const Maze& maze,
                                   const CriticBatch& batch, Cell goal);
Gradient qrl_critic_grad_for_goal(const QrlState& state, const Maze& maze,
                                  const CriticBatch& batch, Cell goal);
// Actor-loss gradients for a fixed goal (HIQL: low-level policy conditioned
// on the goal as subgoal; QRL: flat policy).
Gradient hiql_actor_grad_for_goal(const HiqlState& state, const Maze& maze,
                                  const PolicyBatch& batch, Cell goal);
Gradient qrl_actor_grad_for_goal(const QrlState& state, const Maze& maze,
                                 const PolicyBatch& batch, Cell goal);
double hiql_critic_loss_for_goal(const HiqlState& state, const Maze& maze,
                                 const CriticBatch& batch, Cell goal);
double qrl_critic_loss_for_goal(const QrlState& state, const Maze& maze,
                                const CriticBatch& batch, Cell goal);

using PolicyFn = std::function<Action(Cell state, Cell goal)>;

PolicyFn hiql_greedy_policy(const HiqlState& state, const Maze& maze);
PolicyFn qrl_greedy_policy(const QrlState& state, const Maze& maze);

struct GoalEval {
  Cell goal;
  double success_ratio = 0.0;
  double distance_return = 0.0;
  bool reachable = true;
};

struct EvalResult {
  double success_ratio = 0.0;
  double distance_return = 0.0;
  std::vector<GoalEval> per_goal;
};

// Greedy rollouts up to the maze horizon from uniformly random starts
// (distinct from the goal); success is goal arrival, distance return is
// 1 - |s_T - g| / |s_0 - g| in Euclidean cell coordinates.
EvalResult evaluate(const PolicyFn& policy, const Maze& maze,
                    const std::vector<Cell>& goals, int episodes_per_goal,
                    std::uint64_t eval_seed);

// Eq.-style distance return for one episode.
double distance_return(Cell s0, Cell sT, Cell goal);

std::vector<Cell> pick_eval_goals(const Maze& maze, int n, std::uint64_t seed);

// One full training step (critic + policies) with per-step substreams.
void hiql_train_step(HiqlState& state, const Maze& maze,
                     const BatchSampler& sampler, Rng& rng);
void qrl_train_step(QrlState& state, const Maze& maze,
                    const BatchSampler& sampler, Rng& rng);

}  // namespace gclab
