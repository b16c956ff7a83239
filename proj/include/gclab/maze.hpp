#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gclab/rng.hpp"

namespace gclab {

struct Cell {
  int x = 0;
  int y = 0;
  bool operator==(const Cell&) const = default;
};

enum class Action : int { up = 0, down = 1, left = 2, right = 3, stay = 4 };
inline constexpr int kNumActions = 5;
const char* action_name(Action a);
Action action_from_name(const std::string& s);

// Deterministic gridworld. Moving into a wall or off the grid leaves the
// state unchanged. Free cells must form one connected component (checked at
// construction unless validate=false, which exists for error-path tests).
class Maze {
 public:
  // '#' wall, '.' free, one row per line; row 0 is y=0, column is x.
  static Maze from_text(const std::string& text, std::string id,
                        bool validate = true);
  static Maze load(const std::string& path, bool validate = true);
  // Shipped layouts: "medium" (8x8, 12 walls) and "large" (12x12, 30 walls).
  static Maze builtin(const std::string& id);
  static const std::string& builtin_text(const std::string& id);

  int width() const { return width_; }
  int height() const { return height_; }
  const std::string& id() const { return id_; }
  bool in_bounds(Cell c) const {
    return c.x >= 0 && c.x < width_ && c.y >= 0 && c.y < height_;
  }
  bool is_wall(Cell c) const { return walls_[c.y * width_ + c.x] != 0; }
  bool is_free(Cell c) const { return in_bounds(c) && !is_wall(c); }
  int wall_count() const;
  std::vector<Cell> free_cells() const;
  bool connected() const;

  Cell step(Cell state, Action a) const;

  // BFS distances from `from` over free cells; -1 where unreachable.
  std::vector<int> bfs_distances(Cell from) const;
  // Shortest path (states, inclusive of both ends); empty if unreachable.
  std::vector<Cell> shortest_path(Cell from, Cell to) const;

  Cell random_free_cell(Rng& rng) const;

  // Evaluation horizon: 4 * (width + height) steps.
  int horizon() const { return 4 * (width_ + height_); }

  // Normalized [0,1]^2 features of a cell.
  void features(Cell c, double* out2) const;

  std::string to_text() const;

 private:
  int width_ = 0, height_ = 0;
  std::string id_;
  std::vector<std::uint8_t> walls_;
};

enum class SourceTag { expert, explore };

struct Trajectory {
  std::vector<Cell> states;
  std::vector<Action> actions;  // length == states.size() - 1
  SourceTag tag = SourceTag::expert;
};

struct OfflineDataset {
  std::vector<Trajectory> trajectories;
  double explore_ratio = 0.0;
  std::string maze_id;
  std::uint64_t rng_seed = 0;

  std::size_t transition_count() const;
  std::size_t state_count() const;
  std::uint64_t content_hash() const;
};

// Shortest-path (BFS) trajectories between uniformly random distinct free
// start/goal pairs, truncated to max_len states.
std::vector<Trajectory> gen_expert(const Maze& maze, int n_traj, int max_len,
                                   std::uint64_t seed);

// Uniform random walks of exactly `len` states.
std::vector<Trajectory> gen_explore(const Maze& maze, int n_traj, int len,
                                    std::uint64_t seed);

// Samples round(explore_ratio * total_traj) explore and the rest expert,
// without replacement, in seeded order.
OfflineDataset mix_datasets(const std::vector<Trajectory>& expert,
                            const std::vector<Trajectory>& explore,
                            double explore_ratio, int total_traj,
                            std::uint64_t seed, const std::string& maze_id);

// Explore ratio of the scheduled regime: phases 1..4 -> 1.0, 0.8, 0.4, 0.0.
double scheduled_explore_ratio(int phase_index);

struct DatasetGenParams {
  int total_traj = 600;
  int expert_max_len = 64;
  int explore_len = 24;
};

// Generates source pools and mixes them at the given ratio.
OfflineDataset make_mixture(const Maze& maze, double explore_ratio,
                            const DatasetGenParams& params, std::uint64_t seed);

// Dataset for phase i (1-based) of the scheduled regime.
OfflineDataset scheduled_regime(const Maze& maze, int phase_index,
                                const DatasetGenParams& params,
                                std::uint64_t seed);

// JSON lines, one trajectory per line: {"states":[[x,y],..],"actions":[..],"tag":..}
std::string dataset_to_jsonl(const OfflineDataset& ds);
OfflineDataset dataset_from_jsonl(const std::string& text,
                                  const std::string& maze_id);

}  // namespace gclab
