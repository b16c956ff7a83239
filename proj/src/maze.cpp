#include "gclab/maze.hpp"

#include <algorithm>
#include <deque>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace gclab {

namespace {

// Layout assets are versioned: changing them invalidates recorded results.
const std::string kMediumLayout =
    "........\n"
    ".##..#..\n"
    "....##..\n"
    ".##.....\n"
    "......#.\n"
    ".#..##..\n"
    ".#......\n"
    "........\n";

const std::string kLargeLayout =
    "............\n"
    ".##..##..#..\n"
    ".#........#.\n"
    "....##......\n"
    ".##....###..\n"
    ".......#....\n"
    "..#....#..#.\n"
    "..#.#...##..\n"
    "....#....#..\n"
    ".##...#.....\n"
    "......#..##.\n"
    "............\n";

constexpr int kDx[kNumActions] = {0, 0, -1, 1, 0};
constexpr int kDy[kNumActions] = {-1, 1, 0, 0, 0};

}  // namespace

const char* action_name(Action a) {
  switch (a) {
    case Action::up: return "up";
    case Action::down: return "down";
    case Action::left: return "left";
    case Action::right: return "right";
    case Action::stay: return "stay";
  }
  return "?";
}

Action action_from_name(const std::string& s) {
  for (int i = 0; i < kNumActions; ++i)
    if (s == action_name(static_cast<Action>(i))) return static_cast<Action>(i);
  throw std::invalid_argument("unknown action: " + s);
}

Maze Maze::from_text(const std::string& text, std::string id, bool validate) {
  Maze m;
  m.id_ = std::move(id);
  std::istringstream in(text);
  std::string line;
  std::vector<std::string> rows;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    rows.push_back(line);
  }
  if (rows.empty()) throw std::invalid_argument("maze layout is empty");
  m.height_ = static_cast<int>(rows.size());
  m.width_ = static_cast<int>(rows[0].size());
  m.walls_.assign(m.width_ * m.height_, 0);
  for (int y = 0; y < m.height_; ++y) {
    if (static_cast<int>(rows[y].size()) != m.width_)
      throw std::invalid_argument("maze layout has ragged rows");
    for (int x = 0; x < m.width_; ++x) {
      char c = rows[y][x];
      if (c == '#') m.walls_[y * m.width_ + x] = 1;
      else if (c != '.')
        throw std::invalid_argument(std::string("bad maze char: ") + c);
    }
  }
  if (validate && !m.connected())
    throw std::invalid_argument("maze free cells are not connected");
  return m;
}

Maze Maze::load(const std::string& path, bool validate) {
  std::ifstream f(path);
  if (!f) throw std::invalid_argument("cannot open maze file: " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return from_text(ss.str(), path, validate);
}

const std::string& Maze::builtin_text(const std::string& id) {
  if (id == "medium") return kMediumLayout;
  if (id == "large") return kLargeLayout;
  throw std::invalid_argument("unknown builtin maze: " + id);
}

Maze Maze::builtin(const std::string& id) {
  return from_text(builtin_text(id), id);
}

int Maze::wall_count() const {
  int n = 0;
  for (auto w : walls_) n += w;
  return n;
}

std::vector<Cell> Maze::free_cells() const {
  std::vector<Cell> out;
  for (int y = 0; y < height_; ++y)
    for (int x = 0; x < width_; ++x)
      if (!walls_[y * width_ + x]) out.push_back({x, y});
  return out;
}

Cell Maze::step(Cell state, Action a) const {
  const int i = static_cast<int>(a);
  Cell next{state.x + kDx[i], state.y + kDy[i]};
  if (!in_bounds(next) || is_wall(next)) return state;
  return next;
}

std::vector<int> Maze::bfs_distances(Cell from) const {
  std::vector<int> dist(width_ * height_, -1);
  if (!is_free(from)) return dist;
  std::deque<Cell> q{from};
  dist[from.y * width_ + from.x] = 0;
  while (!q.empty()) {
    Cell c = q.front();
    q.pop_front();
    const int d = dist[c.y * width_ + c.x];
    for (int a = 0; a < 4; ++a) {  // movement actions only
      Cell n{c.x + kDx[a], c.y + kDy[a]};
      if (!in_bounds(n) || is_wall(n)) continue;
      int& dn = dist[n.y * width_ + n.x];
      if (dn < 0) {
        dn = d + 1;
        q.push_back(n);
      }
    }
  }
  return dist;
}

bool Maze::connected() const {
  auto free = free_cells();
  if (free.empty()) return false;
  auto dist = bfs_distances(free[0]);
  return std::all_of(free.begin(), free.end(), [&](Cell c) {
    return dist[c.y * width_ + c.x] >= 0;
  });
}

std::vector<Cell> Maze::shortest_path(Cell from, Cell to) const {
  auto dist = bfs_distances(to);  // distances toward the goal
  if (!is_free(from) || dist[from.y * width_ + from.x] < 0) return {};
  std::vector<Cell> path{from};
  Cell c = from;
  while (!(c == to)) {
    const int d = dist[c.y * width_ + c.x];
    for (int a = 0; a < 4; ++a) {
      Cell n{c.x + kDx[a], c.y + kDy[a]};
      if (in_bounds(n) && !is_wall(n) && dist[n.y * width_ + n.x] == d - 1) {
        c = n;
        break;
      }
    }
    path.push_back(c);
  }
  return path;
}

Cell Maze::random_free_cell(Rng& rng) const {
  // Rejection over the bounding box keeps the draw uniform over free cells.
  for (;;) {
    Cell c{static_cast<int>(rng.uniform_index(width_)),
           static_cast<int>(rng.uniform_index(height_))};
    if (!is_wall(c)) return c;
  }
}

void Maze::features(Cell c, double* out2) const {
  out2[0] = width_ > 1 ? double(c.x) / (width_ - 1) : 0.0;
  out2[1] = height_ > 1 ? double(c.y) / (height_ - 1) : 0.0;
}

std::string Maze::to_text() const {
  std::string out;
  for (int y = 0; y < height_; ++y) {
    for (int x = 0; x < width_; ++x)
      out += walls_[y * width_ + x] ? '#' : '.';
    out += '\n';
  }
  return out;
}

std::size_t OfflineDataset::transition_count() const {
  std::size_t n = 0;
  for (const auto& t : trajectories) n += t.actions.size();
  return n;
}

std::size_t OfflineDataset::state_count() const {
  std::size_t n = 0;
  for (const auto& t : trajectories) n += t.states.size();
  return n;
}

std::uint64_t OfflineDataset::content_hash() const {
  std::uint64_t h = fnv1a(maze_id);
  for (const auto& t : trajectories) {
    std::uint32_t tag = t.tag == SourceTag::expert ? 0 : 1;
    h = fnv1a(&tag, sizeof tag, h);
    for (const auto& s : t.states) {
      h = fnv1a(&s.x, sizeof s.x, h);
      h = fnv1a(&s.y, sizeof s.y, h);
    }
    for (auto a : t.actions) {
      int ai = static_cast<int>(a);
      h = fnv1a(&ai, sizeof ai, h);
    }
  }
  return h;
}

std::vector<Trajectory> gen_expert(const Maze& maze, int n_traj, int max_len,
                                   std::uint64_t seed) {
  if (n_traj < 1) throw std::invalid_argument("gen_expert: n_traj must be >= 1");
  if (max_len < 2) throw std::invalid_argument("gen_expert: max_len must be >= 2");
  Rng rng(seed);
  std::vector<Trajectory> out;
  out.reserve(n_traj);
  constexpr int kResampleBound = 64;
  for (int i = 0; i < n_traj; ++i) {
    Cell start{}, goal{};
    int tries = 0;
    do {
      if (++tries > kResampleBound)
        throw std::runtime_error("gen_expert: could not sample distinct start/goal");
      start = maze.random_free_cell(rng);
      goal = maze.random_free_cell(rng);
    } while (start == goal);
    auto path = maze.shortest_path(start, goal);
    if (static_cast<int>(path.size()) > max_len) path.resize(max_len);

    Trajectory t;
    t.tag = SourceTag::expert;
    t.states = std::move(path);
    t.actions.reserve(t.states.size() - 1);
    for (std::size_t k = 0; k + 1 < t.states.size(); ++k) {
      const Cell a = t.states[k], b = t.states[k + 1];
      if (b.x == a.x + 1) t.actions.push_back(Action::right);
      else if (b.x == a.x - 1) t.actions.push_back(Action::left);
      else if (b.y == a.y + 1) t.actions.push_back(Action::down);
      else t.actions.push_back(Action::up);
    }
    out.push_back(std::move(t));
  }
  return out;
}

std::vector<Trajectory> gen_explore(const Maze& maze, int n_traj, int len,
                                    std::uint64_t seed) {
  if (len < 2) throw std::invalid_argument("gen_explore: len must be >= 2");
  Rng rng(seed);
  std::vector<Trajectory> out;
  out.reserve(n_traj);
  for (int i = 0; i < n_traj; ++i) {
    Trajectory t;
    t.tag = SourceTag::explore;
    Cell c = maze.random_free_cell(rng);
    t.states.push_back(c);
    for (int k = 1; k < len; ++k) {
      auto a = static_cast<Action>(rng.uniform_index(kNumActions));
      c = maze.step(c, a);
      t.actions.push_back(a);
      t.states.push_back(c);
    }
    out.push_back(std::move(t));
  }
  return out;
}

OfflineDataset mix_datasets(const std::vector<Trajectory>& expert,
                            const std::vector<Trajectory>& explore,
                            double explore_ratio, int total_traj,
                            std::uint64_t seed, const std::string& maze_id) {
  if (explore_ratio < 0 || explore_ratio > 1)
    throw std::invalid_argument("mix_datasets: ratio must be in [0,1]");
  const int n_explore = static_cast<int>(std::llround(explore_ratio * total_traj));
  const int n_expert = total_traj - n_explore;
  if (n_explore > static_cast<int>(explore.size()) ||
      n_expert > static_cast<int>(expert.size()))
    throw std::runtime_error("mix_datasets: insufficient source trajectories");

  Rng rng(seed);
  auto pick = [&rng](const std::vector<Trajectory>& src, int n) {
    std::vector<std::size_t> idx(src.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    // partial Fisher-Yates: first n entries are a uniform sample w/o replacement
    for (int i = 0; i < n; ++i) {
      std::size_t j = i + rng.uniform_index(idx.size() - i);
      std::swap(idx[i], idx[j]);
    }
    std::vector<Trajectory> out;
    out.reserve(n);
    for (int i = 0; i < n; ++i) out.push_back(src[idx[i]]);
    return out;
  };

  OfflineDataset ds;
  ds.explore_ratio = explore_ratio;
  ds.maze_id = maze_id;
  ds.rng_seed = seed;
  auto ex = pick(expert, n_expert);
  auto xp = pick(explore, n_explore);
  ds.trajectories.reserve(total_traj);
  for (auto& t : ex) ds.trajectories.push_back(std::move(t));
  for (auto& t : xp) ds.trajectories.push_back(std::move(t));
  // seeded interleave so file order carries no tag signal
  for (std::size_t i = ds.trajectories.size(); i > 1; --i) {
    std::size_t j = rng.uniform_index(i);
    std::swap(ds.trajectories[i - 1], ds.trajectories[j]);
  }
  return ds;
}

double scheduled_explore_ratio(int phase_index) {
  switch (phase_index) {
    case 1: return 1.0;
    case 2: return 0.8;
    case 3: return 0.4;
    case 4: return 0.0;
  }
  throw std::invalid_argument("scheduled regime: phase index must be in 1..4");
}

OfflineDataset make_mixture(const Maze& maze, double explore_ratio,
                            const DatasetGenParams& params, std::uint64_t seed) {
  const int need_explore =
      static_cast<int>(std::llround(explore_ratio * params.total_traj));
  const int need_expert = params.total_traj - need_explore;
  auto expert = need_expert > 0
                    ? gen_expert(maze, need_expert, params.expert_max_len,
                                 substream(seed, "expert-pool"))
                    : std::vector<Trajectory>{};
  auto explore = need_explore > 0
                     ? gen_explore(maze, need_explore, params.explore_len,
                                   substream(seed, "explore-pool"))
                     : std::vector<Trajectory>{};
  return mix_datasets(expert, explore, explore_ratio, params.total_traj,
                      substream(seed, "mix"), maze.id());
}

OfflineDataset scheduled_regime(const Maze& maze, int phase_index,
                                const DatasetGenParams& params,
                                std::uint64_t seed) {
  const double ratio = scheduled_explore_ratio(phase_index);
  return make_mixture(maze, ratio, params,
                      substream(seed, "scheduled-phase",
                                {static_cast<std::uint64_t>(phase_index)}));
}

std::string dataset_to_jsonl(const OfflineDataset& ds) {
  std::ostringstream out;
  for (const auto& t : ds.trajectories) {
    nlohmann::ordered_json j;
    auto states = nlohmann::json::array();
    for (const auto& s : t.states) states.push_back({s.x, s.y});
    auto actions = nlohmann::json::array();
    for (auto a : t.actions) actions.push_back(action_name(a));
    j["states"] = states;
    j["actions"] = actions;
    j["tag"] = t.tag == SourceTag::expert ? "expert" : "explore";
    out << j.dump() << "\n";
  }
  return out.str();
}

OfflineDataset dataset_from_jsonl(const std::string& text,
                                  const std::string& maze_id) {
  OfflineDataset ds;
  ds.maze_id = maze_id;
  std::istringstream in(text);
  std::string line;
  std::size_t n_explore = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto j = nlohmann::json::parse(line);
    Trajectory t;
    for (const auto& s : j.at("states"))
      t.states.push_back({s.at(0).get<int>(), s.at(1).get<int>()});
    for (const auto& a : j.at("actions"))
      t.actions.push_back(action_from_name(a.get<std::string>()));
    t.tag = j.at("tag") == "expert" ? SourceTag::expert : SourceTag::explore;
    if (t.tag == SourceTag::explore) ++n_explore;
    ds.trajectories.push_back(std::move(t));
  }
  if (!ds.trajectories.empty())
    ds.explore_ratio = double(n_explore) / ds.trajectories.size();
  return ds;
}

}  // namespace gclab
