// Copyright 2026 The MASP Authors. All rights reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "masp/environment.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <queue>

#include "masp/errors.h"
#include "masp/rng.h"

namespace masp {

std::string EnvKindName(EnvKind kind) {
  switch (kind) {
    case EnvKind::kGridMaze:
      return "gridmaze";
    case EnvKind::kAcrobot:
      return "acrobot";
  }
  return "unknown";
}

EnvKind ParseEnvKind(const std::string& name) {
  if (name == "gridmaze") return EnvKind::kGridMaze;
  if (name == "acrobot") return EnvKind::kAcrobot;
  throw ParseError("unknown environment '" + name +
                   "' (expected gridmaze or acrobot)");
}

EnvConfig EnvConfig::GridMazeDefaults() {
  EnvConfig c;
  c.kind = EnvKind::kGridMaze;
  c.width = 8;
  c.height = 8;
  c.wall_fraction = 0.25;
  c.max_steps_target = 50;
  c.max_steps_selfplay = 80;
  c.success_epsilon = 0.05;
  return c;
}

EnvConfig EnvConfig::AcrobotDefaults() {
  EnvConfig c;
  c.kind = EnvKind::kAcrobot;
  c.max_steps_target = 1000;
  c.max_steps_selfplay = 2000;
  c.success_epsilon = 0.05;
  c.acrobot_dt = 0.2;
  c.acrobot_clip_velocity = true;
  return c;
}

EnvConfig EnvConfig::Defaults(EnvKind kind) {
  return kind == EnvKind::kGridMaze ? GridMazeDefaults() : AcrobotDefaults();
}

std::unique_ptr<Environment> MakeEnvironment(const EnvConfig& config) {
  MASP_CHECK(config.max_steps_target >= 1, "max_steps_target must be >= 1");
  MASP_CHECK(config.max_steps_selfplay >= config.max_steps_target,
             "max_steps_selfplay must be >= max_steps_target");
  MASP_CHECK(config.success_epsilon > 0.0, "success_epsilon must be > 0");
  switch (config.kind) {
    case EnvKind::kGridMaze:
      return std::make_unique<GridMaze>(config);
    case EnvKind::kAcrobot:
      return std::make_unique<Acrobot>(config);
  }
  throw ContractViolation("MakeEnvironment: unknown kind");
}

// ----------------------------------------------------------------- GridMaze

GridMaze::GridMaze(const EnvConfig& config)
    : width_(config.width), height_(config.height) {
  MASP_CHECK(width_ >= 2 && height_ >= 1, "maze must have at least 2 cells");
  // Denser mazes make connected layouts rare enough that regeneration
  // stalls.
  MASP_CHECK(config.wall_fraction >= 0.0 && config.wall_fraction <= 0.5,
             "wall_fraction must lie in [0, 0.5]");
  const int cells = width_ * height_;
  wall_count_ = static_cast<int>(std::floor(config.wall_fraction * cells));
  MASP_CHECK(cells - wall_count_ >= 2, "maze needs two free cells");
  spec_.kind = EnvKind::kGridMaze;
  spec_.obs_dim = 3 * cells;
  spec_.action_count = 4;
  spec_.max_steps_target = config.max_steps_target;
  spec_.max_steps_selfplay = config.max_steps_selfplay;
  spec_.success_epsilon = config.success_epsilon;
  walls_.assign(cells, false);
  goal_ = {width_ - 1, height_ - 1};
}

GridMaze::Cell GridMaze::Move(Cell c, int action) {
  switch (action) {
    case kUp:
      return {c.x, c.y - 1};
    case kDown:
      return {c.x, c.y + 1};
    case kLeft:
      return {c.x - 1, c.y};
    case kRight:
      return {c.x + 1, c.y};
  }
  throw ContractViolation("GridMaze::Move: bad action " +
                          std::to_string(action));
}

bool GridMaze::FreeCellsConnected(const std::vector<bool>& walls, int width,
                                  int height) {
  const int cells = width * height;
  int start = -1;
  int free_count = 0;
  for (int i = 0; i < cells; ++i) {
    if (!walls[i]) {
      ++free_count;
      if (start < 0) start = i;
    }
  }
  if (start < 0) return false;
  std::vector<bool> seen(cells, false);
  std::queue<int> frontier;
  frontier.push(start);
  seen[start] = true;
  int reached = 1;
  while (!frontier.empty()) {
    const int cur = frontier.front();
    frontier.pop();
    const Cell c{cur % width, cur / width};
    for (int a = 0; a < 4; ++a) {
      const Cell n = Move(c, a);
      if (n.x < 0 || n.y < 0 || n.x >= width || n.y >= height) continue;
      const int ni = n.y * width + n.x;
      if (walls[ni] || seen[ni]) continue;
      seen[ni] = true;
      ++reached;
      frontier.push(ni);
    }
  }
  return reached == free_count;
}

Observation GridMaze::Reset(Rng& rng) {
  const int cells = width_ * height_;
  std::vector<int> order(cells);
  do {
    for (int i = 0; i < cells; ++i) order[i] = i;
    // Partial Fisher-Yates: the first wall_count_ entries become walls.
    for (int i = 0; i < wall_count_; ++i) {
      const int j = i + static_cast<int>(rng.Below(cells - i));
      std::swap(order[i], order[j]);
    }
    walls_.assign(cells, false);
    for (int i = 0; i < wall_count_; ++i) walls_[order[i]] = true;
  } while (!FreeCellsConnected(walls_, width_, height_));

  std::vector<int> free_cells;
  for (int i = 0; i < cells; ++i) {
    if (!walls_[i]) free_cells.push_back(i);
  }
  const int goal_slot = static_cast<int>(rng.Below(free_cells.size()));
  const int goal = free_cells[goal_slot];
  free_cells.erase(free_cells.begin() + goal_slot);
  const int agent = free_cells[rng.Below(free_cells.size())];
  goal_ = {goal % width_, goal / width_};
  agent_ = {agent % width_, agent / width_};
  steps_ = 0;
  done_ = false;
  return Observe();
}

void GridMaze::SetLayout(std::vector<bool> walls, Cell agent, Cell goal) {
  MASP_CHECK_EQ(static_cast<int>(walls.size()), width_ * height_,
                "layout size");
  MASP_CHECK(InBounds(agent) && InBounds(goal), "cell out of bounds");
  MASP_CHECK(!walls[agent.y * width_ + agent.x], "agent inside a wall");
  MASP_CHECK(!walls[goal.y * width_ + goal.x], "goal inside a wall");
  walls_ = std::move(walls);
  agent_ = agent;
  goal_ = goal;
  steps_ = 0;
  done_ = false;
}

StepResult GridMaze::Step(int action) {
  MASP_CHECK(!done_, "step after episode end");
  MASP_CHECK(action >= 0 && action < spec_.action_count,
             "action out of range: " + std::to_string(action));
  const Cell next = Move(agent_, action);
  if (InBounds(next) && !IsWall(next)) agent_ = next;
  ++steps_;

  StepResult result;
  if (mode_ == EpisodeMode::kTarget) {
    result.reward = kStepReward;
    if (agent_ == goal_) {
      result.reward += kGoalBonus;
      result.done = true;
      result.reason = DoneReason::kGoal;
    }
  }
  if (!result.done && steps_ >= step_limit()) {
    result.done = true;
    result.reason = DoneReason::kTimeLimit;
  }
  done_ = result.done;
  result.observation = Observe();
  return result;
}

Observation GridMaze::Observe() const {
  const int cells = width_ * height_;
  Observation obs(3 * cells, 0.0);
  for (int i = 0; i < cells; ++i) {
    if (walls_[i]) obs[i] = 1.0;
  }
  obs[cells + Index(agent_)] = 1.0;
  obs[2 * cells + Index(goal_)] = 1.0;
  return obs;
}

bool GridMaze::StateClose(std::span<const double> a,
                          std::span<const double> b) const {
  MASP_CHECK_EQ(a.size(), b.size(), "observation dim");
  MASP_CHECK_EQ(static_cast<int>(a.size()), spec_.obs_dim, "observation dim");
  const int cells = width_ * height_;
  for (int i = cells; i < 2 * cells; ++i) {
    if (a[i] != b[i]) return false;
  }
  return true;
}

void GridMaze::PlaceAgent(std::span<const double> observation) {
  MASP_CHECK_EQ(static_cast<int>(observation.size()), spec_.obs_dim,
                "observation dim");
  const int cells = width_ * height_;
  for (int i = 0; i < cells; ++i) {
    MASP_CHECK(observation[i] == (walls_[i] ? 1.0 : 0.0),
               "observation wall plane does not match the current layout");
    MASP_CHECK(observation[2 * cells + i] == (i == Index(goal_) ? 1.0 : 0.0),
               "observation goal plane does not match the current layout");
  }
  int agent = -1;
  for (int i = 0; i < cells; ++i) {
    const double v = observation[cells + i];
    MASP_CHECK(v == 0.0 || v == 1.0, "agent plane is not one-hot");
    if (v == 1.0) {
      MASP_CHECK(agent < 0, "agent plane has more than one agent");
      agent = i;
    }
  }
  MASP_CHECK(agent >= 0, "agent plane is empty");
  MASP_CHECK(!walls_[agent], "cannot place agent inside a wall");
  agent_ = {agent % width_, agent / width_};
  steps_ = 0;
  done_ = false;
}

std::unique_ptr<Environment> GridMaze::Clone() const {
  return std::make_unique<GridMaze>(*this);
}

// ------------------------------------------------------------------ Acrobot

Acrobot::Acrobot(const EnvConfig& config)
    : dt_(config.acrobot_dt), clip_velocity_(config.acrobot_clip_velocity) {
  MASP_CHECK(dt_ > 0.0, "acrobot dt must be positive");
  spec_.kind = EnvKind::kAcrobot;
  spec_.obs_dim = 6;
  spec_.action_count = 3;
  spec_.max_steps_target = config.max_steps_target;
  spec_.max_steps_selfplay = config.max_steps_selfplay;
  spec_.success_epsilon = config.success_epsilon;
}

double Acrobot::WrapAngle(double angle) {
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  double r = std::remainder(angle, kTwoPi);
  if (r <= -std::numbers::pi) r += kTwoPi;
  return r;
}

Acrobot::State Acrobot::Derivatives(const State& s, double torque) {
  constexpr double m1 = kLinkMass1, m2 = kLinkMass2;
  constexpr double l1 = kLinkLength1, lc1 = kLinkCom1, lc2 = kLinkCom2;
  constexpr double i1 = kLinkMoi, i2 = kLinkMoi, g = kGravity;
  const double theta1 = s[0], theta2 = s[1];
  const double dtheta1 = s[2], dtheta2 = s[3];

  const double d1 = m1 * lc1 * lc1 +
                    m2 * (l1 * l1 + lc2 * lc2 + 2.0 * l1 * lc2 * std::cos(theta2)) +
                    i1 + i2;
  const double d2 = m2 * (lc2 * lc2 + l1 * lc2 * std::cos(theta2)) + i2;
  const double phi2 =
      m2 * lc2 * g * std::sin(theta1 + theta2);
  const double phi1 =
      -m2 * l1 * lc2 * dtheta2 * dtheta2 * std::sin(theta2) -
      2.0 * m2 * l1 * lc2 * dtheta2 * dtheta1 * std::sin(theta2) +
      (m1 * lc1 + m2 * l1) * g * std::sin(theta1) +
      phi2;
  const double ddtheta2 =
      (torque + d2 / d1 * phi1 -
       m2 * l1 * lc2 * dtheta1 * dtheta1 * std::sin(theta2) - phi2) /
      (m2 * lc2 * lc2 + i2 - d2 * d2 / d1);
  const double ddtheta1 = -(d2 * ddtheta2 + phi1) / d1;
  return {dtheta1, dtheta2, ddtheta1, ddtheta2};
}

Acrobot::State Acrobot::Integrate(const State& s, double torque, double dt,
                                  bool clip_velocity) {
  auto axpy = [](const State& base, double a, const State& d) {
    State out;
    for (int i = 0; i < 4; ++i) out[i] = base[i] + a * d[i];
    return out;
  };
  const State k1 = Derivatives(s, torque);
  const State k2 = Derivatives(axpy(s, dt / 2.0, k1), torque);
  const State k3 = Derivatives(axpy(s, dt / 2.0, k2), torque);
  const State k4 = Derivatives(axpy(s, dt, k3), torque);
  State next;
  for (int i = 0; i < 4; ++i) {
    next[i] = s[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  }
  next[0] = WrapAngle(next[0]);
  next[1] = WrapAngle(next[1]);
  if (clip_velocity) {
    next[2] = std::clamp(next[2], -kMaxVel1, kMaxVel1);
    next[3] = std::clamp(next[3], -kMaxVel2, kMaxVel2);
  }
  return next;
}

double Acrobot::Energy(const State& s) {
  constexpr double m1 = kLinkMass1, m2 = kLinkMass2;
  constexpr double l1 = kLinkLength1, lc1 = kLinkCom1, lc2 = kLinkCom2;
  constexpr double i1 = kLinkMoi, i2 = kLinkMoi, g = kGravity;
  const double c2 = std::cos(s[1]);
  const double m11 = m1 * lc1 * lc1 +
                     m2 * (l1 * l1 + lc2 * lc2 + 2.0 * l1 * lc2 * c2) + i1 + i2;
  const double m12 = m2 * (lc2 * lc2 + l1 * lc2 * c2) + i2;
  const double m22 = m2 * lc2 * lc2 + i2;
  const double kinetic = 0.5 * (m11 * s[2] * s[2] + 2.0 * m12 * s[2] * s[3] +
                                m22 * s[3] * s[3]);
  const double potential = -(m1 * lc1 + m2 * l1) * g * std::cos(s[0]) -
                           m2 * lc2 * g * std::cos(s[0] + s[1]);
  return kinetic + potential;
}

bool Acrobot::AboveLine(const State& s) {
  return -std::cos(s[0]) - std::cos(s[1] + s[0]) > 1.0;
}

Observation Acrobot::Reset(Rng& rng) {
  for (double& x : state_) x = rng.Uniform(-0.1, 0.1);
  steps_ = 0;
  done_ = false;
  return Observe();
}

void Acrobot::SetState(const State& s) {
  for (double x : s) MASP_CHECK(std::isfinite(x), "non-finite acrobot state");
  state_ = s;
  state_[0] = WrapAngle(state_[0]);
  state_[1] = WrapAngle(state_[1]);
  steps_ = 0;
  done_ = false;
}

StepResult Acrobot::Step(int action) {
  MASP_CHECK(!done_, "step after episode end");
  MASP_CHECK(action >= 0 && action < spec_.action_count,
             "action out of range: " + std::to_string(action));
  state_ = Integrate(state_, Torque(action), dt_, clip_velocity_);
  ++steps_;
  StepResult result;
  if (mode_ == EpisodeMode::kTarget) {
    if (AboveLine(state_)) {
      result.done = true;
      result.reason = DoneReason::kGoal;
    } else {
      result.reward = -1.0;
    }
  }
  if (!result.done && steps_ >= step_limit()) {
    result.done = true;
    result.reason = DoneReason::kTimeLimit;
  }
  done_ = result.done;
  result.observation = Observe();
  return result;
}

Observation Acrobot::Observe() const {
  return {std::cos(state_[0]), std::sin(state_[0]), std::cos(state_[1]),
          std::sin(state_[1]), state_[2],           state_[3]};
}

bool Acrobot::StateClose(std::span<const double> a,
                         std::span<const double> b) const {
  MASP_CHECK_EQ(a.size(), b.size(), "observation dim");
  MASP_CHECK_EQ(static_cast<int>(a.size()), spec_.obs_dim, "observation dim");
  double sq = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sq += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(sq) < spec_.success_epsilon;
}

void Acrobot::PlaceAgent(std::span<const double> observation) {
  MASP_CHECK_EQ(static_cast<int>(observation.size()), spec_.obs_dim,
                "observation dim");
  for (double x : observation) {
    MASP_CHECK(std::isfinite(x), "non-finite observation component");
  }
  for (int j = 0; j < 2; ++j) {
    const double c = observation[2 * j];
    const double s = observation[2 * j + 1];
    MASP_CHECK(std::abs(c * c + s * s - 1.0) < 1e-6,
               "cos/sin pair is not on the unit circle");
  }
  if (clip_velocity_) {
    MASP_CHECK(std::abs(observation[4]) <= kMaxVel1 &&
                   std::abs(observation[5]) <= kMaxVel2,
               "angular velocity outside bounds");
  }
  SetState({std::atan2(observation[1], observation[0]),
            std::atan2(observation[3], observation[2]), observation[4],
            observation[5]});
}

std::unique_ptr<Environment> Acrobot::Clone() const {
  return std::make_unique<Acrobot>(*this);
}

}  // namespace masp
