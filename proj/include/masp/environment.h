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

#ifndef MASP_ENVIRONMENT_H_
#define MASP_ENVIRONMENT_H_

#include <array>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "masp/neuralcore.h"

namespace masp {

class Rng;

using Observation = Vec;

enum class EnvKind { kGridMaze, kAcrobot };

std::string EnvKindName(EnvKind kind);
EnvKind ParseEnvKind(const std::string& name);

struct EnvSpec {
  EnvKind kind = EnvKind::kGridMaze;
  int obs_dim = 0;
  int action_count = 0;
  int max_steps_target = 0;
  int max_steps_selfplay = 0;
  double success_epsilon = 0.0;
};

// Everything needed to build an environment instance.
struct EnvConfig {
  EnvKind kind = EnvKind::kGridMaze;
  int width = 8;
  int height = 8;
  double wall_fraction = 0.25;
  int max_steps_target = 50;
  int max_steps_selfplay = 80;
  double success_epsilon = 0.05;
  double acrobot_dt = 0.2;
  bool acrobot_clip_velocity = true;

  static EnvConfig GridMazeDefaults();
  static EnvConfig AcrobotDefaults();
  static EnvConfig Defaults(EnvKind kind);
};

enum class DoneReason { kNone, kGoal, kTimeLimit };

struct StepResult {
  Observation observation;
  double reward = 0.0;
  bool done = false;
  DoneReason reason = DoneReason::kNone;
};

// Target episodes terminate at the task goal and use the target step limit.
// Self-play episodes ignore the task goal, yield zero env reward and use the
// self-play step limit; the self-play driver decides when they end.
enum class EpisodeMode { kTarget, kSelfPlay };

class Environment {
 public:
  virtual ~Environment() = default;

  virtual const EnvSpec& spec() const = 0;
  virtual Observation Reset(Rng& rng) = 0;
  virtual StepResult Step(int action) = 0;
  virtual Observation Observe() const = 0;
  // Self-play success test between two observations of this environment.
  virtual bool StateClose(std::span<const double> a,
                          std::span<const double> b) const = 0;
  // Sets the dynamic state from an observation. Resets the step counter.
  virtual void PlaceAgent(std::span<const double> observation) = 0;
  virtual std::unique_ptr<Environment> Clone() const = 0;

  void set_mode(EpisodeMode mode) { mode_ = mode; }
  EpisodeMode mode() const { return mode_; }
  int steps() const { return steps_; }
  bool done() const { return done_; }
  int step_limit() const {
    return mode_ == EpisodeMode::kTarget ? spec().max_steps_target
                                         : spec().max_steps_selfplay;
  }

 protected:
  EpisodeMode mode_ = EpisodeMode::kTarget;
  int steps_ = 0;
  bool done_ = false;
};

std::unique_ptr<Environment> MakeEnvironment(const EnvConfig& config);

// Discrete maze: one-hot planes for walls, agent and goal.
class GridMaze : public Environment {
 public:
  enum Action { kUp = 0, kDown = 1, kLeft = 2, kRight = 3 };
  struct Cell {
    int x = 0;
    int y = 0;
    friend bool operator==(const Cell&, const Cell&) = default;
  };

  static constexpr double kStepReward = -0.1;
  static constexpr double kGoalBonus = 1.0;

  explicit GridMaze(const EnvConfig& config);

  const EnvSpec& spec() const override { return spec_; }
  Observation Reset(Rng& rng) override;
  StepResult Step(int action) override;
  Observation Observe() const override;
  bool StateClose(std::span<const double> a,
                  std::span<const double> b) const override;
  void PlaceAgent(std::span<const double> observation) override;
  std::unique_ptr<Environment> Clone() const override;

  // Installs an explicit layout. Throws if agent or goal sit on a wall, or
  // lie out of bounds.
  void SetLayout(std::vector<bool> walls, Cell agent, Cell goal);

  int width() const { return width_; }
  int height() const { return height_; }
  bool IsWall(Cell c) const { return walls_[Index(c)]; }
  bool InBounds(Cell c) const {
    return c.x >= 0 && c.y >= 0 && c.x < width_ && c.y < height_;
  }
  const std::vector<bool>& walls() const { return walls_; }
  Cell agent() const { return agent_; }
  Cell goal() const { return goal_; }
  int Index(Cell c) const { return c.y * width_ + c.x; }
  static Cell Move(Cell c, int action);

  // True iff every free cell can reach every other free cell.
  static bool FreeCellsConnected(const std::vector<bool>& walls, int width,
                                 int height);

 private:
  EnvSpec spec_;
  int width_;
  int height_;
  int wall_count_;
  std::vector<bool> walls_;
  Cell agent_;
  Cell goal_;
};

// Two-link underactuated pendulum with torque on the middle joint. Dynamics
// follow the widely used "book" formulation integrated with one RK4 step.
class Acrobot : public Environment {
 public:
  static constexpr double kLinkLength1 = 1.0;
  static constexpr double kLinkMass1 = 1.0;
  static constexpr double kLinkMass2 = 1.0;
  static constexpr double kLinkCom1 = 0.5;
  static constexpr double kLinkCom2 = 0.5;
  static constexpr double kLinkMoi = 1.0;
  static constexpr double kGravity = 9.8;
  static constexpr double kMaxVel1 = 4.0 * 3.14159265358979323846;
  static constexpr double kMaxVel2 = 9.0 * 3.14159265358979323846;

  // theta1, theta2, omega1, omega2
  using State = std::array<double, 4>;

  explicit Acrobot(const EnvConfig& config);

  const EnvSpec& spec() const override { return spec_; }
  Observation Reset(Rng& rng) override;
  StepResult Step(int action) override;
  Observation Observe() const override;
  bool StateClose(std::span<const double> a,
                  std::span<const double> b) const override;
  void PlaceAgent(std::span<const double> observation) override;
  std::unique_ptr<Environment> Clone() const override;

  const State& state() const { return state_; }
  void SetState(const State& s);

  static double Torque(int action) { return static_cast<double>(action) - 1.0; }
  // Time derivative of (theta1, theta2, omega1, omega2) under torque.
  static State Derivatives(const State& s, double torque);
  // One integration step of length dt, with angle wrapping and optional
  // velocity clipping.
  static State Integrate(const State& s, double torque, double dt,
                         bool clip_velocity);
  static double WrapAngle(double angle);
  static double Energy(const State& s);
  static bool AboveLine(const State& s);

 private:
  EnvSpec spec_;
  double dt_;
  bool clip_velocity_;
  State state_{};
};

}  // namespace masp

#endif  // MASP_ENVIRONMENT_H_
