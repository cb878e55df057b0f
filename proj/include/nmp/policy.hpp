#pragma once

#include <iosfwd>
#include <memory>
#include <string>

#include <Eigen/Core>

#include "nmp/episode.hpp"
#include "nmp/mlp.hpp"
#include "nmp/rng.hpp"
#include "nmp/sbmp.hpp"

namespace nmp {

/// 14 for config goals, 13 for EE goals, 20 for combined.
int policy_input_dim(GoalRepresentation rep);

/// Flattened (state, goal) vector. Throws MissingGoalField.
Eigen::VectorXd make_policy_input(const State& state, const GoalValue& goal, const GoalSpec& spec);

class Policy {
 public:
  virtual ~Policy() = default;
  /// Must be safe to call concurrently; `rng` is the episode's own stream.
  virtual Vec7 act(const State& state, const GoalValue& goal, Rng& rng) const = 0;
  virtual std::string id() const = 0;
};

/// Heads straight for the configuration goal.
class GoToGoalPolicy : public Policy {
 public:
  explicit GoToGoalPolicy(double action_bound = 0.03) : a_(action_bound) {}
  /// Throws MissingConfigGoal.
  Vec7 act(const State& state, const GoalValue& goal, Rng& rng) const override;
  std::string id() const override { return "go_to_goal"; }

 private:
  double a_;
};

class ZeroPolicy : public Policy {
 public:
  Vec7 act(const State&, const GoalValue&, Rng&) const override { return Vec7::Zero(); }
  std::string id() const override { return "zero"; }
};

struct TrainingInfo {
  std::string task;
  std::uint64_t seed = 0;
  int epochs = 0;
  std::size_t demos = 0;
  std::size_t samples = 0;
  double final_loss = 0.0;
};

class MlpPolicy : public Policy {
 public:
  MlpPolicy(Mlp net, GoalSpec spec, double action_bound, TrainingInfo info = {});

  Vec7 act(const State& state, const GoalValue& goal, Rng& rng) const override;
  std::string id() const override { return "bc_mlp"; }

  const Mlp& net() const { return net_; }
  const GoalSpec& goal_spec() const { return spec_; }
  double action_bound() const { return a_; }
  const TrainingInfo& info() const { return info_; }

 private:
  Mlp net_;
  GoalSpec spec_;
  double a_;
  TrainingInfo info_;
};

inline constexpr int kCheckpointSchemaVersion = 1;

void save_checkpoint(std::ostream& out, const MlpPolicy& policy);
/// Throws ParseError, DimensionMismatch.
MlpPolicy load_checkpoint(std::istream& in);

struct BcDataset {
  Eigen::MatrixXd inputs;   // column per (state, goal) pair
  Eigen::MatrixXd targets;  // demonstrated actions
};

/// Every (s_t, g) -> a_t pair of the demos under the goal representation.
BcDataset bc_dataset(const DemoDataset& data, const GoalSpec& spec,
                     std::shared_ptr<const ArmGeometry> arm = default_arm());

struct BcTrainOutput {
  std::unique_ptr<MlpPolicy> policy;
  std::vector<double> loss_curve;
  std::vector<double> smoothed_curve;
};

/// Throws DimensionMismatch, InvalidArgument for an empty dataset.
BcTrainOutput bc_train(const DemoDataset& data, const GoalSpec& spec, const BcHyper& hyper,
                       std::shared_ptr<const ArmGeometry> arm = default_arm());

}  // namespace nmp
