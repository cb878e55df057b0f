#pragma once

#include <array>
#include <cstddef>
#include <memory>
#include <mutex>
#include <optional>
#include <vector>

#include "nmp/episode.hpp"
#include "nmp/rng.hpp"
#include "nmp/sbmp.hpp"

namespace nmp {

enum class TransitionSource { Env = 0, Hindsight = 1, Injected = 2 };

/// Fixed-capacity ring of transitions. Appends may come from several threads;
/// sampling takes the same lock, so one sampler at a time sees a consistent ring.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);

  void add(const Transition& tr, TransitionSource source);
  void add_all(const std::vector<Transition>& trs, TransitionSource source);

  std::size_t capacity() const { return capacity_; }
  std::size_t size() const;
  std::size_t count(TransitionSource source) const;
  /// Transitions ever written, including overwritten ones.
  std::size_t total_added() const;

  /// Uniform with replacement.
  std::vector<Transition> sample(std::size_t n, Rng& rng) const;
  Transition at(std::size_t i) const;

 private:
  std::size_t capacity_;
  std::vector<Transition> data_;
  std::vector<TransitionSource> sources_;
  std::size_t head_ = 0;
  std::size_t added_ = 0;
  std::array<std::size_t, 3> counts_{};
  mutable std::mutex mutex_;
};

/// Goal that the given state achieves under the representation.
GoalValue goal_from_state(const State& state, const GoalSpec& spec);

/// Deterministic "final" relabel: the final state's goal replaces the episode
/// goal and costs are recomputed. The copy ends at the first transition that
/// reaches the new goal, so it carries exactly one zero-cost terminal.
/// Throws EmptyEpisode.
std::vector<Transition> relabel_final(const std::vector<Transition>& episode, const GoalSpec& spec);

struct HerOutput {
  std::vector<Transition> original;   // empty when keep_original is off
  std::vector<Transition> hindsight;  // empty unless the coin came up
  bool relabeled = false;
};

/// With probability p_her adds a final-strategy copy. Throws EmptyEpisode.
HerOutput her_relabel(const std::vector<Transition>& episode, double p_her, Rng& rng, const GoalSpec& spec,
                      bool keep_original = true);

/// Stores original and hindsight copies under their sources; returns the number appended.
std::size_t store_episode(ReplayBuffer& buffer, const std::vector<Transition>& episode, double p_her, Rng& rng,
                          const GoalSpec& spec, bool keep_original = true);

/// Demonstrations of one dataset with their replayed transitions.
class DemoIndex {
 public:
  DemoIndex(const DemoDataset& data, std::shared_ptr<const ArmGeometry> arm = default_arm());

  std::size_t size() const { return demos_.size(); }
  /// Exact query match first, otherwise the demo with the nearest start
  /// (normalized L2). Throws NoDemoAvailable for an empty index.
  std::size_t match(const Query& query) const;
  const std::vector<Transition>& transitions(std::size_t i) const { return transitions_.at(i); }
  const Demonstration& demo(std::size_t i) const { return demos_.at(i); }

 private:
  std::shared_ptr<const ArmGeometry> arm_;
  std::vector<Demonstration> demos_;
  std::vector<Vec7> starts_;
  std::vector<std::vector<Transition>> transitions_;
};

/// Open-loop replay of a demo through an engine, as env transitions.
std::vector<Transition> demo_transitions(EpisodeEngine& engine, const Demonstration& demo);

/// On a failed episode: with probability p appends the matched demo's
/// transitions. Returns the count appended; a missing demo is logged and yields 0.
std::size_t inject_demo(ReplayBuffer& buffer, const Query& failed_query, double p, const DemoIndex& index, Rng& rng);

}  // namespace nmp
