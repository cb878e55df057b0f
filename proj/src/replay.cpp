#include "nmp/replay.hpp"

#include <iostream>
#include <limits>

#include "nmp/errors.hpp"

namespace nmp {

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw InvalidArgument("replay capacity must be positive");
  data_.reserve(std::min<std::size_t>(capacity, 1 << 16));
  sources_.reserve(data_.capacity());
}

void ReplayBuffer::add(const Transition& tr, TransitionSource source) {
  std::lock_guard lock(mutex_);
  if (data_.size() < capacity_) {
    data_.push_back(tr);
    sources_.push_back(source);
  } else {
    --counts_[static_cast<int>(sources_[head_])];
    data_[head_] = tr;
    sources_[head_] = source;
  }
  head_ = (head_ + 1) % capacity_;
  ++counts_[static_cast<int>(source)];
  ++added_;
}

void ReplayBuffer::add_all(const std::vector<Transition>& trs, TransitionSource source) {
  for (const auto& tr : trs) add(tr, source);
}

std::size_t ReplayBuffer::size() const {
  std::lock_guard lock(mutex_);
  return data_.size();
}

std::size_t ReplayBuffer::count(TransitionSource source) const {
  std::lock_guard lock(mutex_);
  return counts_[static_cast<int>(source)];
}

std::size_t ReplayBuffer::total_added() const {
  std::lock_guard lock(mutex_);
  return added_;
}

std::vector<Transition> ReplayBuffer::sample(std::size_t n, Rng& rng) const {
  std::lock_guard lock(mutex_);
  if (data_.empty()) throw InvalidArgument("cannot sample from an empty buffer");
  std::vector<Transition> out;
  out.reserve(n);
  const auto hi = static_cast<std::int64_t>(data_.size()) - 1;
  for (std::size_t i = 0; i < n; ++i) out.push_back(data_[static_cast<std::size_t>(rng.uniform_int(0, hi))]);
  return out;
}

Transition ReplayBuffer::at(std::size_t i) const {
  std::lock_guard lock(mutex_);
  return data_.at(i);
}

GoalValue goal_from_state(const State& state, const GoalSpec& spec) {
  GoalValue g;
  if (spec.representation != GoalRepresentation::EE) g.config_target = state.s.s;
  if (spec.representation != GoalRepresentation::Config) g.ee_target = state.ee;
  return g;
}

std::vector<Transition> relabel_final(const std::vector<Transition>& episode, const GoalSpec& spec) {
  if (episode.empty()) throw EmptyEpisode("cannot relabel an empty episode");
  const GoalValue goal = goal_from_state(episode.back().next_state, spec);
  std::vector<Transition> out;
  for (const Transition& tr : episode) {
    if (tr.state.absorbed) break;
    Transition r = tr;
    r.goal = goal;
    r.goal_reached = goal_reached(r.next_state, goal, spec);
    r.cost = r.goal_reached ? 0.0 : -1.0;
    r.done = r.goal_reached;
    out.push_back(r);
    if (r.goal_reached) break;
  }
  return out;
}

HerOutput her_relabel(const std::vector<Transition>& episode, double p_her, Rng& rng, const GoalSpec& spec,
                      bool keep_original) {
  if (episode.empty()) throw EmptyEpisode("cannot relabel an empty episode");
  if (!(p_her >= 0.0 && p_her <= 1.0)) throw InvalidArgument("p_her must lie in [0, 1]");
  HerOutput out;
  if (keep_original) out.original = episode;
  if (rng.bernoulli(p_her)) {
    out.hindsight = relabel_final(episode, spec);
    out.relabeled = true;
  }
  return out;
}

std::size_t store_episode(ReplayBuffer& buffer, const std::vector<Transition>& episode, double p_her, Rng& rng,
                          const GoalSpec& spec, bool keep_original) {
  const HerOutput her = her_relabel(episode, p_her, rng, spec, keep_original);
  buffer.add_all(her.original, TransitionSource::Env);
  buffer.add_all(her.hindsight, TransitionSource::Hindsight);
  return her.original.size() + her.hindsight.size();
}

std::vector<Transition> demo_transitions(EpisodeEngine& engine, const Demonstration& demo) {
  std::vector<Transition> out;
  engine.reset(demo.query);
  for (std::size_t t = 0; t < demo.actions.size() && !engine.done(); ++t) {
    out.push_back(engine.step(demo.actions[t], ActionMode::Relative));
  }
  return out;
}

DemoIndex::DemoIndex(const DemoDataset& data, std::shared_ptr<const ArmGeometry> arm) : arm_(arm), demos_(data.demos) {
  const TaskSpec& task = find_task(data.task);
  std::shared_ptr<const Scene> fixed;
  if (!task.sampler) fixed = std::make_shared<const Scene>(build_fixed_task(task.name, arm));
  for (const Demonstration& d : demos_) {
    auto scene = fixed ? fixed : std::make_shared<const Scene>(scene_for_task(task, d.query.scene_seed, arm));
    EpisodeEngine engine(scene, data.engine);
    transitions_.push_back(demo_transitions(engine, d));
    starts_.push_back(normalize(d.query.start, arm->limits).s);
  }
}

std::size_t DemoIndex::match(const Query& query) const {
  if (demos_.empty()) throw NoDemoAvailable("demo index is empty");
  for (std::size_t i = 0; i < demos_.size(); ++i) {
    if (demos_[i].query == query) return i;
  }
  const Vec7 s = normalize(query.start, arm_->limits).s;
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < starts_.size(); ++i) {
    const double d = (starts_[i] - s).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return best;
}

std::size_t inject_demo(ReplayBuffer& buffer, const Query& failed_query, double p, const DemoIndex& index, Rng& rng) {
  if (!(p >= 0.0 && p <= 1.0)) throw InvalidArgument("injection probability must lie in [0, 1]");
  if (!rng.bernoulli(p)) return 0;
  try {
    const auto& trs = index.transitions(index.match(failed_query));
    buffer.add_all(trs, TransitionSource::Injected);
    return trs.size();
  } catch (const NoDemoAvailable& e) {
    std::cerr << "inject_demo: " << e.what() << "\n";
    return 0;
  }
}

}  // namespace nmp
