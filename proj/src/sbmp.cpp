#include "nmp/sbmp.hpp"

#include <chrono>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>

#include "nmp/errors.hpp"
#include "nmp/io.hpp"
#include "nmp/parallel.hpp"
#include "nmp/rng.hpp"

namespace nmp {

void PlannerParams::validate() const {
  if (max_iterations < 1) throw InvalidArgument("max_iterations must be >= 1");
  if (!(extend_step > 0.0) || !(connect_tolerance > 0.0) || !(edge_check_step > 0.0)) {
    throw InvalidArgument("planner step sizes must be positive");
  }
  if (!(goal_bias >= 0.0 && goal_bias <= 1.0)) throw InvalidArgument("goal_bias must lie in [0, 1]");
}

namespace {

struct Tree {
  std::vector<Vec7> nodes;
  std::vector<int> parent;

  int nearest(const Vec7& q) const {
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (int i = 0; i < static_cast<int>(nodes.size()); ++i) {
      const double d = (nodes[i] - q).squaredNorm();
      if (d < best_d) {
        best_d = d;
        best = i;
      }
    }
    return best;
  }

  std::vector<Vec7> chain_to_root(int idx) const {
    std::vector<Vec7> out;
    for (int i = idx; i >= 0; i = parent[i]) out.push_back(nodes[i]);
    return out;
  }
};

enum class Extend { Trapped, Advanced, Reached };

class RrtConnect {
 public:
  RrtConnect(const Scene& scene, const PlannerParams& p) : scene_(scene), p_(p) {}

  std::pair<Extend, int> extend(Tree& tree, const Vec7& target) const {
    const int near = tree.nearest(target);
    const Vec7 diff = target - tree.nodes[near];
    const double d = diff.norm();
    if (d <= p_.connect_tolerance) return {Extend::Reached, near};
    const bool reaches = d <= p_.extend_step;
    const Vec7 q_new = reaches ? target : Vec7(tree.nodes[near] + diff * (p_.extend_step / d));
    if (!edge_collision_free(scene_, NormalizedConfig{tree.nodes[near]}, NormalizedConfig{q_new}, p_.edge_check_step,
                             p_.collision_margin)) {
      return {Extend::Trapped, near};
    }
    tree.nodes.push_back(q_new);
    tree.parent.push_back(near);
    return {reaches ? Extend::Reached : Extend::Advanced, static_cast<int>(tree.nodes.size()) - 1};
  }

  std::pair<Extend, int> connect(Tree& tree, const Vec7& target) const {
    for (;;) {
      auto r = extend(tree, target);
      if (r.first != Extend::Advanced) return r;
    }
  }

 private:
  const Scene& scene_;
  const PlannerParams& p_;
};

}  // namespace

PlanResult rrt_connect(const Scene& scene, const NormalizedConfig& start, const NormalizedConfig& goal,
                       const PlannerParams& params) {
  params.validate();
  if (is_collision(scene, start, params.collision_margin)) throw InvalidEndpoint("start configuration collides");
  if (is_collision(scene, goal, params.collision_margin)) throw InvalidEndpoint("goal configuration collides");

  Rng rng(params.seed);
  RrtConnect planner(scene, params);
  Tree from_start{{start.s}, {-1}};
  Tree from_goal{{goal.s}, {-1}};
  Tree* a = &from_start;
  Tree* b = &from_goal;

  PlanResult result;
  for (int it = 0; it < params.max_iterations; ++it) {
    result.iterations = it + 1;
    Vec7 sample = start.s;
    if (it == 0 || rng.bernoulli(params.goal_bias)) {
      sample = b->nodes.front();
    } else {
      for (int k = 0; k < kDof; ++k) {
        if (params.active[k]) sample[k] = rng.uniform(-1.0, 1.0);
      }
    }
    const auto [status, idx] = planner.extend(*a, sample);
    if (status != Extend::Trapped) {
      const auto [cstatus, cidx] = planner.connect(*b, a->nodes[idx]);
      if (cstatus == Extend::Reached) {
        std::vector<Vec7> head = a->chain_to_root(idx);
        std::vector<Vec7> tail = b->chain_to_root(cidx);
        if (a != &from_start) std::swap(head, tail);
        // head runs join->start, tail runs join->goal; both contain the join node.
        std::vector<Vec7> path(head.rbegin(), head.rend());
        const std::size_t skip = (tail.front() - path.back()).norm() <= params.connect_tolerance ? 1 : 0;
        path.insert(path.end(), tail.begin() + static_cast<std::ptrdiff_t>(skip), tail.end());
        result.success = true;
        result.path = std::move(path);
        result.tree_nodes = from_start.nodes.size() + from_goal.nodes.size();
        return result;
      }
    }
    std::swap(a, b);
  }
  result.tree_nodes = from_start.nodes.size() + from_goal.nodes.size();
  return result;
}

std::vector<Vec7> merge_collinear(const std::vector<Vec7>& path, double tol) {
  if (path.size() < 3) return path;
  std::vector<Vec7> out{path.front()};
  for (std::size_t i = 1; i + 1 < path.size(); ++i) {
    const Vec7& a = out.back();
    const Vec7& b = path[i + 1];
    const Vec7 ab = b - a;
    const double len2 = ab.squaredNorm();
    bool inside = false;
    if (len2 > 0.0) {
      const double t = (path[i] - a).dot(ab) / len2;
      inside = t > 0.0 && t < 1.0 && (a + t * ab - path[i]).norm() <= tol;
    }
    if (!inside) out.push_back(path[i]);
  }
  out.push_back(path.back());
  return out;
}

std::vector<Vec7> densify_path(const std::vector<Vec7>& path, double max_step) {
  if (!(max_step > 0.0)) throw InvalidArgument("densify step must be positive");
  if (path.empty()) return {};
  std::vector<Vec7> out{path.front()};
  for (std::size_t i = 1; i < path.size(); ++i) {
    const Vec7& p = path[i - 1];
    const Vec7& q = path[i];
    const int pieces = std::max(1, static_cast<int>(std::ceil((q - p).norm() / max_step)));
    for (int k = 1; k < pieces; ++k) out.push_back(p + (q - p) * (static_cast<double>(k) / pieces));
    out.push_back(q);
  }
  return out;
}

std::vector<Vec7> path_to_actions(const std::vector<Vec7>& path, double a_max) {
  if (path.size() < 2) throw InvalidArgument("path needs at least two nodes");
  std::vector<Vec7> actions;
  actions.reserve(path.size() - 1);
  for (std::size_t i = 1; i < path.size(); ++i) {
    Vec7 d = path[i] - path[i - 1];
    if (d.norm() > a_max + 1e-12) {
      throw StepTooLarge("path step " + std::to_string(i - 1) + " has length " + std::to_string(d.norm()) +
                         " > " + std::to_string(a_max));
    }
    actions.push_back(d);
  }
  return actions;
}

const char* to_string(VerifyFailure f) { return f == VerifyFailure::Timeout ? "timeout" : "collision"; }

VerifyResult verify_plan(EpisodeEngine& engine, const Query& query, const std::vector<Vec7>& path) {
  if (path.empty()) throw InvalidArgument("cannot verify an empty path");
  VerifyResult result;
  std::vector<Vec7> states{engine.reset(query).s.s};
  std::size_t next = path.size() > 1 ? 1 : 0;
  for (;;) {
    const Transition tr = engine.step(path[next], ActionMode::Subgoal);
    states.push_back(tr.next_state.s.s);
    if (tr.collided_during_step) {
      result.failure = VerifyFailure::Collision;
      result.failed_step = tr.t;
      return result;
    }
    if (tr.next_state.s.s == path[next] && next + 1 < path.size()) ++next;
    if (tr.done) {
      if (!tr.goal_reached) {
        result.failure = VerifyFailure::Timeout;
        result.failed_step = tr.t;
        return result;
      }
      break;
    }
  }
  Demonstration demo;
  demo.query = query;
  demo.actions = path_to_actions(states, engine.params().action_bound);
  demo.states = std::move(states);
  demo.verified = true;
  result.demo = std::move(demo);
  return result;
}

ReplayOutcome replay_demo(EpisodeEngine& engine, const Demonstration& demo, ActionMode mode) {
  ReplayOutcome out;
  out.states.push_back(engine.reset(demo.query).s.s);
  for (std::size_t t = 0; t < demo.actions.size() && !engine.done(); ++t) {
    const Vec7 cmd = mode == ActionMode::Relative ? demo.actions[t] : demo.states[t + 1];
    const Transition tr = engine.step(cmd, mode);
    out.states.push_back(tr.next_state.s.s);
    out.collided = out.collided || tr.collided_during_step;
    out.reached_goal = tr.goal_reached;
    ++out.steps;
  }
  return out;
}

namespace {

struct SlotResult {
  std::optional<Demonstration> demo;
  int planner_failures = 0;
  int verification_failures = 0;
};

SlotResult run_slot(const TaskSpec& task, const EngineParams& engine_params, std::uint64_t seed, std::uint64_t slot,
                    const CollectionParams& params, const std::shared_ptr<const ArmGeometry>& arm,
                    const std::shared_ptr<const Scene>& fixed_scene) {
  SlotResult r;
  Rng rng = Rng::stream(seed, slot);
  std::shared_ptr<const Scene> scene = fixed_scene;
  if (!scene) scene = std::make_shared<const Scene>(scene_for_task(task, rng.next_u64(), arm));
  const Query query = sample_query(*scene, rng, 10000, engine_params.collision_margin);
  const NormalizedConfig start = normalize(query.start, arm->limits);
  const NormalizedConfig goal = normalize(query.goal_config, arm->limits);
  EpisodeEngine engine(scene, engine_params);
  for (int attempt = 1; attempt <= params.max_attempts; ++attempt) {
    PlannerParams pp = params.planner;
    pp.seed = rng.next_u64();
    pp.collision_margin = engine_params.collision_margin;
    const PlanResult plan = rrt_connect(*scene, start, goal, pp);
    if (!plan.success) {
      ++r.planner_failures;
      continue;
    }
    VerifyResult v = verify_plan(engine, query, densify_path(merge_collinear(plan.path), engine_params.action_bound));
    if (!v.ok()) {
      ++r.verification_failures;
      continue;
    }
    v.demo->attempts_used = attempt;
    r.demo = std::move(v.demo);
    break;
  }
  return r;
}

}  // namespace

DemoDataset collect_demos(const TaskSpec& task, int n, std::uint64_t seed, const CollectionParams& params,
                          std::shared_ptr<const ArmGeometry> arm) {
  if (n < 1) throw InvalidArgument("collect_demos needs n >= 1");
  if (params.max_attempts < 1) throw InvalidArgument("max_attempts must be >= 1");
  const auto t0 = std::chrono::steady_clock::now();
  DemoDataset data;
  data.task = task.name;
  data.seed = seed;
  data.engine = EngineParams::from_task(task);
  std::shared_ptr<const Scene> fixed_scene;
  if (!task.sampler) fixed_scene = std::make_shared<const Scene>(build_fixed_task(task.name, arm));

  std::uint64_t slot = 0;
  const std::size_t batch = 32;
  while (static_cast<int>(data.demos.size()) < n) {
    std::vector<SlotResult> results(batch);
    parallel_for(
        batch,
        [&](std::size_t i) {
          results[i] = run_slot(task, data.engine, seed, slot + i, params, arm, fixed_scene);
        },
        params.threads);
    // Merge in slot order and stop counting at the n-th success.
    for (auto& r : results) {
      if (static_cast<int>(data.demos.size()) >= n) break;
      ++data.report.queries_tried;
      data.report.planner_failures += r.planner_failures;
      data.report.verification_failures += r.verification_failures;
      if (r.demo) {
        data.demos.push_back(std::move(*r.demo));
      } else {
        ++data.report.rejected;
      }
    }
    slot += batch;
  }
  data.report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return data;
}

// ---------------------------------------------------------------------------

namespace {

io::Json engine_json(const EngineParams& p) {
  return {{"action_bound", p.action_bound},
          {"horizon", p.horizon},
          {"stop_on_collision", p.stop_on_collision},
          {"collision_margin", p.collision_margin},
          {"edge_step", p.edge_step},
          {"goal", {{"representation", to_string(p.goal.representation)},
                    {"ee_tolerance", p.goal.ee_tolerance},
                    {"config_tolerance", p.goal.config_tolerance}}}};
}

EngineParams engine_from_json(const io::Json& j) {
  EngineParams p;
  p.action_bound = io::number_field(j, "action_bound");
  p.horizon = static_cast<int>(io::number_field(j, "horizon"));
  if (!j.contains("stop_on_collision") || !j.at("stop_on_collision").is_boolean()) {
    throw ParseError("field 'stop_on_collision': expected a boolean");
  }
  p.stop_on_collision = j.at("stop_on_collision").get<bool>();
  p.collision_margin = io::number_field(j, "collision_margin");
  p.edge_step = io::number_field(j, "edge_step");
  if (!j.contains("goal")) throw ParseError("missing field 'goal'");
  const io::Json& g = j.at("goal");
  try {
    p.goal.representation = parse_goal_representation(io::string_field(g, "representation"));
  } catch (const InvalidArgument& e) {
    throw ParseError(std::string("field 'goal.representation': ") + e.what());
  }
  p.goal.ee_tolerance = io::number_field(g, "ee_tolerance");
  p.goal.config_tolerance = io::number_field(g, "config_tolerance");
  return p;
}

io::Json vec_list(const std::vector<Vec7>& v) {
  io::Json arr = io::Json::array();
  for (const auto& x : v) arr.push_back(io::to_json<7>(x));
  return arr;
}

std::vector<Vec7> vec_list_from(const io::Json& rec, const std::string& field) {
  if (!rec.contains(field) || !rec.at(field).is_array()) throw ParseError("field '" + field + "': expected an array");
  std::vector<Vec7> out;
  for (std::size_t i = 0; i < rec.at(field).size(); ++i) {
    io::Json wrap = {{field, rec.at(field)[i]}};
    out.push_back(io::vec_from_json<7>(wrap, field));
  }
  return out;
}

}  // namespace

io::Json engine_params_to_json(const EngineParams& p) { return engine_json(p); }
EngineParams engine_params_from_json(const io::Json& j) { return engine_from_json(j); }

void save_demos(std::ostream& out, const DemoDataset& data) {
  const io::Json header = {{"schema_version", kDemoSchemaVersion},
                           {"kind", "demos"},
                           {"task", data.task},
                           {"seed", data.seed},
                           {"count", data.demos.size()},
                           {"engine", engine_json(data.engine)},
                           {"report", {{"queries_tried", data.report.queries_tried},
                                       {"rejected", data.report.rejected},
                                       {"reject_rate", data.report.reject_rate()},
                                       {"planner_failures", data.report.planner_failures},
                                       {"verification_failures", data.report.verification_failures},
                                       {"wall_seconds", data.report.wall_seconds}}}};
  out << header.dump() << "\n";
  for (const auto& d : data.demos) {
    const io::Json rec = {{"query", query_to_json(d.query)},
                          {"attempts", d.attempts_used},
                          {"states", vec_list(d.states)},
                          {"actions", vec_list(d.actions)}};
    out << rec.dump() << "\n";
  }
}

DemoDataset load_demos(std::istream& in) {
  io::JsonLineReader reader(in);
  const io::Json header = reader.read_header("demos", kDemoSchemaVersion);
  DemoDataset data;
  std::size_t expected = 0;
  reader.with_context([&] {
    data.task = io::string_field(header, "task");
    data.seed = io::u64_field(header, "seed");
    expected = static_cast<std::size_t>(io::number_field(header, "count"));
    if (!header.contains("engine")) throw ParseError("missing field 'engine'");
    data.engine = engine_from_json(header.at("engine"));
    if (header.contains("report")) {
      const auto& r = header.at("report");
      data.report.queries_tried = static_cast<int>(io::number_field(r, "queries_tried"));
      data.report.rejected = static_cast<int>(io::number_field(r, "rejected"));
      data.report.planner_failures = static_cast<int>(io::number_field(r, "planner_failures"));
      data.report.verification_failures = static_cast<int>(io::number_field(r, "verification_failures"));
      data.report.wall_seconds = io::number_field(r, "wall_seconds");
    }
  });
  io::Json rec;
  while (reader.next(rec)) {
    reader.with_context([&] {
      Demonstration d;
      if (!rec.contains("query")) throw ParseError("missing field 'query'");
      d.query = query_from_json(rec.at("query"));
      d.attempts_used = static_cast<int>(io::number_field(rec, "attempts"));
      if (d.attempts_used < 1 || d.attempts_used > 3) throw ParseError("field 'attempts': must lie in 1..3");
      d.states = vec_list_from(rec, "states");
      d.actions = vec_list_from(rec, "actions");
      if (d.states.size() != d.actions.size() + 1) {
        throw ParseError("demo has " + std::to_string(d.states.size()) + " states but " +
                         std::to_string(d.actions.size()) + " actions");
      }
      d.verified = true;
      data.demos.push_back(std::move(d));
    });
  }
  if (data.demos.size() != expected) {
    throw ParseError("demo file: header announces " + std::to_string(expected) + " demos, file has " +
                     std::to_string(data.demos.size()));
  }
  return data;
}

DatasetCheck verify_dataset(const DemoDataset& data, std::shared_ptr<const ArmGeometry> arm) {
  const TaskSpec& task = find_task(data.task);
  DatasetCheck check;
  std::shared_ptr<const Scene> fixed;
  if (!task.sampler) fixed = std::make_shared<const Scene>(build_fixed_task(task.name, arm));
  for (std::size_t i = 0; i < data.demos.size(); ++i) {
    const Demonstration& d = data.demos[i];
    auto scene = fixed ? fixed : std::make_shared<const Scene>(scene_for_task(task, d.query.scene_seed, arm));
    EpisodeEngine engine(scene, data.engine);
    const ReplayOutcome r = replay_demo(engine, d, ActionMode::Relative);
    ++check.checked;
    if (!r.reached_goal || r.collided) {
      ++check.failed;
      check.failed_indices.push_back(static_cast<int>(i));
    }
  }
  return check;
}

}  // namespace nmp
