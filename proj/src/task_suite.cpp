#include "nmp/task_suite.hpp"

#include <cmath>
#include <istream>
#include <numbers>
#include <ostream>

#include "nmp/errors.hpp"
#include "nmp/io.hpp"

namespace nmp {

std::string to_string(Difficulty d) {
  switch (d) {
    case Difficulty::Easy: return "easy";
    case Difficulty::Medium: return "medium";
    case Difficulty::Hard: return "hard";
  }
  return "easy";
}

std::pair<int, int> box_count_range(Difficulty d) {
  switch (d) {
    case Difficulty::Easy: return {2, 4};
    case Difficulty::Medium: return {3, 6};
    case Difficulty::Hard: return {4, 8};
  }
  return {2, 4};
}

const std::vector<TaskSpec>& task_registry() {
  static const std::vector<TaskSpec> tasks = [] {
    std::vector<TaskSpec> t;
    auto add = [&](std::string name, TaskCategory cat, std::optional<Difficulty> sampler = std::nullopt) {
      TaskSpec spec;
      spec.name = std::move(name);
      spec.category = cat;
      spec.sampler = sampler;
      t.push_back(spec);
    };
    add("no_obstacles", TaskCategory::GoalGeneralization);
    add("wall", TaskCategory::GoalGeneralization);
    add("double_wall_wide_gap", TaskCategory::GoalGeneralization);
    add("double_walls", TaskCategory::GoalGeneralization);
    add("boxes", TaskCategory::GoalGeneralization);
    add("random_boxes_easy", TaskCategory::ObstacleGeneralization, Difficulty::Easy);
    add("random_boxes_medium", TaskCategory::ObstacleGeneralization, Difficulty::Medium);
    add("random_boxes_hard", TaskCategory::ObstacleGeneralization, Difficulty::Hard);
    add("narrow_shelves", TaskCategory::OutOfDistribution);
    add("three_shelves", TaskCategory::OutOfDistribution);
    add("pole_shelves", TaskCategory::OutOfDistribution);
    return t;
  }();
  return tasks;
}

const TaskSpec& find_task(const std::string& name) {
  for (const auto& t : task_registry()) {
    if (t.name == name) return t;
  }
  throw UnknownTask("unknown task '" + name + "'");
}

namespace {

// ---------------------------------------------------------------------------
// Scene parameters. The arm base sits at the origin on the table (z = 0) and
// faces +x. All fixed-scene dimensions live in this block.

Obstacle box(Vec3 center, Vec3 half, double yaw = 0.0) {
  return {Box{center, half, yaw}, ObstacleLabel::Varying};
}

// Wall parallel to the x axis at lateral offset y.
Obstacle side_wall(double y) {
  constexpr double kHalfThickness = 0.025, kXMin = -0.55, kXMax = 0.85, kHeight = 0.95;
  return box({0.5 * (kXMin + kXMax), y, 0.5 * kHeight}, {0.5 * (kXMax - kXMin), kHalfThickness, 0.5 * kHeight});
}

struct ShelfParams {
  Vec3 origin;  // center of the front edge footprint, on the table
  double yaw;   // shelf faces the robot along local -x
  double width, depth, height;
  int boards;
  bool poles;   // corner poles instead of side panels
};

void add_shelf(std::vector<Obstacle>& out, const ShelfParams& p) {
  constexpr double kBoardHalf = 0.012, kPanelHalf = 0.015, kPoleHalf = 0.02;
  const double c = std::cos(p.yaw), s = std::sin(p.yaw);
  auto place = [&](Vec3 local_center, Vec3 half) {
    const Vec3 world{p.origin.x() + c * local_center.x() - s * local_center.y(),
                     p.origin.y() + s * local_center.x() + c * local_center.y(), local_center.z()};
    out.push_back(box(world, half, p.yaw));
  };
  const double hd = 0.5 * p.depth, hw = 0.5 * p.width;
  for (int i = 0; i < p.boards; ++i) {
    const double z = p.height * (i + 1) / p.boards - kBoardHalf;
    place({hd, 0.0, z}, {hd, hw, kBoardHalf});
  }
  if (p.poles) {
    for (double x : {kPoleHalf, p.depth - kPoleHalf}) {
      for (double y : {-hw + kPoleHalf, hw - kPoleHalf}) place({x, y, 0.5 * p.height}, {kPoleHalf, kPoleHalf, 0.5 * p.height});
    }
  } else {
    for (double y : {-hw + kPanelHalf, hw - kPanelHalf}) place({hd, y, 0.5 * p.height}, {hd, kPanelHalf, 0.5 * p.height});
  }
}

std::vector<Obstacle> fixed_obstacles(const std::string& name) {
  std::vector<Obstacle> obs;
  if (name == "no_obstacles") return obs;
  if (name == "wall") {
    obs.push_back(side_wall(0.40));
  } else if (name == "double_wall_wide_gap") {
    obs.push_back(side_wall(0.40));
    obs.push_back(side_wall(-0.40));
  } else if (name == "double_walls") {
    obs.push_back(side_wall(0.30));
    obs.push_back(side_wall(-0.30));
  } else if (name == "boxes") {
    obs.push_back(box({0.50, 0.25, 0.15}, {0.10, 0.10, 0.15}, 0.3));
    obs.push_back(box({0.40, -0.40, 0.20}, {0.08, 0.15, 0.20}, -0.5));
    obs.push_back(box({-0.35, 0.45, 0.12}, {0.12, 0.08, 0.12}, 0.9));
    obs.push_back(box({-0.45, -0.30, 0.25}, {0.10, 0.10, 0.25}, 0.0));
    obs.push_back(box({0.60, -0.05, 0.55}, {0.08, 0.08, 0.05}, 0.0));
  } else if (name == "narrow_shelves") {
    add_shelf(obs, {{0.45, 0.0, 0.0}, 0.0, 0.9, 0.35, 1.0, 5, false});
  } else if (name == "three_shelves") {
    add_shelf(obs, {{0.50, 0.0, 0.0}, 0.0, 0.7, 0.30, 0.9, 3, false});
    add_shelf(obs, {{0.0, 0.55, 0.0}, std::numbers::pi / 2, 0.7, 0.30, 0.9, 3, false});
    add_shelf(obs, {{0.0, -0.55, 0.0}, -std::numbers::pi / 2, 0.7, 0.30, 0.9, 3, false});
  } else if (name == "pole_shelves") {
    add_shelf(obs, {{0.45, 0.0, 0.0}, 0.0, 0.8, 0.35, 1.0, 3, true});
    obs.push_back(box({0.0, 0.50, 0.6}, {0.025, 0.025, 0.6}));
    obs.push_back(box({0.0, -0.50, 0.6}, {0.025, 0.025, 0.6}));
  } else {
    throw UnknownTask("'" + name + "' is not a fixed-scene task");
  }
  return obs;
}

}  // namespace

Scene build_fixed_task(const std::string& name, std::shared_ptr<const ArmGeometry> arm) {
  const TaskSpec& spec = find_task(name);
  if (spec.sampler) throw UnknownTask("'" + name + "' is a sampled task");
  Scene scene = empty_scene(std::move(arm), name);
  for (auto& o : fixed_obstacles(name)) scene.obstacles.push_back(std::move(o));
  return scene;
}

Scene sample_random_boxes(Difficulty difficulty, Rng& rng, std::shared_ptr<const ArmGeometry> arm,
                          const RandomBoxParams& params) {
  Scene scene = empty_scene(arm, "random_boxes_" + to_string(difficulty));
  const auto [lo, hi] = box_count_range(difficulty);
  const int count = static_cast<int>(rng.uniform_int(lo, hi));
  const Configuration home{arm->home};
  for (int i = 0; i < count; ++i) {
    bool placed = false;
    for (int attempt = 0; attempt < params.max_box_attempts && !placed; ++attempt) {
      Box b;
      for (int k = 0; k < 3; ++k) b.half_extents[k] = rng.uniform(params.half_extent_min, params.half_extent_max);
      const double r = std::sqrt(rng.uniform(params.radius_min * params.radius_min,
                                             params.radius_max * params.radius_max));
      const double theta = rng.uniform(0.0, 2.0 * std::numbers::pi);
      b.yaw = rng.uniform(0.0, std::numbers::pi);
      b.center = {r * std::cos(theta), r * std::sin(theta), b.half_extents.z()};
      // Boxes that swallow the base or block the home pose are redrawn.
      Scene probe = empty_scene(arm);
      probe.obstacles.push_back({b, ObstacleLabel::Varying});
      if (is_collision(probe, home)) continue;
      scene.obstacles.push_back({b, ObstacleLabel::Varying});
      placed = true;
    }
    if (!placed) throw Infeasible("could not place a random box clear of the home pose");
  }
  return scene;
}

Scene sample_random_boxes(Difficulty difficulty, std::uint64_t seed, std::shared_ptr<const ArmGeometry> arm) {
  Rng rng(seed);
  Scene scene = sample_random_boxes(difficulty, rng, std::move(arm));
  scene.seed = seed;
  return scene;
}

Scene scene_for_task(const TaskSpec& task, std::optional<std::uint64_t> scene_seed,
                     std::shared_ptr<const ArmGeometry> arm) {
  if (!task.sampler) return build_fixed_task(task.name, std::move(arm));
  if (!scene_seed) throw InvalidArgument("task '" + task.name + "' needs a scene seed");
  Scene scene = sample_random_boxes(*task.sampler, *scene_seed, std::move(arm));
  scene.name = task.name;
  return scene;
}

bool Query::operator==(const Query& other) const {
  return start.q == other.start.q && goal_config.q == other.goal_config.q && goal_ee == other.goal_ee &&
         scene_seed == other.scene_seed;
}

Query sample_query(const Scene& scene, Rng& rng, int max_tries, double margin) {
  if (max_tries < 1) throw InvalidArgument("max_tries must be >= 1");
  const ArmGeometry& arm = *scene.arm;
  int rejected = 0;
  auto draw = [&]() {
    for (;;) {
      NormalizedConfig s;
      for (int i = 0; i < kDof; ++i) s.s[i] = rng.uniform(-1.0, 1.0);
      Configuration c = denormalize(s, arm.limits);
      if (!is_collision(scene, c, margin)) return c;
      if (++rejected >= max_tries) {
        throw Infeasible("no collision-free configuration after " + std::to_string(max_tries) + " rejections");
      }
    }
  };
  Query q;
  q.start = draw();
  q.goal_config = draw();
  q.goal_ee = ee_position(q.goal_config, arm);
  q.scene_seed = scene.seed;
  return q;
}

QuerySet sample_queries(const TaskSpec& task, int n, std::uint64_t seed, std::shared_ptr<const ArmGeometry> arm) {
  QuerySet set;
  set.task = task.name;
  set.seed = seed;
  Rng rng(seed);
  std::optional<Scene> fixed;
  if (!task.sampler) fixed = build_fixed_task(task.name, arm);
  for (int i = 0; i < n; ++i) {
    if (fixed) {
      set.queries.push_back(sample_query(*fixed, rng));
    } else {
      const Scene scene = scene_for_task(task, rng.next_u64(), arm);
      set.queries.push_back(sample_query(scene, rng));
    }
  }
  return set;
}

// ---------------------------------------------------------------------------
// Serialization: JSON lines, header first.

namespace {

io::Json label_json(ObstacleLabel l) { return l == ObstacleLabel::Static ? "static" : "varying"; }

ObstacleLabel parse_label(const io::Json& rec) {
  const auto text = io::string_field(rec, "label");
  if (text == "static") return ObstacleLabel::Static;
  if (text == "varying") return ObstacleLabel::Varying;
  throw ParseError("field 'label': unknown value '" + text + "'");
}

}  // namespace

void save_scene(std::ostream& out, const Scene& scene) {
  io::Json header = {{"schema_version", kSceneSchemaVersion},
                     {"kind", "scene"},
                     {"name", scene.name},
                     {"arm", scene.arm ? scene.arm->name : ""},
                     {"obstacles", scene.obstacles.size()}};
  header["seed"] = scene.seed ? io::Json(*scene.seed) : io::Json(nullptr);
  out << header.dump() << "\n";
  for (const auto& o : scene.obstacles) {
    io::Json rec;
    if (const auto* b = std::get_if<Box>(&o.shape)) {
      rec = {{"type", "box"}, {"center", io::to_json<3>(b->center)}, {"half_extents", io::to_json<3>(b->half_extents)},
             {"yaw", b->yaw}};
    } else {
      const auto& p = std::get<Plane>(o.shape);
      rec = {{"type", "plane"}, {"normal", io::to_json<3>(p.normal)}, {"offset", p.offset}};
    }
    rec["label"] = label_json(o.label);
    out << rec.dump() << "\n";
  }
}

Scene load_scene(std::istream& in, std::shared_ptr<const ArmGeometry> arm) {
  io::JsonLineReader reader(in);
  const io::Json header = reader.read_header("scene", kSceneSchemaVersion);
  Scene scene;
  scene.arm = std::move(arm);
  std::size_t expected = 0;
  reader.with_context([&] {
    scene.name = io::string_field(header, "name");
    if (header.contains("seed") && !header.at("seed").is_null()) scene.seed = io::u64_field(header, "seed");
    expected = static_cast<std::size_t>(io::number_field(header, "obstacles"));
  });
  io::Json rec;
  while (reader.next(rec)) {
    reader.with_context([&] {
      const auto type = io::string_field(rec, "type");
      Obstacle o;
      if (type == "box") {
        o.shape = Box{io::vec_from_json<3>(rec, "center"), io::vec_from_json<3>(rec, "half_extents"),
                      io::number_field(rec, "yaw")};
      } else if (type == "plane") {
        o.shape = Plane{io::vec_from_json<3>(rec, "normal"), io::number_field(rec, "offset")};
      } else {
        throw ParseError("field 'type': unknown obstacle type '" + type + "'");
      }
      o.label = parse_label(rec);
      try {
        o.validate();
      } catch (const InvalidArgument& e) {
        throw ParseError(e.what());
      }
      scene.obstacles.push_back(std::move(o));
    });
  }
  if (scene.obstacles.size() != expected) {
    throw ParseError("scene '" + scene.name + "': header announces " + std::to_string(expected) +
                     " obstacles, file has " + std::to_string(scene.obstacles.size()));
  }
  return scene;
}

namespace {

io::Json query_json(const Query& q) {
  io::Json rec = {{"start", io::to_json<7>(q.start.q)},
                  {"goal_config", io::to_json<7>(q.goal_config.q)},
                  {"goal_ee", io::to_json<3>(q.goal_ee)}};
  if (q.scene_seed) rec["scene_seed"] = *q.scene_seed;
  return rec;
}

}  // namespace

io::Json query_to_json(const Query& q) { return query_json(q); }

Query query_from_json(const io::Json& rec) {
  Query q;
  q.start.q = io::vec_from_json<7>(rec, "start");
  q.goal_config.q = io::vec_from_json<7>(rec, "goal_config");
  q.goal_ee = io::vec_from_json<3>(rec, "goal_ee");
  if (rec.contains("scene_seed")) q.scene_seed = io::u64_field(rec, "scene_seed");
  return q;
}

void save_queries(std::ostream& out, const QuerySet& set) {
  const io::Json header = {{"schema_version", kSceneSchemaVersion},
                           {"kind", "queries"},
                           {"task", set.task},
                           {"seed", set.seed},
                           {"count", set.queries.size()}};
  out << header.dump() << "\n";
  for (const auto& q : set.queries) out << query_json(q).dump() << "\n";
}

QuerySet load_queries(std::istream& in) {
  io::JsonLineReader reader(in);
  const io::Json header = reader.read_header("queries", kSceneSchemaVersion);
  QuerySet set;
  std::size_t expected = 0;
  reader.with_context([&] {
    set.task = io::string_field(header, "task");
    set.seed = io::u64_field(header, "seed");
    expected = static_cast<std::size_t>(io::number_field(header, "count"));
  });
  io::Json rec;
  while (reader.next(rec)) {
    reader.with_context([&] { set.queries.push_back(query_from_json(rec)); });
  }
  if (set.queries.size() != expected) {
    throw ParseError("query file: header announces " + std::to_string(expected) + " queries, file has " +
                     std::to_string(set.queries.size()));
  }
  return set;
}

}  // namespace nmp
