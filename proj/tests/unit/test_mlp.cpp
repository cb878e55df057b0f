#include <doctest.h>

#include <sstream>

#include "nmp/errors.hpp"
#include "nmp/mlp.hpp"
#include "nmp/policy.hpp"

using namespace nmp;

namespace {

double max_relative_gradient_error(const Mlp& net, const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
  Eigen::VectorXd grad;
  net.loss_and_gradient(x, y, grad);
  Mlp probe = net;
  const double eps = 1e-5;
  double worst = 0.0;
  for (Eigen::Index i = 0; i < grad.size(); ++i) {
    const double orig = probe.params()[i];
    probe.params()[i] = orig + eps;
    const double up = probe.loss(x, y);
    probe.params()[i] = orig - eps;
    const double down = probe.loss(x, y);
    probe.params()[i] = orig;
    const double fd = (up - down) / (2 * eps);
    const double denom = std::max({std::abs(fd), std::abs(grad[i]), 1e-6});
    worst = std::max(worst, std::abs(fd - grad[i]) / denom);
  }
  return worst;
}

}  // namespace

TEST_CASE("parameter layout and shapes") {
  Mlp net({14, 8, 8, 7}, 0.03);
  CHECK(net.num_params() == 14 * 8 + 8 + 8 * 8 + 8 + 8 * 7 + 7);
  CHECK(net.forward(Eigen::MatrixXd::Zero(14, 3)).cols() == 3);
  CHECK_THROWS_AS(net.forward(Eigen::MatrixXd::Zero(13, 1)), DimensionMismatch);
  CHECK_THROWS_AS(net.set_params(Eigen::VectorXd::Zero(3)), DimensionMismatch);
  CHECK_THROWS_AS(Mlp({14}, 0.03), InvalidArgument);
}

TEST_CASE("outputs stay within the output scale") {
  Rng rng(2);
  Mlp net = Mlp::glorot({5, 16, 7}, 0.03, rng);
  net.params() *= 50.0;
  const Eigen::MatrixXd out = net.forward(Eigen::MatrixXd::Random(5, 50) * 10);
  CHECK(out.cwiseAbs().maxCoeff() <= 0.03);
}

TEST_CASE("analytic gradient matches central differences") {
  Rng rng(6);
  for (const std::vector<int>& widths : {std::vector<int>{14, 16, 16, 7}, std::vector<int>{20, 12, 9, 12, 7}}) {
    const Mlp net = Mlp::glorot(widths, 0.03, rng);
    Eigen::MatrixXd x(widths.front(), 9), y(7, 9);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.uniform(-1, 1);
    for (Eigen::Index i = 0; i < y.size(); ++i) y.data()[i] = rng.uniform(-0.03, 0.03);
    CHECK(max_relative_gradient_error(net, x, y) < 1e-4);
  }
}

TEST_CASE("a single repeated pair is memorized") {
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(14, 64);
  Eigen::MatrixXd y = Eigen::MatrixXd::Zero(7, 64);
  Eigen::VectorXd xi(14), yi(7);
  xi << 0.1, -0.2, 0.3, 0.4, -0.5, 0.6, 0.7, 0.0, 0.1, -0.1, 0.2, 0.3, -0.3, 0.5;
  yi << 0.01, -0.02, 0.005, 0.0, 0.012, -0.007, 0.015;
  x.colwise() = xi;
  y.colwise() = yi;
  BcHyper h;
  h.hidden = {32, 32};
  h.epochs = 300;
  h.batch_size = 16;
  h.learning_rate = 0.05;
  const BcTrainResult r = bc_fit(x, y, 0.03, h);
  CHECK(r.loss_curve.back() < 1e-4);
  CHECK((r.net.forward_one(xi) - yi).cwiseAbs().maxCoeff() < 1e-3);
  for (std::size_t i = 1; i < r.smoothed_curve.size(); ++i) CHECK(r.smoothed_curve[i] <= r.smoothed_curve[i - 1] + 1e-12);
}

TEST_CASE("training is deterministic given the seed") {
  Rng rng(1);
  Eigen::MatrixXd x = Eigen::MatrixXd::Random(14, 300), y = Eigen::MatrixXd::Random(7, 300) * 0.03;
  BcHyper h;
  h.hidden = {16};
  h.epochs = 3;
  h.seed = 9;
  const auto a = bc_fit(x, y, 0.03, h);
  const auto b = bc_fit(x, y, 0.03, h);
  CHECK(a.net.params() == b.net.params());
  CHECK(a.loss_curve == b.loss_curve);
  CHECK_THROWS_AS(bc_fit(x, Eigen::MatrixXd::Zero(7, 10), 0.03, h), DimensionMismatch);
}

TEST_CASE("smoothing") {
  const auto s = smooth_curve({4, 2, 0, 2}, 2);
  CHECK(s == std::vector<double>{4, 3, 1, 1});
}

TEST_CASE("policy input layouts") {
  State st;
  st.s.s = Vec7::Constant(0.1);
  st.ee = Vec3(1, 2, 3);
  const GoalValue g{Vec3(4, 5, 6), Vec7::Constant(-0.2)};
  const auto cfg = make_policy_input(st, g, GoalSpec{GoalRepresentation::Config});
  CHECK(cfg.size() == 14);
  CHECK(cfg[7] == -0.2);
  const auto ee = make_policy_input(st, g, GoalSpec{GoalRepresentation::EE});
  CHECK(ee.size() == 13);
  CHECK(ee[7] == 1);
  CHECK(ee[10] == 4);
  const auto both = make_policy_input(st, g, GoalSpec{GoalRepresentation::Combined});
  CHECK(both.size() == 20);
  CHECK(both[10] == -0.2);
  CHECK(both[17] == 4);
  CHECK_THROWS_AS(make_policy_input(st, GoalValue{std::nullopt, Vec7::Zero()}, GoalSpec{GoalRepresentation::EE}),
                  MissingGoalField);
}

TEST_CASE("go-to-goal policy") {
  GoToGoalPolicy p;
  Rng rng(0);
  State st;
  st.s.s = Vec7::Zero();
  GoalValue g;
  g.config_target = 0.06 * Vec7::Unit(0);
  CHECK((p.act(st, g, rng) - 0.03 * Vec7::Unit(0)).norm() < 1e-15);
  g.config_target = Vec7::Zero();
  CHECK(p.act(st, g, rng) == Vec7::Zero());
  CHECK_THROWS_AS(p.act(st, GoalValue{Vec3::Zero(), std::nullopt}, rng), MissingConfigGoal);
}

TEST_CASE("go-to-goal trajectories are straight in normalized space") {
  const auto arm = default_arm();
  auto scene = std::make_shared<const Scene>(empty_scene(arm));
  const QuerySet set = sample_queries(find_task("no_obstacles"), 20, 6, arm);
  GoToGoalPolicy p;
  Rng rng(0);
  for (const auto& q : set.queries) {
    EpisodeEngine e(scene, EngineParams{});
    const Vec7 s0 = e.reset(q).s.s;
    const Vec7 g = *e.goal().config_target;
    bool blocked = false;
    std::vector<Vec7> states;
    while (!e.done()) {
      const Transition tr = e.step(p.act(e.state(), e.goal(), rng));
      blocked = blocked || tr.collided_during_step;
      states.push_back(tr.next_state.s.s);
    }
    if (blocked) continue;
    const Vec7 dir = (g - s0).normalized();
    for (const auto& s : states) {
      const Vec7 rel = s - s0;
      CHECK((rel - rel.dot(dir) * dir).norm() < 1e-9);
      CHECK(rel.dot(dir) <= (g - s0).norm() + 1e-9);
    }
  }
}

TEST_CASE("checkpoints round trip at full precision") {
  Rng rng(3);
  MlpPolicy policy(Mlp::glorot({20, 12, 7}, 0.03, rng), GoalSpec{GoalRepresentation::Combined}, 0.03,
                   TrainingInfo{"wall", 4, 2, 10, 100, 0.5});
  std::stringstream ss;
  save_checkpoint(ss, policy);
  const MlpPolicy back = load_checkpoint(ss);
  CHECK(back.net().params() == policy.net().params());
  CHECK(back.net().widths() == policy.net().widths());
  CHECK(back.goal_spec().representation == GoalRepresentation::Combined);
  CHECK(back.info().task == "wall");

  std::istringstream wrong(R"({"schema_version":1,"kind":"bc_policy","widths":[14,7],"output_scale":0.03,)"
                           R"("action_bound":0.03,"goal":{"representation":"ee","ee_tolerance":0.02,)"
                           R"("config_tolerance":0.05},"params":[0]})");
  CHECK_THROWS_AS(load_checkpoint(wrong), DimensionMismatch);
}

TEST_CASE("BC on a handful of demos produces a working policy object") {
  const DemoDataset data = collect_demos(find_task("no_obstacles"), 20, 1);
  BcHyper h;
  h.hidden = {32, 32};
  h.epochs = 5;
  const BcTrainOutput out = bc_train(data, GoalSpec{}, h);
  REQUIRE(out.policy);
  CHECK(out.loss_curve.size() == 5);
  CHECK(out.loss_curve.back() < out.loss_curve.front());
  Rng rng(0);
  State st;
  st.s.s = Vec7::Zero();
  CHECK(out.policy->act(st, GoalValue{std::nullopt, Vec7::Constant(0.5)}, rng).norm() <= 0.03 + 1e-12);
  CHECK(bc_dataset(data, GoalSpec{GoalRepresentation::EE}).inputs.rows() == 13);
}
