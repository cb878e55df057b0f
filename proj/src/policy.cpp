#include "nmp/policy.hpp"

#include <istream>
#include <ostream>
#include <sstream>

#include "nmp/errors.hpp"
#include "nmp/io.hpp"

namespace nmp {

int policy_input_dim(GoalRepresentation rep) {
  switch (rep) {
    case GoalRepresentation::Config: return 14;
    case GoalRepresentation::EE: return 13;
    case GoalRepresentation::Combined: return 20;
  }
  return 14;
}

Eigen::VectorXd make_policy_input(const State& state, const GoalValue& goal, const GoalSpec& spec) {
  const bool want_ee = spec.representation != GoalRepresentation::Config;
  const bool want_cfg = spec.representation != GoalRepresentation::EE;
  if (want_ee && !goal.ee_target) throw MissingGoalField("goal has no EE target");
  if (want_cfg && !goal.config_target) throw MissingGoalField("goal has no configuration target");
  Eigen::VectorXd x(policy_input_dim(spec.representation));
  Eigen::Index k = 0;
  x.segment<7>(k) = state.s.s;
  k += 7;
  if (want_ee) {
    x.segment<3>(k) = state.ee;
    k += 3;
  }
  if (want_cfg) {
    x.segment<7>(k) = *goal.config_target;
    k += 7;
  }
  if (want_ee) x.segment<3>(k) = *goal.ee_target;
  return x;
}

Vec7 GoToGoalPolicy::act(const State& state, const GoalValue& goal, Rng&) const {
  if (!goal.config_target) throw MissingConfigGoal("go-to-goal needs a configuration goal");
  return clip_action(*goal.config_target - state.s.s, a_);
}

MlpPolicy::MlpPolicy(Mlp net, GoalSpec spec, double action_bound, TrainingInfo info)
    : net_(std::move(net)), spec_(spec), a_(action_bound), info_(std::move(info)) {
  spec_.validate();
  if (net_.input_dim() != policy_input_dim(spec_.representation) || net_.output_dim() != kDof) {
    throw DimensionMismatch("network shape does not match the goal representation");
  }
}

Vec7 MlpPolicy::act(const State& state, const GoalValue& goal, Rng&) const {
  const Eigen::VectorXd out = net_.forward_one(make_policy_input(state, goal, spec_));
  return clip_action(Vec7(out), a_);
}

void save_checkpoint(std::ostream& out, const MlpPolicy& policy) {
  const Mlp& net = policy.net();
  io::Json params = io::Json::array();
  for (Eigen::Index i = 0; i < net.params().size(); ++i) params.push_back(net.params()[i]);
  const TrainingInfo& info = policy.info();
  const io::Json doc = {
      {"schema_version", kCheckpointSchemaVersion},
      {"kind", "bc_policy"},
      {"widths", net.widths()},
      {"output_scale", net.output_scale()},
      {"action_bound", policy.action_bound()},
      {"goal", {{"representation", to_string(policy.goal_spec().representation)},
                {"ee_tolerance", policy.goal_spec().ee_tolerance},
                {"config_tolerance", policy.goal_spec().config_tolerance}}},
      {"training", {{"task", info.task},
                    {"seed", info.seed},
                    {"epochs", info.epochs},
                    {"demos", info.demos},
                    {"samples", info.samples},
                    {"final_loss", info.final_loss}}},
      {"params", params}};
  out << doc.dump() << "\n";
}

MlpPolicy load_checkpoint(std::istream& in) {
  io::JsonLineReader reader(in);
  const io::Json doc = reader.read_header("bc_policy", kCheckpointSchemaVersion);
  std::optional<MlpPolicy> policy;
  reader.with_context([&] {
    if (!doc.contains("widths") || !doc.at("widths").is_array()) throw ParseError("field 'widths': expected an array");
    const auto widths = doc.at("widths").get<std::vector<int>>();
    Mlp net(widths, io::number_field(doc, "output_scale"));
    if (!doc.contains("params") || !doc.at("params").is_array()) throw ParseError("field 'params': expected an array");
    const io::Json& arr = doc.at("params");
    Eigen::VectorXd p(static_cast<Eigen::Index>(arr.size()));
    for (std::size_t i = 0; i < arr.size(); ++i) {
      if (!arr[i].is_number()) throw ParseError("field 'params': element " + std::to_string(i) + " not a number");
      p[static_cast<Eigen::Index>(i)] = arr[i].get<double>();
    }
    net.set_params(p);
    if (!doc.contains("goal")) throw ParseError("missing field 'goal'");
    const io::Json& g = doc.at("goal");
    GoalSpec spec;
    spec.representation = parse_goal_representation(io::string_field(g, "representation"));
    spec.ee_tolerance = io::number_field(g, "ee_tolerance");
    spec.config_tolerance = io::number_field(g, "config_tolerance");
    TrainingInfo info;
    if (doc.contains("training")) {
      const io::Json& t = doc.at("training");
      info.task = io::string_field(t, "task");
      info.seed = io::u64_field(t, "seed");
      info.epochs = static_cast<int>(io::number_field(t, "epochs"));
      info.demos = static_cast<std::size_t>(io::number_field(t, "demos"));
      info.samples = static_cast<std::size_t>(io::number_field(t, "samples"));
      info.final_loss = io::number_field(t, "final_loss");
    }
    policy.emplace(std::move(net), spec, io::number_field(doc, "action_bound"), info);
  });
  return std::move(*policy);
}

BcDataset bc_dataset(const DemoDataset& data, const GoalSpec& spec, std::shared_ptr<const ArmGeometry> arm) {
  std::size_t total = 0;
  for (const auto& d : data.demos) total += d.actions.size();
  if (total == 0) throw InvalidArgument("demo set contains no transitions");
  const int dim = policy_input_dim(spec.representation);
  BcDataset out{Eigen::MatrixXd(dim, static_cast<Eigen::Index>(total)),
                Eigen::MatrixXd(kDof, static_cast<Eigen::Index>(total))};
  Eigen::Index col = 0;
  for (const auto& d : data.demos) {
    const NormalizedConfig goal_s = normalize(d.query.goal_config, arm->limits);
    const GoalValue goal = make_goal(goal_s, d.query.goal_ee, spec);
    for (std::size_t t = 0; t < d.actions.size(); ++t) {
      State st;
      st.s.s = d.states[t];
      st.ee = ee_position(denormalize(st.s, arm->limits), *arm);
      out.inputs.col(col) = make_policy_input(st, goal, spec);
      out.targets.col(col) = d.actions[t];
      ++col;
    }
  }
  return out;
}

BcTrainOutput bc_train(const DemoDataset& data, const GoalSpec& spec, const BcHyper& hyper,
                       std::shared_ptr<const ArmGeometry> arm) {
  const BcDataset ds = bc_dataset(data, spec, arm);
  BcTrainResult fit = bc_fit(ds.inputs, ds.targets, data.engine.action_bound, hyper);
  TrainingInfo info{data.task, hyper.seed, hyper.epochs, data.demos.size(), fit.samples, fit.loss_curve.back()};
  BcTrainOutput out;
  out.policy = std::make_unique<MlpPolicy>(std::move(fit.net), spec, data.engine.action_bound, info);
  out.loss_curve = std::move(fit.loss_curve);
  out.smoothed_curve = std::move(fit.smoothed_curve);
  return out;
}

}  // namespace nmp
