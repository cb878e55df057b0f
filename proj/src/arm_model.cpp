#include "nmp/arm_model.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "default_arm_data.hpp"
#include "nmp/errors.hpp"

namespace nmp {

void JointLimits::validate() const {
  for (int i = 0; i < kDof; ++i) {
    if (!std::isfinite(lower[i]) || !std::isfinite(upper[i]) || !(lower[i] < upper[i])) {
      throw InvalidArgument("joint " + std::to_string(i + 1) + ": limits must be finite with lower < upper");
    }
  }
}

bool JointLimits::contains(const Vec7& q) const {
  return (q.array() >= lower.array()).all() && (q.array() <= upper.array()).all();
}

void ArmGeometry::validate() const {
  limits.validate();
  for (const auto& cap : capsules) {
    if (cap.link < 0 || cap.link > kDof) throw InvalidArgument("capsule link index out of range");
    if (!(cap.radius > 0.0)) throw InvalidArgument("capsule radius must be positive");
  }
  for (const auto& [i, j] : self_collision_pairs) {
    if (i < 0 || j < 0 || i > kDof || j > kDof || i == j) throw InvalidArgument("bad self-collision pair");
    if (std::abs(i - j) == 1) {
      throw InvalidArgument("self-collision pair (" + std::to_string(i) + "," + std::to_string(j) +
                            ") names adjacent links");
    }
  }
}

namespace {

struct LineParser {
  int line_no;
  std::istringstream tokens;

  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError("arm file line " + std::to_string(line_no) + ": " + what);
  }

  double number(const std::string& field, const std::string& text) const {
    try {
      std::size_t used = 0;
      const double v = std::stod(text, &used);
      if (used != text.size()) fail("field '" + field + "': trailing characters in '" + text + "'");
      return v;
    } catch (const std::logic_error&) {
      fail("field '" + field + "': not a number '" + text + "'");
    }
  }

  Vec3 vec3(const std::string& field, const std::string& text) const {
    Vec3 v;
    std::istringstream parts(text);
    std::string item;
    int n = 0;
    while (std::getline(parts, item, ',')) {
      if (n >= 3) fail("field '" + field + "': expected 3 components");
      v[n++] = number(field, item);
    }
    if (n != 3) fail("field '" + field + "': expected 3 components");
    return v;
  }

  /// Remaining tokens of the form name=value.
  std::map<std::string, std::string> named() {
    std::map<std::string, std::string> out;
    std::string tok;
    while (tokens >> tok) {
      const auto eq = tok.find('=');
      if (eq == std::string::npos) fail("expected name=value, got '" + tok + "'");
      out[tok.substr(0, eq)] = tok.substr(eq + 1);
    }
    return out;
  }

  static const std::string& require(const std::map<std::string, std::string>& kv, const std::string& key,
                                    const LineParser& p) {
    auto it = kv.find(key);
    if (it == kv.end()) p.fail("missing field '" + key + "'");
    return it->second;
  }

  MdhParams mdh(const std::map<std::string, std::string>& kv) const {
    return {number("a", require(kv, "a", *this)), number("d", require(kv, "d", *this)),
            number("alpha", require(kv, "alpha", *this))};
  }
};

Pose mdh_transform(const MdhParams& p, double theta) {
  const double ca = std::cos(p.alpha), sa = std::sin(p.alpha);
  const double ct = std::cos(theta), st = std::sin(theta);
  Pose t;
  t.rotation << ct, -st, 0.0,
                st * ca, ct * ca, -sa,
                st * sa, ct * sa, ca;
  t.translation << p.a, -p.d * sa, p.d * ca;
  return t;
}

}  // namespace

ArmGeometry parse_arm(std::istream& in) {
  ArmGeometry arm;
  arm.schema_version = 0;
  std::array<bool, kDof> seen_joint{};
  bool seen_flange = false, seen_home = false;
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    if (auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
    LineParser p{line_no, std::istringstream(raw)};
    std::string key;
    if (!(p.tokens >> key)) continue;

    if (key == "schema_version") {
      int v = 0;
      if (!(p.tokens >> v)) p.fail("schema_version needs an integer");
      if (v != kArmSchemaVersion) p.fail("unsupported schema_version " + std::to_string(v));
      arm.schema_version = v;
    } else if (key == "name") {
      if (!(p.tokens >> arm.name)) p.fail("name needs a value");
    } else if (key == "joint") {
      int idx = 0;
      if (!(p.tokens >> idx) || idx < 1 || idx > kDof) p.fail("joint index must be in 1..7");
      auto kv = p.named();
      arm.joints[idx - 1] = p.mdh(kv);
      arm.limits.lower[idx - 1] = p.number("lower", LineParser::require(kv, "lower", p));
      arm.limits.upper[idx - 1] = p.number("upper", LineParser::require(kv, "upper", p));
      seen_joint[idx - 1] = true;
    } else if (key == "flange") {
      arm.flange = p.mdh(p.named());
      seen_flange = true;
    } else if (key == "home") {
      for (int i = 0; i < kDof; ++i) {
        std::string tok;
        if (!(p.tokens >> tok)) p.fail("home needs 7 values");
        arm.home[i] = p.number("home", tok);
      }
      seen_home = true;
    } else if (key == "capsule") {
      auto kv = p.named();
      LinkCapsule cap;
      cap.link = static_cast<int>(p.number("link", LineParser::require(kv, "link", p)));
      cap.from = p.vec3("from", LineParser::require(kv, "from", p));
      cap.to = p.vec3("to", LineParser::require(kv, "to", p));
      cap.radius = p.number("radius", LineParser::require(kv, "radius", p));
      arm.capsules.push_back(cap);
    } else if (key == "self_collision") {
      int i = 0, j = 0;
      if (!(p.tokens >> i >> j)) p.fail("self_collision needs two link indices");
      arm.self_collision_pairs.emplace_back(std::min(i, j), std::max(i, j));
    } else {
      p.fail("unknown key '" + key + "'");
    }
  }
  if (arm.schema_version == 0) throw ParseError("arm file: missing schema_version");
  for (int i = 0; i < kDof; ++i) {
    if (!seen_joint[i]) throw ParseError("arm file: joint " + std::to_string(i + 1) + " missing");
  }
  if (!seen_flange) throw ParseError("arm file: flange missing");
  if (!seen_home) throw ParseError("arm file: home missing");
  try {
    arm.validate();
  } catch (const InvalidArgument& e) {
    throw ParseError(std::string("arm file: ") + e.what());
  }
  return arm;
}

ArmGeometry load_arm(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open arm file " + path.string());
  return parse_arm(in);
}

void write_arm(std::ostream& out, const ArmGeometry& arm) {
  out << std::setprecision(17);
  out << "schema_version " << arm.schema_version << "\nname " << arm.name << "\n";
  for (int i = 0; i < kDof; ++i) {
    const auto& j = arm.joints[i];
    out << "joint " << i + 1 << " a=" << j.a << " d=" << j.d << " alpha=" << j.alpha
        << " lower=" << arm.limits.lower[i] << " upper=" << arm.limits.upper[i] << "\n";
  }
  out << "flange a=" << arm.flange.a << " d=" << arm.flange.d << " alpha=" << arm.flange.alpha << "\n";
  out << "home";
  for (int i = 0; i < kDof; ++i) out << " " << arm.home[i];
  out << "\n";
  for (const auto& c : arm.capsules) {
    out << "capsule link=" << c.link << " from=" << c.from.x() << "," << c.from.y() << "," << c.from.z()
        << " to=" << c.to.x() << "," << c.to.y() << "," << c.to.z() << " radius=" << c.radius << "\n";
  }
  for (const auto& [i, j] : arm.self_collision_pairs) out << "self_collision " << i << " " << j << "\n";
}

std::shared_ptr<const ArmGeometry> default_arm() {
  static const std::shared_ptr<const ArmGeometry> arm = [] {
    std::istringstream in(detail::kDefaultArmText);
    return std::make_shared<const ArmGeometry>(parse_arm(in));
  }();
  return arm;
}

NormalizedConfig normalize(const Configuration& c, const JointLimits& lim) {
  if (!lim.contains(c.q)) throw OutOfLimits("configuration outside joint limits");
  NormalizedConfig out;
  out.s = ((2.0 * c.q - (lim.upper + lim.lower)).array() / (lim.upper - lim.lower).array()).matrix();
  out.s = out.s.cwiseMax(-1.0).cwiseMin(1.0);  // absorb rounding at the limits
  return out;
}

Configuration denormalize(const NormalizedConfig& s, const JointLimits& lim) {
  if ((s.s.array().abs() > 1.0).any()) throw OutOfRange("normalized configuration outside [-1, 1]");
  Configuration out;
  out.q = 0.5 * ((s.s.array() * (lim.upper - lim.lower).array()).matrix() + lim.upper + lim.lower);
  out.q = out.q.cwiseMax(lim.lower).cwiseMin(lim.upper);
  return out;
}

FkResult forward_kinematics(const Configuration& c, const ArmGeometry& geom) {
  FkResult fk;
  Pose acc;
  fk.frames[0] = acc;
  for (int i = 0; i < kDof; ++i) {
    acc = acc * mdh_transform(geom.joints[i], c.q[i]);
    fk.frames[i + 1] = acc;
  }
  fk.frames[kDof + 1] = acc * mdh_transform(geom.flange, 0.0);
  fk.ee_position = fk.frames[kDof + 1].translation;
  return fk;
}

Vec3 ee_position(const Configuration& c, const ArmGeometry& geom) {
  return forward_kinematics(c, geom).ee_position;
}

Vec7 clip_action(const Vec7& delta, double a_max) {
  if (!(a_max > 0.0)) throw InvalidArgument("action bound must be positive");
  const double n = delta.norm();
  if (n <= a_max) return delta;
  return delta * (a_max / n);
}

}  // namespace nmp
