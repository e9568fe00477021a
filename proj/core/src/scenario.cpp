#include "reactnav/scenario.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <vector>

namespace reactnav {
namespace {

template <typename T>
T convert(const YAML::Node& node, const std::string& path) {
  try {
    return node.as<T>();
  } catch (const YAML::Exception&) {
    throw ScenarioError(path + ": malformed value");
  }
}

std::vector<double> numbers(const YAML::Node& node, const std::string& path,
                            std::size_t expected) {
  if (!node.IsSequence()) throw ScenarioError(path + ": expected a list");
  std::vector<double> v;
  for (const YAML::Node& item : node) v.push_back(convert<double>(item, path));
  if (expected != 0 && v.size() != expected)
    throw ScenarioError(path + ": expected " + std::to_string(expected) + " numbers");
  return v;
}

// Mapping reader that remembers which keys were consumed so leftovers can be
// reported as unknown.
class Reader {
 public:
  Reader(const YAML::Node& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.IsMap()) throw ScenarioError(path_ + ": expected a mapping");
  }

  YAML::Node take(const std::string& key) {
    seen_.insert(key);
    return node_[key];
  }

  std::string at(const std::string& key) const { return path_ + "." + key; }

  void get(const std::string& key, double& out) {
    if (const YAML::Node n = take(key)) out = convert<double>(n, at(key));
  }
  void get(const std::string& key, std::size_t& out) {
    if (const YAML::Node n = take(key)) {
      const long long v = convert<long long>(n, at(key));
      if (v < 0) throw ScenarioError(at(key) + ": must be non-negative");
      out = static_cast<std::size_t>(v);
    }
  }
  void get(const std::string& key, bool& out) {
    if (const YAML::Node n = take(key)) out = convert<bool>(n, at(key));
  }
  void get(const std::string& key, std::string& out) {
    if (const YAML::Node n = take(key)) out = convert<std::string>(n, at(key));
  }
  template <int N>
  void get(const std::string& key, Eigen::Matrix<double, N, 1>& out) {
    if (const YAML::Node n = take(key)) {
      const std::vector<double> v = numbers(n, at(key), N);
      for (int i = 0; i < N; ++i) out(i) = v[static_cast<std::size_t>(i)];
    }
  }
  template <std::size_t N>
  void get(const std::string& key, std::array<double, N>& out) {
    if (const YAML::Node n = take(key)) {
      const std::vector<double> v = numbers(n, at(key), N);
      std::copy(v.begin(), v.end(), out.begin());
    }
  }
  void get(const std::string& key, std::vector<double>& out) {
    if (const YAML::Node n = take(key)) out = numbers(n, at(key), 0);
  }

  void finish() const {
    for (const auto& kv : node_) {
      const std::string key = kv.first.as<std::string>();
      if (!seen_.contains(key)) throw ScenarioError(at(key) + ": unknown key");
    }
  }

 private:
  YAML::Node node_;
  std::string path_;
  std::set<std::string> seen_;
};

template <typename Fn>
void section(Reader& parent, const std::string& key, Fn&& fn) {
  const YAML::Node n = parent.take(key);
  if (!n) return;
  Reader r(n, parent.at(key));
  fn(r);
  r.finish();
}

template <typename Fn>
void list(Reader& parent, const std::string& key, Fn&& fn) {
  const YAML::Node n = parent.take(key);
  if (!n) return;
  if (!n.IsSequence()) throw ScenarioError(parent.at(key) + ": expected a list");
  for (std::size_t i = 0; i < n.size(); ++i) {
    Reader r(n[i], parent.at(key) + "[" + std::to_string(i) + "]");
    fn(r);
    r.finish();
  }
}

void read_scene(Reader& r, Scene& scene) {
  section(r, "bounds", [&](Reader& b) {
    ArenaBounds bounds;
    b.get("lower", bounds.lower);
    b.get("upper", bounds.upper);
    scene.bounds = bounds;
  });
  list(r, "circles", [&](Reader& c) {
    CircleObstacle circle;
    c.get("center", circle.center);
    c.get("radius", circle.radius);
    scene.circles.push_back(circle);
  });
  list(r, "segments", [&](Reader& s) {
    LineSegment seg;
    s.get("p1", seg.p1);
    s.get("p2", seg.p2);
    scene.segments.push_back(seg);
  });
}

void read_solver(Reader& r, SolverConfig& s) {
  r.get("fpr_tol", s.fpr_tol);
  r.get("constraint_tol", s.constraint_tol);
  r.get("q_schedule", s.q_schedule);
  r.get("max_inner_iters", s.max_inner_iters);
  r.get("time_budget", s.time_budget);
  r.get("lbfgs_memory", s.lbfgs_memory);
  r.get("early_exit", s.early_exit);
  if (const YAML::Node n = r.take("simulated_eval_seconds"); n && !n.IsNull())
    s.simulated_eval_seconds = convert<double>(n, r.at("simulated_eval_seconds"));
}

ScenarioSpec parse_node(const YAML::Node& root) {
  ScenarioSpec spec;
  Reader r(root, "scenario");
  r.get("name", spec.name);
  std::string controller(to_string(spec.controller));
  r.get("controller", controller);
  try {
    spec.controller = parse_controller(controller);
  } catch (const std::invalid_argument& e) {
    throw ScenarioError(r.at("controller") + ": " + e.what());
  }
  r.get("start", spec.start);
  r.get("setpoint", spec.setpoint);
  r.get("duration_max", spec.duration_max);
  r.get("arrival_radius", spec.arrival_radius);
  r.get("arrival_dwell", spec.arrival_dwell);
  r.get("collision_distance", spec.collision_distance);
  r.get("d_s", spec.d_s);
  r.get("rng_seed", spec.rng_seed);
  r.get("plant_substeps", spec.plant_substeps);

  section(r, "scene", [&](Reader& s) { read_scene(s, spec.scene); });
  section(r, "model", [&](Reader& m) {
    m.get("g", spec.model.g);
    m.get("damping", spec.model.damping);
    m.get("k_phi", spec.model.k_phi);
    m.get("k_theta", spec.model.k_theta);
    m.get("tau_phi", spec.model.tau_phi);
    m.get("tau_theta", spec.model.tau_theta);
    m.get("thrust_constant", spec.model.thrust_constant);
  });
  section(r, "weights", [&](Reader& w) {
    w.get("qx", spec.weights.qx);
    w.get("qu", spec.weights.qu);
    w.get("qdu", spec.weights.qdu);
  });
  section(r, "horizon", [&](Reader& h) {
    h.get("n", spec.horizon.n);
    h.get("ts", spec.horizon.ts);
  });
  section(r, "solver", [&](Reader& s) { read_solver(s, spec.solver); });
  section(r, "box", [&](Reader& b) {
    b.get("u_min", spec.box.u_min);
    b.get("u_max", spec.box.u_max);
  });
  section(r, "rate", [&](Reader& b) {
    b.get("dphi_max", spec.rates.dphi_max);
    b.get("dtheta_max", spec.rates.dtheta_max);
  });
  section(r, "apf", [&](Reader& a) {
    a.get("l_a", spec.apf.l_a);
    a.get("l_r", spec.apf.l_r);
    a.get("l_offset", spec.apf.l_offset);
    a.get("l_s", spec.apf.l_s);
    a.get("r_f", spec.apf.r_f);
    a.get("r_s", spec.apf.r_s);
    a.get("f_max", spec.apf.f_max);
    a.get("df_max", spec.apf.df_max);
  });
  section(r, "lidar", [&](Reader& l) {
    l.get("n_beams", spec.lidar.n_beams);
    l.get("fov", spec.lidar.fov);
    l.get("max_range", spec.lidar.max_range);
    l.get("noise_sigma", spec.lidar.noise_sigma);
    l.get("rate", spec.lidar.rate);
  });
  section(r, "obstacles", [&](Reader& o) {
    o.get("circles", spec.capacity.circles);
    o.get("rects", spec.capacity.rects);
    o.get("consider_radius", spec.consider_radius);
  });
  section(r, "detector", [&](Reader& d) {
    d.get("base_gap", spec.detector.segmentation.base_gap);
    d.get("range_gain", spec.detector.segmentation.range_gain);
    d.get("min_points", spec.detector.segmentation.min_points);
    d.get("line_preference", spec.detector.fit.line_preference);
    d.get("max_circle_radius", spec.detector.fit.max_circle_radius);
    d.get("split_tolerance", spec.detector.split_tolerance);
  });
  r.finish();
  spec.model.ts = spec.horizon.ts;
  spec.validate();
  return spec;
}

template <typename V>
void emit_vector(YAML::Emitter& out, const V& v) {
  out << YAML::Flow << YAML::BeginSeq;
  for (auto x : v) out << x;
  out << YAML::EndSeq;
}

void emit_vector(YAML::Emitter& out, const Eigen::VectorXd& v) {
  out << YAML::Flow << YAML::BeginSeq;
  for (Eigen::Index i = 0; i < v.size(); ++i) out << v(i);
  out << YAML::EndSeq;
}

}  // namespace

std::string_view to_string(ControllerKind kind) {
  switch (kind) {
    case ControllerKind::kNmpc: return "nmpc";
    case ControllerKind::kApfBaseline: return "apf-baseline";
    case ControllerKind::kApfEnhanced: return "apf-enhanced";
  }
  return "unknown";
}

ControllerKind parse_controller(std::string_view text) {
  std::string s(text);
  std::replace(s.begin(), s.end(), '_', '-');
  if (s == "nmpc") return ControllerKind::kNmpc;
  if (s == "apf-baseline") return ControllerKind::kApfBaseline;
  if (s == "apf-enhanced") return ControllerKind::kApfEnhanced;
  throw std::invalid_argument("unknown controller '" + std::string(text) + "'");
}

void ScenarioSpec::validate() const {
  auto check = [](auto&& fn) {
    try {
      fn();
    } catch (const ScenarioError&) {
      throw;
    } catch (const std::invalid_argument& e) {
      throw ScenarioError(e.what());
    }
  };
  check([&] { scene.validate(); });
  check([&] { model.validate(); });
  check([&] { weights.validate(); });
  check([&] { horizon.validate(); });
  check([&] { solver.validate(); });
  check([&] { box.validate(); });
  check([&] { rates.validate(); });
  check([&] { apf.validate(); });
  check([&] { lidar.validate(); });

  if (!(duration_max > 0.0)) throw ScenarioError("duration_max must be positive");
  if (!(arrival_radius > 0.0)) throw ScenarioError("arrival_radius must be positive");
  if (!(arrival_dwell >= 0.0)) throw ScenarioError("arrival_dwell must be >= 0");
  if (!(collision_distance >= 0.0)) throw ScenarioError("collision_distance must be >= 0");
  if (!(d_s >= 0.0)) throw ScenarioError("d_s must be >= 0");
  if (!(consider_radius > 0.0)) throw ScenarioError("obstacles.consider_radius must be positive");
  if (plant_substeps < 1) throw ScenarioError("plant_substeps must be >= 1");
  if (std::abs(model.ts - horizon.ts) > 1e-12)
    throw ScenarioError("model and horizon sampling times differ");
  if (std::abs(lidar.rate * horizon.ts - 1.0) > 1e-9)
    throw ScenarioError("lidar.rate must match the control rate 1/horizon.ts");

  for (const auto& [label, p] : {std::pair{"start", start}, std::pair{"setpoint", setpoint}}) {
    const Vector2 xy = p.head<2>();
    if (scene.bounds && !scene.bounds->contains(xy))
      throw ScenarioError(std::string(label) + " lies outside the scene bounds");
    if (scene.obstacle_distance(xy) <= d_s)
      throw ScenarioError(std::string(label) + " lies inside an inflated obstacle");
  }
}

ScenarioSpec parse_scenario(const std::string& yaml_text) {
  YAML::Node root;
  try {
    root = YAML::Load(yaml_text);
  } catch (const YAML::Exception& e) {
    throw ScenarioError(std::string("scenario: YAML syntax error: ") + e.what());
  }
  return parse_node(root);
}

ScenarioSpec load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError(path.string() + ": cannot open scenario file");
  std::stringstream buffer;
  buffer << in.rdbuf();
  try {
    return parse_scenario(buffer.str());
  } catch (const ScenarioError& e) {
    throw ScenarioError(path.string() + ": " + e.what());
  }
}

std::string to_yaml(const ScenarioSpec& spec) {
  YAML::Emitter out;
  out.SetDoublePrecision(17);
  out << YAML::BeginMap;
  out << YAML::Key << "name" << YAML::Value << spec.name;
  out << YAML::Key << "controller" << YAML::Value << std::string(to_string(spec.controller));
  out << YAML::Key << "start" << YAML::Value;
  emit_vector(out, Eigen::VectorXd(spec.start));
  out << YAML::Key << "setpoint" << YAML::Value;
  emit_vector(out, Eigen::VectorXd(spec.setpoint));
  out << YAML::Key << "duration_max" << YAML::Value << spec.duration_max;
  out << YAML::Key << "arrival_radius" << YAML::Value << spec.arrival_radius;
  out << YAML::Key << "arrival_dwell" << YAML::Value << spec.arrival_dwell;
  out << YAML::Key << "collision_distance" << YAML::Value << spec.collision_distance;
  out << YAML::Key << "d_s" << YAML::Value << spec.d_s;
  out << YAML::Key << "rng_seed" << YAML::Value << spec.rng_seed;
  out << YAML::Key << "plant_substeps" << YAML::Value << spec.plant_substeps;

  out << YAML::Key << "scene" << YAML::Value << YAML::BeginMap;
  if (spec.scene.bounds) {
    out << YAML::Key << "bounds" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "lower" << YAML::Value;
    emit_vector(out, Eigen::VectorXd(spec.scene.bounds->lower));
    out << YAML::Key << "upper" << YAML::Value;
    emit_vector(out, Eigen::VectorXd(spec.scene.bounds->upper));
    out << YAML::EndMap;
  }
  out << YAML::Key << "circles" << YAML::Value << YAML::BeginSeq;
  for (const CircleObstacle& c : spec.scene.circles) {
    out << YAML::BeginMap << YAML::Key << "center" << YAML::Value;
    emit_vector(out, Eigen::VectorXd(c.center));
    out << YAML::Key << "radius" << YAML::Value << c.radius << YAML::EndMap;
  }
  out << YAML::EndSeq;
  out << YAML::Key << "segments" << YAML::Value << YAML::BeginSeq;
  for (const LineSegment& s : spec.scene.segments) {
    out << YAML::BeginMap << YAML::Key << "p1" << YAML::Value;
    emit_vector(out, Eigen::VectorXd(s.p1));
    out << YAML::Key << "p2" << YAML::Value;
    emit_vector(out, Eigen::VectorXd(s.p2));
    out << YAML::EndMap;
  }
  out << YAML::EndSeq << YAML::EndMap;

  const ModelParams& m = spec.model;
  out << YAML::Key << "model" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "g" << YAML::Value << m.g;
  out << YAML::Key << "damping" << YAML::Value;
  emit_vector(out, Eigen::VectorXd(m.damping));
  out << YAML::Key << "k_phi" << YAML::Value << m.k_phi;
  out << YAML::Key << "k_theta" << YAML::Value << m.k_theta;
  out << YAML::Key << "tau_phi" << YAML::Value << m.tau_phi;
  out << YAML::Key << "tau_theta" << YAML::Value << m.tau_theta;
  out << YAML::Key << "thrust_constant" << YAML::Value << m.thrust_constant;
  out << YAML::EndMap;

  out << YAML::Key << "weights" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "qx" << YAML::Value;
  emit_vector(out, spec.weights.qx);
  out << YAML::Key << "qu" << YAML::Value;
  emit_vector(out, spec.weights.qu);
  out << YAML::Key << "qdu" << YAML::Value;
  emit_vector(out, spec.weights.qdu);
  out << YAML::EndMap;

  out << YAML::Key << "horizon" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "n" << YAML::Value << spec.horizon.n;
  out << YAML::Key << "ts" << YAML::Value << spec.horizon.ts;
  out << YAML::EndMap;

  const SolverConfig& s = spec.solver;
  out << YAML::Key << "solver" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "fpr_tol" << YAML::Value << s.fpr_tol;
  out << YAML::Key << "constraint_tol" << YAML::Value << s.constraint_tol;
  out << YAML::Key << "q_schedule" << YAML::Value;
  emit_vector(out, s.q_schedule);
  out << YAML::Key << "max_inner_iters" << YAML::Value << s.max_inner_iters;
  out << YAML::Key << "time_budget" << YAML::Value << s.time_budget;
  out << YAML::Key << "lbfgs_memory" << YAML::Value << s.lbfgs_memory;
  out << YAML::Key << "early_exit" << YAML::Value << s.early_exit;
  if (s.simulated_eval_seconds)
    out << YAML::Key << "simulated_eval_seconds" << YAML::Value << *s.simulated_eval_seconds;
  out << YAML::EndMap;

  out << YAML::Key << "box" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "u_min" << YAML::Value;
  emit_vector(out, Eigen::VectorXd(spec.box.u_min));
  out << YAML::Key << "u_max" << YAML::Value;
  emit_vector(out, Eigen::VectorXd(spec.box.u_max));
  out << YAML::EndMap;

  out << YAML::Key << "rate" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "dphi_max" << YAML::Value << spec.rates.dphi_max;
  out << YAML::Key << "dtheta_max" << YAML::Value << spec.rates.dtheta_max;
  out << YAML::EndMap;

  const ApfConfig& a = spec.apf;
  out << YAML::Key << "apf" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "l_a" << YAML::Value << a.l_a;
  out << YAML::Key << "l_r" << YAML::Value;
  emit_vector(out, Eigen::VectorXd(a.l_r));
  out << YAML::Key << "l_offset" << YAML::Value << a.l_offset;
  out << YAML::Key << "l_s" << YAML::Value << a.l_s;
  out << YAML::Key << "r_f" << YAML::Value << a.r_f;
  out << YAML::Key << "r_s" << YAML::Value << a.r_s;
  out << YAML::Key << "f_max" << YAML::Value << a.f_max;
  out << YAML::Key << "df_max" << YAML::Value << a.df_max;
  out << YAML::EndMap;

  const LidarSpec& l = spec.lidar;
  out << YAML::Key << "lidar" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "n_beams" << YAML::Value << l.n_beams;
  out << YAML::Key << "fov" << YAML::Value << l.fov;
  out << YAML::Key << "max_range" << YAML::Value << l.max_range;
  out << YAML::Key << "noise_sigma" << YAML::Value << l.noise_sigma;
  out << YAML::Key << "rate" << YAML::Value << l.rate;
  out << YAML::EndMap;

  out << YAML::Key << "obstacles" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "circles" << YAML::Value << spec.capacity.circles;
  out << YAML::Key << "rects" << YAML::Value << spec.capacity.rects;
  out << YAML::Key << "consider_radius" << YAML::Value << spec.consider_radius;
  out << YAML::EndMap;

  const DetectorParams& d = spec.detector;
  out << YAML::Key << "detector" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "base_gap" << YAML::Value << d.segmentation.base_gap;
  out << YAML::Key << "range_gain" << YAML::Value << d.segmentation.range_gain;
  out << YAML::Key << "min_points" << YAML::Value << d.segmentation.min_points;
  out << YAML::Key << "line_preference" << YAML::Value << d.fit.line_preference;
  out << YAML::Key << "max_circle_radius" << YAML::Value << d.fit.max_circle_radius;
  out << YAML::Key << "split_tolerance" << YAML::Value << d.split_tolerance;
  out << YAML::EndMap;

  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

}  // namespace reactnav
