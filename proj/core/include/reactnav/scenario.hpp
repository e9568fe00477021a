#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>

#include "reactnav/apf.hpp"
#include "reactnav/constraints.hpp"
#include "reactnav/model.hpp"
#include "reactnav/perception.hpp"
#include "reactnav/problem.hpp"
#include "reactnav/solver.hpp"

namespace reactnav {

enum class ControllerKind { kNmpc, kApfBaseline, kApfEnhanced };

std::string_view to_string(ControllerKind kind);
/// Accepts "nmpc", "apf-baseline", "apf-enhanced" (underscores allowed).
ControllerKind parse_controller(std::string_view text);

/// Raised for malformed or inconsistent scenario files.
class ScenarioError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct ScenarioSpec {
  std::string name = "scenario";
  ControllerKind controller = ControllerKind::kNmpc;
  Vector3 start{0.0, 0.0, 1.0};
  Vector3 setpoint{3.0, 0.0, 1.0};
  double duration_max = 60.0;
  double arrival_radius = 0.2;
  double arrival_dwell = 1.0;
  double collision_distance = 0.05;
  double d_s = 0.4;
  std::uint64_t rng_seed = 1;
  std::size_t plant_substeps = 5;

  Scene scene;
  ModelParams model;
  CostWeights weights;
  HorizonConfig horizon;
  SolverConfig solver;
  BoxBounds box;
  RateBounds rates;
  ApfConfig apf;
  LidarSpec lidar;
  ObstacleCapacity capacity;
  double consider_radius = 3.0;
  DetectorParams detector;

  /// Throws ScenarioError.
  void validate() const;
};

ScenarioSpec parse_scenario(const std::string& yaml_text);
ScenarioSpec load_scenario(const std::filesystem::path& path);
/// Round-trips through parse_scenario.
std::string to_yaml(const ScenarioSpec& spec);

}  // namespace reactnav
