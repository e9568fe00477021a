#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <variant>
#include <vector>

#include "reactnav/constraints.hpp"
#include "reactnav/problem.hpp"

namespace reactnav {

struct LidarSpec {
  std::size_t n_beams = 720;
  double fov = 2.0 * std::numbers::pi;
  double max_range = 25.0;
  double noise_sigma = 0.01;
  double rate = 20.0;

  void validate() const;
  /// Beam i points at -fov/2 + i * fov / n_beams in the sensor frame.
  double bearing(std::size_t i) const;
  bool full_circle() const { return fov >= 2.0 * std::numbers::pi - 1e-9; }
};

/// Planar sensor pose in the world frame.
struct Pose2 {
  double x = 0.0;
  double y = 0.0;
  double yaw = 0.0;

  Vector2 position() const { return {x, y}; }
  Vector2 to_world(const Vector2& body) const;
};

struct ArenaBounds {
  Vector2 lower{-50.0, -50.0};
  Vector2 upper{50.0, 50.0};

  bool contains(const Vector2& p) const;
};

/// Ground-truth geometry the simulated LiDAR sees.
struct Scene {
  std::vector<CircleObstacle> circles;  ///< true radii, no inflation
  std::vector<LineSegment> segments;
  std::optional<ArenaBounds> bounds;

  void validate() const;
  /// Distance from p to the nearest circle or segment (bounds excluded);
  /// +inf for a scene without obstacles.
  double obstacle_distance(const Vector2& p) const;
};

struct Scan {
  Pose2 pose;
  LidarSpec spec;
  std::vector<double> ranges;  ///< max_range means no return

  double min_range() const;
  bool is_return(std::size_t i) const { return ranges[i] < spec.max_range; }
};

using PointCloud = std::vector<Vector2>;
using Detections = ObstacleSet;

/// Noiseless scan.
Scan raycast(const Scene& scene, const Pose2& pose, const LidarSpec& spec);
/// Scan with Gaussian range noise, truncated at 4 sigma and clamped to (0, max_range].
Scan raycast(const Scene& scene, const Pose2& pose, const LidarSpec& spec,
             std::mt19937_64& rng);

/// Body-frame points in beam order; no-return beams are dropped.
PointCloud to_pointcloud(const Scan& scan);

struct SegmentationParams {
  double base_gap = 0.1;
  double range_gain = 0.05;
  std::size_t min_points = 4;
  /// Join the last and first cluster when the cloud covers a full turn.
  bool wrap_around = false;
};

/// Splits a bearing-ordered cloud where consecutive points are farther apart
/// than base_gap + range_gain * range.
std::vector<PointCloud> segment_cloud(std::span<const Vector2> points,
                                      const SegmentationParams& params = {});

struct LineFit {
  Vector2 centroid = Vector2::Zero();
  Vector2 direction = Vector2::UnitX();
  LineSegment extent;
  double rms = 0.0;
  double max_residual = 0.0;
};

struct CircleFit {
  Vector2 center = Vector2::Zero();
  double radius = 0.0;
  double rms = 0.0;
  double max_residual = 0.0;
  bool valid = false;  ///< false for (near) collinear input
};

/// Total least squares line. Throws std::invalid_argument when every point coincides.
LineFit fit_line(std::span<const Vector2> points);
/// Algebraic least-squares circle.
CircleFit fit_circle(std::span<const Vector2> points);

using FittedShape = std::variant<CircleObstacle, LineSegment>;

/// Line when line_rms <= line_preference * circle_rms, else the circle with its
/// radius inflated by d_s.
struct FitParams {
  double line_preference = 1.2;
  double max_circle_radius = 5.0;
};

FittedShape fit_cluster(std::span<const Vector2> cluster, double d_s,
                        const FitParams& params = {});

struct DetectorParams {
  SegmentationParams segmentation;
  FitParams fit;
  /// Clusters whose chosen fit leaves a larger residual are split at the
  /// point farthest from their chord (corners, touching objects).
  double split_tolerance = 0.08;
};

Detections detect(const Scan& scan, double d_s, const DetectorParams& params = {});

}  // namespace reactnav
