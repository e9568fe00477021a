#include "reactnav/perception.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace reactnav {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kEndpointSlack = 1e-9;

double cross(const Vector2& a, const Vector2& b) { return a.x() * b.y() - a.y() * b.x(); }

double ray_circle(const Vector2& o, const Vector2& d, const CircleObstacle& c) {
  const Vector2 oc = o - c.center;
  const double b = d.dot(oc);
  const double disc = b * b - (oc.squaredNorm() - c.radius * c.radius);
  if (disc < 0.0) return kInf;
  const double root = std::sqrt(disc);
  if (const double t = -b - root; t > 0.0) return t;
  if (const double t = -b + root; t > 0.0) return t;
  return kInf;
}

double ray_segment(const Vector2& o, const Vector2& d, const Vector2& p1, const Vector2& p2) {
  const Vector2 e = p2 - p1;
  const double denom = cross(d, e);
  if (std::abs(denom) < 1e-12) return kInf;
  const Vector2 w = p1 - o;
  const double t = cross(w, e) / denom;
  const double s = cross(w, d) / denom;
  if (t <= 0.0 || s < -kEndpointSlack || s > 1.0 + kEndpointSlack) return kInf;
  return t;
}

double cast_beam(const Scene& scene, const Vector2& o, const Vector2& d) {
  double best = kInf;
  for (const CircleObstacle& c : scene.circles) best = std::min(best, ray_circle(o, d, c));
  for (const LineSegment& s : scene.segments) best = std::min(best, ray_segment(o, d, s.p1, s.p2));
  if (scene.bounds) {
    const Vector2 lo = scene.bounds->lower;
    const Vector2 hi = scene.bounds->upper;
    const Vector2 c[4] = {lo, {hi.x(), lo.y()}, hi, {lo.x(), hi.y()}};
    for (int k = 0; k < 4; ++k) best = std::min(best, ray_segment(o, d, c[k], c[(k + 1) % 4]));
  }
  return best;
}

Scan cast_all(const Scene& scene, const Pose2& pose, const LidarSpec& spec,
              std::mt19937_64* rng) {
  spec.validate();
  Scan scan{pose, spec, std::vector<double>(spec.n_beams, spec.max_range)};
  std::normal_distribution<double> noise(0.0, spec.noise_sigma);
  const Vector2 o = pose.position();
  for (std::size_t i = 0; i < spec.n_beams; ++i) {
    const double angle = pose.yaw + spec.bearing(i);
    const Vector2 d(std::cos(angle), std::sin(angle));
    const double t = cast_beam(scene, o, d);
    if (!(t < spec.max_range)) continue;
    double r = t;
    if (rng && spec.noise_sigma > 0.0) {
      const double n = std::clamp(noise(*rng), -4.0 * spec.noise_sigma, 4.0 * spec.noise_sigma);
      r = std::clamp(t + n, 1e-3, spec.max_range);
    }
    scan.ranges[i] = r;
  }
  return scan;
}

// Farthest point from the chord through the first and last point, excluding both ends.
std::size_t split_index(std::span<const Vector2> pts) {
  const Vector2 a = pts.front();
  const Vector2 axis = pts.back() - a;
  const double len = axis.norm();
  std::size_t best = pts.size() / 2;
  double best_d = -1.0;
  for (std::size_t i = 1; i + 1 < pts.size(); ++i) {
    const double d = len > 0.0 ? std::abs(cross(axis, pts[i] - a)) / len : (pts[i] - a).norm();
    if (d > best_d) {
      best_d = d;
      best = i;
    }
  }
  return best;
}

struct Candidate {
  FittedShape shape;
  double max_residual;
};

Candidate classify(std::span<const Vector2> pts, double d_s, const FitParams& params) {
  const LineFit line = fit_line(pts);
  const CircleFit circle = fit_circle(pts);
  // A circle is only plausible when its center lies behind the points as
  // seen from the sensor at the origin.
  double mean_range = 0.0;
  for (const Vector2& p : pts) mean_range += p.norm();
  mean_range /= static_cast<double>(pts.size());
  const bool circle_ok = circle.valid && circle.radius <= params.max_circle_radius &&
                         circle.center.norm() > mean_range;
  if (!circle_ok || line.rms <= params.line_preference * circle.rms + 1e-9)
    return {line.extent, line.max_residual};
  return {CircleObstacle{circle.center, circle.radius + d_s}, circle.max_residual};
}

void detect_recursive(std::span<const Vector2> pts, double d_s, const DetectorParams& params,
                      std::vector<FittedShape>& out) {
  const std::size_t min_points = params.segmentation.min_points;
  if (pts.size() < min_points) return;
  Candidate c = classify(pts, d_s, params.fit);
  if (c.max_residual <= params.split_tolerance || pts.size() < 2 * min_points) {
    out.push_back(std::move(c.shape));
    return;
  }
  const std::size_t k = split_index(pts);
  detect_recursive(pts.first(k + 1), d_s, params, out);
  detect_recursive(pts.subspan(k), d_s, params, out);
}

}  // namespace

void LidarSpec::validate() const {
  if (n_beams < 8) throw std::invalid_argument("lidar: n_beams must be >= 8");
  if (!(max_range > 0.0)) throw std::invalid_argument("lidar: max_range must be positive");
  if (!(fov > 0.0) || fov > 2.0 * std::numbers::pi + 1e-9)
    throw std::invalid_argument("lidar: fov must be in (0, 2 pi]");
  if (!(noise_sigma >= 0.0)) throw std::invalid_argument("lidar: noise_sigma must be >= 0");
  if (!(rate > 0.0)) throw std::invalid_argument("lidar: rate must be positive");
}

double LidarSpec::bearing(std::size_t i) const {
  return -0.5 * fov + static_cast<double>(i) * fov / static_cast<double>(n_beams);
}

Vector2 Pose2::to_world(const Vector2& body) const {
  const double c = std::cos(yaw);
  const double s = std::sin(yaw);
  return {x + c * body.x() - s * body.y(), y + s * body.x() + c * body.y()};
}

bool ArenaBounds::contains(const Vector2& p) const {
  return p.x() > lower.x() && p.x() < upper.x() && p.y() > lower.y() && p.y() < upper.y();
}

void Scene::validate() const {
  for (const CircleObstacle& c : circles)
    if (!(c.radius > 0.0)) throw std::invalid_argument("scene: circle radius must be positive");
  for (const LineSegment& s : segments)
    if (!(s.length() > 0.0)) throw std::invalid_argument("scene: degenerate wall segment");
  if (!bounds) return;
  if (!(bounds->lower.array() < bounds->upper.array()).all())
    throw std::invalid_argument("scene: bounds lower corner must be below upper corner");
  auto inside = [&](const Vector2& p) {
    return (p.array() >= bounds->lower.array()).all() && (p.array() <= bounds->upper.array()).all();
  };
  for (const CircleObstacle& c : circles)
    if (!inside(c.center)) throw std::invalid_argument("scene: circle outside bounds");
  for (const LineSegment& s : segments)
    if (!inside(s.p1) || !inside(s.p2)) throw std::invalid_argument("scene: segment outside bounds");
}

double Scene::obstacle_distance(const Vector2& p) const {
  double best = kInf;
  for (const CircleObstacle& c : circles) best = std::min(best, distance_to(p, c));
  for (const LineSegment& s : segments) best = std::min(best, distance_to(p, s));
  return best;
}

double Scan::min_range() const {
  return ranges.empty() ? spec.max_range : *std::min_element(ranges.begin(), ranges.end());
}

Scan raycast(const Scene& scene, const Pose2& pose, const LidarSpec& spec) {
  return cast_all(scene, pose, spec, nullptr);
}

Scan raycast(const Scene& scene, const Pose2& pose, const LidarSpec& spec,
             std::mt19937_64& rng) {
  return cast_all(scene, pose, spec, &rng);
}

PointCloud to_pointcloud(const Scan& scan) {
  PointCloud cloud;
  cloud.reserve(scan.ranges.size());
  for (std::size_t i = 0; i < scan.ranges.size(); ++i) {
    if (!scan.is_return(i)) continue;
    const double b = scan.spec.bearing(i);
    cloud.emplace_back(scan.ranges[i] * std::cos(b), scan.ranges[i] * std::sin(b));
  }
  return cloud;
}

std::vector<PointCloud> segment_cloud(std::span<const Vector2> points,
                                      const SegmentationParams& params) {
  auto split = [&](const Vector2& a, const Vector2& b) {
    const double range = std::max(a.norm(), b.norm());
    return (b - a).norm() > params.base_gap + params.range_gain * range;
  };

  std::vector<PointCloud> clusters;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (i == 0 || split(points[i - 1], points[i])) clusters.emplace_back();
    clusters.back().push_back(points[i]);
  }
  if (params.wrap_around && clusters.size() > 1 && !split(points.back(), points.front())) {
    PointCloud& last = clusters.back();
    last.insert(last.end(), clusters.front().begin(), clusters.front().end());
    clusters.front() = std::move(last);
    clusters.pop_back();
  }
  std::erase_if(clusters, [&](const PointCloud& c) { return c.size() < params.min_points; });
  return clusters;
}

LineFit fit_line(std::span<const Vector2> points) {
  if (points.empty()) throw std::invalid_argument("fit_line: empty cluster");
  LineFit fit;
  for (const Vector2& p : points) fit.centroid += p;
  fit.centroid /= static_cast<double>(points.size());

  Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
  double spread = 0.0;
  for (const Vector2& p : points) {
    const Vector2 d = p - fit.centroid;
    cov += d * d.transpose();
    spread = std::max(spread, d.norm());
  }
  if (spread < 1e-9) throw std::invalid_argument("fit_line: degenerate cluster (repeated point)");

  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig;
  eig.computeDirect(cov);
  fit.direction = eig.eigenvectors().col(1).normalized();
  const Vector2 normal(-fit.direction.y(), fit.direction.x());

  double t_min = kInf;
  double t_max = -kInf;
  double sq = 0.0;
  for (const Vector2& p : points) {
    const Vector2 d = p - fit.centroid;
    const double r = std::abs(normal.dot(d));
    sq += r * r;
    fit.max_residual = std::max(fit.max_residual, r);
    const double t = fit.direction.dot(d);
    t_min = std::min(t_min, t);
    t_max = std::max(t_max, t);
  }
  fit.rms = std::sqrt(sq / static_cast<double>(points.size()));
  fit.extent = {fit.centroid + t_min * fit.direction, fit.centroid + t_max * fit.direction};
  return fit;
}

CircleFit fit_circle(std::span<const Vector2> points) {
  CircleFit fit;
  if (points.size() < 3) return fit;
  Vector2 mean = Vector2::Zero();
  for (const Vector2& p : points) mean += p;
  mean /= static_cast<double>(points.size());

  // x^2 + y^2 + D x + E y + F = 0 on centered coordinates.
  const auto n = static_cast<Eigen::Index>(points.size());
  Eigen::MatrixXd a(n, 3);
  Eigen::VectorXd b(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Vector2 q = points[static_cast<std::size_t>(i)] - mean;
    a.row(i) << q.x(), q.y(), 1.0;
    b(i) = -q.squaredNorm();
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  qr.setThreshold(1e-10);
  if (qr.rank() < 3) return fit;
  const Eigen::Vector3d s = qr.solve(b);
  const Vector2 c(-0.5 * s(0), -0.5 * s(1));
  const double r2 = c.squaredNorm() - s(2);
  if (!(r2 > 0.0) || !std::isfinite(r2)) return fit;

  fit.center = c + mean;
  fit.radius = std::sqrt(r2);
  double sq = 0.0;
  for (const Vector2& p : points) {
    const double r = std::abs((p - fit.center).norm() - fit.radius);
    sq += r * r;
    fit.max_residual = std::max(fit.max_residual, r);
  }
  fit.rms = std::sqrt(sq / static_cast<double>(points.size()));
  fit.valid = true;
  return fit;
}

FittedShape fit_cluster(std::span<const Vector2> cluster, double d_s, const FitParams& params) {
  if (cluster.size() < 4) throw std::invalid_argument("fit_cluster: need at least 4 points");
  if (!(d_s >= 0.0)) throw std::invalid_argument("fit_cluster: d_s must be >= 0");
  const LineFit line = fit_line(cluster);
  const CircleFit circle = fit_circle(cluster);
  const bool circle_ok = circle.valid && circle.radius <= params.max_circle_radius;
  if (!circle_ok || line.rms <= params.line_preference * circle.rms + 1e-9) return line.extent;
  return CircleObstacle{circle.center, circle.radius + d_s};
}

Detections detect(const Scan& scan, double d_s, const DetectorParams& params) {
  if (!(d_s >= 0.0)) throw std::invalid_argument("detect: d_s must be >= 0");
  SegmentationParams seg = params.segmentation;
  seg.wrap_around = seg.wrap_around || scan.spec.full_circle();
  const PointCloud cloud = to_pointcloud(scan);

  std::vector<FittedShape> shapes;
  for (const PointCloud& cluster : segment_cloud(cloud, seg))
    detect_recursive(cluster, d_s, params, shapes);

  Detections out;
  for (const FittedShape& shape : shapes) {
    if (const auto* c = std::get_if<CircleObstacle>(&shape)) {
      out.circles.push_back({scan.pose.to_world(c->center), c->radius});
    } else {
      const auto& s = std::get<LineSegment>(shape);
      out.segments.push_back({scan.pose.to_world(s.p1), scan.pose.to_world(s.p2)});
    }
  }
  return out;
}

}  // namespace reactnav
