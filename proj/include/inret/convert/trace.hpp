#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "inret/field.hpp"
#include "inret/inr/model.hpp"

namespace inret {

struct Ray {
  Point3 origin;
  Point3 direction;  // unit length
};

struct TraceConfig {
  double eps = 1e-3;
  int max_steps = 128;
  /// Step damping; below 1 for unsigned fields.
  double beta = 0.7;
  /// Marching step for occupancy fields before bisection.
  double occ_step = 1.0 / 128.0;
  int bisection_steps = 40;

  void validate() const;
};

enum class TraceMode { sphere, damped, bisection };

/// Tracing mode for a function: SDF -> sphere, UDF -> damped, Occ -> bisection.
TraceMode trace_mode(FunctionTag fn);

struct TraceHit {
  bool hit = false;
  Point3 point = Point3::Zero();
  /// Distance from the ray origin.
  double t = 0.0;
};

/// Parameter interval [t0, t1] of the ray inside the domain cube, if any.
std::optional<std::pair<double, double>> clip_to_domain(const Ray& ray);

/// Traces all rays together; each step evaluates the field once on the
/// still-active rays. Sphere/damped: x <- x + beta * f(x) * dir, hit when |f| < eps.
/// Bisection: march by occ_step until the sign flips, then bisect the bracket.
std::vector<TraceHit> trace_rays(const BatchField& field, TraceMode mode, const std::vector<Ray>& rays,
                                 const TraceConfig& cfg);

/// Sphere tracing of an SDF INR (beta forced to 1).
std::vector<TraceHit> sphere_trace(const InrModel& model, const std::vector<Ray>& rays, const TraceConfig& cfg);
/// Damped tracing of a UDF INR; beta = 1 triggers an overshoot warning.
std::vector<TraceHit> damped_sphere_trace(const InrModel& model, const std::vector<Ray>& rays, const TraceConfig& cfg);

/// Ray from a uniform point on the sphere of radius sqrt(3) toward a uniform
/// point of the domain.
Ray random_ray(CounterRng& rng);

/// Exactly n surface points of an SDF/UDF field by random-ray tracing.
/// Throws StateError when fewer than 1% of the first 1e6 rays hit.
Coords sample_point_cloud(const BatchField& field, FunctionTag fn, Index n, const TraceConfig& cfg, std::uint64_t seed);
Coords sample_point_cloud(const InrModel& model, Index n, const TraceConfig& cfg, std::uint64_t seed);

struct ViewConfig {
  int views = 12;
  int resolution = 224;
  double distance = 3.0;
  double elevation = 0.65;
  double fov_degrees = 60.0;
};

/// Depth along each pixel ray (row-major, resolution^2), +infinity for background.
using DepthMap = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Point3 camera_position(const ViewConfig& view, int index);
std::vector<Ray> camera_rays(const ViewConfig& view, int index);
std::vector<DepthMap> render_depth_views(const BatchField& field, FunctionTag fn, const ViewConfig& view,
                                         const TraceConfig& cfg);
std::vector<DepthMap> render_depth_views(const InrModel& model, const ViewConfig& view, const TraceConfig& cfg);

/// Midpoints of axis-adjacent lattice cells with opposite occupancy sign,
/// subsampled (evenly) or cycled to exactly n points.
Coords occ_surface_points(const BatchField& field, int grid_res, Index n);
Coords occ_surface_points(const InrModel& model, int grid_res, Index n);

/// ASCII PLY with x y z vertices.
void write_ply(const std::string& path, const Coords& points);
/// 16-bit binary PGM of depth in millimetres; 65535 marks background.
void write_depth_pgm(const std::string& path, const DepthMap& depth);

}  // namespace inret
