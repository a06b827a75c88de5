#include "inret/convert/trace.hpp"

#include <cmath>
#include <fstream>
#include <numbers>

#include "inret/log.hpp"
#include "inret/shapes/sampling.hpp"

namespace inret {

void TraceConfig::validate() const {
  if (!(eps > 0.0)) throw ConfigError("trace tolerance must be positive");
  if (max_steps < 1) throw ConfigError("trace needs at least one step");
  if (!(beta > 0.0 && beta <= 1.0)) throw ConfigError("damping factor must lie in (0, 1]");
  if (!(occ_step > 0.0) || bisection_steps < 1) throw ConfigError("occupancy marching needs a positive step");
}

TraceMode trace_mode(FunctionTag fn) {
  switch (fn) {
    case FunctionTag::sdf: return TraceMode::sphere;
    case FunctionTag::udf: return TraceMode::damped;
    case FunctionTag::occ: return TraceMode::bisection;
  }
  throw TagError("invalid function tag");
}

std::optional<std::pair<double, double>> clip_to_domain(const Ray& ray) {
  double t0 = 0.0, t1 = std::numeric_limits<double>::infinity();
  for (int a = 0; a < 3; ++a) {
    const double o = ray.origin[a], d = ray.direction[a];
    if (std::abs(d) < 1e-15) {
      if (o < -1.0 || o > 1.0) return std::nullopt;
      continue;
    }
    double lo = (-1.0 - o) / d, hi = (1.0 - o) / d;
    if (lo > hi) std::swap(lo, hi);
    t0 = std::max(t0, lo);
    t1 = std::min(t1, hi);
  }
  if (t0 > t1) return std::nullopt;
  return std::make_pair(t0, t1);
}

namespace {

Point3 at(const Ray& r, double t) { return clamp_to_domain(r.origin + t * r.direction); }

std::vector<TraceHit> march(const BatchField& field, double beta, const std::vector<Ray>& rays, const TraceConfig& cfg) {
  std::vector<TraceHit> hits(rays.size());
  std::vector<std::size_t> active;
  std::vector<double> t(rays.size()), t_begin(rays.size()), t_end(rays.size());
  for (std::size_t i = 0; i < rays.size(); ++i) {
    if (auto span = clip_to_domain(rays[i])) {
      t[i] = t_begin[i] = span->first;
      t_end[i] = span->second;
      active.push_back(i);
    }
  }
  for (int step = 0; step < cfg.max_steps && !active.empty(); ++step) {
    Coords pts(static_cast<Index>(active.size()), 3);
    for (std::size_t k = 0; k < active.size(); ++k) pts.row(static_cast<Index>(k)) = at(rays[active[k]], t[active[k]]).transpose();
    const Eigen::VectorXd f = field(pts);
    std::vector<std::size_t> still;
    for (std::size_t k = 0; k < active.size(); ++k) {
      const std::size_t i = active[k];
      const double v = f[static_cast<Index>(k)];
      if (std::abs(v) < cfg.eps) {
        hits[i] = {true, pts.row(static_cast<Index>(k)).transpose(), t[i]};
        continue;
      }
      t[i] += beta * v;
      if (t[i] <= t_end[i] + 1e-12 && t[i] >= t_begin[i] - 1e-12 && std::isfinite(v)) still.push_back(i);
    }
    active = std::move(still);
  }
  return hits;
}

std::vector<TraceHit> bisect(const BatchField& field, const std::vector<Ray>& rays, const TraceConfig& cfg) {
  std::vector<TraceHit> hits(rays.size());
  std::vector<std::size_t> active;
  std::vector<double> t(rays.size()), t_end(rays.size()), prev(rays.size());
  for (std::size_t i = 0; i < rays.size(); ++i)
    if (auto span = clip_to_domain(rays[i])) {
      t[i] = span->first;
      t_end[i] = span->second;
      active.push_back(i);
    }
  auto eval = [&](const std::vector<std::size_t>& idx, const std::vector<double>& ts) {
    Coords pts(static_cast<Index>(idx.size()), 3);
    for (std::size_t k = 0; k < idx.size(); ++k) pts.row(static_cast<Index>(k)) = at(rays[idx[k]], ts[idx[k]]).transpose();
    return field(pts);
  };
  if (!active.empty()) {
    const Eigen::VectorXd f0 = eval(active, t);
    for (std::size_t k = 0; k < active.size(); ++k) prev[active[k]] = f0[static_cast<Index>(k)];
  }
  std::vector<double> lo(rays.size()), hi(rays.size());
  std::vector<std::size_t> bracketed;
  while (!active.empty()) {
    std::vector<double> next = t;
    for (auto i : active) next[i] = std::min(t[i] + cfg.occ_step, t_end[i]);
    const Eigen::VectorXd f = eval(active, next);
    std::vector<std::size_t> still;
    for (std::size_t k = 0; k < active.size(); ++k) {
      const std::size_t i = active[k];
      const double v = f[static_cast<Index>(k)];
      if ((v >= 0.0) != (prev[i] >= 0.0)) {
        lo[i] = t[i];
        hi[i] = next[i];
        bracketed.push_back(i);
      } else if (next[i] < t_end[i]) {
        t[i] = next[i];
        prev[i] = v;
        still.push_back(i);
      }
    }
    active = std::move(still);
  }
  if (bracketed.empty()) return hits;
  std::vector<double> lo_val(rays.size());
  {
    const Eigen::VectorXd f = eval(bracketed, lo);
    for (std::size_t k = 0; k < bracketed.size(); ++k) lo_val[bracketed[k]] = f[static_cast<Index>(k)];
  }
  std::vector<double> mid(rays.size());
  for (int s = 0; s < cfg.bisection_steps; ++s) {
    for (auto i : bracketed) mid[i] = 0.5 * (lo[i] + hi[i]);
    const Eigen::VectorXd f = eval(bracketed, mid);
    for (std::size_t k = 0; k < bracketed.size(); ++k) {
      const std::size_t i = bracketed[k];
      if ((f[static_cast<Index>(k)] >= 0.0) == (lo_val[i] >= 0.0)) lo[i] = mid[i];
      else hi[i] = mid[i];
    }
  }
  for (auto i : bracketed) {
    const double tm = 0.5 * (lo[i] + hi[i]);
    hits[i] = {true, at(rays[i], tm), tm};
  }
  return hits;
}

}  // namespace

std::vector<TraceHit> trace_rays(const BatchField& field, TraceMode mode, const std::vector<Ray>& rays,
                                 const TraceConfig& cfg) {
  cfg.validate();
  switch (mode) {
    case TraceMode::sphere: return march(field, 1.0, rays, cfg);
    case TraceMode::damped: return march(field, cfg.beta, rays, cfg);
    case TraceMode::bisection: return bisect(field, rays, cfg);
  }
  throw ContractError("invalid trace mode");
}

std::vector<TraceHit> sphere_trace(const InrModel& model, const std::vector<Ray>& rays, const TraceConfig& cfg) {
  if (model.function() != FunctionTag::sdf) throw TagError("sphere tracing needs an SDF INR, got " + to_string(model.function()));
  return trace_rays(model_field(model), TraceMode::sphere, rays, cfg);
}

std::vector<TraceHit> damped_sphere_trace(const InrModel& model, const std::vector<Ray>& rays, const TraceConfig& cfg) {
  if (model.function() != FunctionTag::udf) throw TagError("damped tracing needs a UDF INR, got " + to_string(model.function()));
  if (cfg.beta >= 1.0) warn("damped tracing with beta = 1 may overshoot the zero level set of an unsigned field");
  return trace_rays(model_field(model), TraceMode::damped, rays, cfg);
}

Ray random_ray(CounterRng& rng) {
  const double z = rng.uniform(-1.0, 1.0), phi = rng.uniform(0.0, 2.0 * std::numbers::pi);
  const double s = std::sqrt(std::max(0.0, 1.0 - z * z));
  const Point3 origin = std::sqrt(3.0) * Point3(s * std::cos(phi), s * std::sin(phi), z);
  const Point3 target(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0));
  Point3 dir = target - origin;
  const double len = dir.norm();
  dir = len > 1e-12 ? Point3(dir / len) : Point3(-origin.normalized());
  return {origin, dir};
}

Coords sample_point_cloud(const BatchField& field, FunctionTag fn, Index n, const TraceConfig& cfg, std::uint64_t seed) {
  if (n < 1) throw ContractError("point cloud needs at least one point");
  constexpr Index kBatch = 4096;
  constexpr Index kProbe = 1000000;
  CounterRng rng(seed, 31);
  Coords out(n, 3);
  Index found = 0, cast = 0;
  const TraceMode mode = trace_mode(fn);
  while (found < n) {
    std::vector<Ray> rays;
    for (Index i = 0; i < kBatch; ++i) rays.push_back(random_ray(rng));
    cast += kBatch;
    for (const auto& h : trace_rays(field, mode, rays, cfg)) {
      if (!h.hit) continue;
      out.row(found++) = h.point.transpose();
      if (found == n) break;
    }
    if (cast >= kProbe && found < n && static_cast<double>(found) < 0.01 * static_cast<double>(cast))
      throw StateError("degenerate shape: " + std::to_string(found) + " hits from " + std::to_string(cast) + " rays");
  }
  return out;
}

Coords sample_point_cloud(const InrModel& model, Index n, const TraceConfig& cfg, std::uint64_t seed) {
  if (model.function() == FunctionTag::occ) throw TagError("occupancy INRs use occ_surface_points");
  if (model.function() == FunctionTag::udf && cfg.beta >= 1.0)
    warn("damped tracing with beta = 1 may overshoot the zero level set of an unsigned field");
  return sample_point_cloud(model_field(model), model.function(), n, cfg, seed);
}

Point3 camera_position(const ViewConfig& view, int index) {
  const double az = 2.0 * std::numbers::pi * index / view.views;
  const double c = std::cos(view.elevation);
  return view.distance * Point3(c * std::cos(az), std::sin(view.elevation), c * std::sin(az));
}

std::vector<Ray> camera_rays(const ViewConfig& view, int index) {
  if (view.resolution < 16) throw ConfigError("depth views need resolution >= 16");
  const Point3 eye = camera_position(view, index);
  const Point3 forward = (-eye).normalized();
  const Point3 right = forward.cross(Point3::UnitY()).normalized();
  const Point3 up = right.cross(forward);
  const double half = std::tan(0.5 * view.fov_degrees * std::numbers::pi / 180.0);
  const int res = view.resolution;
  std::vector<Ray> rays;
  rays.reserve(static_cast<std::size_t>(res) * res);
  for (int r = 0; r < res; ++r)
    for (int c = 0; c < res; ++c) {
      const double x = ((c + 0.5) / res * 2.0 - 1.0) * half;
      const double y = (1.0 - (r + 0.5) / res * 2.0) * half;
      rays.push_back({eye, (forward + x * right + y * up).normalized()});
    }
  return rays;
}

std::vector<DepthMap> render_depth_views(const BatchField& field, FunctionTag fn, const ViewConfig& view,
                                         const TraceConfig& cfg) {
  std::vector<DepthMap> maps;
  for (int v = 0; v < view.views; ++v) {
    const auto hits = trace_rays(field, trace_mode(fn), camera_rays(view, v), cfg);
    DepthMap d(view.resolution, view.resolution);
    for (Index i = 0; i < d.size(); ++i)
      d.data()[i] = hits[static_cast<std::size_t>(i)].hit ? hits[static_cast<std::size_t>(i)].t
                                                          : std::numeric_limits<double>::infinity();
    maps.push_back(std::move(d));
  }
  return maps;
}

std::vector<DepthMap> render_depth_views(const InrModel& model, const ViewConfig& view, const TraceConfig& cfg) {
  return render_depth_views(model_field(model), model.function(), view, cfg);
}

Coords occ_surface_points(const BatchField& field, int grid_res, Index n) {
  if (grid_res < 16) throw ConfigError("occupancy lattice needs resolution >= 16");
  if (n < 1) throw ContractError("need at least one point");
  const int r = grid_res;
  const double h = 2.0 / r;
  Coords lattice(static_cast<Index>(r) * r * r, 3);
  for (int k = 0, row = 0; k < r; ++k)
    for (int j = 0; j < r; ++j)
      for (int i = 0; i < r; ++i, ++row) lattice.row(row) << -1 + (i + 0.5) * h, -1 + (j + 0.5) * h, -1 + (k + 0.5) * h;
  const Eigen::VectorXd v = field(lattice);
  auto idx = [r](int i, int j, int k) { return (static_cast<Index>(k) * r + j) * r + i; };
  std::vector<Point3> mids;
  for (int k = 0; k < r; ++k)
    for (int j = 0; j < r; ++j)
      for (int i = 0; i < r; ++i) {
        const Index a = idx(i, j, k);
        const bool sa = v[a] >= 0.0;
        const Index nb[3] = {i + 1 < r ? idx(i + 1, j, k) : -1, j + 1 < r ? idx(i, j + 1, k) : -1,
                             k + 1 < r ? idx(i, j, k + 1) : -1};
        for (Index b : nb)
          if (b >= 0 && (v[b] >= 0.0) != sa) mids.emplace_back(0.5 * (lattice.row(a) + lattice.row(b)).transpose());
      }
  if (mids.empty()) throw StateError("degenerate shape: occupancy has no sign change on the lattice");
  const auto m = static_cast<Index>(mids.size());
  Coords out(n, 3);
  for (Index i = 0; i < n; ++i) {
    const Index src = m >= n ? static_cast<Index>((static_cast<unsigned __int128>(i) * m) / n) : i % m;
    out.row(i) = mids[static_cast<std::size_t>(src)].transpose();
  }
  return out;
}

Coords occ_surface_points(const InrModel& model, int grid_res, Index n) {
  if (model.function() != FunctionTag::occ) throw TagError("occ_surface_points needs an Occ INR");
  return occ_surface_points(model_field(model), grid_res, n);
}

void write_ply(const std::string& path, const Coords& points) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path);
  out << "ply\nformat ascii 1.0\nelement vertex " << points.rows()
      << "\nproperty float x\nproperty float y\nproperty float z\nend_header\n";
  out.precision(9);
  for (Index i = 0; i < points.rows(); ++i) out << points(i, 0) << ' ' << points(i, 1) << ' ' << points(i, 2) << '\n';
}

void write_depth_pgm(const std::string& path, const DepthMap& depth) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path);
  out << "P5\n" << depth.cols() << ' ' << depth.rows() << "\n65535\n";
  for (Index i = 0; i < depth.size(); ++i) {
    const double d = depth.data()[i];
    std::uint16_t v = 65535;
    if (std::isfinite(d)) v = static_cast<std::uint16_t>(std::clamp(std::lround(d * 1000.0), 0L, 65534L));
    const unsigned char bytes[2] = {static_cast<unsigned char>(v >> 8), static_cast<unsigned char>(v & 0xFF)};
    out.write(reinterpret_cast<const char*>(bytes), 2);
  }
}

}  // namespace inret
