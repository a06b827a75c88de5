#include "inret/shapes/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

namespace inret {

namespace {

constexpr double kPi = std::numbers::pi;

Point3 random_unit(CounterRng& rng) {
  const double z = rng.uniform(-1.0, 1.0);
  const double phi = rng.uniform(0.0, 2.0 * kPi);
  const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
  return {r * std::cos(phi), r * std::sin(phi), z};
}

std::size_t pick_weighted(const std::vector<double>& cumulative, CounterRng& rng) {
  const double u = rng.uniform() * cumulative.back();
  auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
  return std::min(static_cast<std::size_t>(it - cumulative.begin()), cumulative.size() - 1);
}

Point3 local_half_extent(const Primitive& p) {
  const auto& q = p.params;
  switch (p.kind) {
    case PrimitiveKind::sphere: return Point3::Constant(q[0]);
    case PrimitiveKind::box: return {q[0], q[1], q[2]};
    case PrimitiveKind::torus: return {q[0] + q[1], q[1], q[0] + q[1]};
    case PrimitiveKind::capsule: return {q[1], q[0] + q[1], q[1]};
  }
  return Point3::Zero();
}

}  // namespace

std::string to_string(PrimitiveKind k) {
  switch (k) {
    case PrimitiveKind::sphere: return "sphere";
    case PrimitiveKind::box: return "box";
    case PrimitiveKind::torus: return "torus";
    case PrimitiveKind::capsule: return "capsule";
  }
  return "?";
}

PrimitiveKind parse_primitive(const std::string& s) {
  for (auto k : {PrimitiveKind::sphere, PrimitiveKind::box, PrimitiveKind::torus, PrimitiveKind::capsule})
    if (to_string(k) == s) return k;
  throw InputError("unknown primitive '" + s + "'");
}

int primitive_param_count(PrimitiveKind k) {
  switch (k) {
    case PrimitiveKind::sphere: return 1;
    case PrimitiveKind::box: return 3;
    case PrimitiveKind::torus: return 2;
    case PrimitiveKind::capsule: return 2;
  }
  return 0;
}

Transform Transform::from_euler(const Point3& t, const Point3& e, double s) {
  if (!(s > 0.0)) throw InputError("transform scale must be positive");
  Transform tr;
  tr.translation = t;
  tr.euler = e;
  tr.rotation = (Eigen::AngleAxisd(e.z(), Point3::UnitZ()) * Eigen::AngleAxisd(e.y(), Point3::UnitY()) *
                 Eigen::AngleAxisd(e.x(), Point3::UnitX()))
                    .toRotationMatrix();
  tr.scale = s;
  return tr;
}

Point3 Transform::to_local(const Point3& world) const {
  return rotation.transpose() * (world - translation) / scale;
}

Point3 Transform::to_world(const Point3& local) const { return translation + scale * (rotation * local); }

double Primitive::sdf(const Point3& world) const {
  const Point3 p = transform.to_local(world);
  const auto& q = params;
  double d = 0.0;
  switch (kind) {
    case PrimitiveKind::sphere: d = p.norm() - q[0]; break;
    case PrimitiveKind::box: {
      const Point3 e = p.cwiseAbs() - Point3(q[0], q[1], q[2]);
      d = e.cwiseMax(0.0).norm() + std::min(e.maxCoeff(), 0.0);
      break;
    }
    case PrimitiveKind::torus: {
      const double ring = std::hypot(p.x(), p.z()) - q[0];
      d = std::hypot(ring, p.y()) - q[1];
      break;
    }
    case PrimitiveKind::capsule: {
      Point3 c = p;
      c.y() -= std::clamp(p.y(), -q[0], q[0]);
      d = c.norm() - q[1];
      break;
    }
  }
  return d * transform.scale;
}

double Primitive::surface_area() const {
  const auto& q = params;
  const double s2 = transform.scale * transform.scale;
  switch (kind) {
    case PrimitiveKind::sphere: return s2 * 4.0 * kPi * q[0] * q[0];
    case PrimitiveKind::box: return s2 * 8.0 * (q[0] * q[1] + q[1] * q[2] + q[0] * q[2]);
    case PrimitiveKind::torus: return s2 * 4.0 * kPi * kPi * q[0] * q[1];
    case PrimitiveKind::capsule: return s2 * (4.0 * kPi * q[1] * q[1] + 4.0 * kPi * q[1] * q[0]);
  }
  return 0.0;
}

Point3 Primitive::sample_surface(CounterRng& rng) const {
  const auto& q = params;
  Point3 p;
  switch (kind) {
    case PrimitiveKind::sphere: p = q[0] * random_unit(rng); break;
    case PrimitiveKind::box: {
      const Point3 h(q[0], q[1], q[2]);
      // Face pairs normal to x, y, z weighted by area.
      const std::vector<double> cum = {h.y() * h.z(), h.y() * h.z() + h.x() * h.z(),
                                       h.y() * h.z() + h.x() * h.z() + h.x() * h.y()};
      const auto axis = static_cast<int>(pick_weighted(cum, rng));
      for (int a = 0; a < 3; ++a) p[a] = rng.uniform(-h[a], h[a]);
      p[axis] = rng.uniform() < 0.5 ? -h[axis] : h[axis];
      break;
    }
    case PrimitiveKind::torus: {
      const double big = q[0], small = q[1];
      double v = 0.0;
      do {
        v = rng.uniform(0.0, 2.0 * kPi);
      } while (rng.uniform() * (big + small) > big + small * std::cos(v));
      const double u = rng.uniform(0.0, 2.0 * kPi);
      const double ring = big + small * std::cos(v);
      p = {ring * std::cos(u), small * std::sin(v), ring * std::sin(u)};
      break;
    }
    case PrimitiveKind::capsule: {
      const double h = q[0], r = q[1];
      const double side = 4.0 * kPi * r * h, caps = 4.0 * kPi * r * r;
      if (rng.uniform() * (side + caps) < side) {
        const double a = rng.uniform(0.0, 2.0 * kPi);
        p = {r * std::cos(a), rng.uniform(-h, h), r * std::sin(a)};
      } else {
        p = r * random_unit(rng);
        p.y() += p.y() >= 0.0 ? h : -h;
      }
      break;
    }
  }
  return transform.to_world(p);
}

Eigen::AlignedBox3d Primitive::bounds() const {
  const Point3 half = transform.scale * (transform.rotation.cwiseAbs() * local_half_extent(*this));
  return {transform.translation - half, transform.translation + half};
}

void require_domain(const Point3& x) {
  if (!in_domain(x)) {
    std::ostringstream msg;
    msg << "point (" << x.x() << ", " << x.y() << ", " << x.z() << ") lies outside the domain |x|_inf <= 1";
    throw DomainError(msg.str());
  }
}

double ShapeOracle::sdf(const Point3& x) const {
  require_domain(x);
  return signed_distance(x);
}

double ShapeOracle::udf(const Point3& x) const {
  const double s = sdf(x);
  return std::max(s, 0.0) + std::max(-s, 0.0);
}

double ShapeOracle::occ(const Point3& x) const { return sdf(x) >= 0.0 ? 1.0 : -1.0; }

double ShapeOracle::eval(FunctionTag f, const Point3& x) const {
  switch (f) {
    case FunctionTag::sdf: return sdf(x);
    case FunctionTag::udf: return udf(x);
    case FunctionTag::occ: return occ(x);
  }
  throw TagError("invalid function tag");
}

Eigen::VectorXd ShapeOracle::eval(FunctionTag f, const Coords& x) const {
  Eigen::VectorXd out(x.rows());
  for (Index i = 0; i < x.rows(); ++i) out[i] = eval(f, Point3(x.row(i).transpose()));
  return out;
}

AnalyticShape::AnalyticShape(std::string id, std::string category, std::vector<Primitive> members)
    : ShapeOracle(std::move(id), std::move(category)), members_(std::move(members)) {
  if (members_.empty() || members_.size() > 4) throw InputError("a shape needs between 1 and 4 primitives");
  double acc = 0.0;
  for (const auto& m : members_) {
    if (static_cast<int>(m.params.size()) != primitive_param_count(m.kind)) {
      throw InputError(to_string(m.kind) + " takes " + std::to_string(primitive_param_count(m.kind)) +
                       " parameters");
    }
    for (double v : m.params)
      if (!(v > 0.0)) throw InputError("primitive parameters must be positive");
    if (m.kind == PrimitiveKind::torus && !(m.params[1] < m.params[0]))
      throw InputError("torus minor radius must be below the major radius");
    acc += m.surface_area();
    cumulative_area_.push_back(acc);
  }
}

double AnalyticShape::signed_distance(const Point3& x) const {
  double d = members_.front().sdf(x);
  for (std::size_t i = 1; i < members_.size(); ++i) d = std::min(d, members_[i].sdf(x));
  return d;
}

Point3 AnalyticShape::sample_surface(CounterRng& rng) const {
  for (int attempt = 0; attempt < 10000; ++attempt) {
    const std::size_t k = pick_weighted(cumulative_area_, rng);
    const Point3 p = members_[k].sample_surface(rng);
    bool covered = false;
    for (std::size_t j = 0; j < members_.size() && !covered; ++j)
      covered = j != k && members_[j].sdf(p) < 0.0;
    if (!covered) return p;
  }
  throw StateError("shape " + id() + " has no exposed surface");
}

Eigen::AlignedBox3d AnalyticShape::bounds() const {
  Eigen::AlignedBox3d box;
  for (const auto& m : members_) box.extend(m.bounds());
  return box;
}

Point3 closest_point_on_triangle(const Point3& p, const Point3& a, const Point3& b, const Point3& c) {
  const Point3 ab = b - a, ac = c - a, ap = p - a;
  const double d1 = ab.dot(ap), d2 = ac.dot(ap);
  if (d1 <= 0.0 && d2 <= 0.0) return a;
  const Point3 bp = p - b;
  const double d3 = ab.dot(bp), d4 = ac.dot(bp);
  if (d3 >= 0.0 && d4 <= d3) return b;
  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) return a + ab * (d1 / (d1 - d3));
  const Point3 cp = p - c;
  const double d5 = ab.dot(cp), d6 = ac.dot(cp);
  if (d6 >= 0.0 && d5 <= d6) return c;
  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) return a + ac * (d2 / (d2 - d6));
  const double va = d3 * d6 - d5 * d4;
  if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) return b + (c - b) * ((d4 - d3) / ((d4 - d3) + (d5 - d6)));
  const double denom = 1.0 / (va + vb + vc);
  return a + ab * (vb * denom) + ac * (vc * denom);
}

MeshShape::MeshShape(std::string id, std::string category, std::vector<Point3> vertices,
                     std::vector<Eigen::Vector3i> triangles)
    : ShapeOracle(std::move(id), std::move(category)), vertices_(std::move(vertices)), triangles_(std::move(triangles)) {
  if (triangles_.empty()) throw InputError("mesh has no triangles");
  double acc = 0.0;
  for (const auto& t : triangles_) {
    for (int k = 0; k < 3; ++k)
      if (t[k] < 0 || t[k] >= static_cast<int>(vertices_.size())) throw InputError("triangle index out of range");
    acc += 0.5 * (vertices_[t[1]] - vertices_[t[0]]).cross(vertices_[t[2]] - vertices_[t[0]]).norm();
    cumulative_area_.push_back(acc);
  }
}

double MeshShape::unsigned_distance(const Point3& x) const {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& t : triangles_) {
    const Point3 c = closest_point_on_triangle(x, vertices_[t[0]], vertices_[t[1]], vertices_[t[2]]);
    best = std::min(best, (x - c).squaredNorm());
  }
  return std::sqrt(best);
}

bool MeshShape::inside(const Point3& x) const {
  // Odd number of crossings along a fixed generic direction.
  const Point3 dir = Point3(0.5773, 0.3183, 0.7519).normalized();
  int crossings = 0;
  for (const auto& t : triangles_) {
    const Point3& a = vertices_[t[0]];
    const Point3 e1 = vertices_[t[1]] - a, e2 = vertices_[t[2]] - a;
    const Point3 h = dir.cross(e2);
    const double det = e1.dot(h);
    if (std::abs(det) < 1e-14) continue;
    const double inv = 1.0 / det;
    const Point3 s = x - a;
    const double u = inv * s.dot(h);
    if (u < 0.0 || u > 1.0) continue;
    const Point3 qv = s.cross(e1);
    const double v = inv * dir.dot(qv);
    if (v < 0.0 || u + v > 1.0) continue;
    if (inv * e2.dot(qv) > 0.0) ++crossings;
  }
  return crossings % 2 == 1;
}

double MeshShape::signed_distance(const Point3& x) const {
  const double d = unsigned_distance(x);
  return inside(x) ? -d : d;
}

Point3 MeshShape::sample_surface(CounterRng& rng) const {
  const auto& t = triangles_[pick_weighted(cumulative_area_, rng)];
  double u = rng.uniform(), v = rng.uniform();
  if (u + v > 1.0) {
    u = 1.0 - u;
    v = 1.0 - v;
  }
  const Point3& a = vertices_[t[0]];
  return a + u * (vertices_[t[1]] - a) + v * (vertices_[t[2]] - a);
}

Eigen::AlignedBox3d MeshShape::bounds() const {
  Eigen::AlignedBox3d box;
  for (const auto& v : vertices_) box.extend(v);
  return box;
}

std::unique_ptr<MeshShape> load_obj(const std::string& path, std::string id, std::string category) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open OBJ file " + path);
  std::vector<Point3> vertices;
  std::vector<Eigen::Vector3i> triangles;
  std::string line;
  int lineno = 0;
  auto resolve = [&](const std::string& token) {
    const long raw = std::stol(token.substr(0, token.find('/')));
    const long n = static_cast<long>(vertices.size());
    const long idx = raw < 0 ? n + raw : raw - 1;
    if (raw == 0 || idx < 0 || idx >= n) throw ParseError(path, lineno, "face index out of range");
    return static_cast<int>(idx);
  };
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag) || tag[0] == '#') continue;
    if (tag == "v") {
      Point3 v;
      if (!(ls >> v.x() >> v.y() >> v.z())) throw ParseError(path, lineno, "vertex needs three coordinates");
      vertices.push_back(v);
    } else if (tag == "f") {
      std::vector<int> face;
      std::string tok;
      try {
        while (ls >> tok) face.push_back(resolve(tok));
      } catch (const std::logic_error&) {
        throw ParseError(path, lineno, "malformed face index '" + tok + "'");
      }
      if (face.size() < 3) throw ParseError(path, lineno, "face needs at least three vertices");
      for (std::size_t k = 1; k + 1 < face.size(); ++k) triangles.emplace_back(face[0], face[k], face[k + 1]);
    }
  }
  return std::make_unique<MeshShape>(std::move(id), std::move(category), std::move(vertices), std::move(triangles));
}

}  // namespace inret
