#pragma once

#include <Eigen/Dense>

#include <memory>
#include <string>
#include <vector>

#include "inret/tags.hpp"
#include "inret/tensor/tensor.hpp"
#include "inret/tensor/random.hpp"

namespace inret {

using Point3 = Eigen::Vector3d;
/// P x 3 row-major coordinate matrix.
using Coords = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;

enum class PrimitiveKind { sphere, box, torus, capsule };

std::string to_string(PrimitiveKind k);
PrimitiveKind parse_primitive(const std::string& s);
/// Number of parameters each primitive takes.
int primitive_param_count(PrimitiveKind k);

/// Rigid transform with uniform scale: world = translation + scale * rotation * local.
struct Transform {
  Point3 translation = Point3::Zero();
  /// XYZ Euler angles in radians; `rotation` = Rz * Ry * Rx.
  Point3 euler = Point3::Zero();
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  double scale = 1.0;

  /// From translation, XYZ Euler angles in radians and a uniform scale.
  static Transform from_euler(const Point3& t, const Point3& euler, double scale);
  Point3 to_local(const Point3& world) const;
  Point3 to_world(const Point3& local) const;
};

/// One analytic primitive.
///   sphere:  radius
///   box:     half extents x y z
///   torus:   major radius, minor radius (ring in the xz plane)
///   capsule: half height, radius (segment along y)
struct Primitive {
  PrimitiveKind kind = PrimitiveKind::sphere;
  std::vector<double> params;
  Transform transform;

  double sdf(const Point3& world) const;
  double surface_area() const;
  Point3 sample_surface(CounterRng& rng) const;
  Eigen::AlignedBox3d bounds() const;
};

/// True when x lies in the domain {|x|_inf <= 1}.
inline bool in_domain(const Point3& x) { return x.cwiseAbs().maxCoeff() <= 1.0; }
void require_domain(const Point3& x);

/// Exact implicit-function evaluator for one shape.
class ShapeOracle {
 public:
  ShapeOracle(std::string id, std::string category) : id_(std::move(id)), category_(std::move(category)) {}
  virtual ~ShapeOracle() = default;

  const std::string& id() const { return id_; }
  const std::string& category() const { return category_; }

  /// Signed distance, negative inside. Throws DomainError outside the domain.
  double sdf(const Point3& x) const;
  double udf(const Point3& x) const;
  /// -1 inside, +1 outside, +1 exactly on the surface.
  double occ(const Point3& x) const;
  double eval(FunctionTag f, const Point3& x) const;
  Eigen::VectorXd eval(FunctionTag f, const Coords& x) const;

  /// Point on the zero level set.
  virtual Point3 sample_surface(CounterRng& rng) const = 0;
  virtual Eigen::AlignedBox3d bounds() const = 0;

 protected:
  virtual double signed_distance(const Point3& x) const = 0;

 private:
  std::string id_;
  std::string category_;
};

/// Union of up to four analytic primitives (min of member distances).
class AnalyticShape final : public ShapeOracle {
 public:
  AnalyticShape(std::string id, std::string category, std::vector<Primitive> members);

  const std::vector<Primitive>& members() const { return members_; }
  Point3 sample_surface(CounterRng& rng) const override;
  Eigen::AlignedBox3d bounds() const override;

 protected:
  double signed_distance(const Point3& x) const override;

 private:
  std::vector<Primitive> members_;
  std::vector<double> cumulative_area_;
};

/// Brute-force triangle-mesh oracle: exact unsigned distance, sign by ray parity.
class MeshShape final : public ShapeOracle {
 public:
  MeshShape(std::string id, std::string category, std::vector<Point3> vertices,
            std::vector<Eigen::Vector3i> triangles);

  const std::vector<Point3>& vertices() const { return vertices_; }
  const std::vector<Eigen::Vector3i>& triangles() const { return triangles_; }
  Point3 sample_surface(CounterRng& rng) const override;
  Eigen::AlignedBox3d bounds() const override;

 protected:
  double signed_distance(const Point3& x) const override;

 private:
  double unsigned_distance(const Point3& x) const;
  bool inside(const Point3& x) const;

  std::vector<Point3> vertices_;
  std::vector<Eigen::Vector3i> triangles_;
  std::vector<double> cumulative_area_;
};

/// Reads vertices and faces of a Wavefront OBJ file; polygons are fan-triangulated.
std::unique_ptr<MeshShape> load_obj(const std::string& path, std::string id, std::string category);

/// Closest point on triangle abc to p.
Point3 closest_point_on_triangle(const Point3& p, const Point3& a, const Point3& b, const Point3& c);

}  // namespace inret
