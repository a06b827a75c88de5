#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "inret/convert/trace.hpp"
#include "inret/log.hpp"
#include "inret/train/train.hpp"

using namespace inret;

namespace {

AnalyticShape sphere(double r = 0.5) {
  return AnalyticShape("sphere", "sphere", {Primitive{PrimitiveKind::sphere, {r}, {}}});
}

struct WarningCapture {
  WarningCapture() {
    set_warning_handler([this](const std::string& m) { messages.push_back(m); });
  }
  ~WarningCapture() { set_warning_handler(nullptr); }
  std::vector<std::string> messages;
};

BatchField constant_field(double c) {
  return [c](const Coords& x) { return Eigen::VectorXd::Constant(x.rows(), c); };
}

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("inret_convert_" + name);
}

// Hash INRs of the 0.5 sphere, trained once for the suite.
class TrainedSphere : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    const auto s = sphere();
    for (FunctionTag fn : kAllFunctions) models()[function_index(fn)] = train_inr(s, TrainConfig::desk(ArchTag::hash, fn)).model;
  }
  static std::array<InrModel, 3>& models() {
    static std::array<InrModel, 3> m;
    return m;
  }
  static const InrModel& model(FunctionTag fn) { return models()[function_index(fn)]; }
};

}  // namespace

TEST(Trace, ModesAndConfig) {
  EXPECT_EQ(trace_mode(FunctionTag::sdf), TraceMode::sphere);
  EXPECT_EQ(trace_mode(FunctionTag::udf), TraceMode::damped);
  EXPECT_EQ(trace_mode(FunctionTag::occ), TraceMode::bisection);
  TraceConfig c;
  EXPECT_DOUBLE_EQ(c.eps, 1e-3);
  EXPECT_EQ(c.max_steps, 128);
  EXPECT_DOUBLE_EQ(c.beta, 0.7);
  c.beta = 1.5;
  EXPECT_THROW(c.validate(), ConfigError);
  c.beta = 0.7;
  c.eps = 0;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Trace, ClipToDomain) {
  auto t = clip_to_domain({Point3(-3, 0, 0), Point3(1, 0, 0)});
  ASSERT_TRUE(t);
  EXPECT_DOUBLE_EQ(t->first, 2.0);
  EXPECT_DOUBLE_EQ(t->second, 4.0);
  EXPECT_FALSE(clip_to_domain({Point3(-3, 2, 0), Point3(1, 0, 0)}));
  EXPECT_FALSE(clip_to_domain({Point3(3, 0, 0), Point3(1, 0, 0)}));
}

TEST(Trace, SphereTraceHitsAnalyticSphere) {
  const auto s = sphere();
  const std::vector<Ray> rays = {{Point3(-1.5, 0, 0), Point3(1, 0, 0)},
                                 {Point3(0.2, 1.7, -0.1), Point3(-0.2, -1.7, 0.1).normalized()}};
  const auto hits = trace_rays(oracle_field(s, FunctionTag::sdf), TraceMode::sphere, rays, TraceConfig{});
  for (const auto& h : hits) {
    ASSERT_TRUE(h.hit);
    EXPECT_NEAR(h.point.norm(), 0.5, 1e-3);
    EXPECT_LT(std::abs(s.sdf(h.point)), 1e-3);
  }
  EXPECT_NEAR(hits[0].t, 1.0, 1e-3);
  EXPECT_NEAR(hits[0].point.x(), -0.5, 1e-3);
}

TEST(Trace, DampedTraceHitsUnsignedSphere) {
  const auto s = sphere();
  const std::vector<Ray> rays = {{Point3(0, 0, -1.5), Point3(0, 0, 1)}, {Point3(1, 1, 1), Point3(-1, -1, -1).normalized()}};
  const auto hits = trace_rays(oracle_field(s, FunctionTag::udf), TraceMode::damped, rays, TraceConfig{});
  for (const auto& h : hits) {
    ASSERT_TRUE(h.hit);
    EXPECT_NEAR(h.point.norm(), 0.5, 2e-3);
  }
}

TEST(Trace, TangentRayMisses) {
  const auto s = sphere();
  const std::vector<Ray> rays = {{Point3(-1.5, 0.6, 0), Point3(1, 0, 0)}, {Point3(-1.5, 0, 0), Point3(-1, 0, 0)}};
  for (TraceMode m : {TraceMode::sphere, TraceMode::damped}) {
    const FunctionTag fn = m == TraceMode::sphere ? FunctionTag::sdf : FunctionTag::udf;
    for (const auto& h : trace_rays(oracle_field(s, fn), m, rays, TraceConfig{})) EXPECT_FALSE(h.hit);
  }
}

TEST(Trace, BisectionFindsOccupancyBoundary) {
  const auto s = sphere();
  const std::vector<Ray> rays = {{Point3(-1.5, 0, 0), Point3(1, 0, 0)}, {Point3(-1.5, 0.6, 0), Point3(1, 0, 0)}};
  const auto hits = trace_rays(oracle_field(s, FunctionTag::occ), TraceMode::bisection, rays, TraceConfig{});
  ASSERT_TRUE(hits[0].hit);
  EXPECT_NEAR(hits[0].point.x(), -0.5, 1e-6);
  EXPECT_FALSE(hits[1].hit);
}

TEST(Trace, RandomRayGeometry) {
  CounterRng rng(4);
  for (int i = 0; i < 200; ++i) {
    const Ray r = random_ray(rng);
    EXPECT_NEAR(r.origin.norm(), std::sqrt(3.0), 1e-12);
    EXPECT_NEAR(r.direction.norm(), 1.0, 1e-12);
    EXPECT_TRUE(clip_to_domain(r).has_value());
  }
}

TEST(PointCloud, AnalyticSphereRadiusAndCount) {
  const auto s = sphere();
  const Coords p = sample_point_cloud(oracle_field(s, FunctionTag::sdf), FunctionTag::sdf, 2048, TraceConfig{}, 1);
  ASSERT_EQ(p.rows(), 2048);
  for (Index i = 0; i < p.rows(); ++i) EXPECT_NEAR(p.row(i).norm(), 0.5, 1e-3);
}

TEST(PointCloud, DegenerateFieldThrows) {
  EXPECT_THROW(sample_point_cloud(constant_field(0.3), FunctionTag::sdf, 16, TraceConfig{}, 1), StateError);
  EXPECT_THROW(sample_point_cloud(constant_field(0.3), FunctionTag::sdf, 0, TraceConfig{}, 1), ContractError);
}

TEST_F(TrainedSphere, PointCloudRadiusWithinTolerance) {
  const InrModel& m = model(FunctionTag::sdf);
  const Coords p = sample_point_cloud(m, 2048, TraceConfig{}, 3);
  ASSERT_EQ(p.rows(), 2048);
  const Eigen::VectorXf f = m.eval(p);
  int off = 0;
  for (Index i = 0; i < p.rows(); ++i) {
    EXPECT_LT(std::abs(f[i]), 1e-3);
    const double r = p.row(i).norm();
    if (std::abs(r - 0.5) > 1e-3 * (1 + r)) ++off;
  }
  EXPECT_EQ(off, 0);
}

TEST_F(TrainedSphere, PointCloudDeterministic) {
  const InrModel& m = model(FunctionTag::sdf);
  const Coords a = sample_point_cloud(m, 256, TraceConfig{}, 8);
  const Coords b = sample_point_cloud(m, 256, TraceConfig{}, 8);
  const Coords c = sample_point_cloud(m, 256, TraceConfig{}, 9);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
}

TEST_F(TrainedSphere, UnsignedPointCloud) {
  const InrModel& m = model(FunctionTag::udf);
  const Coords p = sample_point_cloud(m, 512, TraceConfig{}, 3);
  ASSERT_EQ(p.rows(), 512);
  const Eigen::ArrayXd err = (p.rowwise().norm().array() - 0.5).abs();
  EXPECT_LT(err.maxCoeff(), 0.05);
  EXPECT_LT(err.mean(), 0.01);
  EXPECT_LT(m.eval(p).cwiseAbs().maxCoeff(), 1e-3);
}

TEST_F(TrainedSphere, TagChecks) {
  std::vector<Ray> rays = {{Point3(-1.5, 0, 0), Point3(1, 0, 0)}};
  EXPECT_THROW(sphere_trace(model(FunctionTag::udf), rays, TraceConfig{}), TagError);
  EXPECT_THROW(damped_sphere_trace(model(FunctionTag::sdf), rays, TraceConfig{}), TagError);
  EXPECT_THROW(sample_point_cloud(model(FunctionTag::occ), 8, TraceConfig{}, 1), TagError);
  EXPECT_THROW(occ_surface_points(model(FunctionTag::sdf), 32, 8), TagError);
  const auto h = sphere_trace(model(FunctionTag::sdf), rays, TraceConfig{});
  ASSERT_TRUE(h[0].hit);
  EXPECT_NEAR(h[0].point.x(), -0.5, 5e-3);
}

TEST_F(TrainedSphere, UndampedUnsignedTracingWarns) {
  std::vector<Ray> rays = {{Point3(-1.5, 0, 0), Point3(1, 0, 0)}};
  {
    WarningCapture w;
    damped_sphere_trace(model(FunctionTag::udf), rays, TraceConfig{});
    EXPECT_TRUE(w.messages.empty());
  }
  WarningCapture w;
  TraceConfig c;
  c.beta = 1.0;
  damped_sphere_trace(model(FunctionTag::udf), rays, c);
  ASSERT_EQ(w.messages.size(), 1u);
  EXPECT_NE(w.messages[0].find("overshoot"), std::string::npos);
}

TEST(Views, DefaultsAndCameras) {
  ViewConfig v;
  EXPECT_EQ(v.views, 12);
  EXPECT_EQ(v.resolution, 224);
  for (int i = 0; i < v.views; ++i) {
    const Point3 c = camera_position(v, i);
    EXPECT_NEAR(c.norm(), 3.0, 1e-12);
    EXPECT_NEAR(c.y(), 3.0 * std::sin(0.65), 1e-12);
  }
  EXPECT_NEAR((camera_position(v, 1) - camera_position(v, 0)).norm(),
              2 * 3.0 * std::cos(0.65) * std::sin(std::numbers::pi / 12), 1e-12);
  v.resolution = 8;
  EXPECT_THROW(camera_rays(v, 0), ConfigError);
}

TEST(Views, SphereCenterDepth) {
  const auto s = sphere();
  ViewConfig v;
  v.views = 3;
  v.resolution = 33;
  const auto maps = render_depth_views(oracle_field(s, FunctionTag::sdf), FunctionTag::sdf, v, TraceConfig{});
  ASSERT_EQ(maps.size(), 3u);
  for (const auto& d : maps) {
    ASSERT_EQ(d.rows(), 33);
    EXPECT_NEAR(d(16, 16), 2.5, 1e-3);
    EXPECT_TRUE(std::isinf(d(0, 0)));
  }
}

TEST(Views, EmptySceneIsBackground) {
  ViewConfig v;
  v.views = 2;
  v.resolution = 16;
  for (FunctionTag fn : kAllFunctions)
    for (const auto& d : render_depth_views(constant_field(0.4), fn, v, TraceConfig{}))
      EXPECT_TRUE(d.array().isInf().all()) << to_string(fn);
}

TEST_F(TrainedSphere, DepthFromInrIsPure) {
  ViewConfig v;
  v.views = 2;
  v.resolution = 17;
  const auto a = render_depth_views(model(FunctionTag::sdf), v, TraceConfig{});
  const auto b = render_depth_views(model(FunctionTag::sdf), v, TraceConfig{});
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_TRUE((a[i].array() == b[i].array() || (a[i].array().isInf() && b[i].array().isInf())).all());
    EXPECT_NEAR(a[i](8, 8), 2.5, 1e-2);
  }
}

TEST(OccSurface, AnalyticSphere) {
  const auto s = sphere();
  const Coords p = occ_surface_points(oracle_field(s, FunctionTag::occ), 64, 1000);
  ASSERT_EQ(p.rows(), 1000);
  for (Index i = 0; i < p.rows(); ++i) EXPECT_NEAR(p.row(i).norm(), 0.5, 2.0 / 64 * std::sqrt(3.0) / 2 + 1e-12);
  EXPECT_THROW(occ_surface_points(oracle_field(s, FunctionTag::occ), 8, 10), ConfigError);
}

TEST(OccSurface, CyclesWhenFewCrossings) {
  // A single sign change on a 16-lattice: the plane x = 0.93.
  BatchField plane = [](const Coords& x) {
    Eigen::VectorXd v(x.rows());
    for (Index i = 0; i < x.rows(); ++i) v[i] = x(i, 0) > 0.93 ? 1.0 : -1.0;
    return v;
  };
  const Coords p = occ_surface_points(plane, 16, 600);
  ASSERT_EQ(p.rows(), 600);
  for (Index i = 0; i < p.rows(); ++i) EXPECT_DOUBLE_EQ(p(i, 0), 0.875);
  EXPECT_EQ(p.row(0), p.row(256));
}

TEST(OccSurface, UniformSignThrows) {
  EXPECT_THROW(occ_surface_points(constant_field(1.0), 16, 10), StateError);
  EXPECT_THROW(occ_surface_points(constant_field(-1.0), 16, 10), StateError);
}

TEST_F(TrainedSphere, OccSurfaceFromInr) {
  const Coords p = occ_surface_points(model(FunctionTag::occ), 64, 2048);
  ASSERT_EQ(p.rows(), 2048);
  int off = 0;
  for (Index i = 0; i < p.rows(); ++i)
    if (std::abs(p.row(i).norm() - 0.5) > 0.054) ++off;
  EXPECT_EQ(off, 0);
}

TEST(Export, PlyRoundTrip) {
  Coords p(2, 3);
  p << 0.125, -0.5, 1.0, 0.3, 0.2, -0.1;
  const auto path = temp_path("cloud.ply");
  write_ply(path.string(), p);
  std::ifstream in(path);
  std::string line;
  std::vector<std::string> header;
  while (std::getline(in, line) && line != "end_header") header.push_back(line);
  EXPECT_EQ(header[0], "ply");
  EXPECT_EQ(header[1], "format ascii 1.0");
  EXPECT_EQ(header[2], "element vertex 2");
  for (Index i = 0; i < 2; ++i)
    for (int c = 0; c < 3; ++c) {
      double v;
      in >> v;
      EXPECT_NEAR(v, p(i, c), 1e-9);
    }
  std::filesystem::remove(path);
}

TEST(Export, DepthPgm) {
  DepthMap d(2, 3);
  d << 2.5, std::numeric_limits<double>::infinity(), 0.001, 1.2346, 0.0, 65.0;
  const auto path = temp_path("depth.pgm");
  write_depth_pgm(path.string(), d);
  std::ifstream in(path, std::ios::binary);
  std::string magic;
  int w, h, maxv;
  in >> magic >> w >> h >> maxv;
  in.get();
  EXPECT_EQ(magic, "P5");
  EXPECT_EQ(w, 3);
  EXPECT_EQ(h, 2);
  EXPECT_EQ(maxv, 65535);
  std::vector<int> px;
  for (int i = 0; i < 6; ++i) {
    const int hi = in.get(), lo = in.get();
    px.push_back(hi * 256 + lo);
  }
  EXPECT_EQ(px, (std::vector<int>{2500, 65535, 1, 1235, 0, 65000}));
  std::filesystem::remove(path);
}
