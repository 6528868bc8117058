#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "padfuse/error.hpp"
#include "padfuse/sdf.hpp"

using namespace padfuse;

namespace {

Vector3 random_direction(std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Vector3 v(g(rng), g(rng), g(rng));
  return v.normalized();
}

// Trilinear grid sampled from an arbitrary function of position.
template <class F>
GridSdf grid_from(F&& f, const Vector3& origin, double cell, std::array<int, 3> res) {
  std::vector<double> v;
  for (int k = 0; k < res[2]; ++k)
    for (int j = 0; j < res[1]; ++j)
      for (int i = 0; i < res[0]; ++i) v.push_back(f(origin + cell * Vector3(i, j, k)));
  return GridSdf(origin, cell, res, std::move(v));
}

}  // namespace

TEST_CASE("analytic primitives") {
  const Shape sphere = Sphere{1.0};
  CHECK(shape_distance(sphere, Vector3::Zero()) == -1.0);
  CHECK(shape_distance(sphere, Vector3(2, 0, 0)) == 1.0);
  CHECK((shape_gradient(sphere, Vector3(2, 0, 0)) - Vector3(1, 0, 0)).norm() < 1e-15);
  const Shape box = Box{Vector3(1, 1, 1)};
  CHECK((shape_gradient(box, Vector3(0, 0, 5)) - Vector3(0, 0, 1)).norm() < 1e-15);
  CHECK(shape_distance(box, Vector3(0, 0, 5)) == doctest::Approx(4.0));
  CHECK(shape_distance(box, Vector3(2, 2, 1)) == doctest::Approx(std::sqrt(2.0)));
  CHECK(shape_distance(box, Vector3(0.5, 0, 0)) == doctest::Approx(-0.5));
  const Shape cyl = Cylinder{0.5, 1.0};
  CHECK(shape_distance(cyl, Vector3(1.5, 0, 0)) == doctest::Approx(1.0));
  CHECK(shape_distance(cyl, Vector3(0, 0, 3)) == doctest::Approx(2.0));
  CHECK(shape_distance(cyl, Vector3(0, 0, 0)) == doctest::Approx(-0.5));
  const Shape rbox = RoundedBox{Vector3(1, 1, 1), 0.25};
  CHECK(shape_distance(rbox, Vector3(0, 0, 2)) == doctest::Approx(1.0));
  // edge region: distance to the inner box (half 0.75) minus the radius
  CHECK(shape_distance(rbox, Vector3(2, 2, 0)) == doctest::Approx(std::sqrt(2.0) * 1.25 - 0.25));
}

TEST_CASE("sphere sign convention") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 2.0);
  const Shape s = Sphere{0.7};
  for (int i = 0; i < 1000; ++i) {
    const Vector3 p = random_direction(rng) * u(rng);
    if (p.norm() < 0.7) CHECK(shape_distance(s, p) < 0.0);
    if (p.norm() > 0.7) CHECK(shape_distance(s, p) > 0.0);
  }
}

TEST_CASE("analytic gradients match finite differences") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-0.08, 0.08);
  const std::vector<Shape> shapes{Sphere{0.03}, Box{Vector3(0.03, 0.02, 0.04)},
                                  RoundedBox{Vector3(0.03, 0.02, 0.04), 0.006}, Cylinder{0.03, 0.04}};
  for (const auto& s : shapes) {
    int tested = 0;
    while (tested < 300) {
      const Vector3 p(u(rng), u(rng), u(rng));
      const double h = 1e-7;
      Vector3 fd;
      for (int a = 0; a < 3; ++a) {
        Vector3 d = Vector3::Zero();
        d[a] = h;
        fd[a] = (shape_distance(s, p + d) - shape_distance(s, p - d)) / (2 * h);
      }
      // skip the medial kinks where the distance is not differentiable
      Vector3 fd2;
      for (int a = 0; a < 3; ++a) {
        Vector3 d = Vector3::Zero();
        d[a] = 10 * h;
        fd2[a] = (shape_distance(s, p + d) - shape_distance(s, p - d)) / (20 * h);
      }
      if ((fd - fd2).norm() > 1e-6) continue;
      ++tested;
      CHECK((shape_gradient(s, p) - fd).norm() < 1e-6);
    }
  }
}

TEST_CASE("trilinear interpolation reproduces linear fields") {
  std::mt19937_64 rng(3);
  const Vector3 origin(-0.1, -0.2, 0.05);
  const double cell = 0.013;
  const std::array<int, 3> res{9, 7, 11};
  const auto f = [](const Vector3& p) { return p.x(); };
  const GridSdf g = grid_from(f, origin, cell, res);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const Vector3 span = g.upper_corner() - origin;
  for (int i = 0; i < 500; ++i) {
    const Vector3 p = origin + span.cwiseProduct(Vector3(u(rng), u(rng), u(rng)));
    CHECK(std::abs(g.value(p) - p.x()) < 1e-12);
    CHECK((g.gradient(p) - Vector3(1, 0, 0)).norm() < 1e-12);
  }
  const auto lin = [](const Vector3& p) { return 0.3 * p.x() - 1.7 * p.y() + 0.4 * p.z() + 0.01; };
  const GridSdf h = grid_from(lin, origin, cell, res);
  for (int i = 0; i < 500; ++i) {
    const Vector3 p = origin + span.cwiseProduct(Vector3(u(rng), u(rng), u(rng)));
    CHECK(std::abs(h.value(p) - lin(p)) < 1e-12);
  }
}

TEST_CASE("bake reproduces node values exactly") {
  const Shape s = Box{Vector3(0.02, 0.03, 0.01)};
  const GridSdf g = bake(s, {16, 12, 20}, 0.01);
  for (int k = 0; k < 20; k += 3)
    for (int j = 0; j < 12; j += 2)
      for (int i = 0; i < 16; i += 5) {
        CHECK(g.value(g.node_position(i, j, k)) == g.node_value(i, j, k));
        CHECK(g.node_value(i, j, k) == shape_distance(s, g.node_position(i, j, k)));
      }
}

TEST_CASE("baked 128 sphere matches the analytic distance near the surface") {
  const double r = 0.03;
  const GridSdf g = bake(Sphere{r}, {128, 128, 128}, 0.01);
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> shell(-0.002, 0.002);
  double worst = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const Vector3 p = random_direction(rng) * (r + shell(rng));
    worst = std::max(worst, std::abs(g.value(p) - (p.norm() - r)));
  }
  CHECK(worst < 1e-4);
}

TEST_CASE("grid gradient matches central differences inside cells") {
  const GridSdf g = bake(RoundedBox{Vector3(0.03, 0.02, 0.025), 0.005}, {48, 48, 48}, 0.01);
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> cell(0, 46);
  std::uniform_real_distribution<double> frac(0.05, 0.95);
  const double h = 1e-5 * g.cell_size();
  for (int n = 0; n < 1000; ++n) {
    const Vector3 p = g.node_position(cell(rng), cell(rng), cell(rng)) +
                      g.cell_size() * Vector3(frac(rng), frac(rng), frac(rng));
    Vector3 fd;
    for (int a = 0; a < 3; ++a) {
      Vector3 d = Vector3::Zero();
      d[a] = h;
      fd[a] = (g.value(p + d) - g.value(p - d)) / (2 * h);
    }
    const Vector3 grad = g.gradient(p);
    // unit-scale floor where the interpolated gradient nearly vanishes
    CHECK((grad - fd).norm() <= 1e-4 * std::max(fd.norm(), 1e-3));
    Vector3 grad2;
    CHECK(g.evaluate(p, &grad2) == g.value(p));
    CHECK(grad2 == grad);
  }
}

TEST_CASE("interpolant is continuous across cell faces") {
  const GridSdf g = bake(Cylinder{0.03, 0.04}, {32, 32, 32}, 0.01);
  std::mt19937_64 rng(6);
  std::uniform_int_distribution<int> node(1, 30);
  std::uniform_real_distribution<double> frac(0.0, 1.0);
  for (int n = 0; n < 1000; ++n) {
    Vector3 p = g.node_position(node(rng), node(rng), node(rng)) +
                g.cell_size() * Vector3(frac(rng), frac(rng), frac(rng));
    const int axis = n % 3;
    p[axis] = g.node_position(node(rng), node(rng), node(rng))[axis];  // on a face
    Vector3 e = Vector3::Zero();
    e[axis] = 1e-10;
    CHECK(std::abs(g.value(p - e) - g.value(p + e)) < 1e-9);
  }
}

TEST_CASE("out-of-grid extension") {
  const std::vector<Shape> shapes{Sphere{0.03}, Box{Vector3(0.03, 0.02, 0.04)}, Cylinder{0.02, 0.05}};
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-0.3, 0.3);
  for (const auto& s : shapes) {
    const GridSdf g = bake(s, {40, 40, 40}, 0.01);
    for (int i = 0; i < 2000; ++i) {
      const Vector3 p(u(rng), u(rng), u(rng));
      CHECK(g.value(p) >= shape_distance(s, p) - g.cell_size());
    }
    // continuity at the boundary and unit growth along an outward axis
    const Vector3 corner = g.upper_corner();
    const Vector3 b(0.0, 0.0, corner.z());
    CHECK(g.value(b + Vector3(0, 0, 1e-12)) == doctest::Approx(g.value(b - Vector3(0, 0, 1e-12))));
    CHECK(g.value(b + Vector3(0, 0, 0.1)) == doctest::Approx(g.value(b) + 0.1));
    CHECK((g.gradient(b + Vector3(0, 0, 0.1)) - Vector3(0, 0, 1)).norm() < 1e-9);
  }
}

TEST_CASE("refinement lowers surface error on a fixed sample set") {
  const Shape box = Box{Vector3(0.03, 0.02, 0.025)};
  const GridSdf coarse = bake(box, {32, 32, 32}, 0.01);
  const GridSdf fine = bake(box, {128, 128, 128}, 0.01);
  std::mt19937_64 rng(8);
  const auto pts = sample_surface(box, 2000, rng);
  double e_coarse = 0.0, e_fine = 0.0;
  for (const auto& p : pts) {
    e_coarse = std::max(e_coarse, std::abs(coarse.value(p)));
    e_fine = std::max(e_fine, std::abs(fine.value(p)));
  }
  CHECK(e_fine < e_coarse);
}

TEST_CASE("bake and grid errors") {
  CHECK_THROWS_AS(bake(Sphere{0.03}, {1, 8, 8}, 0.01), Error);
  try {
    bake(Sphere{0.03}, {8, 8, 1}, 0.01);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ResolutionTooSmall);
  }
  CHECK_THROWS_AS(GridSdf(Vector3::Zero(), 0.0, {2, 2, 2}, std::vector<double>(8, 0.0)), Error);
  CHECK_THROWS_AS(GridSdf(Vector3::Zero(), 1.0, {2, 2, 2}, std::vector<double>(7, 0.0)), Error);
  CHECK_THROWS_AS(validate_shape(Sphere{-1.0}), Error);
}

TEST_CASE("grid file round trip") {
  const GridSdf g = bake(Sphere{0.03}, {10, 11, 12}, 0.01);
  const auto path = std::filesystem::temp_directory_path() / "padfuse_test_grid.sdf";
  g.save(path);
  const GridSdf h = GridSdf::load(path);
  std::filesystem::remove(path);
  CHECK(h.resolution() == g.resolution());
  CHECK(h.origin() == g.origin());
  CHECK(h.cell_size() == g.cell_size());
  for (std::size_t i = 0; i < g.values().size(); ++i) {
    CHECK(h.values()[i] == static_cast<double>(static_cast<float>(g.values()[i])));
  }
}

TEST_CASE("surface sampling") {
  std::mt19937_64 rng(9);
  for (const auto& p : sample_surface(Sphere{1.0}, 100, rng)) CHECK(std::abs(p.norm() - 1.0) < 1e-6);
  const std::vector<Shape> shapes{Box{Vector3(0.03, 0.02, 0.04)}, RoundedBox{Vector3(0.03, 0.02, 0.04), 0.006},
                                  Cylinder{0.03, 0.04}};
  for (const auto& s : shapes) {
    const auto pts = sample_surface(s, 500, rng);
    CHECK(pts.size() == 500);
    for (const auto& p : pts) CHECK(std::abs(shape_distance(s, p)) < 1e-6);
  }
}

TEST_CASE("box samples are area weighted across faces") {
  // Face areas for half extents (1, 2, 3): x faces 24, y faces 12, z faces 8 (each of two).
  const Vector3 h(1, 2, 3);
  std::mt19937_64 rng(10);
  const std::size_t n = 20000;
  const auto pts = sample_surface(Box{h}, n, rng);
  int counts[3] = {0, 0, 0};
  for (const auto& p : pts) {
    int on = 0;
    for (int a = 0; a < 3; ++a) {
      if (std::abs(std::abs(p[a]) - h[a]) < 1e-12) {
        ++counts[a];
        ++on;
      }
    }
    CHECK(on >= 1);
  }
  const double area[3] = {2 * 24.0, 2 * 12.0, 2 * 8.0};
  for (int a = 0; a < 3; ++a) {
    const double prob = area[a] / 88.0;
    const double mean = n * prob;
    const double sd = std::sqrt(n * prob * (1 - prob));
    CHECK(std::abs(counts[a] - mean) < 3 * sd);
  }
}

TEST_CASE("object model") {
  ObjectModelOptions o;
  o.resolution = 16;
  o.surface_points = 64;
  const ObjectModel m = make_object_model(Sphere{0.03}, o);
  CHECK(m.sdf.is_grid());
  CHECK(m.surface_points.size() == 64);
  o.analytic = true;
  const ObjectModel a = make_object_model(Sphere{0.03}, o);
  CHECK_FALSE(a.sdf.is_grid());
  CHECK(a.sdf.eval(Vector3(0.05, 0, 0)) == doctest::Approx(0.02));
  CHECK(a.surface_points == m.surface_points);
}

TEST_CASE("Lipschitz bound holds inside and outside the grid") {
  const GridSdf g = bake(RoundedBox{Vector3(0.03, 0.02, 0.025), 0.005}, {40, 40, 40}, 0.01);
  CHECK(g.lipschitz() >= 1.0);
  CHECK(g.lipschitz() <= std::sqrt(3.0) + 1.0 + 1e-9);
  const auto lin = [](const Vector3& p) { return 3.0 * p.x() - 4.0 * p.z(); };
  const GridSdf steep = grid_from(lin, Vector3(-0.1, -0.1, -0.1), 0.02, {11, 11, 11});
  CHECK(steep.lipschitz() == doctest::Approx(6.0).epsilon(1e-12));
  CHECK(SdfField(Sphere{0.03}).lipschitz() == 1.0);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-0.12, 0.12);
  for (const GridSdf* grid : {&g, &steep}) {
    for (int i = 0; i < 10000; ++i) {
      const Vector3 p(u(rng), u(rng), u(rng));
      const Vector3 q = i % 2 ? Vector3(u(rng), u(rng), u(rng)) : p + 0.003 * random_direction(rng);
      CHECK(std::abs(grid->value(p) - grid->value(q)) <= grid->lipschitz() * (p - q).norm() * (1 + 1e-12));
    }
  }
}
