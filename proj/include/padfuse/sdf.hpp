#pragma once

#include <array>
#include <filesystem>
#include <memory>
#include <random>
#include <variant>
#include <vector>

#include "padfuse/liegroup.hpp"

namespace padfuse {

// Analytic primitives, centered at the origin of the object frame.
struct Sphere {
  double radius = 0.0;
};
struct Box {
  Vector3 half_extents = Vector3::Zero();
};
struct RoundedBox {
  Vector3 half_extents = Vector3::Zero();
  double edge_radius = 0.0;
};
/// Axis along z.
struct Cylinder {
  double radius = 0.0;
  double half_height = 0.0;
};

using Shape = std::variant<Sphere, Box, RoundedBox, Cylinder>;

/// Exact signed distance: positive outside, negative inside.
double shape_distance(const Shape& shape, const Vector3& p);
Vector3 shape_gradient(const Shape& shape, const Vector3& p);
/// Half extents of the axis-aligned bounding box.
Vector3 shape_half_bounds(const Shape& shape);
void validate_shape(const Shape& shape);

/**
 * Signed distance samples on a regular grid (x-fastest layout).
 *
 * Inside the grid volume the field is the trilinear interpolant of the node
 * values. Outside, the value is taken at the clamped boundary point and the
 * Euclidean distance to that point is added, so the field stays continuous
 * and grows monotonically away from the volume.
 */
class GridSdf {
 public:
  GridSdf(const Vector3& origin, double cell_size, const std::array<int, 3>& resolution,
          std::vector<double> values);

  double value(const Vector3& p) const;
  Vector3 gradient(const Vector3& p) const;
  /// Value and gradient in one pass.
  double evaluate(const Vector3& p, Vector3* gradient) const;

  const Vector3& origin() const { return origin_; }
  double cell_size() const { return cell_size_; }
  const std::array<int, 3>& resolution() const { return resolution_; }
  const std::vector<double>& values() const { return values_; }
  const Vector3& upper_corner() const { return upper_; }
  /// Upper bound on |value(p) - value(q)| / |p - q| over all of space.
  double lipschitz() const { return lipschitz_; }
  Vector3 node_position(int i, int j, int k) const;
  double node_value(int i, int j, int k) const;

  /// Little-endian "SDF1" file: u32 nx ny nz, f64 origin[3], f64 cell, f32 values.
  void save(const std::filesystem::path& path) const;
  static GridSdf load(const std::filesystem::path& path);

 private:
  double interpolate(const Vector3& p, Vector3* gradient) const;

  Vector3 origin_;
  double cell_size_;
  std::array<int, 3> resolution_;
  std::vector<double> values_;
  Vector3 upper_;
  double lipschitz_ = 1.0;
};

/// Either an analytic primitive or a sampled grid. Cheap to copy; grids are shared.
class SdfField {
 public:
  SdfField(const Shape& shape) : field_(shape) {}  // NOLINT(google-explicit-constructor)
  SdfField(GridSdf grid)  // NOLINT(google-explicit-constructor)
      : field_(std::make_shared<const GridSdf>(std::move(grid))) {}

  double eval(const Vector3& p) const;
  Vector3 grad(const Vector3& p) const;
  double eval(const Vector3& p, Vector3* gradient) const;

  /// 1 for the analytic primitives, which are exact distances.
  double lipschitz() const;

  bool is_grid() const { return std::holds_alternative<std::shared_ptr<const GridSdf>>(field_); }
  const GridSdf* grid() const;
  const Shape* shape() const { return std::get_if<Shape>(&field_); }

 private:
  std::variant<Shape, std::shared_ptr<const GridSdf>> field_;
};

GridSdf bake(const Shape& shape, const std::array<int, 3>& resolution, double padding);

/// Area-uniform samples exactly on the surface of the shape.
std::vector<Vector3> sample_surface(const Shape& shape, std::size_t n, std::mt19937_64& rng);

struct ObjectModel {
  Shape shape;
  SdfField sdf;
  std::vector<Vector3> surface_points;
};

struct ObjectModelOptions {
  int resolution = 128;
  double padding = 0.01;
  std::size_t surface_points = 512;
  std::uint64_t seed = 7;
  /// Use the analytic shape instead of baking a grid.
  bool analytic = false;
};

ObjectModel make_object_model(const Shape& shape, const ObjectModelOptions& options = {});

}  // namespace padfuse
