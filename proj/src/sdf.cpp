#include "padfuse/sdf.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <span>

#include "padfuse/error.hpp"

namespace padfuse {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

double sign_of(double x) { return x < 0.0 ? -1.0 : 1.0; }

double box_distance(const Vector3& h, const Vector3& p) {
  const Vector3 q = p.cwiseAbs() - h;
  const double outside = q.cwiseMax(0.0).norm();
  const double inside = std::min(q.maxCoeff(), 0.0);
  return outside + inside;
}

Vector3 box_gradient(const Vector3& h, const Vector3& p) {
  const Vector3 q = p.cwiseAbs() - h;
  const Vector3 pos = q.cwiseMax(0.0);
  const double n = pos.norm();
  Vector3 g = Vector3::Zero();
  if (n > 0.0) {
    for (int i = 0; i < 3; ++i) g[i] = sign_of(p[i]) * pos[i] / n;
    return g;
  }
  int axis = 0;
  q.maxCoeff(&axis);
  g[axis] = sign_of(p[axis]);
  return g;
}

double cylinder_distance(const Cylinder& c, const Vector3& p) {
  const double dr = std::hypot(p.x(), p.y()) - c.radius;
  const double dz = std::abs(p.z()) - c.half_height;
  const double outside = std::hypot(std::max(dr, 0.0), std::max(dz, 0.0));
  return outside + std::min(std::max(dr, dz), 0.0);
}

Vector3 cylinder_gradient(const Cylinder& c, const Vector3& p) {
  const double rho = std::hypot(p.x(), p.y());
  const double dr = rho - c.radius;
  const double dz = std::abs(p.z()) - c.half_height;
  const double ux = rho > 0.0 ? p.x() / rho : 1.0;
  const double uy = rho > 0.0 ? p.y() / rho : 0.0;
  const double sz = sign_of(p.z());
  if (dr > 0.0 || dz > 0.0) {
    const double a = std::max(dr, 0.0);
    const double b = std::max(dz, 0.0);
    const double n = std::hypot(a, b);
    return {a * ux / n, a * uy / n, b * sz / n};
  }
  if (dr > dz) return {ux, uy, 0.0};
  return {0.0, 0.0, sz};
}

void append_le(std::vector<char>& buf, const void* src, std::size_t n) {
  const auto* bytes = static_cast<const char*>(src);
  if constexpr (std::endian::native == std::endian::little) {
    buf.insert(buf.end(), bytes, bytes + n);
  } else {
    for (std::size_t i = 0; i < n; ++i) buf.push_back(bytes[n - 1 - i]);
  }
}

template <class T>
T read_le(std::istream& in) {
  char bytes[sizeof(T)];
  if (!in.read(bytes, sizeof(T))) throw Error(ErrorCode::Io, "truncated SDF grid file");
  if constexpr (std::endian::native != std::endian::little) std::reverse(bytes, bytes + sizeof(T));
  T out;
  std::memcpy(&out, bytes, sizeof(T));
  return out;
}

}  // namespace

double shape_distance(const Shape& shape, const Vector3& p) {
  return std::visit(
      Overloaded{
          [&](const Sphere& s) { return p.norm() - s.radius; },
          [&](const Box& b) { return box_distance(b.half_extents, p); },
          [&](const RoundedBox& b) {
            const Vector3 inner = b.half_extents.array() - b.edge_radius;
            return box_distance(inner, p) - b.edge_radius;
          },
          [&](const Cylinder& c) { return cylinder_distance(c, p); },
      },
      shape);
}

Vector3 shape_gradient(const Shape& shape, const Vector3& p) {
  return std::visit(Overloaded{
                        [&](const Sphere&) -> Vector3 {
                          const double n = p.norm();
                          return n > 0.0 ? Vector3(p / n) : Vector3::UnitZ();
                        },
                        [&](const Box& b) { return box_gradient(b.half_extents, p); },
                        [&](const RoundedBox& b) {
                          const Vector3 inner = b.half_extents.array() - b.edge_radius;
                          return box_gradient(inner, p);
                        },
                        [&](const Cylinder& c) { return cylinder_gradient(c, p); },
                    },
                    shape);
}

Vector3 shape_half_bounds(const Shape& shape) {
  return std::visit(Overloaded{
                        [](const Sphere& s) -> Vector3 { return Vector3::Constant(s.radius); },
                        [](const Box& b) -> Vector3 { return b.half_extents; },
                        [](const RoundedBox& b) -> Vector3 { return b.half_extents; },
                        [](const Cylinder& c) -> Vector3 {
                          return {c.radius, c.radius, c.half_height};
                        },
                    },
                    shape);
}

void validate_shape(const Shape& shape) {
  const bool ok = std::visit(
      Overloaded{
          [](const Sphere& s) { return s.radius > 0.0; },
          [](const Box& b) { return (b.half_extents.array() > 0.0).all(); },
          [](const RoundedBox& b) {
            return b.edge_radius > 0.0 && (b.half_extents.array() > b.edge_radius).all();
          },
          [](const Cylinder& c) { return c.radius > 0.0 && c.half_height > 0.0; },
      },
      shape);
  if (!ok) throw Error(ErrorCode::InvalidArgument, "shape dimensions must be positive");
}

// ---------------------------------------------------------------------------

GridSdf::GridSdf(const Vector3& origin, double cell_size, const std::array<int, 3>& resolution,
                 std::vector<double> values)
    : origin_(origin), cell_size_(cell_size), resolution_(resolution), values_(std::move(values)) {
  for (int n : resolution_) {
    if (n < 2) throw Error(ErrorCode::ResolutionTooSmall, "grid resolution must be >= 2 per axis");
  }
  if (!(cell_size_ > 0.0)) throw Error(ErrorCode::InvalidArgument, "cell size must be positive");
  const std::size_t expected = static_cast<std::size_t>(resolution_[0]) * resolution_[1] * resolution_[2];
  if (values_.size() != expected) {
    throw Error(ErrorCode::InvalidArgument, "grid value count does not match resolution");
  }
  if (!std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); })) {
    throw Error(ErrorCode::InvalidArgument, "grid values must be finite");
  }
  upper_ = origin_ + cell_size_ * Vector3(resolution_[0] - 1, resolution_[1] - 1, resolution_[2] - 1);

  // Each partial derivative of the interpolant is a convex combination of node
  // differences along its axis; outside the grid the clamped distance adds 1.
  const std::size_t nx = resolution_[0], nxy = nx * resolution_[1];
  double slope[3] = {0.0, 0.0, 0.0};
  for (int k = 0; k < resolution_[2]; ++k) {
    for (int j = 0; j < resolution_[1]; ++j) {
      for (int i = 0; i < resolution_[0]; ++i) {
        const std::size_t n = i + nx * j + nxy * k;
        if (i + 1 < resolution_[0]) slope[0] = std::max(slope[0], std::abs(values_[n + 1] - values_[n]));
        if (j + 1 < resolution_[1]) slope[1] = std::max(slope[1], std::abs(values_[n + nx] - values_[n]));
        if (k + 1 < resolution_[2]) slope[2] = std::max(slope[2], std::abs(values_[n + nxy] - values_[n]));
      }
    }
  }
  lipschitz_ = Vector3(slope[0], slope[1], slope[2]).norm() / cell_size_ + 1.0;
}


Vector3 GridSdf::node_position(int i, int j, int k) const {
  return origin_ + cell_size_ * Vector3(i, j, k);
}

double GridSdf::node_value(int i, int j, int k) const {
  return values_[static_cast<std::size_t>(i) +
                 static_cast<std::size_t>(resolution_[0]) * (j + static_cast<std::size_t>(resolution_[1]) * k)];
}

namespace {

inline double mix(double a, double b, double t) { return (1.0 - t) * a + t * b; }

}  // namespace

double GridSdf::interpolate(const Vector3& p, Vector3* gradient) const {
  int idx[3];
  double f[3];
  for (int a = 0; a < 3; ++a) {
    // u >= 0 here, so truncation is floor.
    double u = std::max(0.0, (p[a] - origin_[a]) / cell_size_);
    // Node coordinates reproduce node values exactly.
    if (const int r = static_cast<int>(u + 0.5); std::abs(u - r) < 1e-9) u = r;
    // Points on a cell face belong to the lower-index cell.
    int i = static_cast<int>(u);
    if (i == u) --i;
    i = std::clamp(i, 0, resolution_[a] - 2);
    idx[a] = i;
    f[a] = u - i;
  }
  const std::size_t nx = resolution_[0];
  const std::size_t nxy = nx * resolution_[1];
  const std::size_t base = idx[0] + nx * idx[1] + nxy * idx[2];
  const double c000 = values_[base];
  const double c100 = values_[base + 1];
  const double c010 = values_[base + nx];
  const double c110 = values_[base + nx + 1];
  const double c001 = values_[base + nxy];
  const double c101 = values_[base + nxy + 1];
  const double c011 = values_[base + nxy + nx];
  const double c111 = values_[base + nxy + nx + 1];

  const double fx = f[0], fy = f[1], fz = f[2];
  const double c00 = mix(c000, c100, fx);
  const double c10 = mix(c010, c110, fx);
  const double c01 = mix(c001, c101, fx);
  const double c11 = mix(c011, c111, fx);
  const double c0 = mix(c00, c10, fy);
  const double c1 = mix(c01, c11, fy);

  if (gradient != nullptr) {
    const double dx00 = c100 - c000, dx10 = c110 - c010, dx01 = c101 - c001, dx11 = c111 - c011;
    const double dx0 = dx00 + fy * (dx10 - dx00);
    const double dx1 = dx01 + fy * (dx11 - dx01);
    const double gx = dx0 + fz * (dx1 - dx0);
    const double gy = (c10 - c00) + fz * ((c11 - c01) - (c10 - c00));
    const double gz = c1 - c0;
    *gradient = Vector3(gx, gy, gz) / cell_size_;
  }
  return mix(c0, c1, fz);
}

double GridSdf::evaluate(const Vector3& p, Vector3* gradient) const {
  if ((p.array() >= origin_.array()).all() && (p.array() <= upper_.array()).all()) return interpolate(p, gradient);
  const Vector3 clamped = p.cwiseMax(origin_).cwiseMin(upper_);
  const Vector3 d = p - clamped;

  const double dist = d.norm();
  Vector3 inner_grad;
  const double v = interpolate(clamped, gradient != nullptr ? &inner_grad : nullptr);
  if (gradient != nullptr) {
    for (int a = 0; a < 3; ++a) (*gradient)[a] = d[a] != 0.0 ? d[a] / dist : inner_grad[a];
  }
  return v + dist;
}

double GridSdf::value(const Vector3& p) const { return evaluate(p, nullptr); }

Vector3 GridSdf::gradient(const Vector3& p) const {
  Vector3 g;
  evaluate(p, &g);
  return g;
}

void GridSdf::save(const std::filesystem::path& path) const {
  std::vector<char> buf;
  buf.reserve(44 + values_.size() * sizeof(float));
  buf.insert(buf.end(), {'S', 'D', 'F', '1'});
  for (int n : resolution_) {
    const auto u = static_cast<std::uint32_t>(n);
    append_le(buf, &u, sizeof(u));
  }
  for (int a = 0; a < 3; ++a) append_le(buf, &origin_[a], sizeof(double));
  append_le(buf, &cell_size_, sizeof(double));
  for (double v : values_) {
    const auto f = static_cast<float>(v);
    append_le(buf, &f, sizeof(f));
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot open " + path.string() + " for writing");
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

GridSdf GridSdf::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, "SDF1", 4) != 0) {
    throw Error(ErrorCode::Parse, path.string() + " is not an SDF1 grid file");
  }
  std::array<int, 3> res{};
  for (int& n : res) n = static_cast<int>(read_le<std::uint32_t>(in));
  Vector3 origin;
  for (int a = 0; a < 3; ++a) origin[a] = read_le<double>(in);
  const double cell = read_le<double>(in);
  const std::size_t count = static_cast<std::size_t>(res[0]) * res[1] * res[2];
  std::vector<double> values(count);
  for (double& v : values) v = read_le<float>(in);
  return GridSdf(origin, cell, res, std::move(values));
}

// ---------------------------------------------------------------------------

double SdfField::eval(const Vector3& p) const { return eval(p, nullptr); }

Vector3 SdfField::grad(const Vector3& p) const {
  Vector3 g;
  eval(p, &g);
  return g;
}

double SdfField::eval(const Vector3& p, Vector3* gradient) const {
  if (const auto* grid = std::get_if<std::shared_ptr<const GridSdf>>(&field_)) {
    return (*grid)->evaluate(p, gradient);
  }
  const Shape& s = std::get<Shape>(field_);
  if (gradient != nullptr) *gradient = shape_gradient(s, p);
  return shape_distance(s, p);
}

double SdfField::lipschitz() const {
  const GridSdf* g = grid();
  return g != nullptr ? g->lipschitz() : 1.0;
}

const GridSdf* SdfField::grid() const {
  const auto* grid = std::get_if<std::shared_ptr<const GridSdf>>(&field_);
  return grid != nullptr ? grid->get() : nullptr;
}

GridSdf bake(const Shape& shape, const std::array<int, 3>& resolution, double padding) {
  for (int n : resolution) {
    if (n < 2) throw Error(ErrorCode::ResolutionTooSmall, "grid resolution must be >= 2 per axis");
  }
  if (!(padding > 0.0)) throw Error(ErrorCode::InvalidArgument, "padding must be positive");
  validate_shape(shape);

  const Vector3 half = shape_half_bounds(shape).array() + padding;
  double cell = 0.0;
  for (int a = 0; a < 3; ++a) cell = std::max(cell, 2.0 * half[a] / (resolution[a] - 1));
  Vector3 origin;
  for (int a = 0; a < 3; ++a) origin[a] = -0.5 * (resolution[a] - 1) * cell;

  std::vector<double> values(static_cast<std::size_t>(resolution[0]) * resolution[1] * resolution[2]);
  std::size_t n = 0;
  for (int k = 0; k < resolution[2]; ++k) {
    for (int j = 0; j < resolution[1]; ++j) {
      for (int i = 0; i < resolution[0]; ++i) {
        values[n++] = shape_distance(shape, origin + cell * Vector3(i, j, k));
      }
    }
  }
  return GridSdf(origin, cell, resolution, std::move(values));
}

// ---------------------------------------------------------------------------

namespace {

Vector3 random_unit(std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (;;) {
    Vector3 v(gauss(rng), gauss(rng), gauss(rng));
    const double n = v.norm();
    if (n > 1e-12) return v / n;
  }
}

// Picks a point on one of the six faces of a box, area weighted. `inner` is the
// flat-face extent and `offset` pushes the face outward (rounded boxes).
Vector3 sample_box_face(const Vector3& inner, double offset, std::size_t face, double u, double v) {
  const int axis = static_cast<int>(face / 2);
  const double s = face % 2 == 0 ? 1.0 : -1.0;
  const int a1 = (axis + 1) % 3;
  const int a2 = (axis + 2) % 3;
  Vector3 p;
  p[axis] = s * (inner[axis] + offset);
  p[a1] = (2.0 * u - 1.0) * inner[a1];
  p[a2] = (2.0 * v - 1.0) * inner[a2];
  return p;
}

std::size_t pick(std::span<const double> weights, double u) {
  double total = 0.0;
  for (double w : weights) total += w;
  double acc = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    acc += weights[i] / total;
    if (u < acc) return i;
  }
  return weights.size() - 1;
}

}  // namespace

std::vector<Vector3> sample_surface(const Shape& shape, std::size_t n, std::mt19937_64& rng) {
  if (n < 1) throw Error(ErrorCode::InvalidArgument, "sample count must be >= 1");
  validate_shape(shape);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  std::vector<Vector3> out;
  out.reserve(n);

  std::visit(
      Overloaded{
          [&](const Sphere& s) {
            for (std::size_t i = 0; i < n; ++i) out.push_back(s.radius * random_unit(rng));
          },
          [&](const Box& b) {
            const Vector3& h = b.half_extents;
            const std::array<double, 6> area{h.y() * h.z(), h.y() * h.z(), h.z() * h.x(),
                                             h.z() * h.x(), h.x() * h.y(), h.x() * h.y()};
            for (std::size_t i = 0; i < n; ++i) {
              const std::size_t face = pick(area, uni(rng));
              const double u = uni(rng);
              const double v = uni(rng);
              out.push_back(sample_box_face(h, 0.0, face, u, v));
            }
          },
          [&](const RoundedBox& b) {
            const double r = b.edge_radius;
            const Vector3 h = b.half_extents.array() - r;
            // Six flat faces, twelve quarter-cylinder edges (grouped per axis),
            // eight sphere octants.
            const double face_x = 4.0 * h.y() * h.z();
            const double face_y = 4.0 * h.z() * h.x();
            const double face_z = 4.0 * h.x() * h.y();
            const std::array<double, 5> area{2.0 * (face_x + face_y + face_z),
                                             4.0 * M_PI * r * h.x(), 4.0 * M_PI * r * h.y(),
                                             4.0 * M_PI * r * h.z(), 4.0 * M_PI * r * r};
            const std::array<double, 6> faces{face_x, face_x, face_y, face_y, face_z, face_z};
            for (std::size_t i = 0; i < n; ++i) {
              const std::size_t part = pick(area, uni(rng));
              if (part == 0) {
                const std::size_t face = pick(faces, uni(rng));
                const double u = uni(rng);
                const double v = uni(rng);
                out.push_back(sample_box_face(h, r, face, u, v));
              } else if (part <= 3) {
                const int axis = static_cast<int>(part) - 1;
                const int a1 = (axis + 1) % 3;
                const int a2 = (axis + 2) % 3;
                const double along = (2.0 * uni(rng) - 1.0) * h[axis];
                const double phi = 0.5 * M_PI * uni(rng);
                const double s1 = uni(rng) < 0.5 ? 1.0 : -1.0;
                const double s2 = uni(rng) < 0.5 ? 1.0 : -1.0;
                Vector3 p;
                p[axis] = along;
                p[a1] = s1 * (h[a1] + r * std::cos(phi));
                p[a2] = s2 * (h[a2] + r * std::sin(phi));
                out.push_back(p);
              } else {
                const Vector3 d = random_unit(rng);
                const Vector3 corner(d.x() < 0 ? -h.x() : h.x(), d.y() < 0 ? -h.y() : h.y(),
                                     d.z() < 0 ? -h.z() : h.z());
                out.push_back(corner + r * d);
              }
            }
          },
          [&](const Cylinder& c) {
            const double cap = M_PI * c.radius * c.radius;
            const std::array<double, 3> area{cap, cap, 4.0 * M_PI * c.radius * c.half_height};
            for (std::size_t i = 0; i < n; ++i) {
              const std::size_t part = pick(area, uni(rng));
              const double phi = 2.0 * M_PI * uni(rng);
              if (part == 2) {
                const double z = (2.0 * uni(rng) - 1.0) * c.half_height;
                out.emplace_back(c.radius * std::cos(phi), c.radius * std::sin(phi), z);
              } else {
                const double rho = c.radius * std::sqrt(uni(rng));
                const double z = part == 0 ? c.half_height : -c.half_height;
                out.emplace_back(rho * std::cos(phi), rho * std::sin(phi), z);
              }
            }
          },
      },
      shape);
  return out;
}

ObjectModel make_object_model(const Shape& shape, const ObjectModelOptions& options) {
  validate_shape(shape);
  std::mt19937_64 rng(options.seed);
  auto points = sample_surface(shape, options.surface_points, rng);
  if (options.analytic) return {shape, SdfField(shape), std::move(points)};
  const int n = options.resolution;
  return {shape, SdfField(bake(shape, {n, n, n}, options.padding)), std::move(points)};
}

}  // namespace padfuse
