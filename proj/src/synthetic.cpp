#include <cmath>
#include <vector>

#include "gda/pointcloud.hpp"

namespace gda {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Uniform point on the surface of an axis-aligned box: pick a face
// area-weighted, then two in-face coordinates.
void sample_box_surface(Rng& rng, const double c[3], const double h[3], double out[3]) {
  const double ax = h[1] * h[2], ay = h[0] * h[2], az = h[0] * h[1];
  const double total = 2 * (ax + ay + az);
  double u = rng.uniform(0.0, total);
  int axis;      // face normal axis
  if (u < 2 * ax) axis = 0;
  else if (u < 2 * ax + 2 * ay) axis = 1;
  else axis = 2;
  const double side = rng.uniform() < 0.5 ? -1.0 : 1.0;
  const int i1 = (axis + 1) % 3, i2 = (axis + 2) % 3;
  out[axis] = c[axis] + side * h[axis];
  out[i1] = c[i1] + rng.uniform(-h[i1], h[i1]);
  out[i2] = c[i2] + rng.uniform(-h[i2], h[i2]);
}

PointCloud make_sphere(long n, Rng& rng) {
  PointCloud cloud;
  cloud.points = Tensor<double>(n, 3);
  for (long i = 0; i < n; ++i) {
    double x, y, z, r;
    do {
      x = rng.normal();
      y = rng.normal();
      z = rng.normal();
      r = std::sqrt(x * x + y * y + z * z);
    } while (r < 1e-12);
    cloud.points(i, 0) = x / r;
    cloud.points(i, 1) = y / r;
    cloud.points(i, 2) = z / r;
  }
  return cloud;
}

PointCloud make_cube(long n, Rng& rng, bool labels) {
  PointCloud cloud;
  cloud.points = Tensor<double>(n, 3);
  if (labels) cloud.point_labels.resize(n);
  const double c[3] = {0, 0, 0}, h[3] = {0.5, 0.5, 0.5};
  for (long i = 0; i < n; ++i) {
    double p[3];
    sample_box_surface(rng, c, h, p);
    for (int a = 0; a < 3; ++a) cloud.points(i, a) = p[a];
    if (labels) {
      int axis = 0;
      for (int a = 1; a < 3; ++a)
        if (std::abs(std::abs(p[a]) - 0.5) < std::abs(std::abs(p[axis]) - 0.5)) axis = a;
      cloud.point_labels[i] = axis * 2 + (p[axis] > 0 ? 1 : 0);
    }
  }
  return cloud;
}

PointCloud make_cylinder(long n, Rng& rng, bool labels) {
  // Radius 0.5, height 1 (z in [-0.5, 0.5]). Lateral area 2*pi*r*h = pi,
  // each cap pi*r^2 = pi/4. Parts: 0 = body, 1 = caps.
  const double r = 0.5;
  const double lateral = 2 * kPi * r * 1.0;
  const double cap = kPi * r * r;
  const double total = lateral + 2 * cap;
  PointCloud cloud;
  cloud.points = Tensor<double>(n, 3);
  if (labels) cloud.point_labels.resize(n);
  for (long i = 0; i < n; ++i) {
    const double u = rng.uniform(0.0, total);
    const double ang = rng.uniform(0.0, 2 * kPi);
    if (u < lateral) {
      const double z = rng.uniform(-0.5, 0.5);
      cloud.points(i, 0) = r * std::cos(ang);
      cloud.points(i, 1) = r * std::sin(ang);
      cloud.points(i, 2) = z;
      if (labels) cloud.point_labels[i] = 0;
    } else {
      const double rad = r * std::sqrt(rng.uniform());
      cloud.points(i, 0) = rad * std::cos(ang);
      cloud.points(i, 1) = rad * std::sin(ang);
      cloud.points(i, 2) = (u < lateral + cap) ? -0.5 : 0.5;
      if (labels) cloud.point_labels[i] = 1;
    }
  }
  return cloud;
}

PointCloud make_plane_with_crease(long n, Rng& rng, bool labels) {
  // A sheet folded along the y axis with a 120-degree dihedral: each half
  // rises at 30 degrees, so the two in-plane directions meet at 120 degrees.
  // The crease band |u| <= 0.05 is recorded in edge_mask.
  const double cos30 = std::sqrt(3.0) / 2.0, sin30 = 0.5;
  PointCloud cloud;
  cloud.points = Tensor<double>(n, 3);
  cloud.edge_mask.resize(n);
  if (labels) cloud.point_labels.resize(n);
  for (long i = 0; i < n; ++i) {
    const double u = rng.uniform(-1.0, 1.0);
    const double v = rng.uniform(-1.0, 1.0);
    cloud.points(i, 0) = (u < 0 ? -1.0 : 1.0) * std::abs(u) * cos30;
    cloud.points(i, 1) = v;
    cloud.points(i, 2) = std::abs(u) * sin30;
    cloud.edge_mask[i] = std::abs(u) <= 0.05 ? 1 : 0;
    if (labels) cloud.point_labels[i] = u < 0 ? 0 : 1;
  }
  return cloud;
}

PointCloud make_l_bracket(long n, Rng& rng, bool labels) {
  // Two unit plates at a right angle: one in the z=0 plane (x in [0,1]),
  // one in the x=0 plane (z in [0,1]), sharing the y-axis joint line.
  // Points within 0.05 of the joint are flagged in edge_mask.
  PointCloud cloud;
  cloud.points = Tensor<double>(n, 3);
  cloud.edge_mask.resize(n);
  if (labels) cloud.point_labels.resize(n);
  for (long i = 0; i < n; ++i) {
    const int plate = rng.uniform() < 0.5 ? 0 : 1;
    const double a = rng.uniform(0.0, 1.0);
    const double y = rng.uniform(0.0, 1.0);
    if (plate == 0) {
      cloud.points(i, 0) = a;
      cloud.points(i, 1) = y;
      cloud.points(i, 2) = 0.0;
    } else {
      cloud.points(i, 0) = 0.0;
      cloud.points(i, 1) = y;
      cloud.points(i, 2) = a;
    }
    cloud.edge_mask[i] = a <= 0.05 ? 1 : 0;
    if (labels) cloud.point_labels[i] = plate;
  }
  return cloud;
}

PointCloud make_chair(long n, Rng& rng, bool labels) {
  struct Part {
    double c[3], h[3];
    int label;
  };
  // Seat slab, backrest slab, four legs. Parts: 0 seat, 1 back, 2 legs.
  const std::vector<Part> parts = {
      {{0, 0, 0.5}, {0.5, 0.5, 0.05}, 0},
      {{0, -0.45, 1.0}, {0.5, 0.05, 0.5}, 1},
      {{0.4, 0.4, 0.25}, {0.05, 0.05, 0.25}, 2},
      {{-0.4, 0.4, 0.25}, {0.05, 0.05, 0.25}, 2},
      {{0.4, -0.4, 0.25}, {0.05, 0.05, 0.25}, 2},
      {{-0.4, -0.4, 0.25}, {0.05, 0.05, 0.25}, 2},
  };
  std::vector<double> cdf(parts.size());
  double acc = 0;
  for (size_t p = 0; p < parts.size(); ++p) {
    const double* h = parts[p].h;
    acc += 8 * (h[1] * h[2] + h[0] * h[2] + h[0] * h[1]);
    cdf[p] = acc;
  }
  PointCloud cloud;
  cloud.points = Tensor<double>(n, 3);
  if (labels) cloud.point_labels.resize(n);
  for (long i = 0; i < n; ++i) {
    const double u = rng.uniform(0.0, acc);
    size_t p = 0;
    while (p + 1 < parts.size() && u >= cdf[p]) ++p;
    double pt[3];
    sample_box_surface(rng, parts[p].c, parts[p].h, pt);
    for (int a = 0; a < 3; ++a) cloud.points(i, a) = pt[a];
    if (labels) cloud.point_labels[i] = parts[p].label;
  }
  return cloud;
}

}  // namespace

PointCloud generate_synthetic(const SyntheticSpec& spec) {
  if (spec.n_points < 1) throw ConfigError("generate_synthetic: n_points must be >= 1");
  Rng rng(spec.seed);
  PointCloud cloud;
  switch (spec.family) {
    case ShapeFamily::Sphere: cloud = make_sphere(spec.n_points, rng); break;
    case ShapeFamily::Cube: cloud = make_cube(spec.n_points, rng, spec.part_labels); break;
    case ShapeFamily::CylinderWithCaps:
      cloud = make_cylinder(spec.n_points, rng, spec.part_labels);
      break;
    case ShapeFamily::PlaneWithCrease:
      cloud = make_plane_with_crease(spec.n_points, rng, spec.part_labels);
      break;
    case ShapeFamily::LBracket: cloud = make_l_bracket(spec.n_points, rng, spec.part_labels); break;
    case ShapeFamily::ChairLike: cloud = make_chair(spec.n_points, rng, spec.part_labels); break;
    default: throw ConfigError("generate_synthetic: unknown shape family");
  }
  cloud.validate();
  return cloud;
}

}  // namespace gda
