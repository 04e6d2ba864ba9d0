#include "gda/pointcloud.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace gda {

void PointCloud::validate() const {
  if (n_points() < 1) throw InvalidInputError("point cloud is empty");
  if (n_channels() < 3)
    throw InvalidInputError("point cloud needs at least 3 channels, got " +
                            std::to_string(n_channels()));
  for (double v : points.data)
    if (!std::isfinite(v)) throw InvalidInputError("point cloud contains non-finite values");
  if (!point_labels.empty() && static_cast<long>(point_labels.size()) != n_points())
    throw InvalidInputError("point_labels length " + std::to_string(point_labels.size()) +
                            " does not match point count " + std::to_string(n_points()));
}

void AugmentSpec::validate() const {
  if (!(scale_lo <= scale_hi) || !std::isfinite(scale_lo) || !std::isfinite(scale_hi))
    throw ConfigError("augment: scale range invalid");
  if (!(dropout_keep > 0.0 && dropout_keep <= 1.0))
    throw ConfigError("augment: dropout_keep must be in (0, 1]");
  if (!(translate_range >= 0.0) || !std::isfinite(translate_range))
    throw ConfigError("augment: translate_range invalid");
  if (!(jitter_sigma >= 0.0) || !std::isfinite(jitter_sigma))
    throw ConfigError("augment: jitter_sigma invalid");
  if (!(clutter_fraction >= 0.0) || !std::isfinite(clutter_fraction))
    throw ConfigError("augment: clutter_fraction invalid");
}

CloudFormat format_from_string(const std::string& s) {
  if (s == "xyz") return CloudFormat::Xyz;
  if (s == "ply") return CloudFormat::Ply;
  if (s == "off") return CloudFormat::Off;
  throw ConfigError("unknown cloud format '" + s + "' (expected xyz, ply or off)");
}

PointCloud normalize_unit_sphere(const PointCloud& cloud) {
  cloud.validate();
  const long n = cloud.n_points();
  PointCloud out = cloud;
  double cx = 0, cy = 0, cz = 0;
  for (long i = 0; i < n; ++i) {
    cx += cloud.points(i, 0);
    cy += cloud.points(i, 1);
    cz += cloud.points(i, 2);
  }
  cx /= n;
  cy /= n;
  cz /= n;
  double max_norm = 0;
  for (long i = 0; i < n; ++i) {
    out.points(i, 0) = cloud.points(i, 0) - cx;
    out.points(i, 1) = cloud.points(i, 1) - cy;
    out.points(i, 2) = cloud.points(i, 2) - cz;
    const double r2 = out.points(i, 0) * out.points(i, 0) + out.points(i, 1) * out.points(i, 1) +
                      out.points(i, 2) * out.points(i, 2);
    max_norm = std::max(max_norm, r2);
  }
  max_norm = std::sqrt(max_norm);
  if (max_norm < 1e-300) {
    for (long i = 0; i < n; ++i) out.points(i, 0) = out.points(i, 1) = out.points(i, 2) = 0.0;
    return out;
  }
  for (long i = 0; i < n; ++i)
    for (int a = 0; a < 3; ++a) out.points(i, a) /= max_norm;
  return out;
}

Tensor<double> rotation_z(double angle) {
  Tensor<double> r(3, 3);
  const double c = std::cos(angle), s = std::sin(angle);
  r(0, 0) = c;
  r(0, 1) = -s;
  r(1, 0) = s;
  r(1, 1) = c;
  r(2, 2) = 1.0;
  return r;
}

Tensor<double> rotation_from_quaternion(double w, double x, double y, double z) {
  const double n = std::sqrt(w * w + x * x + y * y + z * z);
  w /= n;
  x /= n;
  y /= n;
  z /= n;
  Tensor<double> r(3, 3);
  r(0, 0) = 1 - 2 * (y * y + z * z);
  r(0, 1) = 2 * (x * y - w * z);
  r(0, 2) = 2 * (x * z + w * y);
  r(1, 0) = 2 * (x * y + w * z);
  r(1, 1) = 1 - 2 * (x * x + z * z);
  r(1, 2) = 2 * (y * z - w * x);
  r(2, 0) = 2 * (x * z - w * y);
  r(2, 1) = 2 * (y * z + w * x);
  r(2, 2) = 1 - 2 * (x * x + y * y);
  return r;
}

namespace {

void apply_rotation(PointCloud& c, const Tensor<double>& r) {
  for (long i = 0; i < c.n_points(); ++i) {
    const double x = c.points(i, 0), y = c.points(i, 1), z = c.points(i, 2);
    c.points(i, 0) = r(0, 0) * x + r(0, 1) * y + r(0, 2) * z;
    c.points(i, 1) = r(1, 0) * x + r(1, 1) * y + r(1, 2) * z;
    c.points(i, 2) = r(2, 0) * x + r(2, 1) * y + r(2, 2) * z;
  }
}

}  // namespace

PointCloud augment(const PointCloud& cloud, const AugmentSpec& spec) {
  cloud.validate();
  spec.validate();
  Rng rng(spec.seed);
  PointCloud out = cloud;
  const long c = out.n_channels();

  // 1. rotate
  switch (spec.rotation) {
    case RotationMode::None:
      break;
    case RotationMode::ZAxis:
      apply_rotation(out, rotation_z(rng.uniform(0.0, 6.283185307179586476925286766559)));
      break;
    case RotationMode::FullSO3: {
      const double w = rng.normal(), x = rng.normal(), y = rng.normal(), z = rng.normal();
      apply_rotation(out, rotation_from_quaternion(w, x, y, z));
      break;
    }
  }

  // 2. scale (isotropic)
  const double scale = rng.uniform(spec.scale_lo, spec.scale_hi);
  // 3. translate
  double off[3] = {0, 0, 0};
  if (spec.translate_range > 0)
    for (int a = 0; a < 3; ++a)
      off[a] = rng.uniform(-spec.translate_range, spec.translate_range);
  for (long i = 0; i < out.n_points(); ++i)
    for (int a = 0; a < 3; ++a) out.points(i, a) = out.points(i, a) * scale + off[a];

  // 4. jitter (xyz only)
  if (spec.jitter_sigma > 0)
    for (long i = 0; i < out.n_points(); ++i)
      for (int a = 0; a < 3; ++a) out.points(i, a) += rng.normal(0.0, spec.jitter_sigma);

  // 5. dropout
  if (spec.dropout_keep < 1.0) {
    const long n = out.n_points();
    const long keep = static_cast<long>(std::llround(spec.dropout_keep * double(n)));
    if (keep < 8)
      throw InvalidInputError("augment: dropout would leave " + std::to_string(keep) +
                              " points (< 8)");
    std::vector<long> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    rng.shuffle(idx);
    idx.resize(keep);
    std::sort(idx.begin(), idx.end());
    PointCloud kept;
    kept.cloud_label = out.cloud_label;
    kept.points = Tensor<double>(keep, c);
    for (long r = 0; r < keep; ++r)
      for (long j = 0; j < c; ++j) kept.points(r, j) = out.points(idx[r], j);
    if (!out.point_labels.empty()) {
      kept.point_labels.resize(keep);
      for (long r = 0; r < keep; ++r) kept.point_labels[r] = out.point_labels[idx[r]];
    }
    if (!out.edge_mask.empty()) {
      kept.edge_mask.resize(keep);
      for (long r = 0; r < keep; ++r) kept.edge_mask[r] = out.edge_mask[idx[r]];
    }
    out = std::move(kept);
  }

  // 6. clutter: uniform noise in [-1,1]^3, sentinel part label
  const long n_clutter =
      static_cast<long>(std::llround(spec.clutter_fraction * double(out.n_points())));
  if (n_clutter > 0) {
    const long n0 = out.n_points();
    Tensor<double> merged(n0 + n_clutter, c);
    std::copy(out.points.data.begin(), out.points.data.end(), merged.data.begin());
    for (long r = 0; r < n_clutter; ++r) {
      for (int a = 0; a < 3; ++a) merged(n0 + r, a) = rng.uniform(-1.0, 1.0);
      for (long j = 3; j < c; ++j) merged(n0 + r, j) = 0.0;
    }
    out.points = std::move(merged);
    if (!out.point_labels.empty()) out.point_labels.resize(n0 + n_clutter, kClutterLabel);
    if (!out.edge_mask.empty()) out.edge_mask.resize(n0 + n_clutter, 0);
  }

  // 7. shuffle rows
  {
    const long n = out.n_points();
    std::vector<long> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    rng.shuffle(perm);
    PointCloud shuffled;
    shuffled.cloud_label = out.cloud_label;
    shuffled.points = Tensor<double>(n, c);
    for (long r = 0; r < n; ++r)
      for (long j = 0; j < c; ++j) shuffled.points(r, j) = out.points(perm[r], j);
    if (!out.point_labels.empty()) {
      shuffled.point_labels.resize(n);
      for (long r = 0; r < n; ++r) shuffled.point_labels[r] = out.point_labels[perm[r]];
    }
    if (!out.edge_mask.empty()) {
      shuffled.edge_mask.resize(n);
      for (long r = 0; r < n; ++r) shuffled.edge_mask[r] = out.edge_mask[perm[r]];
    }
    out = std::move(shuffled);
  }

  return out;
}

}  // namespace gda
