#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gda/common.hpp"

namespace gda {

enum class ShapeFamily { PlaneWithCrease, Cube, Sphere, CylinderWithCaps, LBracket, ChairLike };
enum class RotationMode { None, ZAxis, FullSO3 };
enum class CloudFormat { Xyz, Ply, Off };

/// Point set with per-point feature rows. The first three channels are xyz
/// coordinates; further channels carry whatever the producer attached
/// (e.g. the "variation" scalar of a reloaded PLY). Immutable by convention:
/// every operation returns a new cloud.
struct PointCloud {
  Tensor<double> points;           // N x C
  int cloud_label = -1;            // class id, -1 when absent
  std::vector<int> point_labels;   // per-point part labels, empty when absent
  std::vector<uint8_t> edge_mask;  // synthetic crease/edge membership, empty when absent

  long n_points() const { return points.rows(); }
  long n_channels() const { return points.cols(); }
  bool has_point_labels() const { return !point_labels.empty(); }

  void validate() const;
};

struct SyntheticSpec {
  ShapeFamily family = ShapeFamily::Sphere;
  long n_points = 512;
  uint64_t seed = 1;
  bool part_labels = false;
};

struct AugmentSpec {
  double scale_lo = 1.0, scale_hi = 1.0;
  double translate_range = 0.0;  // max |offset| per axis
  RotationMode rotation = RotationMode::None;
  double dropout_keep = 1.0;  // fraction of points kept, in (0, 1]
  double jitter_sigma = 0.0;
  double clutter_fraction = 0.0;  // extra uniform-noise points, relative to N
  uint64_t seed = 1;

  void validate() const;
};

/// Part label assigned to clutter points appended by augment().
inline constexpr int kClutterLabel = -1;

struct LoadOptions {
  long off_samples = 1024;  // surface-sample count for OFF meshes
  uint64_t seed = 0;
};

CloudFormat format_from_string(const std::string& s);

PointCloud load_cloud(const std::string& path, CloudFormat format, const LoadOptions& opts = {});

/// Center the xyz centroid at the origin and scale so the farthest point has
/// norm 1. An all-coincident cloud collapses to all-zeros.
PointCloud normalize_unit_sphere(const PointCloud& cloud);

PointCloud generate_synthetic(const SyntheticSpec& spec);

/// Apply augmentations in fixed order:
/// rotate, scale, translate, jitter, dropout, clutter, shuffle.
/// Labels and masks are carried along with their points.
PointCloud augment(const PointCloud& cloud, const AugmentSpec& spec);

/// Ascii PLY writer; `scalars` (length N) adds a "variation" float property.
void export_ply(const PointCloud& cloud, const std::vector<double>* scalars,
                const std::string& path);

Tensor<double> rotation_z(double angle);
Tensor<double> rotation_from_quaternion(double w, double x, double y, double z);

}  // namespace gda
