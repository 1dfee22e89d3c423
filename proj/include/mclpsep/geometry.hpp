#pragma once

#include <Eigen/Dense>
#include <vector>

#include "mclpsep/common.hpp"

namespace mclpsep {

// Azimuth in radians, normalized to [0, 2*pi). theta = 0 points along the
// +x axis (the direction of microphone 1 for circular presets).
struct Direction {
  double theta = 0.0;
  Direction() = default;
  explicit Direction(double t);
  Eigen::Vector3d unit() const {
    return {std::cos(theta), std::sin(theta), 0.0};
  }
};

struct ArrayGeometry {
  std::vector<Eigen::Vector3d> positions;  // meters, centroid at the origin
  double speed_of_sound = 343.0;           // m/s
  double sample_rate = 16000.0;            // Hz

  int n_mics() const { return int(positions.size()); }
  void validate() const;  // throws ConfigError
};

struct ManifoldVector {
  Eigen::VectorXcd entries;  // one unit-modulus value per microphone
  double omega = 0.0;        // radians/sample
};

// Microphones uniformly on a circle in the xy plane, counterclockwise,
// microphone 1 at (radius, 0). The centroid is re-centered exactly.
ArrayGeometry circular_array(int n_mics, double radius,
                             double speed_of_sound = 343.0,
                             double sample_rate = 16000.0);

// Signed fractional delay in samples for a far-field source: negative
// values mean the wavefront reaches the microphone before the array center.
double delay_samples(const ArrayGeometry& geom, int mic, Direction dir);

// Entry i is exp(-j * tau_i * omega) with tau_i from delay_samples.
ManifoldVector manifold(const ArrayGeometry& geom, Direction dir,
                        double omega);

}  // namespace mclpsep
