#include "mclpsep/geometry.hpp"

#include <cmath>

namespace mclpsep {

Direction::Direction(double t) {
  if (!std::isfinite(t)) throw ConfigError("direction: non-finite angle");
  theta = std::fmod(t, 2.0 * kPi);
  if (theta < 0) theta += 2.0 * kPi;
}

void ArrayGeometry::validate() const {
  if (n_mics() < 2) throw ConfigError("geometry: need at least 2 microphones");
  if (speed_of_sound <= 0) throw ConfigError("geometry: speed_of_sound must be positive");
  if (sample_rate <= 0) throw ConfigError("geometry: sample_rate must be positive");
  Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
  for (const auto& p : positions) {
    if (!p.allFinite()) throw ConfigError("geometry: non-finite position");
    centroid += p;
  }
  centroid /= double(n_mics());
  if (centroid.norm() > 1e-9)
    throw ConfigError("geometry: microphone centroid must be at the origin");
}

ArrayGeometry circular_array(int n_mics, double radius, double speed_of_sound,
                             double sample_rate) {
  if (n_mics < 2) throw ConfigError("circular_array: need at least 2 microphones");
  if (radius <= 0) throw ConfigError("circular_array: radius must be positive");
  ArrayGeometry g;
  g.speed_of_sound = speed_of_sound;
  g.sample_rate = sample_rate;
  g.positions.resize(n_mics);
  for (int i = 0; i < n_mics; ++i) {
    double phi = 2.0 * kPi * i / n_mics;
    g.positions[i] = {radius * std::cos(phi), radius * std::sin(phi), 0.0};
  }
  // kill the floating-point residue so the centroid invariant holds exactly
  Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
  for (const auto& p : g.positions) centroid += p;
  centroid /= double(n_mics);
  for (auto& p : g.positions) p -= centroid;
  g.validate();
  return g;
}

double delay_samples(const ArrayGeometry& geom, int mic, Direction dir) {
  if (mic < 0 || mic >= geom.n_mics())
    throw ConfigError("delay_samples: microphone index out of range");
  double projection = geom.positions[mic].dot(dir.unit());
  return -projection / geom.speed_of_sound * geom.sample_rate;
}

ManifoldVector manifold(const ArrayGeometry& geom, Direction dir,
                        double omega) {
  ManifoldVector m;
  m.omega = omega;
  m.entries.resize(geom.n_mics());
  for (int i = 0; i < geom.n_mics(); ++i) {
    double tau = delay_samples(geom, i, dir);
    m.entries(i) = std::polar(1.0, -tau * omega);
  }
  return m;
}

}  // namespace mclpsep
