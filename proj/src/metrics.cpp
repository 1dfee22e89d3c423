#include "mclpsep/metrics.hpp"

#include <cmath>
#include <limits>

#include "mclpsep/common.hpp"

namespace mclpsep {

Eigen::MatrixXd VarianceField::db() const {
  Eigen::MatrixXd out(v_hat.rows(), v_hat.cols());
  for (long r = 0; r < v_hat.rows(); ++r)
    for (long c = 0; c < v_hat.cols(); ++c)
      out(r, c) = defined(r, c)
                      ? 10.0 * std::log10(std::max(v_hat(r, c), 1e-300))
                      : std::numeric_limits<double>::quiet_NaN();
  return out;
}

VarianceField assumption_field(const std::vector<SubbandFilter>& per_mic,
                               const StftConfig& cfg) {
  if (per_mic.size() < 2)
    throw ConfigError("assumption_field: needs at least two microphones");
  const long taps = per_mic[0].taps.rows();
  const long bins = per_mic[0].taps.cols();
  for (const auto& f : per_mic)
    if (f.taps.rows() != taps || f.taps.cols() != bins)
      throw ConfigError("assumption_field: filter shapes differ");

  const double n = double(per_mic.size());
  VarianceField field;
  field.config = cfg;
  field.v_hat.resize(taps, bins);
  field.defined.resize(taps, bins);
  for (long s = 0; s < taps; ++s) {
    for (long b = 0; b < bins; ++b) {
      cpx mean(0.0, 0.0);
      double power = 0.0;
      for (const auto& f : per_mic) {
        mean += f.taps(s, b);
        power += std::norm(f.taps(s, b));
      }
      mean /= n;
      double variance = 0.0;
      for (const auto& f : per_mic) variance += std::norm(f.taps(s, b) - mean);
      variance /= n;  // population variance across microphones
      if (power > 0.0) {
        field.v_hat(s, b) = variance / power;
        field.defined(s, b) = true;
      } else {
        field.v_hat(s, b) = 0.0;
        field.defined(s, b) = false;
      }
    }
  }
  return field;
}

namespace {

// Inner product of x shifted by tau_x against y shifted by tau_y, with
// zero extension outside [0, T).
double shifted_dot(const std::vector<double>& x, long tau_x,
                   const std::vector<double>& y, long tau_y, long T) {
  long lo = std::max(tau_x, tau_y);
  double acc = 0.0;
  for (long n = lo; n < T; ++n) acc += x[n - tau_x] * y[n - tau_y];
  return acc;
}

}  // namespace

namespace {

// Shared projection machinery: a basis of time-shifted references, its Gram
// factor, and the target/interference decomposition of one estimate.
struct SirContext {
  const std::vector<std::vector<double>>& refs;
  long T;
  int F;
  int n_refs;
  Eigen::MatrixXd G_reg;
  Eigen::LDLT<Eigen::MatrixXd> all_solver;
  std::vector<bool> silent;

  SirContext(const std::vector<std::vector<double>>& references, long length,
             int taps)
      : refs(references), T(length), F(taps), n_refs(int(references.size())) {
    const int dim = n_refs * F;
    silent.resize(n_refs);
    for (int k = 0; k < n_refs; ++k) {
      double e = 0.0;
      for (long n = 0; n < T; ++n) e += refs[k][n] * refs[k][n];
      silent[k] = e == 0.0;
    }
    Eigen::MatrixXd G(dim, dim);
    for (int j = 0; j < n_refs; ++j)
      for (int t = 0; t < F; ++t)
        for (int j2 = 0; j2 < n_refs; ++j2)
          for (int t2 = 0; t2 < F; ++t2) {
            int a = j * F + t, b = j2 * F + t2;
            if (b < a) continue;
            double v = shifted_dot(refs[j], t, refs[j2], t2, T);
            G(a, b) = v;
            G(b, a) = v;
          }
    G_reg = G + 1e-10 * G.trace() / dim * Eigen::MatrixXd::Identity(dim, dim);
    all_solver.compute(G_reg);
  }

  double evaluate(const std::vector<double>& estimate, int target) const {
    if (silent[target]) return std::numeric_limits<double>::quiet_NaN();
    const int dim = n_refs * F;
    Eigen::VectorXd rhs(dim);
    for (int j = 0; j < n_refs; ++j)
      for (int t = 0; t < F; ++t) {
        double acc = 0.0;
        for (long n = t; n < T; ++n) acc += refs[j][n - t] * estimate[n];
        rhs(j * F + t) = acc;
      }

    // projection onto the target source's own shift subspace
    Eigen::MatrixXd Gt = G_reg.block(target * F, target * F, F, F);
    Eigen::VectorXd ct = Gt.ldlt().solve(rhs.segment(target * F, F));
    double target_energy = ct.dot(rhs.segment(target * F, F));

    // projection onto the span of every reference; the excess over the
    // target component is interference
    Eigen::VectorXd call = all_solver.solve(rhs);
    double all_energy = call.dot(rhs);
    double interference = std::max(all_energy - target_energy, 0.0);

    if (target_energy <= 0.0) return -99.0;
    if (interference <= target_energy * 1e-10) return 99.0;
    return std::min(99.0, 10.0 * std::log10(target_energy / interference));
  }
};

}  // namespace

SirResult sir(const std::vector<std::vector<double>>& estimates,
              const std::vector<std::vector<double>>& references,
              int distortion_taps) {
  const int K = int(estimates.size());
  if (K == 0 || references.size() != std::size_t(K))
    throw ConfigError("sir: need one reference per estimate");
  if (distortion_taps < 1) throw ConfigError("sir: distortion_taps must be >= 1");
  long T = std::numeric_limits<long>::max();
  for (const auto& e : estimates) T = std::min(T, long(e.size()));
  for (const auto& r : references) T = std::min(T, long(r.size()));
  if (T <= distortion_taps) throw ConfigError("sir: signals too short");

  SirContext ctx(references, T, distortion_taps);
  SirResult out;
  out.db.resize(K);
  out.defined.resize(K);
  for (int k = 0; k < K; ++k) {
    out.db[k] = ctx.evaluate(estimates[k], k);
    out.defined[k] = !std::isnan(out.db[k]);
  }
  return out;
}

double sir_one(const std::vector<double>& estimate,
               const std::vector<std::vector<double>>& references, int target,
               int distortion_taps) {
  if (references.empty()) throw ConfigError("sir: no references");
  if (target < 0 || target >= int(references.size()))
    throw ConfigError("sir: target index out of range");
  if (distortion_taps < 1) throw ConfigError("sir: distortion_taps must be >= 1");
  long T = long(estimate.size());
  for (const auto& r : references) T = std::min(T, long(r.size()));
  if (T <= distortion_taps) throw ConfigError("sir: signals too short");
  SirContext ctx(references, T, distortion_taps);
  return ctx.evaluate(estimate, target);
}

double envelope_autocorr_width(const ComplexSpectrogram& spec, int max_lag) {
  const long S = spec.frames();
  const int bins = spec.bins();
  if (S < 2 * max_lag) throw ConfigError("envelope_autocorr_width: too few frames");

  double weighted = 0.0, total_weight = 0.0;
  std::vector<double> env(S);
  for (int b = 0; b < bins; ++b) {
    double mean = 0.0;
    for (long s = 0; s < S; ++s) {
      env[s] = std::abs(spec.data(s, b));
      mean += env[s];
    }
    mean /= double(S);
    double var = 0.0;
    for (long s = 0; s < S; ++s) {
      env[s] -= mean;
      var += env[s] * env[s];
    }
    if (var <= 0.0) continue;
    double width = 0.0;
    for (int lag = 1; lag <= max_lag; ++lag) {
      double acc = 0.0;
      for (long s = 0; s + lag < S; ++s) acc += env[s] * env[s + lag];
      width += std::max(acc / var, 0.0);
    }
    weighted += var * width;
    total_weight += var;
  }
  return total_weight > 0.0 ? weighted / total_weight : 0.0;
}

}  // namespace mclpsep
