#include "mclpsep/mclp.hpp"

#include <algorithm>
#include <cmath>

#include "mclpsep/common.hpp"

namespace mclpsep {

void MclpParams::validate() const {
  if (d < 1) throw ConfigError("mclp: d must be >= 1");
  if (L < 1) throw ConfigError("mclp: L must be >= 1");
  if (M < 1) throw ConfigError("mclp: M must be >= 1");
  if (!(alpha > 0)) throw ConfigError("mclp: alpha must be positive");
  if (!(lambda > 0 && lambda < 1)) throw ConfigError("mclp: lambda must be in (0, 1)");
  if (epsilon < 0) throw ConfigError("mclp: epsilon must be >= 0");
  if (max_iters < 1) throw ConfigError("mclp: max_iters must be >= 1");
  if (band_lo_hz < 0 || band_hi_hz < 0 ||
      (band_hi_hz != 0 && band_hi_hz < band_lo_hz))
    throw ConfigError("mclp: invalid processing band");
}

cpx soft(cpx z, double t) {
  double mag = std::abs(z);
  if (mag <= t) return cpx(0.0, 0.0);
  return z * (1.0 - t / mag);
}

namespace {

int effective_taps(long S, const MclpParams& p) {
  if (S > long(p.d) + p.L) return p.L;
  return std::max(1, int((S - p.d) / 2));
}

Eigen::MatrixXcd data_matrix(const std::vector<Eigen::VectorXcd>& bands,
                             int d, int L) {
  const int N = int(bands.size());
  const long S = bands[0].size();
  Eigen::MatrixXcd X = Eigen::MatrixXcd::Zero(S, long(N) * L);
  for (int i = 0; i < N; ++i)
    for (int l = 0; l < L; ++l) {
      long col = long(i) * L + l;
      for (long s = d + l; s < S; ++s) X(s, col) = bands[i](s - d - l);
    }
  return X;
}

double median_abs(const Eigen::VectorXcd& v) {
  std::vector<double> mags(v.size());
  for (long i = 0; i < v.size(); ++i) mags[i] = std::abs(v(i));
  auto mid = mags.begin() + mags.size() / 2;
  std::nth_element(mags.begin(), mid, mags.end());
  return *mid;
}

struct BandContext {
  Eigen::MatrixXcd X;               // pooled-RMS-normalized data matrix
  Eigen::LLT<Eigen::MatrixXcd> llt;  // factor of I + X^H X
  double scale = 1.0;               // pooled RMS divided out of the bands
  int L = 1;
};

// Shared per-bin setup: the data matrix and its Gram factor do not depend
// on the reference channel.
BandContext make_context(const std::vector<Eigen::VectorXcd>& bands,
                         const MclpParams& params, int bin) {
  const long S = bands[0].size();
  BandContext ctx;
  ctx.L = effective_taps(S, params);

  double energy = 0.0;
  for (const auto& b : bands) energy += b.squaredNorm();
  ctx.scale = std::sqrt(energy / (double(S) * bands.size()));
  if (ctx.scale <= 0.0 || !std::isfinite(ctx.scale)) {
    ctx.scale = 0.0;
    return ctx;  // silent band, nothing to factor
  }

  std::vector<Eigen::VectorXcd> scaled(bands.size());
  for (std::size_t i = 0; i < bands.size(); ++i) scaled[i] = bands[i] / ctx.scale;
  ctx.X = data_matrix(scaled, params.d, ctx.L);
  long cols = ctx.X.cols();
  Eigen::MatrixXcd G = Eigen::MatrixXcd::Identity(cols, cols);
  G.noalias() += ctx.X.adjoint() * ctx.X;
  ctx.llt.compute(G);
  if (ctx.llt.info() != Eigen::Success)
    throw NumericalError("mclp: Cholesky failed at bin " + std::to_string(bin));
  return ctx;
}

MclpSolution solve_with_context(const BandContext& ctx,
                                const Eigen::VectorXcd& y_raw, int reference,
                                int bin, const MclpParams& params, int N) {
  const long S = y_raw.size();
  MclpSolution sol;
  sol.reference = reference;
  sol.bin = bin;
  sol.weights = Eigen::MatrixXcd::Zero(N, params.L);
  sol.residual = Eigen::VectorXcd::Zero(S);
  sol.residual_raw = Eigen::VectorXcd::Zero(S);
  if (ctx.scale == 0.0) {
    sol.residual = y_raw;  // silent input: nothing to predict, pass through
    sol.residual_raw = y_raw;
    return sol;
  }

  const Eigen::VectorXcd y = y_raw / ctx.scale;
  const long cols = ctx.X.cols();
  // median of |y|, falling back to the RMS for sparse bands where the
  // median vanishes; the weight update needs a strictly positive constant
  double eps = params.epsilon;
  if (eps <= 0) {
    double med = median_abs(y);
    double rms = y.norm() / std::sqrt(double(S));
    eps = 1e-3 * (med > 0 ? med : rms);
    if (eps <= 0) eps = 1e-12;
  }

  Eigen::VectorXcd z = y;
  Eigen::VectorXcd u = Eigen::VectorXcd::Zero(cols);
  Eigen::VectorXd w = Eigen::VectorXd::Ones(S);
  Eigen::VectorXcd zt(S), ut(cols), xu(S), u_prev(cols);

  auto objective = [&](const Eigen::VectorXcd& uu) {
    // weighted l1 of the feasible residual y - X u
    Eigen::VectorXcd r = y;
    r.noalias() -= ctx.X * uu;
    double p = 0.0;
    for (long i = 0; i < S; ++i) p += w(i) * std::abs(r(i));
    return p;
  };
  if (params.record_objective) sol.objective.push_back(objective(u));

  const double lam = params.lambda;
  int iter = 0;
  while (iter < params.max_iters) {
    u_prev = u;
    int block = std::min(params.M, params.max_iters - iter);
    for (int m = 0; m < block; ++m) {
      for (long i = 0; i < S; ++i)
        zt(i) = 2.0 * soft(z(i), params.alpha * w(i)) - z(i);
      ut.noalias() = ctx.X.adjoint() * (y - zt);
      ut += u;
      ut = ctx.llt.solve(ut);
      xu.noalias() = ctx.X * ut;
      z = (1.0 - lam) * z + lam * (2.0 * (y - xu) - zt);
      u = (1.0 - 2.0 * lam) * u + 2.0 * lam * ut;
    }
    iter += block;
    if (!z.allFinite() || !u.allFinite())
      throw NumericalError("mclp: non-finite iterate at iteration " +
                           std::to_string(iter) + ", bin " +
                           std::to_string(bin));
    for (long i = 0; i < S; ++i) w(i) = eps / (eps + std::abs(z(i)));
    if (params.record_objective) sol.objective.push_back(objective(u));
    double du = (u - u_prev).norm();
    double nu = u.norm();
    if (du <= params.rel_tol * nu || (nu == 0.0 && du == 0.0)) break;
  }
  sol.iterations = iter;

  for (long i = 0; i < S; ++i)
    sol.residual(i) = ctx.scale * soft(z(i), params.alpha * w(i));
  // pre-shrinkage residual of the returned weights: y_r - X u
  xu.noalias() = ctx.X * u;
  sol.residual_raw = ctx.scale * (y - xu);
  for (int i = 0; i < N; ++i)
    for (int l = 0; l < ctx.L; ++l) sol.weights(i, l) = u(long(i) * ctx.L + l);
  return sol;
}

}  // namespace

Eigen::MatrixXcd build_data_matrix(const std::vector<Eigen::VectorXcd>& bands,
                                   const MclpParams& params) {
  params.validate();
  if (bands.empty()) throw ConfigError("mclp: no bands");
  const long S = bands[0].size();
  for (const auto& b : bands)
    if (b.size() != S) throw ConfigError("mclp: bands must have equal length");
  if (S <= params.d)
    throw ConfigError("mclp: band shorter than prediction delay, nothing to predict from");
  return data_matrix(bands, params.d, params.L);
}

MclpSolution solve_band(const std::vector<Eigen::VectorXcd>& bands,
                        int reference, const MclpParams& params) {
  params.validate();
  if (bands.empty()) throw ConfigError("mclp: no bands");
  if (reference < 0 || reference >= int(bands.size()))
    throw ConfigError("mclp: reference index out of range");
  const long S = bands[0].size();
  for (const auto& b : bands)
    if (b.size() != S) throw ConfigError("mclp: bands must have equal length");
  if (S <= params.d)
    throw ConfigError("mclp: band shorter than prediction delay, nothing to predict from");
  BandContext ctx = make_context(bands, params, 0);
  return solve_with_context(ctx, bands[reference], reference, 0, params,
                            int(bands.size()));
}

std::vector<ComplexSpectrogram> dereverb_refs(
    const std::vector<ComplexSpectrogram>& channels, const MclpParams& params,
    const std::vector<int>& references, unsigned workers,
    std::vector<MclpTrace>* traces) {
  params.validate();
  if (channels.empty()) throw ConfigError("mclp: no channels");
  const int N = int(channels.size());
  const long S = channels[0].frames();
  const int bins = channels[0].bins();
  for (const auto& ch : channels)
    if (ch.frames() != S || ch.bins() != bins)
      throw ConfigError("mclp: channels must have identical shape");
  for (int r : references)
    if (r < 0 || r >= N) throw ConfigError("mclp: reference index out of range");
  if (S <= params.d)
    throw ConfigError("mclp: spectrogram shorter than prediction delay");

  int bin_lo = 0, bin_hi = bins - 1;
  if (params.band_lo_hz != 0.0 || params.band_hi_hz != 0.0) {
    const StftConfig& cfg = channels[0].config;
    bin_lo = cfg.bin_of_hz(params.band_lo_hz);
    bin_hi = cfg.bin_of_hz(params.band_hi_hz);
  }

  std::vector<ComplexSpectrogram> out(references.size());
  for (std::size_t j = 0; j < references.size(); ++j)
    out[j] = channels[references[j]];  // pass-through outside the band

  std::vector<MclpTrace> all_traces;
  if (traces) all_traces.resize(std::size_t(bins) * references.size());

  parallel_for(bins, workers, [&](std::size_t bin) {
    if (int(bin) < bin_lo || int(bin) > bin_hi) return;
    std::vector<Eigen::VectorXcd> bands(N);
    for (int i = 0; i < N; ++i) bands[i] = channels[i].data.col(bin);
    BandContext ctx;
    try {
      ctx = make_context(bands, params, int(bin));
    } catch (const NumericalError& e) {
      throw NumericalError(std::string(e.what()) + " (shared factor)");
    }
    for (std::size_t j = 0; j < references.size(); ++j) {
      int r = references[j];
      try {
        MclpSolution sol =
            solve_with_context(ctx, bands[r], r, int(bin), params, N);
        out[j].data.col(bin) = sol.residual;
        if (traces) {
          MclpTrace& t = all_traces[bin * references.size() + j];
          t.bin = int(bin);
          t.reference = r;
          t.iterations = sol.iterations;
          t.objective = std::move(sol.objective);
        }
      } catch (const NumericalError& e) {
        throw NumericalError(std::string(e.what()) + ", reference " +
                             std::to_string(r));
      }
    }
  });
  if (traces) {
    traces->clear();
    for (auto& t : all_traces)
      if (!t.objective.empty()) traces->push_back(std::move(t));
  }
  return out;
}

std::vector<ComplexSpectrogram> dereverb_all_refs(
    const std::vector<ComplexSpectrogram>& channels, const MclpParams& params,
    unsigned workers, std::vector<MclpTrace>* traces) {
  std::vector<int> refs(channels.size());
  for (std::size_t r = 0; r < channels.size(); ++r) refs[r] = int(r);
  return dereverb_refs(channels, params, refs, workers, traces);
}

}  // namespace mclpsep
