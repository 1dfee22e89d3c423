#include "mclpsep/gss.hpp"

#include <cmath>

#include "mclpsep/common.hpp"

namespace mclpsep {

namespace {

Eigen::MatrixXcd off_diagonal(const Eigen::MatrixXcd& m) {
  Eigen::MatrixXcd out = m;
  out.diagonal().setZero();
  return out;
}

}  // namespace

void GssState::validate() const {
  const long K = W.rows(), N = W.cols();
  if (A.rows() != N || A.cols() != K)
    throw ConfigError("gss: steering matrix shape mismatch");
  if (R_in.rows() != N || R_in.cols() != N)
    throw ConfigError("gss: input correlation shape mismatch");
  if (gamma < 0) throw ConfigError("gss: gamma must be >= 0");
}

double gss_cost(const GssState& state) {
  state.validate();
  Eigen::MatrixXcd R_S = state.output_correlation();
  Eigen::MatrixXcd geo = state.W * state.A -
                         Eigen::MatrixXcd::Identity(state.W.rows(), state.W.rows());
  return 0.5 * state.gamma * off_diagonal(R_S).squaredNorm() +
         0.5 * geo.squaredNorm();
}

Eigen::MatrixXcd gss_gradient(const GssState& state) {
  state.validate();
  Eigen::MatrixXcd R_S = state.output_correlation();
  Eigen::MatrixXcd geo = state.W * state.A -
                         Eigen::MatrixXcd::Identity(state.W.rows(), state.W.rows());
  // the decorrelation term is quartic in W, so its gradient carries twice
  // the cost weight; the quadratic geometric term carries it once
  return 2.0 * state.gamma * off_diagonal(R_S) * state.W * state.R_in +
         geo * state.A.adjoint();
}

void GssParams::validate() const {
  if (gamma < 0) throw ConfigError("gss: gamma must be >= 0");
  if (max_steps < 1) throw ConfigError("gss: max_steps must be >= 1");
  if (grad_tol <= 0) throw ConfigError("gss: grad_tol must be positive");
  if (step_scale <= 0) throw ConfigError("gss: step_scale must be positive");
}

namespace {

struct BinOutcome {
  Eigen::MatrixXcd W;
  bool underflow = false;
};

BinOutcome descend(GssState state, const GssParams& params) {
  const double r_norm = state.R_in.norm();
  Eigen::MatrixXcd best_W = state.W;
  if (r_norm <= 1e-300) return {best_W, false};  // silent bin: keep W0

  double step = params.step_scale / r_norm;
  const double step_floor = step * 1e-12;
  double best_cost = gss_cost(state);
  int stall = 0;
  for (int it = 0; it < params.max_steps; ++it) {
    Eigen::MatrixXcd g = gss_gradient(state);
    if (g.norm() <= params.grad_tol) break;
    state.W -= step * g;
    double cost = gss_cost(state);
    if (cost < best_cost) {
      best_cost = cost;
      best_W = state.W;
      stall = 0;
    } else if (++stall >= 10) {
      state.W = best_W;  // backtrack and retry smaller steps
      step *= 0.5;
      stall = 0;
      if (step < step_floor) return {best_W, true};
    }
  }
  return {best_W, false};
}

}  // namespace

GssResult gss_solve(const std::vector<ComplexSpectrogram>& inputs,
                    const std::vector<Direction>& directions,
                    const GssParams& params, const ArrayGeometry& geom,
                    unsigned workers) {
  params.validate();
  geom.validate();
  const int N = geom.n_mics();
  const int K = int(directions.size());
  if (inputs.size() != std::size_t(N))
    throw ConfigError("gss: input count must match geometry");
  if (K < 1 || K >= N) throw ConfigError("gss: need 1 <= K < N");
  for (int a = 0; a < K; ++a)
    for (int b = a + 1; b < K; ++b)
      if (directions[a].theta == directions[b].theta)
        throw ConfigError("gss: directions must be distinct");
  const long S = inputs[0].frames();
  const int bins = inputs[0].bins();
  for (const auto& ch : inputs)
    if (ch.frames() != S || ch.bins() != bins)
      throw ConfigError("gss: inputs must have identical shape");

  const StftConfig& cfg = inputs[0].config;
  GssResult result;
  result.demixing.resize(bins);
  result.steering.resize(bins);
  result.sources.resize(K);
  for (int k = 0; k < K; ++k) {
    result.sources[k].config = cfg;
    result.sources[k].signal_length = inputs[0].signal_length;
    result.sources[k].data.resize(S, bins);
  }

  std::vector<char> underflow(bins, 0);
  parallel_for(bins, workers, [&](std::size_t bin) {
    const double omega = cfg.omega(int(bin));
    Eigen::MatrixXcd A(N, K);
    for (int k = 0; k < K; ++k)
      A.col(k) = manifold(geom, directions[k], omega).entries;

    Eigen::MatrixXcd Y(N, S);
    for (int i = 0; i < N; ++i) Y.row(i) = inputs[i].data.col(bin).transpose();

    GssState state;
    state.gamma = params.gamma;
    state.A = A;
    state.R_in = (Y * Y.adjoint()) / double(S);
    // normalizing the correlation makes the descent scale-invariant: a
    // global input gain changes neither the path nor the demixing result
    double r_norm = state.R_in.norm();
    if (r_norm > 1e-300) state.R_in /= r_norm;
    state.W = A.adjoint() / double(N);  // delay-and-sum initializer

    BinOutcome outcome = descend(state, params);
    underflow[bin] = outcome.underflow;
    result.demixing[bin] = outcome.W;
    result.steering[bin] = A;
    Eigen::MatrixXcd Sout = outcome.W * Y;
    for (int k = 0; k < K; ++k)
      result.sources[k].data.col(bin) = Sout.row(k).transpose();
  });
  for (char u : underflow) result.step_underflow_warning |= (u != 0);
  return result;
}

}  // namespace mclpsep
