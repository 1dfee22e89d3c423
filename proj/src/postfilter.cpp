#include "mclpsep/postfilter.hpp"

#include <cmath>

#include "mclpsep/common.hpp"
#include "mclpsep/mclp.hpp"

namespace mclpsep {

void PostfilterParams::validate() const {
  if (!(alpha > 0)) throw ConfigError("postfilter: alpha must be positive");
}

double estimate_variance(const Eigen::VectorXcd& Yhat,
                         const Eigen::VectorXcd& W_row,
                         const Eigen::VectorXcd& a, cpx S) {
  const long N = Yhat.size();
  if (W_row.size() != N || a.size() != N)
    throw ConfigError("estimate_variance: length mismatch");
  if (N < 2)
    throw ConfigError("estimate_variance: needs at least two channels");
  double acc = 0.0;
  for (long n = 0; n < N; ++n)
    acc += std::abs(W_row(n)) * std::norm(Yhat(n) - a(n) * S);
  return acc / double(N - 1);
}

ComplexSpectrogram apply_postfilter(const ComplexSpectrogram& S,
                                    const Eigen::MatrixXd& variances,
                                    const PostfilterParams& params) {
  params.validate();
  if (variances.rows() != S.data.rows() || variances.cols() != S.data.cols())
    throw ConfigError("apply_postfilter: grid shape mismatch");
  if ((variances.array() < 0.0).any())
    throw ConfigError("apply_postfilter: negative variance");

  ComplexSpectrogram out = S;
  for (long s = 0; s < S.data.rows(); ++s)
    for (long b = 0; b < S.data.cols(); ++b)
      out.data(s, b) =
          soft(S.data(s, b), params.alpha * std::sqrt(variances(s, b)));
  return out;
}

Eigen::MatrixXd postfilter_variances(
    const std::vector<ComplexSpectrogram>& mic_inputs, const GssResult& gss,
    int source, const std::vector<Direction>& directions,
    const ArrayGeometry& geom) {
  const int N = int(mic_inputs.size());
  if (N < 2) throw ConfigError("postfilter: needs at least two channels");
  if (source < 0 || source >= int(gss.sources.size()))
    throw ConfigError("postfilter: source index out of range");
  const long S = mic_inputs[0].frames();
  const int bins = mic_inputs[0].bins();
  const StftConfig& cfg = mic_inputs[0].config;

  Eigen::MatrixXd var(S, bins);
  Eigen::VectorXcd y(N);
  for (int bin = 0; bin < bins; ++bin) {
    const Eigen::MatrixXcd& W = gss.demixing[bin];
    Eigen::VectorXcd w_row = W.row(source).transpose();
    if (w_row.lpNorm<1>() < 1e-12) {
      var.col(bin).setZero();  // zero demixing row: pass through unfiltered
      continue;
    }
    Eigen::VectorXcd a =
        manifold(geom, directions[source], cfg.omega(bin)).entries;
    for (long s = 0; s < S; ++s) {
      for (int n = 0; n < N; ++n) y(n) = mic_inputs[n].data(s, bin);
      var(s, bin) =
          estimate_variance(y, w_row, a, gss.sources[source].data(s, bin));
    }
  }
  return var;
}

void UmvuModel::validate() const {
  if (c.size() != u.size() || c.size() < 1)
    throw ConfigError("umvu: model vectors must have equal nonzero length");
  for (long n = 0; n < c.size(); ++n) {
    if (std::abs(std::abs(c(n)) - 1.0) > 1e-9)
      throw ConfigError("umvu: constants must be unit modulus");
    if (u(n) == cpx(0.0, 0.0))
      throw ConfigError("umvu: zero noise scale makes the model degenerate");
  }
}

double UmvuModel::beta() const {
  validate();
  double acc = 0.0;
  for (long n = 0; n < u.size(); ++n) acc += 1.0 / std::norm(u(n));
  return 1.0 / acc;
}

Eigen::VectorXcd umvu_weights(const UmvuModel& model) {
  model.validate();
  const double b = model.beta();
  Eigen::VectorXcd w(model.c.size());
  for (long n = 0; n < w.size(); ++n)
    w(n) = std::conj(model.c(n)) * b / std::norm(model.u(n));
  return w;
}

double umvu_variance_estimate(const UmvuModel& model,
                              const Eigen::VectorXcd& Y) {
  model.validate();
  const long N = Y.size();
  if (N != model.c.size()) throw ConfigError("umvu: observation length mismatch");
  if (N < 2) throw ConfigError("umvu: variance estimate needs N >= 2");
  Eigen::VectorXcd w = umvu_weights(model);
  cpx gamma_hat = (w.array() * Y.array()).sum();
  double acc = 0.0;
  for (long n = 0; n < N; ++n)
    acc += std::abs(w(n)) * std::norm(Y(n) - model.c(n) * gamma_hat);
  return acc / double(N - 1);
}

}  // namespace mclpsep
