#include "mclpsep/polymat.hpp"

namespace mclpsep::poly {

int default_max_order(long n_rows, int max_degree) {
  return int(n_rows) * std::max(1, max_degree);
}

PhaseCheckReport assumption1_phase_check(
    const PolyMatrix<GaussianRational>& H_tilde,
    const std::vector<std::vector<int>>& quarter_delays, int d,
    int max_order) {
  const long N = H_tilde.rows, K = H_tilde.cols;
  if (long(quarter_delays.size()) != N)
    throw ConfigError("phase check: one delay row per microphone required");
  for (const auto& row : quarter_delays)
    if (long(row.size()) != K)
      throw ConfigError("phase check: one delay per (microphone, source) required");

  PolyMatrix<GaussianRational> H(N, K);
  for (long i = 0; i < N; ++i)
    for (long k = 0; k < K; ++k)
      H.at(i, k) = H_tilde.at(i, k).scaled(
          GaussianRational::quarter_phase(quarter_delays[i][k]));

  PhaseCheckReport report;
  report.c.resize(N);
  for (long r = 0; r < N; ++r) {
    auto result = solve_equalizer(H, int(r), d, max_order);
    if (!result.found) return report;  // feasible_all_refs stays false
    report.c[r] = result.c;
  }
  report.feasible_all_refs = true;

  report.magnitudes_match = true;
  report.phases_match = true;
  for (long k = 0; k < K; ++k) {
    mpq_class mag0 = report.c[0][k].norm2();
    // undo the reference phase: (-j)^-q = multiplying by (-j)^{-q}
    GaussianRational anchor =
        report.c[0][k] *
        GaussianRational::quarter_phase(-quarter_delays[0][k]);
    for (long r = 1; r < N; ++r) {
      if (!(report.c[r][k].norm2() == mag0)) report.magnitudes_match = false;
      GaussianRational rotated =
          report.c[r][k] *
          GaussianRational::quarter_phase(-quarter_delays[r][k]);
      if (!(rotated == anchor)) report.phases_match = false;
    }
  }
  return report;
}

}  // namespace mclpsep::poly
