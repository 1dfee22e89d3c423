#pragma once

// Exact-arithmetic polynomial-matrix machinery used to certify the
// equalization identities behind the prediction filter form. Polynomials
// are in z^-1 with coefficients in an exact field: plain rationals or
// Gaussian rationals (needed when manifold phases enter the channels).
// No floating point anywhere in this module.

#include <gmpxx.h>

#include <optional>
#include <vector>

#include "mclpsep/common.hpp"

namespace mclpsep::poly {

using Rational = mpq_class;

struct GaussianRational {
  mpq_class re, im;

  GaussianRational() : re(0), im(0) {}
  GaussianRational(int v) : re(v), im(0) {}  // NOLINT: implicit by design
  GaussianRational(mpq_class r, mpq_class i) : re(std::move(r)), im(std::move(i)) {}

  bool operator==(const GaussianRational& o) const {
    return re == o.re && im == o.im;
  }
  GaussianRational operator+(const GaussianRational& o) const {
    return {re + o.re, im + o.im};
  }
  GaussianRational operator-(const GaussianRational& o) const {
    return {re - o.re, im - o.im};
  }
  GaussianRational operator-() const { return {-re, -im}; }
  GaussianRational operator*(const GaussianRational& o) const {
    return {re * o.re - im * o.im, re * o.im + im * o.re};
  }
  GaussianRational operator/(const GaussianRational& o) const {
    mpq_class n = o.re * o.re + o.im * o.im;
    if (n == 0) throw NumericalError("gaussian rational: division by zero");
    return {(re * o.re + im * o.im) / n, (im * o.re - re * o.im) / n};
  }
  GaussianRational conj() const { return {re, -im}; }
  mpq_class norm2() const { return re * re + im * im; }

  // (-j)^q, the exact unit for a quarter-turn phase delay
  static GaussianRational quarter_phase(long q) {
    switch (((q % 4) + 4) % 4) {
      case 0: return {1, 0};
      case 1: return {0, -1};
      case 2: return {-1, 0};
      default: return {0, 1};
    }
  }
};

template <class F>
struct Poly {
  std::vector<F> c;  // c[t] multiplies z^-t

  Poly() = default;
  explicit Poly(std::vector<F> coeffs) : c(std::move(coeffs)) { trim(); }
  static Poly constant(F v) {
    Poly p;
    if (!(v == F(0))) p.c.push_back(std::move(v));
    return p;
  }
  static Poly one() { return constant(F(1)); }

  void trim() {
    while (!c.empty() && c.back() == F(0)) c.pop_back();
  }
  bool is_zero() const { return c.empty(); }
  bool is_constant() const { return c.size() <= 1; }
  int degree() const { return int(c.size()) - 1; }  // -1 for the zero poly
  F coeff(long t) const {
    return (t >= 0 && t < long(c.size())) ? c[t] : F(0);
  }
  // h(0), the value at z = infinity
  F constant_term() const { return coeff(0); }
  F leading() const { return c.empty() ? F(0) : c.back(); }

  bool operator==(const Poly& o) const { return c == o.c; }

  Poly operator+(const Poly& o) const {
    Poly out;
    out.c.resize(std::max(c.size(), o.c.size()), F(0));
    for (std::size_t i = 0; i < c.size(); ++i) out.c[i] = c[i];
    for (std::size_t i = 0; i < o.c.size(); ++i) out.c[i] = out.c[i] + o.c[i];
    out.trim();
    return out;
  }
  Poly operator-(const Poly& o) const {
    Poly out;
    out.c.resize(std::max(c.size(), o.c.size()), F(0));
    for (std::size_t i = 0; i < c.size(); ++i) out.c[i] = c[i];
    for (std::size_t i = 0; i < o.c.size(); ++i) out.c[i] = out.c[i] - o.c[i];
    out.trim();
    return out;
  }
  Poly operator*(const Poly& o) const {
    if (is_zero() || o.is_zero()) return {};
    Poly out;
    out.c.assign(c.size() + o.c.size() - 1, F(0));
    for (std::size_t i = 0; i < c.size(); ++i)
      for (std::size_t j = 0; j < o.c.size(); ++j)
        out.c[i + j] = out.c[i + j] + c[i] * o.c[j];
    out.trim();
    return out;
  }
  Poly scaled(const F& v) const {
    Poly out = *this;
    for (auto& x : out.c) x = x * v;
    out.trim();
    return out;
  }
  // multiply by z^-d
  Poly delayed(int d) const {
    if (is_zero()) return {};
    Poly out;
    out.c.assign(c.size() + d, F(0));
    for (std::size_t i = 0; i < c.size(); ++i) out.c[i + d] = c[i];
    return out;
  }
};

template <class F>
Poly<F> monic(Poly<F> p) {
  if (p.is_zero()) return p;
  F lead = p.leading();
  for (auto& x : p.c) x = x / lead;
  return p;
}

template <class F>
std::pair<Poly<F>, Poly<F>> poly_divmod(const Poly<F>& a, const Poly<F>& b) {
  if (b.is_zero()) throw NumericalError("poly: division by the zero polynomial");
  Poly<F> q, r = a;
  if (a.degree() >= b.degree())
    q.c.assign(a.degree() - b.degree() + 1, F(0));
  while (!r.is_zero() && r.degree() >= b.degree()) {
    long shift = r.degree() - b.degree();
    F factor = r.leading() / b.leading();
    q.c[shift] = q.c[shift] + factor;
    for (long i = 0; i <= b.degree(); ++i)
      r.c[i + shift] = r.c[i + shift] - factor * b.c[i];
    r.trim();
  }
  q.trim();
  return {q, r};
}

// Exact Euclidean gcd, normalized monic. Rejects the (0, 0) pair.
template <class F>
Poly<F> poly_gcd(Poly<F> a, Poly<F> b) {
  if (a.is_zero() && b.is_zero())
    throw ConfigError("poly_gcd: both inputs are zero");
  while (!b.is_zero()) {
    Poly<F> r = poly_divmod(a, b).second;
    a = std::move(b);
    b = monic(std::move(r));  // normalization tames coefficient growth
  }
  return monic(std::move(a));
}

template <class F>
struct PolyMatrix {
  long rows = 0, cols = 0;
  std::vector<Poly<F>> entries;  // row-major

  PolyMatrix() = default;
  PolyMatrix(long r, long c) : rows(r), cols(c), entries(r * c) {}
  Poly<F>& at(long r, long c) { return entries[r * cols + c]; }
  const Poly<F>& at(long r, long c) const { return entries[r * cols + c]; }

  int max_degree() const {
    int d = 0;
    for (const auto& p : entries) d = std::max(d, p.degree());
    return d;
  }
  PolyMatrix without_row(long r) const {
    PolyMatrix out(rows - 1, cols);
    for (long i = 0, o = 0; i < rows; ++i) {
      if (i == r) continue;
      for (long c = 0; c < cols; ++c) out.at(o, c) = at(i, c);
      ++o;
    }
    return out;
  }
};

// Desk-scale guard: the minor count and exact solves are combinatorial.
template <class F>
void check_desk_scale(const PolyMatrix<F>& H) {
  if (H.rows > 6 || H.cols > 3)
    throw ConfigError("poly: matrix exceeds the supported desk scale (N <= 6, K <= 3)");
  if (H.max_degree() > 5)
    throw ConfigError("poly: channel degree exceeds the supported desk scale (<= 5)");
}

template <class F>
Poly<F> determinant(const PolyMatrix<F>& m) {
  if (m.rows != m.cols) throw ConfigError("poly determinant: square matrix required");
  if (m.rows == 1) return m.at(0, 0);
  if (m.rows == 2)
    return m.at(0, 0) * m.at(1, 1) - m.at(0, 1) * m.at(1, 0);
  Poly<F> det;
  for (long r = 0; r < m.rows; ++r) {
    PolyMatrix<F> sub(m.rows - 1, m.cols - 1);
    for (long i = 0, o = 0; i < m.rows; ++i) {
      if (i == r) continue;
      for (long c = 1; c < m.cols; ++c) sub.at(o, c - 1) = m.at(i, c);
      ++o;
    }
    Poly<F> term = m.at(r, 0) * determinant(sub);
    det = (r % 2 == 0) ? det + term : det - term;
  }
  return det;
}

// Monic gcd of all K x K minors (row subsets against the full column set).
// Returns the zero polynomial when every minor vanishes.
template <class F>
Poly<F> k_minors_gcd(const PolyMatrix<F>& H, int K) {
  check_desk_scale(H);
  if (K < 1 || K != H.cols)
    throw ConfigError("k_minors_gcd: K must equal the column count");
  if (H.rows < K) throw ConfigError("k_minors_gcd: fewer rows than K");

  std::vector<long> pick(K);
  for (int i = 0; i < K; ++i) pick[i] = i;
  Poly<F> gcd;
  bool have = false;
  for (;;) {
    PolyMatrix<F> sub(K, K);
    for (int i = 0; i < K; ++i)
      for (int c = 0; c < K; ++c) sub.at(i, c) = H.at(pick[i], c);
    Poly<F> minor = determinant(sub);
    if (!minor.is_zero()) {
      gcd = have ? poly_gcd(gcd, minor) : monic(minor);
      have = true;
    }
    // next K-combination of rows
    int i = K - 1;
    while (i >= 0 && pick[i] == H.rows - K + i) --i;
    if (i < 0) break;
    ++pick[i];
    for (int j = i + 1; j < K; ++j) pick[j] = pick[j - 1] + 1;
  }
  return gcd;  // zero when all minors vanish
}

// Exact reduced row echelon solve of A x = b; returns the particular
// solution with free variables at zero, or nothing when inconsistent.
template <class F>
std::optional<std::vector<F>> solve_linear_system(std::vector<std::vector<F>> A,
                                                  std::vector<F> b) {
  const long m = long(A.size());
  const long n = m > 0 ? long(A[0].size()) : 0;
  std::vector<long> pivot_col(m, -1);
  long rank = 0;
  for (long col = 0; col < n && rank < m; ++col) {
    long pivot = -1;
    for (long r = rank; r < m; ++r)
      if (!(A[r][col] == F(0))) { pivot = r; break; }
    if (pivot < 0) continue;
    std::swap(A[rank], A[pivot]);
    std::swap(b[rank], b[pivot]);
    F inv_lead = F(1) / A[rank][col];
    for (long c = col; c < n; ++c) A[rank][c] = A[rank][c] * inv_lead;
    b[rank] = b[rank] * inv_lead;
    for (long r = 0; r < m; ++r) {
      if (r == rank || A[r][col] == F(0)) continue;
      F factor = A[r][col];
      for (long c = col; c < n; ++c) A[r][c] = A[r][c] - factor * A[rank][c];
      b[r] = b[r] - factor * b[rank];
    }
    pivot_col[rank] = col;
    ++rank;
  }
  for (long r = rank; r < m; ++r)
    if (!(b[r] == F(0))) return std::nullopt;  // 0 = nonzero: inconsistent

  std::vector<F> x(n, F(0));
  for (long r = 0; r < rank; ++r) x[pivot_col[r]] = b[r];
  return x;
}

// Constrained prediction-filter set: G_r = 1 - z^-d U_r and
// G_i = -z^-d U_i for i != r, with causal U's.
template <class F>
struct MclpFilterSet {
  std::vector<Poly<F>> U;
  int reference = 0;
  int delay = 1;

  std::vector<Poly<F>> filters() const {
    std::vector<Poly<F>> G(U.size());
    for (std::size_t i = 0; i < U.size(); ++i) {
      G[i] = Poly<F>{} - U[i].delayed(delay);
      if (int(i) == reference) G[i] = G[i] + Poly<F>::one();
    }
    return G;
  }
};

template <class F>
struct EqualizerResult {
  bool found = false;
  MclpFilterSet<F> filters;
  std::vector<F> c;  // the equalized constants, H(r, k) at infinity
  int max_order = 0;
};

template <class F>
std::optional<std::vector<F>> verify_constant_identity(
    const MclpFilterSet<F>& G, const PolyMatrix<F>& H);

// Searches for filters of the constrained form with orders up to max_order
// such that [G_1 .. G_N] H is a constant row vector. An infeasible result
// at this order is not a proof of nonexistence.
template <class F>
EqualizerResult<F> solve_equalizer(const PolyMatrix<F>& H, int reference,
                                   int d, int max_order) {
  check_desk_scale(H);
  if (reference < 0 || reference >= H.rows)
    throw ConfigError("solve_equalizer: reference out of range");
  if (d < 1) throw ConfigError("solve_equalizer: d must be >= 1");
  if (max_order < 0) throw ConfigError("solve_equalizer: max_order must be >= 0");

  const long N = H.rows, K = H.cols;
  const int Q = max_order;
  const long unknowns = N * (Q + 1);
  const long p_max = d + Q + H.max_degree();

  std::vector<std::vector<F>> A;
  std::vector<F> b;
  for (long k = 0; k < K; ++k) {
    for (long p = 1; p <= p_max; ++p) {
      std::vector<F> row(unknowns, F(0));
      for (long i = 0; i < N; ++i)
        for (long q = 0; q <= Q; ++q)
          row[i * (Q + 1) + q] = H.at(i, k).coeff(p - d - q);
      A.push_back(std::move(row));
      b.push_back(H.at(reference, k).coeff(p));
    }
  }
  auto solution = solve_linear_system(std::move(A), std::move(b));
  EqualizerResult<F> result;
  result.max_order = max_order;
  if (!solution) return result;

  result.found = true;
  result.filters.reference = reference;
  result.filters.delay = d;
  result.filters.U.resize(N);
  for (long i = 0; i < N; ++i) {
    std::vector<F> coeffs(Q + 1);
    for (long q = 0; q <= Q; ++q) coeffs[q] = (*solution)[i * (Q + 1) + q];
    result.filters.U[i] = Poly<F>(std::move(coeffs));
  }
  for (long k = 0; k < K; ++k)
    result.c.push_back(H.at(reference, k).constant_term());

  auto check = verify_constant_identity(result.filters, H);
  if (!check || !(*check == result.c))
    throw NumericalError("solve_equalizer: exact solution failed verification");
  return result;
}

// Exact product-sum check: succeeds iff every entry of G^T H has order zero,
// returning the constants. For the constrained form the constants then
// necessarily equal H(r, k) at infinity, which is asserted.
template <class F>
std::optional<std::vector<F>> verify_constant_identity(
    const MclpFilterSet<F>& G, const PolyMatrix<F>& H) {
  if (long(G.U.size()) != H.rows)
    throw ConfigError("verify_constant_identity: filter count mismatch");
  std::vector<Poly<F>> filters = G.filters();
  std::vector<F> c;
  for (long k = 0; k < H.cols; ++k) {
    Poly<F> sum;
    for (long i = 0; i < H.rows; ++i) sum = sum + filters[i] * H.at(i, k);
    if (!sum.is_constant()) return std::nullopt;
    c.push_back(sum.constant_term());
    if (!(c.back() == H.at(G.reference, k).constant_term()))
      throw NumericalError(
          "verify_constant_identity: constant differs from the reference "
          "channel value at infinity");
  }
  return c;
}

template <class F>
struct MintResult {
  bool found = false;
  PolyMatrix<F> V;  // K x N with V H = I when found
};

// Unconstrained-form equalization: searches for a K x N polynomial matrix
// V with V H = I, orders up to max_order per entry.
template <class F>
MintResult<F> solve_mint(const PolyMatrix<F>& H, int max_order) {
  check_desk_scale(H);
  const long N = H.rows, K = H.cols;
  const int Q = max_order;
  const long unknowns = N * (Q + 1);
  const long p_max = Q + H.max_degree();

  MintResult<F> result;
  result.V = PolyMatrix<F>(K, N);
  // rows of V are independent problems
  for (long k_out = 0; k_out < K; ++k_out) {
    std::vector<std::vector<F>> A;
    std::vector<F> b;
    for (long k = 0; k < K; ++k) {
      for (long p = 0; p <= p_max; ++p) {
        std::vector<F> row(unknowns, F(0));
        for (long i = 0; i < N; ++i)
          for (long q = 0; q <= Q; ++q)
            row[i * (Q + 1) + q] = H.at(i, k).coeff(p - q);
        A.push_back(std::move(row));
        b.push_back(k == k_out && p == 0 ? F(1) : F(0));
      }
    }
    auto solution = solve_linear_system(std::move(A), std::move(b));
    if (!solution) return result;  // found stays false
    for (long i = 0; i < N; ++i) {
      std::vector<F> coeffs(Q + 1);
      for (long q = 0; q <= Q; ++q) coeffs[q] = (*solution)[i * (Q + 1) + q];
      result.V.at(k_out, i) = Poly<F>(std::move(coeffs));
    }
  }
  result.found = true;
  return result;
}

int default_max_order(long n_rows, int max_degree);

struct PhaseCheckReport {
  bool feasible_all_refs = false;
  bool magnitudes_match = false;  // |c_k| equal across references
  bool phases_match = false;      // c_k rotated back by the delay equals a_k
  // c[r][k], the equalized constants per reference
  std::vector<std::vector<GaussianRational>> c;
};

// Applies quarter-turn manifold phases to channels whose zero-lag
// coefficients agree across microphones, solves the equalizer for every
// reference, and checks that the constants carry exactly the reference
// microphone's phase and a reference-independent magnitude.
PhaseCheckReport assumption1_phase_check(
    const PolyMatrix<GaussianRational>& H_tilde,
    const std::vector<std::vector<int>>& quarter_delays, int d, int max_order);

}  // namespace mclpsep::poly
