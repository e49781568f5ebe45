#pragma once

#include <cmath>
#include <complex>

#include <Eigen/Dense>

#include "sqpulse/error.hpp"
#include "sqpulse/spectrum.hpp"

namespace sqpulse {

using cplx = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

inline double max_abs(const Matrix &m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

inline bool is_hermitian(const Matrix &m, double tol = 1e-14) {
  return m.rows() == m.cols() && max_abs(m - m.adjoint()) <= tol;
}

inline bool is_skew_hermitian(const Matrix &m, double tol = 1e-12) {
  return m.rows() == m.cols() && max_abs(m + m.adjoint()) <= tol;
}

/// H_0 = sum_n E_n |n><n|.
inline Matrix drift_hamiltonian(const SystemSpec &spec) {
  const int n = spec.levels();
  Matrix h = Matrix::Zero(n, n);
  for (int k = 0; k < n; ++k)
    h(k, k) = spec.energies()[k];
  return h;
}

/// Real symmetric coupling |hi><lo| + |lo><hi| for the pair driven in cycle m.
inline Matrix coupling_operator(const SystemSpec &spec, int m) {
  const auto [lo, hi] = spec.coupled_pair(m);
  const int n = spec.levels();
  Matrix h = Matrix::Zero(n, n);
  h(hi, lo) = 1.0;
  h(lo, hi) = 1.0;
  return h;
}

/// Projector onto the two levels coupled in cycle m; equals the square of
/// the coupling operator.
inline Matrix block_projector(const SystemSpec &spec, int m) {
  const auto [lo, hi] = spec.coupled_pair(m);
  const int n = spec.levels();
  Matrix p = Matrix::Zero(n, n);
  p(lo, lo) = 1.0;
  p(hi, hi) = 1.0;
  return p;
}

/// Parameters of the driven two-level block during a pulse of amplitude d.
struct BlockParams {
  double mean_energy; // (E_lo + E_hi) / 2
  double gap;         // E_hi - E_lo
  double rabi;        // sqrt((gap/2)^2 + d^2)
  double field;       // d
};

inline double rabi_frequency(double gap, double field) {
  return std::hypot(0.5 * gap, field);
}

inline BlockParams block_params(const SystemSpec &spec, int m, double d) {
  if (!(d > 0.0) || !std::isfinite(d))
    throw Error(ErrorCode::NonPositiveField, "field amplitude must be > 0");
  const auto [lo, hi] = spec.coupled_pair(m);
  const double elo = spec.energies()[lo];
  const double ehi = spec.energies()[hi];
  const double gap = ehi - elo;
  return {0.5 * (elo + ehi), gap, rabi_frequency(gap, d), d};
}

} // namespace sqpulse
