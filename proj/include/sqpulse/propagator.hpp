#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Eigenvalues>

#include "sqpulse/operators.hpp"

namespace sqpulse {

inline constexpr double kNormTolerance = 1e-12;

/// Normalized pure state of an N-level system.
class StateVector {
public:
  /// Throws NotNormalized unless |sum |a|^2 - 1| <= tol.
  explicit StateVector(Vector amplitudes, double tol = kNormTolerance)
      : a_(std::move(amplitudes)) {
    const double n2 = a_.squaredNorm();
    if (a_.size() < 1 || !(std::abs(n2 - 1.0) <= tol))
      throw Error(ErrorCode::NotNormalized,
                  "state norm^2 = " + std::to_string(n2) + ", expected 1");
  }

  static StateVector basis(int n, int k) {
    Vector v = Vector::Zero(n);
    v(k) = 1.0;
    return StateVector(std::move(v));
  }

  static StateVector ground(int n) { return basis(n, 0); }

  const Vector &amplitudes() const noexcept { return a_; }
  int size() const noexcept { return static_cast<int>(a_.size()); }
  cplx operator[](int k) const { return a_(k); }

private:
  Vector a_;
};

/// |<a|b>|^2, insensitive to global phase.
inline double fidelity(const Vector &a, const Vector &b) {
  return std::norm(a.dot(b));
}

inline double fidelity(const StateVector &a, const StateVector &b) {
  return fidelity(a.amplitudes(), b.amplitudes());
}

/// One control cycle: square pulse of height d for tau, then free evolution
/// for tau_free.
struct PulseCycle {
  int m = 1;
  double d = 1.0;
  double tau = 0.0;
  double tau_free = 0.0;

  friend bool operator==(const PulseCycle &, const PulseCycle &) = default;
};

class PulseSchedule {
public:
  PulseSchedule(SystemSpec spec, std::vector<PulseCycle> cycles)
      : spec_(std::move(spec)), cycles_(std::move(cycles)) {
    if (static_cast<int>(cycles_.size()) != spec_.cycles())
      throw Error(ErrorCode::InvalidSchedule,
                  "schedule has " + std::to_string(cycles_.size()) +
                      " cycles, system needs " +
                      std::to_string(spec_.cycles()));
    for (std::size_t i = 0; i < cycles_.size(); ++i) {
      const auto &c = cycles_[i];
      if (c.m != static_cast<int>(i) + 1)
        throw Error(ErrorCode::InvalidSchedule,
                    "cycles must be listed in order m = 1..N-1");
      if (!(c.d > 0.0) || !std::isfinite(c.d))
        throw Error(ErrorCode::NonPositiveField,
                    "cycle " + std::to_string(c.m) + " has d <= 0");
      if (!(c.tau >= 0.0) || !(c.tau_free >= 0.0) || !std::isfinite(c.tau) ||
          !std::isfinite(c.tau_free))
        throw Error(ErrorCode::NegativeDuration,
                    "cycle " + std::to_string(c.m) + " has a negative duration");
    }
  }

  const SystemSpec &spec() const noexcept { return spec_; }
  const std::vector<PulseCycle> &cycles() const noexcept { return cycles_; }

  /// t_m = sum_{k<=m} (tau_k + tau'_k), with boundaries()[0] = 0.
  std::vector<double> boundaries() const {
    std::vector<double> t{0.0};
    for (const auto &c : cycles_)
      t.push_back(t.back() + c.tau + c.tau_free);
    return t;
  }

  /// Number of free real durations: 2(N-1).
  int duration_count() const noexcept {
    return 2 * static_cast<int>(cycles_.size());
  }

private:
  SystemSpec spec_;
  std::vector<PulseCycle> cycles_;
};

struct TrajectorySample {
  double t;
  Vector state;
};

using Trajectory = std::vector<TrajectorySample>;

struct SimulationResult {
  StateVector final_state;
  Trajectory trajectory;
};

namespace detail {

inline void check_duration(double t) {
  if (!(t >= 0.0) || !std::isfinite(t))
    throw Error(ErrorCode::NegativeDuration, "duration must be >= 0");
}

} // namespace detail

/// e^{-i H_0 t} = diag(e^{-i E_n t}).
inline Matrix free_propagator(const SystemSpec &spec, double t) {
  detail::check_duration(t);
  const int n = spec.levels();
  Matrix u = Matrix::Zero(n, n);
  for (int k = 0; k < n; ++k)
    u(k, k) = std::polar(1.0, -spec.energies()[k] * t);
  return u;
}

/// Exact propagator of H_0 + d H_m over time t.
///
/// On the driven pair (lo, hi):
///   B = e^{-i Ebar t} [cos(W t) 1 - (i/W) sin(W t) ((gap/2) sz + d sx)]
/// with sz = +1 on the upper level; every other level picks up e^{-i E_n t}.
inline Matrix pulse_propagator(const SystemSpec &spec, int m, double d,
                               double t) {
  detail::check_duration(t);
  const BlockParams bp = block_params(spec, m, d);
  Matrix u = free_propagator(spec, t);
  const auto [lo, hi] = spec.coupled_pair(m);

  const cplx phase = std::polar(1.0, -bp.mean_energy * t);
  const double c = std::cos(bp.rabi * t);
  const double s = std::sin(bp.rabi * t);
  const double z = 0.5 * bp.gap / bp.rabi;
  const double x = bp.field / bp.rabi;
  const cplx i{0.0, 1.0};
  u(lo, lo) = phase * (c + i * s * z);
  u(hi, hi) = phase * (c - i * s * z);
  u(lo, hi) = phase * (-i * s * x);
  u(hi, lo) = u(lo, hi);
  return u;
}

/// e^{-iHt} by Hermitian eigendecomposition. Independent of the closed-form
/// block formula; used as the reference.
inline Matrix matrix_exp_oracle(const Matrix &h, double t) {
  if (!is_hermitian(h, 1e-12 * std::max(1.0, max_abs(h))))
    throw Error(ErrorCode::InvalidInput, "oracle input must be Hermitian");
  Eigen::SelfAdjointEigenSolver<Matrix> es(h);
  if (es.info() != Eigen::Success)
    throw Error(ErrorCode::EigenFailure, "eigendecomposition did not converge");
  Vector phases(h.rows());
  for (Eigen::Index k = 0; k < h.rows(); ++k)
    phases(k) = std::polar(1.0, -es.eigenvalues()(k) * t);
  return es.eigenvectors() * phases.asDiagonal() *
         es.eigenvectors().adjoint();
}

/// ||U^dagger U - I||_max.
inline double unitarity_residual(const Matrix &u) {
  return max_abs(u.adjoint() * u - Matrix::Identity(u.rows(), u.cols()));
}

/// Runs every cycle (pulse, then free evolution) from `initial`.
///
/// The trajectory holds the initial state plus, per cycle, `samples` interior
/// points and the cycle end, uniformly spaced over the cycle. Points that would
/// not advance time (zero-length cycles) are skipped so times stay strictly
/// increasing.
inline SimulationResult simulate(const PulseSchedule &schedule,
                                 const StateVector &initial,
                                 int samples = 0) {
  const SystemSpec &spec = schedule.spec();
  if (initial.size() != spec.levels())
    throw Error(ErrorCode::DimensionMismatch,
                "initial state has " + std::to_string(initial.size()) +
                    " levels, system has " + std::to_string(spec.levels()));
  if (samples < 0)
    throw Error(ErrorCode::InvalidInput, "samples must be >= 0");

  Trajectory traj;
  traj.push_back({0.0, initial.amplitudes()});
  Vector psi = initial.amplitudes();
  double t0 = 0.0;

  for (const auto &c : schedule.cycles()) {
    const double len = c.tau + c.tau_free;
    if (samples > 0 && len > 0.0) {
      for (int j = 1; j <= samples; ++j) {
        const double dt = len * j / (samples + 1);
        Vector s = dt <= c.tau
                       ? Vector(pulse_propagator(spec, c.m, c.d, dt) * psi)
                       : Vector(free_propagator(spec, dt - c.tau) *
                                (pulse_propagator(spec, c.m, c.d, c.tau) * psi));
        if (t0 + dt > traj.back().t)
          traj.push_back({t0 + dt, std::move(s)});
      }
    }
    psi = free_propagator(spec, c.tau_free) *
          (pulse_propagator(spec, c.m, c.d, c.tau) * psi);
    t0 += len;
    if (t0 > traj.back().t)
      traj.push_back({t0, psi});
  }
  return {StateVector(psi), std::move(traj)};
}

/// Ordered product of every segment propagator (pulse and free) in the
/// schedule.
inline Matrix schedule_propagator(const PulseSchedule &schedule) {
  const SystemSpec &spec = schedule.spec();
  Matrix u = Matrix::Identity(spec.levels(), spec.levels());
  for (const auto &c : schedule.cycles())
    u = free_propagator(spec, c.tau_free) *
        pulse_propagator(spec, c.m, c.d, c.tau) * u;
  return u;
}

} // namespace sqpulse
