#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/LU>

#include "sqpulse/ledger.hpp"

namespace sqpulse {

struct SynthesisOptions {
  double field_ratio = 100.0;  // d_m = field_ratio * coupled_gap(m)
  int winding_bound = 8;       // windings searched per phase constraint
  double zero_threshold = 1e-10;

  void validate() const {
    if (!(field_ratio > 1.0) || !std::isfinite(field_ratio))
      throw Error(ErrorCode::InvalidInput, "field ratio must be > 1");
    if (winding_bound < 0)
      throw Error(ErrorCode::InvalidInput, "winding bound must be >= 0");
    if (!(zero_threshold >= 0.0 && zero_threshold < 1.0))
      throw Error(ErrorCode::InvalidInput, "zero threshold must be in [0, 1)");
  }
};

struct SynthesisReport {
  PulseSchedule schedule;
  RotationAngles angles;
  Vector predicted;  // PhysicalMode ledger at the synthesized parameters
  StateVector simulated;
  double fidelity;
  std::vector<double> residual_phases;
};

/// Worst fidelity synthesize() accepts before reporting FidelityBelowFloor.
inline double fidelity_floor(double field_ratio) {
  const double eps = 0.5 / field_ratio;
  return 1.0 - 10.0 * eps * eps - 1e-6;
}

/// Rotation angles that reproduce `magnitudes` through the PhysicalMode
/// magnitude closed forms.
///
/// Each angle is taken as atan2(mass moved to the new level, mass left
/// behind), which is the arcsin/arccos inversion written so that it stays
/// well conditioned near 0 and pi/2.
inline RotationAngles solve_angles(SystemKind kind,
                                   std::span<const double> magnitudes,
                                   double zero_threshold = 1e-10) {
  const std::size_t n = magnitudes.size();
  if (n < 2)
    throw Error(ErrorCode::DimensionMismatch, "need at least two magnitudes");
  double norm2 = 0.0;
  for (double m : magnitudes) {
    if (!(m >= 0.0) || !std::isfinite(m))
      throw Error(ErrorCode::InfeasibleMagnitudes,
                  "magnitudes must be finite and nonnegative");
    norm2 += m * m;
  }
  if (!(std::abs(norm2 - 1.0) <= 1e-9))
    throw Error(ErrorCode::NotNormalized,
                "sum of squared magnitudes = " + std::to_string(norm2));

  // tail[k] = sum_{j >= k} m_j^2
  std::vector<double> tail(n + 1, 0.0);
  for (std::size_t k = n; k-- > 0;)
    tail[k] = tail[k + 1] + magnitudes[k] * magnitudes[k];

  std::vector<double> theta(n - 1, 0.0);
  if (kind == SystemKind::GapToGround) {
    // Cycle m moves mass from level 1 to level m+1; what stays behind is
    // level 1 plus every level fed later.
    for (std::size_t m = 1; m < n; ++m) {
      const double moved = magnitudes[m];
      const double kept =
          std::sqrt(magnitudes[0] * magnitudes[0] + tail[m + 1]);
      if (std::hypot(moved, kept) < zero_threshold) {
        if (std::sqrt(tail[m]) >= zero_threshold)
          throw Error(ErrorCode::InfeasibleMagnitudes,
                      "mass remains behind a vanished prefix");
        break;
      }
      theta[m - 1] = std::atan2(moved, kept);
    }
  } else {
    // Cycle k leaves m_k behind on level k and pushes the rest up.
    for (std::size_t k = 0; k + 1 < n; ++k) {
      const double kept = magnitudes[k];
      const double moved = std::sqrt(tail[k + 1]);
      if (std::hypot(moved, kept) < zero_threshold) {
        if (std::sqrt(tail[k]) >= zero_threshold)
          throw Error(ErrorCode::InfeasibleMagnitudes,
                      "mass remains behind a vanished prefix");
        break;
      }
      theta[k] = std::atan2(moved, kept);
    }
  }
  for (double &t : theta)
    t = std::clamp(t, 0.0, std::numbers::pi / 2);
  return RotationAngles(std::move(theta));
}

struct PulseWidths {
  std::vector<double> d;
  std::vector<double> tau;
};

/// d_m = ratio * coupled_gap(m), tau_m = theta_m / Omega_m.
inline PulseWidths angles_to_widths(const SystemSpec &spec,
                                    const RotationAngles &theta,
                                    double field_ratio) {
  if (!(field_ratio > 1.0))
    throw Error(ErrorCode::InvalidInput, "field ratio must be > 1");
  if (static_cast<int>(theta.size()) != spec.cycles())
    throw Error(ErrorCode::DimensionMismatch, "one angle per cycle expected");
  PulseWidths w;
  for (int m = 1; m <= spec.cycles(); ++m) {
    const double d = field_ratio * spec.coupled_gap(m);
    w.d.push_back(d);
    w.tau.push_back(theta[m - 1] / block_params(spec, m, d).rabi);
  }
  return w;
}

namespace detail {

inline double wrap_2pi(double x) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double r = std::fmod(x, two_pi);
  if (r < 0.0)
    r += two_pi;
  if (two_pi - r < 1e-9 || r < 1e-9)
    r = 0.0;
  return r;
}

inline double wrap_pi(double x) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double r = std::remainder(x, two_pi);
  return r <= -std::numbers::pi ? r + two_pi : r;
}

/// Calls f(subset) for every size-r subset of {0..n-1}, lexicographically.
template <typename F>
void for_each_subset(int n, int r, F &&f) {
  std::vector<int> idx(r);
  for (int i = 0; i < r; ++i)
    idx[i] = i;
  while (true) {
    f(std::span<const int>(idx));
    int i = r - 1;
    while (i >= 0 && idx[i] == n - r + i)
      --i;
    if (i < 0)
      return;
    ++idx[i];
    for (int j = i + 1; j < r; ++j)
      idx[j] = idx[j - 1] + 1;
  }
}

} // namespace detail

/// Free-evolution times that give the ledger the target's relative phases.
///
/// Every populated level k other than the reference (the first level with
/// nonzero target magnitude) yields one congruence
///   sum_i (B_k,i - B_a,i) tau'_i == rhs_k  (mod 2pi)
/// against its anchor a: the nearest populated level it descends from
/// (k-1, k-2, ... for NearestNeighbor, level 1 for GapToGround), or the
/// reference when none is populated. B are the ledger's free-time weights and
/// rhs_k collects the target phase, the pulse-time terms and the quarter
/// turns. The rows form a spanning tree over the populated levels, so the
/// system is equivalent to measuring every level against the reference, but
/// each row is a single gap times a tail sum of free times and its winding
/// count stays small. Every winding vector in [0..W]^rows (negated for rows
/// with negative weights) is solved exactly; the nonnegative solution with the
/// smallest total free time wins, ties going to the lexicographically first
/// winding vector. Levels with zero target magnitude impose nothing; when that
/// leaves fewer rows than unknowns, the search also runs over which columns
/// carry the solution (basic solutions), the others being zero.
inline std::vector<double> solve_free_times(const AmplitudeLedger &ledger,
                                            const RotationAngles &theta,
                                            std::span<const double> tau,
                                            const Vector &target,
                                            int winding_bound,
                                            double zero_threshold = 1e-10) {
  const int nc = ledger.cycles();
  if (static_cast<int>(theta.size()) != nc ||
      static_cast<int>(tau.size()) != nc || target.size() != nc + 1)
    throw Error(ErrorCode::DimensionMismatch,
                "theta, tau and target sizes do not match the ledger");
  if (winding_bound < 0)
    throw Error(ErrorCode::InvalidInput, "winding bound must be >= 0");

  std::vector<int> active;
  for (int k = 0; k <= nc; ++k)
    if (std::abs(target(k)) >= zero_threshold)
      active.push_back(k);
  if (active.empty())
    throw Error(ErrorCode::NotNormalized, "target has no nonzero amplitude");
  const int ref = active.front();
  const int rows = static_cast<int>(active.size()) - 1;
  std::vector<double> best(nc, 0.0);
  if (rows == 0)
    return best;

  std::vector<bool> populated(nc + 1, false);
  for (int k : active)
    populated[k] = true;
  auto anchor_of = [&](int k) {
    if (ledger.kind == SystemKind::NearestNeighbor) {
      for (int a = k - 1; a >= 0; --a)
        if (populated[a])
          return a;
    } else if (populated[0]) {
      return 0;
    }
    return ref;
  };

  const std::vector<double> zeros(nc, 0.0);
  Eigen::MatrixXd dB(rows, nc);
  Eigen::VectorXd rhs(rows);
  std::vector<int> sign(rows, 1);
  for (int r = 0; r < rows; ++r) {
    const int k = active[r + 1];
    const int a = anchor_of(k);
    const auto &lk = ledger.levels[k];
    const auto &la = ledger.levels[a];
    bool any_neg = false;
    for (int i = 0; i < nc; ++i) {
      dB(r, i) = lk.phase.free_weight[i] - la.phase.free_weight[i];
      any_neg = any_neg || dB(r, i) < 0.0;
    }
    // ledger relative phase at tau' = 0, then -(dB tau') must add the rest
    const double ledger_rel =
        lk.phase.evaluate(tau, zeros) - la.phase.evaluate(tau, zeros);
    const double target_rel = std::arg(target(k)) - std::arg(target(a));
    rhs(r) = detail::wrap_2pi(ledger_rel - target_rel);
    if (any_neg) {
      sign[r] = -1;
      if (rhs(r) > 0.0)
        rhs(r) -= 2.0 * std::numbers::pi;
    }
  }

  double best_sum = std::numeric_limits<double>::infinity();
  bool any_basis = false;
  const double tol = 1e-12;
  std::vector<int> wind(rows, 0);

  detail::for_each_subset(nc, rows, [&](std::span<const int> cols) {
    Eigen::MatrixXd sub(rows, rows);
    for (int r = 0; r < rows; ++r)
      for (int j = 0; j < rows; ++j)
        sub(r, j) = dB(r, cols[j]);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(sub);
    const double scale = sub.cwiseAbs().maxCoeff();
    if (lu.rank() < rows ||
        std::abs(lu.determinant()) <= 1e-12 * std::pow(scale, rows))
      return;
    any_basis = true;
    const Eigen::MatrixXd inv = lu.inverse();
    const Eigen::VectorXd base = inv * rhs;

    Eigen::VectorXd sol(rows);
    std::fill(wind.begin(), wind.end(), 0);
    while (true) {
      sol = base;
      for (int r = 0; r < rows; ++r)
        if (wind[r] != 0)
          sol += inv.col(r) * (2.0 * std::numbers::pi * sign[r] * wind[r]);
      const double scale_t = std::max(1.0, sol.cwiseAbs().maxCoeff());
      if (sol.minCoeff() >= -tol * scale_t) {
        const double total = sol.cwiseMax(0.0).sum();
        if (total < best_sum - 1e-12 * std::max(1.0, total)) {
          best_sum = total;
          std::fill(best.begin(), best.end(), 0.0);
          for (int j = 0; j < rows; ++j)
            best[cols[j]] = std::max(0.0, sol(j));
        }
      }
      int r = rows - 1;
      while (r >= 0 && wind[r] == winding_bound)
        wind[r--] = 0;
      if (r < 0)
        break;
      ++wind[r];
    }
  });

  if (!any_basis)
    throw Error(ErrorCode::SingularPhaseSystem,
                "phase constraint matrix is rank deficient");
  if (!std::isfinite(best_sum))
    throw Error(ErrorCode::WindingBoundExceeded,
                "no nonnegative free times within winding bound " +
                    std::to_string(winding_bound));
  return best;
}

/// Per-level phase error arg(s_k / t_k) relative to the reference level,
/// wrapped to (-pi, pi]; zero for levels with (near) zero target magnitude.
inline std::vector<double> residual_phases(const Vector &target,
                                           const Vector &simulated,
                                           double zero_threshold = 1e-10) {
  std::vector<double> out(target.size(), 0.0);
  int ref = -1;
  for (Eigen::Index k = 0; k < target.size(); ++k) {
    if (std::abs(target(k)) < zero_threshold || std::abs(simulated(k)) == 0.0)
      continue;
    const double err = std::arg(simulated(k) / target(k));
    if (ref < 0) {
      ref = static_cast<int>(k);
      out[k] = 0.0;
      continue;
    }
    out[k] = detail::wrap_pi(err - std::arg(simulated(ref) / target(ref)));
  }
  return out;
}

/// Full pipeline without the quality gate.
inline SynthesisReport synthesize_unchecked(const SystemSpec &spec,
                                            const StateVector &target,
                                            const SynthesisOptions &opts = {}) {
  opts.validate();
  if (target.size() != spec.levels())
    throw Error(ErrorCode::DimensionMismatch,
                "target has " + std::to_string(target.size()) +
                    " amplitudes, system has " + std::to_string(spec.levels()));
  const Vector &a = target.amplitudes();
  std::vector<double> mags(a.size());
  for (Eigen::Index k = 0; k < a.size(); ++k)
    mags[k] = std::abs(a(k));

  RotationAngles theta = solve_angles(spec.kind(), mags, opts.zero_threshold);
  PulseWidths w = angles_to_widths(spec, theta, opts.field_ratio);
  const AmplitudeLedger ledger = forward_ledger(spec, LedgerMode::Physical);
  std::vector<double> tau_free = solve_free_times(
      ledger, theta, w.tau, a, opts.winding_bound, opts.zero_threshold);

  std::vector<PulseCycle> cycles;
  for (int m = 1; m <= spec.cycles(); ++m)
    cycles.push_back({m, w.d[m - 1], w.tau[m - 1], tau_free[m - 1]});
  PulseSchedule schedule(spec, std::move(cycles));

  Vector predicted = evaluate_ledger(ledger, theta.values(), w.tau, tau_free);
  SimulationResult sim = simulate(schedule, StateVector::ground(spec.levels()));
  const double f = std::min(1.0, fidelity(a, sim.final_state.amplitudes()));
  auto resid =
      residual_phases(a, sim.final_state.amplitudes(), opts.zero_threshold);
  return {std::move(schedule), std::move(theta),  std::move(predicted),
          sim.final_state,     f,                 std::move(resid)};
}

/// Target state -> square-pulse schedule, verified by exact simulation.
/// Throws FidelityBelowFloor if the simulated fidelity falls under
/// fidelity_floor(field_ratio).
inline SynthesisReport synthesize(const SystemSpec &spec,
                                  const StateVector &target,
                                  const SynthesisOptions &opts = {}) {
  SynthesisReport r = synthesize_unchecked(spec, target, opts);
  if (r.fidelity < fidelity_floor(opts.field_ratio))
    throw Error(ErrorCode::FidelityBelowFloor,
                "simulated fidelity " + std::to_string(r.fidelity) +
                    " below floor " +
                    std::to_string(fidelity_floor(opts.field_ratio)));
  return r;
}

} // namespace sqpulse
