#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "sqpulse/propagator.hpp"

namespace sqpulse {

/// PhysicalMode is the unitary, single-frame bookkeeping used by synthesis.
/// PaperMode is the per-cycle-frame recursion in which spectators are damped
/// by cos and the driven pair gets no pulse-time phase. It is kept for
/// comparison and is not normalized.
enum class LedgerMode { Paper, Physical };

inline std::string to_string(LedgerMode mode) {
  return mode == LedgerMode::Paper ? "paper" : "physical";
}

/// Rotation angles theta_m = Omega_m tau_m, each in [0, pi/2].
class RotationAngles {
public:
  RotationAngles() = default;
  explicit RotationAngles(std::vector<double> theta) : theta_(std::move(theta)) {
    for (double t : theta_)
      if (!(t >= 0.0 && t <= std::numbers::pi / 2 + 1e-12))
        throw Error(ErrorCode::InvalidInput,
                    "rotation angle " + std::to_string(t) +
                        " outside [0, pi/2]");
  }

  const std::vector<double> &values() const noexcept { return theta_; }
  std::size_t size() const noexcept { return theta_.size(); }
  double operator[](std::size_t i) const { return theta_[i]; }

private:
  std::vector<double> theta_;
};

/// sin(theta_angle) or cos(theta_angle); `angle` is the 1-based cycle index.
struct TrigFactor {
  enum class Kind { Sin, Cos };
  Kind kind;
  int angle;

  double evaluate(std::span<const double> theta) const {
    const double t = theta[angle - 1];
    return kind == Kind::Sin ? std::sin(t) : std::cos(t);
  }

  std::string str() const {
    return (kind == Kind::Sin ? "sin(" : "cos(") + std::to_string(angle) + ")";
  }

  friend bool operator==(const TrigFactor &, const TrigFactor &) = default;
};

/// Phase of one level, as a linear form in the durations:
///   phase = -(sum_i tau_weight[i] tau_i + sum_i free_weight[i] tau'_i)
///           - quarter_turns * pi/2
/// Weights are energies (level energies, and block mean energies in
/// PhysicalMode), so the amplitude carries exp(i * phase).
struct PhaseLinearForm {
  std::vector<double> tau_weight;
  std::vector<double> free_weight;
  int quarter_turns = 0;

  explicit PhaseLinearForm(std::size_t cycles = 0)
      : tau_weight(cycles, 0.0), free_weight(cycles, 0.0) {}

  double evaluate(std::span<const double> tau,
                  std::span<const double> tau_free) const {
    double acc = 0.0;
    for (std::size_t i = 0; i < tau_weight.size(); ++i)
      acc += tau_weight[i] * tau[i] + free_weight[i] * tau_free[i];
    return -acc - quarter_turns * (std::numbers::pi / 2);
  }
};

struct LevelAmplitude {
  std::vector<TrigFactor> factors;
  PhaseLinearForm phase;

  double magnitude(std::span<const double> theta) const {
    double m = 1.0;
    for (const auto &f : factors)
      m *= f.evaluate(theta);
    return m;
  }
};

struct AmplitudeLedger {
  LedgerMode mode;
  SystemKind kind;
  std::vector<double> energies;
  std::vector<LevelAmplitude> levels;

  int cycles() const { return static_cast<int>(levels.size()) - 1; }
};

/// Propagates the cycle recursions symbolically from the ground state.
///
/// PhysicalMode works in the large-field limit (the in-block sz term is
/// dropped): during pulse m the driven pair rotates as cos/-i sin and both
/// pick up exp(-i Ebar_m tau_m); every other level picks up exp(-i E_k tau_m).
/// The upper level of the pair is always empty before its cycle, so each
/// amplitude stays a single product term.
inline AmplitudeLedger forward_ledger(const SystemSpec &spec, LedgerMode mode) {
  const int n = spec.levels();
  const auto nc = static_cast<std::size_t>(spec.cycles());
  const auto &e = spec.energies();

  AmplitudeLedger led{mode, spec.kind(), e,
                      std::vector<LevelAmplitude>(n, {{}, PhaseLinearForm(nc)})};
  std::vector<bool> populated(n, false);
  populated[0] = true;

  for (int m = 1; m <= spec.cycles(); ++m) {
    const auto [lo, hi] = spec.coupled_pair(m);
    const std::size_t col = m - 1;

    for (int k = 0; k < n; ++k) {
      if (!populated[k] || k == lo)
        continue;
      if (mode == LedgerMode::Physical) {
        led.levels[k].phase.tau_weight[col] += e[k];
      } else {
        // Per-cycle frame: in GapToGround the ground level is the pair's
        // lower level and is handled below.
        led.levels[k].factors.push_back({TrigFactor::Kind::Cos, m});
        led.levels[k].phase.tau_weight[col] += e[k];
      }
    }

    LevelAmplitude born = led.levels[lo];
    born.factors.push_back({TrigFactor::Kind::Sin, m});
    born.phase.quarter_turns += 1;
    led.levels[lo].factors.push_back({TrigFactor::Kind::Cos, m});
    if (mode == LedgerMode::Physical) {
      const double mean = 0.5 * (e[lo] + e[hi]);
      led.levels[lo].phase.tau_weight[col] += mean;
      born.phase.tau_weight[col] += mean;
    }
    led.levels[hi] = std::move(born);
    populated[hi] = true;

    for (int k = 0; k < n; ++k)
      if (populated[k])
        led.levels[k].phase.free_weight[col] += e[k];
  }
  return led;
}

namespace detail {

inline void check_lengths(std::size_t cycles, std::size_t a, std::size_t b,
                          std::size_t c) {
  if (a != cycles || b != cycles || c != cycles)
    throw Error(ErrorCode::DimensionMismatch,
                "expected " + std::to_string(cycles) +
                    " entries for theta, tau and tau_free");
}

} // namespace detail

/// a_k = |factors_k(theta)| * exp(i phase_k(tau, tau')). Not renormalized.
inline Vector evaluate_ledger(const AmplitudeLedger &ledger,
                              std::span<const double> theta,
                              std::span<const double> tau,
                              std::span<const double> tau_free) {
  detail::check_lengths(ledger.cycles(), theta.size(), tau.size(),
                        tau_free.size());
  Vector a(ledger.levels.size());
  for (std::size_t k = 0; k < ledger.levels.size(); ++k) {
    const auto &lv = ledger.levels[k];
    a(k) = std::polar(lv.magnitude(theta), lv.phase.evaluate(tau, tau_free));
  }
  return a;
}

/// Decides sum_k (prod factors_k)^2 == 1 as an identity in theta by merging
/// pairs of terms that differ only in sin^2(theta_i) vs cos^2(theta_i).
inline bool telescopes_to_one(const AmplitudeLedger &ledger) {
  // Term: angle -> exponent of sin^2 (1) / cos^2 (0); absent = not present.
  using Term = std::map<int, int>;
  std::vector<Term> terms;
  for (const auto &lv : ledger.levels) {
    Term t;
    for (const auto &f : lv.factors) {
      if (t.contains(f.angle))
        return false; // repeated angle; outside the decidable shape
      t[f.angle] = f.kind == TrigFactor::Kind::Sin ? 1 : 0;
    }
    terms.push_back(std::move(t));
  }
  bool merged = true;
  while (merged && terms.size() > 1) {
    merged = false;
    for (std::size_t i = 0; i < terms.size() && !merged; ++i) {
      for (std::size_t j = i + 1; j < terms.size() && !merged; ++j) {
        if (terms[i].size() != terms[j].size())
          continue;
        int diff_angle = -1, diffs = 0;
        bool same_keys = true;
        for (const auto &[ang, v] : terms[i]) {
          auto it = terms[j].find(ang);
          if (it == terms[j].end()) {
            same_keys = false;
            break;
          }
          if (it->second != v) {
            ++diffs;
            diff_angle = ang;
          }
        }
        if (same_keys && diffs == 1) {
          terms[i].erase(diff_angle);
          terms.erase(terms.begin() + static_cast<std::ptrdiff_t>(j));
          merged = true;
        }
      }
    }
  }
  return terms.size() == 1 && terms.front().empty();
}

/// Closed-form PaperMode amplitudes after N-1 cycles, evaluated directly.
/// For GapToGround levels k >= 3 the cosine product runs over every cycle
/// except k-1, which is what the cycle recursion produces.
inline Vector paper_closed_form(const SystemSpec &spec,
                                std::span<const double> theta,
                                std::span<const double> tau,
                                std::span<const double> tau_free) {
  const int n = spec.levels();
  const int nc = spec.cycles();
  detail::check_lengths(nc, theta.size(), tau.size(), tau_free.size());
  const auto &e = spec.energies();
  // 1-based accessors for levels and cycles.
  auto E = [&](int k) { return e[k - 1]; };
  auto c = [&](int i) { return std::cos(theta[i - 1]); };
  auto s = [&](int i) { return std::sin(theta[i - 1]); };
  auto T = [&](int i) { return tau[i - 1]; };
  auto Tf = [&](int i) { return tau_free[i - 1]; };
  const cplx mi{0.0, -1.0};
  auto expmi = [](double x) { return std::polar(1.0, -x); };

  Vector a = Vector::Zero(n);
  if (spec.kind() == SystemKind::GapToGround) {
    double mag = 1.0, sum_free = 0.0;
    for (int i = 1; i <= nc; ++i) {
      mag *= c(i);
      sum_free += Tf(i);
    }
    a(0) = mag * expmi(E(1) * sum_free);

    mag = s(1);
    double ph = Tf(1);
    for (int i = 2; i <= nc; ++i) {
      mag *= c(i);
      ph += T(i) + Tf(i);
    }
    a(1) = mi * mag * expmi(E(2) * ph);

    for (int k = 3; k <= n; ++k) {
      mag = s(k - 1);
      for (int i = 1; i <= nc; ++i)
        if (i != k - 1)
          mag *= c(i);
      double ground = 0.0, own = 0.0;
      for (int i = 1; i <= k - 2; ++i)
        ground += Tf(i);
      for (int i = k; i <= nc; ++i)
        own += T(i);
      for (int i = k - 1; i <= nc; ++i)
        own += Tf(i);
      a(k - 1) = mi * mag * expmi(E(1) * ground + E(k) * own);
    }
  } else {
    double mag = 1.0, ph = Tf(1);
    for (int i = 1; i <= nc; ++i)
      mag *= c(i);
    for (int i = 2; i <= nc; ++i)
      ph += T(i) + Tf(i);
    a(0) = mag * expmi(E(1) * ph);

    for (int k = 2; k <= n - 1; ++k) {
      mag = 1.0;
      for (int i = k; i <= nc; ++i)
        mag *= c(i);
      for (int i = 1; i <= k - 1; ++i)
        mag *= s(i);
      double own = Tf(k), chain = 0.0;
      for (int i = k + 1; i <= nc; ++i)
        own += T(i) + Tf(i);
      for (int i = 1; i <= k - 1; ++i)
        chain += E(i + 1) * Tf(i);
      a(k - 1) = std::pow(mi, k - 1) * mag * expmi(E(k) * own + chain);
    }

    mag = 1.0;
    double chain = 0.0;
    for (int i = 1; i <= nc; ++i) {
      mag *= s(i);
      chain += E(i + 1) * Tf(i);
    }
    a(n - 1) = std::pow(mi, nc) * mag * expmi(chain);
  }
  return a;
}

/// Closed-form magnitudes of the PhysicalMode ledger.
inline std::vector<double> physical_magnitudes(SystemKind kind,
                                               std::span<const double> theta) {
  const std::size_t nc = theta.size();
  std::vector<double> mag(nc + 1, 1.0);
  if (kind == SystemKind::GapToGround) {
    double prefix = 1.0; // prod_{i<m} cos(theta_i)
    for (std::size_t m = 0; m < nc; ++m) {
      mag[m + 1] = std::sin(theta[m]) * prefix;
      prefix *= std::cos(theta[m]);
    }
    mag[0] = prefix;
  } else {
    double prefix = 1.0; // prod_{i<k} sin(theta_i)
    for (std::size_t k = 0; k < nc; ++k) {
      mag[k] = std::cos(theta[k]) * prefix;
      prefix *= std::sin(theta[k]);
    }
    mag[nc] = prefix;
  }
  return mag;
}

} // namespace sqpulse
