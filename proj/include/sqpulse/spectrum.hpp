#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sqpulse/error.hpp"

namespace sqpulse {

/// Gap pattern of the controlled system.
///
/// GapToGround: every nearest gap equal except the first; control m couples
/// levels 1 and m+1. NearestNeighbor: all nearest gaps pairwise distinct;
/// control m couples levels m and m+1.
enum class SystemKind { GapToGround, NearestNeighbor };

enum class Classification { GapToGround, NearestNeighbor, Both, Neither };

inline constexpr double kDefaultGapTolerance = 1e-9;

inline std::string to_string(SystemKind kind) {
  return kind == SystemKind::GapToGround ? "gap_to_ground" : "nearest_neighbor";
}

inline std::string to_string(Classification c) {
  switch (c) {
  case Classification::GapToGround: return "gap_to_ground";
  case Classification::NearestNeighbor: return "nearest_neighbor";
  case Classification::Both: return "both";
  case Classification::Neither: return "neither";
  }
  return "neither";
}

namespace detail {

inline std::vector<double> nearest_gaps(std::span<const double> energies) {
  if (energies.size() < 2)
    throw Error(ErrorCode::InvalidInput, "spectrum needs at least two levels");
  std::vector<double> gaps(energies.size() - 1);
  for (std::size_t i = 0; i + 1 < energies.size(); ++i) {
    gaps[i] = energies[i + 1] - energies[i];
    if (!(gaps[i] > 0.0) || !std::isfinite(gaps[i]))
      throw Error(ErrorCode::NonMonotonicSpectrum,
                  "energies must be strictly increasing (gap " +
                      std::to_string(i + 1) + " is not positive)");
  }
  return gaps;
}

inline bool gap_to_ground_pattern(std::span<const double> gaps, double tol) {
  const double scale = tol * *std::max_element(gaps.begin(), gaps.end());
  if (gaps.size() >= 2 && !(std::abs(gaps[0] - gaps[1]) > scale))
    return false;
  for (std::size_t i = 1; i < gaps.size(); ++i)
    for (std::size_t j = i + 1; j < gaps.size(); ++j)
      if (std::abs(gaps[i] - gaps[j]) > scale)
        return false;
  return true;
}

inline bool nearest_neighbor_pattern(std::span<const double> gaps, double tol) {
  const double scale = tol * *std::max_element(gaps.begin(), gaps.end());
  for (std::size_t i = 0; i < gaps.size(); ++i)
    for (std::size_t j = i + 1; j < gaps.size(); ++j)
      if (!(std::abs(gaps[i] - gaps[j]) > scale))
        return false;
  return true;
}

} // namespace detail

/// Validated, immutable description of the controlled plant.
///
/// Cycle indices `m` are 1-based (1..N-1) throughout the library; level
/// indices returned by `coupled_pair` are 0-based matrix rows.
class SystemSpec {
public:
  const std::vector<double> &energies() const noexcept { return energies_; }
  SystemKind kind() const noexcept { return kind_; }
  double tolerance() const noexcept { return tol_; }
  int levels() const noexcept { return static_cast<int>(energies_.size()); }
  int cycles() const noexcept { return levels() - 1; }

  /// Nearest gaps mu_i = E_{i+1} - E_i, i = 1..N-1 (stored 0-based).
  std::vector<double> gaps() const {
    return detail::nearest_gaps(energies_);
  }

  /// (lower, upper) 0-based levels driven during cycle m.
  std::pair<int, int> coupled_pair(int m) const {
    check_cycle(m);
    return kind_ == SystemKind::GapToGround ? std::pair{0, m}
                                            : std::pair{m - 1, m};
  }

  /// omega_m = E_{m+1} - E_1 (GapToGround) or E_{m+1} - E_m (NearestNeighbor).
  double coupled_gap(int m) const {
    auto [lo, hi] = coupled_pair(m);
    return energies_[hi] - energies_[lo];
  }

  void check_cycle(int m) const {
    if (m < 1 || m > cycles())
      throw Error(ErrorCode::IndexOutOfRange,
                  "cycle index " + std::to_string(m) + " outside 1.." +
                      std::to_string(cycles()));
  }

  /// Same spectrum shifted to zero trace.
  SystemSpec recentered() const;

  friend SystemSpec validate_spectrum(std::vector<double> energies,
                                      SystemKind kind, double tol);

private:
  SystemSpec(std::vector<double> energies, SystemKind kind, double tol)
      : energies_(std::move(energies)), kind_(kind), tol_(tol) {}

  std::vector<double> energies_;
  SystemKind kind_;
  double tol_;
};

/// Checks monotonicity and the kind's gap pattern; energies are kept verbatim.
inline SystemSpec validate_spectrum(std::vector<double> energies,
                                    SystemKind kind,
                                    double tol = kDefaultGapTolerance) {
  if (!(tol >= 0.0))
    throw Error(ErrorCode::InvalidInput, "tolerance must be nonnegative");
  const auto gaps = detail::nearest_gaps(energies);
  const bool ok = kind == SystemKind::GapToGround
                      ? detail::gap_to_ground_pattern(gaps, tol)
                      : detail::nearest_neighbor_pattern(gaps, tol);
  if (!ok)
    throw Error(ErrorCode::GapStructureViolation,
                "spectrum does not have the " + to_string(kind) +
                    " gap pattern");
  return SystemSpec(std::move(energies), kind, tol);
}

inline Classification classify_spectrum(std::span<const double> energies,
                                        double tol = kDefaultGapTolerance) {
  const auto gaps = detail::nearest_gaps(energies);
  const bool g = detail::gap_to_ground_pattern(gaps, tol);
  const bool n = detail::nearest_neighbor_pattern(gaps, tol);
  if (g && n)
    return Classification::Both;
  if (g)
    return Classification::GapToGround;
  if (n)
    return Classification::NearestNeighbor;
  return Classification::Neither;
}

/// True iff `kind` is among the patterns reported by `c`.
inline bool admits(Classification c, SystemKind kind) {
  if (c == Classification::Both)
    return true;
  return kind == SystemKind::GapToGround ? c == Classification::GapToGround
                                         : c == Classification::NearestNeighbor;
}

/// Subtracts the mean energy. Only a global phase changes.
inline std::vector<double> recenter(std::span<const double> energies) {
  const double mean =
      std::accumulate(energies.begin(), energies.end(), 0.0) /
      static_cast<double>(energies.size());
  std::vector<double> out(energies.begin(), energies.end());
  for (auto &e : out)
    e -= mean;
  return out;
}

inline SystemSpec SystemSpec::recentered() const {
  return SystemSpec(recenter(energies_), kind_, tol_);
}

inline double coupled_gap(const SystemSpec &spec, int m) {
  return spec.coupled_gap(m);
}

} // namespace sqpulse
