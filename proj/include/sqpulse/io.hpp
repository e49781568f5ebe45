#pragma once

#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>

#include <json.hpp>

#include "sqpulse/controllability.hpp"
#include "sqpulse/synthesis.hpp"

namespace sqpulse::io {

using nlohmann::json;

/// Fixed 17-significant-digit rendering used for all numeric output.
inline std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

namespace detail {

inline void write_canonical(std::ostream &os, const json &j) {
  switch (j.type()) {
  case json::value_t::object: {
    os << '{';
    bool first = true;
    for (auto it = j.begin(); it != j.end(); ++it) { // std::map: sorted keys
      if (!first)
        os << ',';
      first = false;
      os << json(it.key()).dump() << ':';
      write_canonical(os, it.value());
    }
    os << '}';
    break;
  }
  case json::value_t::array: {
    os << '[';
    for (std::size_t i = 0; i < j.size(); ++i) {
      if (i)
        os << ',';
      write_canonical(os, j[i]);
    }
    os << ']';
    break;
  }
  case json::value_t::number_float:
    os << format_double(j.get<double>());
    break;
  default:
    os << j.dump();
  }
}

} // namespace detail

/// Deterministic serialization: sorted keys, 17 significant digits, newline.
inline std::string dump_canonical(const json &j) {
  std::ostringstream os;
  detail::write_canonical(os, j);
  os << '\n';
  return os.str();
}

/// Input that fails validation; `field` names the offending JSON key.
class InputError : public Error {
public:
  InputError(const std::string &field, const std::string &what)
      : Error(ErrorCode::InvalidInput, "field \"" + field + "\": " + what),
        field_(field) {}
  const std::string &field() const noexcept { return field_; }

private:
  std::string field_;
};

inline json read_json_file(const std::string &path) {
  std::ifstream in(path);
  if (!in)
    throw Error(ErrorCode::InvalidInput, "cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error &e) {
    throw Error(ErrorCode::InvalidInput, path + ": " + e.what());
  }
}

inline std::vector<double> energies_from_json(const json &j) {
  if (!j.is_object() || !j.contains("energies") || !j["energies"].is_array())
    throw InputError("energies", "expected an array of numbers");
  std::vector<double> e;
  for (const auto &v : j["energies"]) {
    if (!v.is_number())
      throw InputError("energies", "expected an array of numbers");
    e.push_back(v.get<double>());
  }
  return e;
}

inline SystemKind kind_from_string(const std::string &s) {
  if (s == "gap_to_ground")
    return SystemKind::GapToGround;
  if (s == "nearest_neighbor")
    return SystemKind::NearestNeighbor;
  throw InputError("kind", "expected \"gap_to_ground\" or \"nearest_neighbor\"");
}

inline double tolerance_from_json(const json &j,
                                  std::optional<double> override_tol) {
  if (override_tol)
    return *override_tol;
  if (j.contains("tolerance")) {
    if (!j["tolerance"].is_number())
      throw InputError("tolerance", "expected a number");
    return j["tolerance"].get<double>();
  }
  return kDefaultGapTolerance;
}

/// {"energies": [...], "kind": "...", "tolerance": t}
inline SystemSpec spec_from_json(const json &j,
                                 std::optional<double> override_tol = {}) {
  auto e = energies_from_json(j);
  if (!j.contains("kind") || !j["kind"].is_string())
    throw InputError("kind", "missing");
  return validate_spectrum(std::move(e),
                           kind_from_string(j["kind"].get<std::string>()),
                           tolerance_from_json(j, override_tol));
}

inline json spec_to_json(const SystemSpec &spec) {
  return {{"energies", spec.energies()},
          {"kind", to_string(spec.kind())},
          {"tolerance", spec.tolerance()}};
}

inline json amplitudes_to_json(const Vector &a) {
  json arr = json::array();
  for (Eigen::Index k = 0; k < a.size(); ++k)
    arr.push_back({a(k).real(), a(k).imag()});
  return arr;
}

/// {"amplitudes": [[re, im], ...]}. Norms within 1e-9 of one are rescaled to
/// exactly one; anything further off is rejected.
inline StateVector state_from_json(const json &j) {
  if (!j.is_object() || !j.contains("amplitudes") ||
      !j["amplitudes"].is_array() || j["amplitudes"].empty())
    throw InputError("amplitudes", "expected an array of [re, im] pairs");
  Vector a(j["amplitudes"].size());
  Eigen::Index k = 0;
  for (const auto &p : j["amplitudes"]) {
    if (!p.is_array() || p.size() != 2 || !p[0].is_number() ||
        !p[1].is_number())
      throw InputError("amplitudes", "entry " + std::to_string(k) +
                                         " is not an [re, im] pair");
    a(k++) = cplx(p[0].get<double>(), p[1].get<double>());
  }
  const double n2 = a.squaredNorm();
  if (!(std::abs(n2 - 1.0) <= 1e-9))
    throw InputError("amplitudes",
                     "state is not normalized (norm^2 = " + format_double(n2) +
                         ")");
  if (n2 != 1.0)
    a /= std::sqrt(n2);
  return StateVector(std::move(a));
}

inline json state_to_json(const Vector &a) {
  return {{"amplitudes", amplitudes_to_json(a)}};
}

inline json cycles_to_json(const std::vector<PulseCycle> &cycles) {
  json arr = json::array();
  for (const auto &c : cycles)
    arr.push_back(
        {{"m", c.m}, {"d", c.d}, {"tau", c.tau}, {"tau_free", c.tau_free}});
  return arr;
}

inline json schedule_to_json(const PulseSchedule &s) {
  return {{"cycles", cycles_to_json(s.cycles())}};
}

/// Accepts a bare schedule {"cycles": [...]} or a synthesis report that
/// embeds one under "schedule".
inline PulseSchedule schedule_from_json(const json &j, const SystemSpec &spec) {
  const json *src = &j;
  if (j.is_object() && !j.contains("cycles") && j.contains("schedule"))
    src = &j["schedule"];
  if (!src->is_object() || !src->contains("cycles") ||
      !(*src)["cycles"].is_array())
    throw InputError("cycles", "expected an array of cycle objects");
  std::vector<PulseCycle> cycles;
  for (const auto &c : (*src)["cycles"]) {
    for (const char *key : {"m", "d", "tau", "tau_free"})
      if (!c.is_object() || !c.contains(key) || !c[key].is_number())
        throw InputError(std::string("cycles.") + key, "missing or not a number");
    cycles.push_back({c["m"].get<int>(), c["d"].get<double>(),
                      c["tau"].get<double>(), c["tau_free"].get<double>()});
  }
  return PulseSchedule(spec, std::move(cycles));
}

inline json report_to_json(const SynthesisReport &r) {
  return {{"schedule", schedule_to_json(r.schedule)},
          {"angles", r.angles.values()},
          {"predicted", amplitudes_to_json(r.predicted)},
          {"simulated", amplitudes_to_json(r.simulated.amplitudes())},
          {"fidelity", r.fidelity},
          {"residual_phases", r.residual_phases}};
}

inline json ledger_to_json(const AmplitudeLedger &led) {
  json levels = json::array();
  for (std::size_t k = 0; k < led.levels.size(); ++k) {
    const auto &lv = led.levels[k];
    json factors = json::array();
    for (const auto &f : lv.factors)
      factors.push_back(f.str());
    levels.push_back({{"level", k + 1},
                      {"factors", factors},
                      {"tau_coefficients", lv.phase.tau_weight},
                      {"tau_free_coefficients", lv.phase.free_weight},
                      {"quarter_turns", lv.phase.quarter_turns}});
  }
  json out = {{"mode", to_string(led.mode)},
              {"kind", to_string(led.kind)},
              {"energies", led.energies},
              {"phase_convention",
               "amplitude = prod(factors) * exp(-i*(tau_coefficients.tau + "
               "tau_free_coefficients.tau_free) - i*quarter_turns*pi/2)"},
              {"levels", levels}};
  if (led.mode == LedgerMode::Paper && led.kind == SystemKind::GapToGround)
    out["notes"] = json::array(
        {"level k >= 3 cosine product excludes cycle k-1, as produced by the "
         "cycle recursion"});
  return out;
}

inline json closure_to_json(const LieClosureResult &r) {
  return {{"dimension", r.dimension},
          {"required", r.required},
          {"fully_controllable", r.fully_controllable},
          {"bracket_depth", r.bracket_depth}};
}

/// Header t,re_1,im_1,...; one row per sample, 17 significant digits.
inline std::string trajectory_csv(const Trajectory &traj, int levels) {
  std::ostringstream os;
  os << 't';
  for (int k = 1; k <= levels; ++k)
    os << ",re_" << k << ",im_" << k;
  os << '\n';
  for (const auto &s : traj) {
    os << format_double(s.t);
    for (Eigen::Index k = 0; k < s.state.size(); ++k)
      os << ',' << format_double(s.state(k).real()) << ','
         << format_double(s.state(k).imag());
    os << '\n';
  }
  return os.str();
}

} // namespace sqpulse::io
