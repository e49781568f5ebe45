// Command-line front end: synth, simulate, check, classify, ledger.
//
// Exit codes: 0 ok, 1 input error, 2 synthesis fidelity below floor,
// 3 system not completely controllable.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sqpulse/io.hpp"

namespace {

using namespace sqpulse;
using io::json;

constexpr int kExitOk = 0;
constexpr int kExitInput = 1;
constexpr int kExitFloor = 2;
constexpr int kExitUncontrollable = 3;

struct RunConfig {
  std::string spec_path, target_path, schedule_path, out_path, initial_path;
  std::string trajectory_path, mode = "physical", generators;
  std::optional<double> tolerance;
  double ratio = 100.0;
  int winding_bound = 8;
  int samples = 0;
};

void write_output(const std::string &path, const std::string &text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw Error(ErrorCode::InvalidInput, "cannot write " + path);
  out << text;
}

SystemSpec load_spec(const RunConfig &cfg) {
  return io::spec_from_json(io::read_json_file(cfg.spec_path), cfg.tolerance);
}

int run_synth(const RunConfig &cfg) {
  const SystemSpec spec = load_spec(cfg);
  const StateVector target =
      io::state_from_json(io::read_json_file(cfg.target_path));
  SynthesisOptions opts;
  opts.field_ratio = cfg.ratio;
  opts.winding_bound = cfg.winding_bound;
  const SynthesisReport r = synthesize_unchecked(spec, target, opts);

  // Table goes to stderr when the JSON report itself is on stdout.
  std::FILE *tbl = cfg.out_path.empty() || cfg.out_path == "-" ? stderr : stdout;
  std::fprintf(tbl, "%3s %14s %14s %14s %14s\n", "m", "d_m", "tau_m",
               "tau'_m", "theta_m");
  for (std::size_t i = 0; i < r.schedule.cycles().size(); ++i) {
    const auto &c = r.schedule.cycles()[i];
    std::fprintf(tbl, "%3d %14.8g %14.8g %14.8g %14.8g\n", c.m, c.d, c.tau,
                 c.tau_free, r.angles[i]);
  }
  std::fprintf(tbl, "fidelity %.15f\n", r.fidelity);

  write_output(cfg.out_path, io::dump_canonical(io::report_to_json(r)));
  if (r.fidelity < fidelity_floor(opts.field_ratio)) {
    std::cerr << "error: fidelity " << r.fidelity << " below floor "
              << fidelity_floor(opts.field_ratio) << "\n";
    return kExitFloor;
  }
  return kExitOk;
}

int run_simulate(const RunConfig &cfg) {
  const SystemSpec spec = load_spec(cfg);
  const PulseSchedule schedule =
      io::schedule_from_json(io::read_json_file(cfg.schedule_path), spec);
  const StateVector initial =
      cfg.initial_path.empty()
          ? StateVector::ground(spec.levels())
          : io::state_from_json(io::read_json_file(cfg.initial_path));
  const SimulationResult res = simulate(schedule, initial, cfg.samples);

  json out = io::state_to_json(res.final_state.amplitudes());
  if (!cfg.target_path.empty()) {
    const StateVector target =
        io::state_from_json(io::read_json_file(cfg.target_path));
    if (target.size() != spec.levels())
      throw io::InputError("amplitudes", "target size does not match system");
    out["fidelity"] = std::min(1.0, fidelity(target, res.final_state));
  }
  write_output(cfg.out_path, io::dump_canonical(out));
  if (!cfg.trajectory_path.empty())
    write_output(cfg.trajectory_path,
                 io::trajectory_csv(res.trajectory, spec.levels()));
  return kExitOk;
}

std::vector<int> parse_generator_list(const std::string &s, int cycles) {
  std::vector<int> idx;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    int v = -1;
    try {
      v = std::stoi(item, &used);
    } catch (const std::exception &) {
      used = 0;
    }
    if (used != item.size() || v < 0 || v > cycles)
      throw io::InputError("generators",
                           "expected comma-separated indices in 0.." +
                               std::to_string(cycles));
    idx.push_back(v);
  }
  if (idx.empty())
    throw io::InputError("generators", "empty list");
  return idx;
}

int run_check(const RunConfig &cfg) {
  const SystemSpec spec = load_spec(cfg);
  std::vector<Matrix> gens = control_generators(spec);
  if (!cfg.generators.empty()) {
    std::vector<Matrix> chosen;
    for (int k : parse_generator_list(cfg.generators, spec.cycles()))
      chosen.push_back(gens[k]);
    gens = std::move(chosen);
  }
  const LieClosureResult r = lie_closure(gens);
  write_output(cfg.out_path, io::dump_canonical(io::closure_to_json(r)));
  return r.fully_controllable ? kExitOk : kExitUncontrollable;
}

int run_classify(const RunConfig &cfg) {
  const json j = io::read_json_file(cfg.spec_path);
  const auto e = io::energies_from_json(j);
  const double tol = io::tolerance_from_json(j, cfg.tolerance);
  const Classification c = classify_spectrum(e, tol);
  write_output(cfg.out_path,
               io::dump_canonical({{"classification", to_string(c)}}));
  return kExitOk;
}

int run_ledger(const RunConfig &cfg) {
  const SystemSpec spec = load_spec(cfg);
  if (cfg.mode != "paper" && cfg.mode != "physical")
    throw io::InputError("mode", "expected paper or physical");
  const LedgerMode mode =
      cfg.mode == "paper" ? LedgerMode::Paper : LedgerMode::Physical;
  write_output(cfg.out_path,
               io::dump_canonical(io::ledger_to_json(forward_ledger(spec, mode))));
  return kExitOk;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Square-pulse control synthesis for N-level quantum systems"};
  app.require_subcommand(1);
  RunConfig cfg;

  auto add_spec = [&](CLI::App *sub) {
    sub->add_option("--spec", cfg.spec_path, "system spec JSON")->required();
    sub->add_option("--tolerance", cfg.tolerance, "relative gap tolerance");
    sub->add_option("--out", cfg.out_path, "output path (default stdout)");
  };

  auto *synth = app.add_subcommand("synth", "synthesize a schedule for a target");
  add_spec(synth);
  synth->add_option("--target", cfg.target_path, "target state JSON")->required();
  synth->add_option("--ratio", cfg.ratio, "field ratio d_m / gap_m (> 1)");
  synth->add_option("--winding-bound", cfg.winding_bound,
                    "max 2pi winding per phase constraint");

  auto *sim = app.add_subcommand("simulate", "simulate a schedule");
  add_spec(sim);
  sim->add_option("--schedule", cfg.schedule_path,
                  "schedule or synthesis report JSON")->required();
  sim->add_option("--initial", cfg.initial_path, "initial state JSON (default |1>)");
  sim->add_option("--target", cfg.target_path, "report fidelity against this state");
  sim->add_option("--samples", cfg.samples, "interior samples per cycle");
  sim->add_option("--trajectory", cfg.trajectory_path, "trajectory CSV path");

  auto *check = app.add_subcommand("check", "Lie-algebraic controllability check");
  add_spec(check);
  check->add_option("--generators", cfg.generators,
                    "comma-separated generator subset (0 = drift, m = H_m)");

  auto *classify = app.add_subcommand("classify", "classify a spectrum's gap pattern");
  classify->add_option("--spec", cfg.spec_path, "spec JSON (kind optional)")->required();
  classify->add_option("--tolerance", cfg.tolerance, "relative gap tolerance");
  classify->add_option("--out", cfg.out_path, "output path (default stdout)");

  auto *ledger = app.add_subcommand("ledger", "dump the symbolic amplitude ledger");
  add_spec(ledger);
  ledger->add_option("--mode", cfg.mode, "paper | physical");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitInput;
  }

  try {
    if (synth->parsed())
      return run_synth(cfg);
    if (sim->parsed())
      return run_simulate(cfg);
    if (check->parsed())
      return run_check(cfg);
    if (classify->parsed())
      return run_classify(cfg);
    if (ledger->parsed())
      return run_ledger(cfg);
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  }
  return kExitInput;
}
