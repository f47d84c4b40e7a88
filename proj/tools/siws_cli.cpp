// Command-line front end for the layered SIWS library.
//
//   siws validate    --config s.json
//   siws spectral    --config s.json
//   siws simulate    --config s.json [--out dir]
//   siws equilibrium --config s.json
//   siws compare     --config s.json
//   siws observe     --config s.json [--order K] [--w0 a,b,..] [--samples N] [--seed S]
//   siws run         --config s.json | --batch dir/   [--out dir] [--seed S]
//   siws gen         --n N --m M [--density d] --target sub|super --seed S [--out dir]

#include "siws/error.hpp"
#include "siws/scenario.hpp"

#include "CLI11.hpp"

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace siws;

namespace {

int exit_for(const Error& e) { return e.code() == ErrorCode::ParseError ? kExitError : kExitHypothesis; }

void print_error(const Error& e) {
  std::cout << json{{"error", {{"code", std::string(to_string(e.code()))}, {"message", e.what()}}}}.dump(2) << '\n';
}

fs::path default_out_dir() {
  if (const char* env = std::getenv("SIWS_OUT_DIR"); env && *env) return env;
  return "out";
}

Vector parse_csv_vector(const std::string& text) {
  std::vector<double> vals;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      vals.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw Error(ErrorCode::ParseError, "--w0: cannot parse '" + item + "'");
    }
  }
  return Eigen::Map<Vector>(vals.data(), static_cast<Eigen::Index>(vals.size()));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Layered networked SIWS epidemic model: simulation, thresholds, equilibria, observability"};
  app.require_subcommand(1);

  std::string config;
  std::string out_dir;
  std::uint64_t seed = 0;
  auto* config_opt = app.add_option("--config", config, "Scenario JSON file")->check(CLI::ExistingFile);
  auto* out_opt = app.add_option("--out", out_dir, "Output directory (default: $SIWS_OUT_DIR or ./out)");
  auto* seed_opt = app.add_option("--seed", seed, "Seed for randomized analyses");

  auto* validate_cmd = app.add_subcommand("validate", "Validate the model and print the assembled blocks");
  auto* spectral_cmd = app.add_subcommand("spectral", "Reproduction number, stability margin, Perron vectors");
  auto* simulate_cmd = app.add_subcommand("simulate", "Integrate the trajectory and write CSV");
  auto* equilibrium_cmd = app.add_subcommand("equilibrium", "Healthy/endemic classification and endemic state");
  auto* compare_cmd = app.add_subcommand("compare", "Layered vs. population-only endemic levels");

  auto* observe_cmd = app.add_subcommand("observe", "Observability rank analysis at x(0) = 0");
  int order = -1;
  std::string w0_text;
  int samples = 5;
  observe_cmd->add_option("--order", order, "Highest Lie-derivative order (default n+m)");
  observe_cmd->add_option("--w0", w0_text, "Comma-separated w0");
  observe_cmd->add_option("--samples", samples, "Random w0 samples for the generic-rank check");

  auto* run_cmd = app.add_subcommand("run", "Run a full scenario or a batch directory");
  std::string batch_dir;
  run_cmd->add_option("--batch", batch_dir, "Directory of scenario files")->check(CLI::ExistingDirectory);

  auto* gen_cmd = app.add_subcommand("gen", "Generate a random irreducible scenario");
  int gen_n = 5, gen_m = 5;
  double density = 0.4;
  std::string target = "sub";
  gen_cmd->add_option("--n", gen_n, "Population nodes")->required();
  gen_cmd->add_option("--m", gen_m, "Resource nodes")->required();
  gen_cmd->add_option("--density", density, "Edge probability in (0, 1]");
  gen_cmd->add_option("--target", target, "sub or super")->check(CLI::IsMember({"sub", "super"}))->required();

  for (auto* sub : app.get_subcommands({})) sub->fallthrough();

  CLI11_PARSE(app, argc, argv);

  const fs::path out = *out_opt ? fs::path(out_dir) : default_out_dir();
  const std::optional<std::uint64_t> seed_override = *seed_opt ? std::optional(seed) : std::nullopt;

  try {
    if (gen_cmd->parsed()) {
      if (!*seed_opt) throw Error(ErrorCode::ParseError, "gen requires --seed");
      const Scenario s = generate_random_scenario(gen_n, gen_m, density, seed,
                                                  target == "sub" ? Target::SubThreshold : Target::SuperThreshold);
      const std::string text = scenario_to_json(s).dump(2) + "\n";
      if (*out_opt) {
        fs::create_directories(out);
        const fs::path file = out / (s.name + ".json");
        std::ofstream(file) << text;
        std::cout << file.string() << '\n';
      } else {
        std::cout << text;
      }
      return kExitOk;
    }

    if (run_cmd->parsed() && !batch_dir.empty()) {
      const BatchOutcome b = run_batch(batch_dir, out, seed_override);
      for (const auto& [file, code] : b.runs) std::cout << file.filename().string() << " exit " << code << '\n';
      return b.exit_code;
    }

    if (!*config_opt) throw Error(ErrorCode::ParseError, "--config is required");

    if (run_cmd->parsed()) {
      const RunOutcome r = run_scenario_file(config, out, seed_override);
      std::cout << r.report.dump(2) << '\n';
      return r.exit_code;
    }

    const Scenario s = load_scenario(config);

    if (observe_cmd->parsed()) {
      // The rank analysis accepts parameter sets outside both regimes.
      const SiwsSystem sys = s.system();
      const ObserveSpec spec = s.analyses.observe.value_or(ObserveSpec{});
      MeasurementMap meas{spec.c ? *spec.c : Matrix(Matrix::Identity(sys.n(), sys.n()))};
      Vector w0 = !w0_text.empty() ? parse_csv_vector(w0_text)
                  : spec.w0        ? *spec.w0
                  : s.initial_state ? s.initial_state->w
                                    : Vector(Vector::Zero(sys.m()));
      ObserveOptions opt;
      opt.order = observe_cmd->count("--order") ? order : spec.order;
      opt.samples = observe_cmd->count("--samples") ? samples : spec.samples;
      const std::optional<std::uint64_t> use_seed = seed_override ? seed_override : s.seed;
      if (opt.samples > 0 && !use_seed) throw Error(ErrorCode::ParseError, "random w0 sampling requires --seed");
      opt.seed = use_seed.value_or(0);
      std::cout << to_json(analyze_observability(sys, meas, w0, opt)).dump(2) << '\n';
      return kExitOk;
    }

    const LayeredModel model = s.validated();
    if (validate_cmd->parsed()) {
      std::cout << to_json(model).dump(2) << '\n';
    } else if (spectral_cmd->parsed()) {
      std::cout << to_json(reproduction_number(model)).dump(2) << '\n';
    } else if (simulate_cmd->parsed()) {
      if (!s.initial_state) throw Error(ErrorCode::ParseError, "initial_state: required for simulate");
      const Trajectory traj = simulate(model, *s.initial_state, s.t_end, s.controls);
      if (*out_opt) {
        fs::create_directories(out);
        const fs::path file = out / s.trajectory_csv;
        std::ofstream f(file);
        write_trajectory_csv(f, traj);
        std::cerr << "wrote " << file.string() << '\n';
      } else {
        write_trajectory_csv(std::cout, traj);
      }
    } else if (equilibrium_cmd->parsed()) {
      json doc;
      doc["healthy_state"] = to_json(classify_healthy_state(model));
      if (model.satisfies_a2()) {
        doc["equilibrium"] = to_json(endemic_equilibrium(model));
      } else {
        doc["equilibrium"] = {{"kind", "Unclassified"}, {"reason", "WrongRegime: requires regime A2"}};
      }
      std::cout << doc.dump(2) << '\n';
    } else if (compare_cmd->parsed()) {
      std::cout << to_json(compare_endemic(model)).dump(2) << '\n';
    }
    return kExitOk;
  } catch (const Error& e) {
    print_error(e);
    return exit_for(e);
  }
}
