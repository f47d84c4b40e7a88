#pragma once

#include "siws/dynamics.hpp"
#include "siws/equilibria.hpp"
#include "siws/model.hpp"
#include "siws/observability.hpp"
#include "siws/spectral.hpp"

#include "json.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

namespace siws {

using json = nlohmann::json;

struct ObserveSpec {
  std::optional<Matrix> c;   // defaults to the n x n identity
  std::optional<Vector> w0;  // defaults to the initial w, else zero
  int order = -1;
  int samples = 5;
};

struct Analyses {
  bool spectral = true;
  bool healthy_state = true;
  bool equilibrium = false;
  bool sis = false;
  bool compare = false;
  bool simulate = true;
  std::optional<ObserveSpec> observe;
};

struct Scenario {
  std::string name;
  std::string description;
  PopulationLayer pop;
  InfrastructureLayer infra;
  CouplingLayer coupling;
  Regime regime = Regime::A2;
  std::optional<State> initial_state;
  double t_end = 200.0;
  SimulationControls controls;
  Analyses analyses;
  std::string trajectory_csv = "trajectory.csv";
  std::string report_json = "report.json";
  std::optional<std::uint64_t> seed;

  SiwsSystem system() const { return SiwsSystem(pop, infra, coupling); }
  LayeredModel validated() const { return validate_model(pop, infra, coupling, regime); }
};

// Throws Error{ParseError} naming the offending field (and line, for syntax errors).
Scenario parse_scenario(const json& doc);
Scenario parse_scenario_text(const std::string& text);
Scenario load_scenario(const std::filesystem::path& path);
json scenario_to_json(const Scenario& s);

json to_json(const LayeredModel& model);
json to_json(const SpectralReport& rep);
json to_json(const HealthyClassification& c);
json to_json(const EquilibriumResult& r);
json to_json(const SisResult& r);
json to_json(const EndemicComparison& c);
json to_json(const ObservabilityReport& r);
json to_json(const JacobianReport& r);

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitHypothesis = 2;

struct RunOutcome {
  int exit_code = kExitOk;
  json report;
  std::optional<std::filesystem::path> csv_path;
  std::filesystem::path report_path;
};

// Runs validate -> spectral -> healthy state -> equilibrium/sis/compare ->
// simulate -> observe, writing the trajectory CSV and the aggregated report
// JSON under out_dir. Module errors land in report["errors"] with exit code 2.
RunOutcome run_scenario(const Scenario& s, const std::filesystem::path& out_dir,
                        std::optional<std::uint64_t> seed_override = std::nullopt);

// Parse failures are reported with exit code 1.
RunOutcome run_scenario_file(const std::filesystem::path& path, const std::filesystem::path& out_dir,
                             std::optional<std::uint64_t> seed_override = std::nullopt);

struct BatchOutcome {
  int exit_code = kExitOk;  // worst over all scenarios
  std::vector<std::pair<std::filesystem::path, int>> runs;
};

// Every *.json in dir runs independently into out_root/<stem>/.
BatchOutcome run_batch(const std::filesystem::path& dir, const std::filesystem::path& out_root,
                       std::optional<std::uint64_t> seed_override = std::nullopt, unsigned max_threads = 0);

enum class Target { SubThreshold, SuperThreshold };

// Irreducible regime-A2 model with rho(D_f^-1 B_f) in [0.3, 0.7] (sub) or
// [1.5, 3] (super), reached by bisection on a common scale of D and D_w.
// Throws Error{GenerationFailure}.
Scenario generate_random_scenario(int n, int m, double density, std::uint64_t seed, Target target);

}  // namespace siws
