#include "siws/scenario.hpp"

#include "siws/error.hpp"
#include "siws/random.hpp"

#include <algorithm>
#include <fstream>
#include <future>
#include <sstream>
#include <thread>

namespace siws {

namespace fs = std::filesystem;

namespace {

[[noreturn]] void parse_fail(const std::string& field, const std::string& what) {
  throw Error(ErrorCode::ParseError, field + ": " + what);
}

const json& require_key(const json& obj, const char* key, const std::string& path) {
  if (!obj.is_object()) parse_fail(path, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) parse_fail(path + "." + key, "missing");
  return *it;
}

double read_number(const json& v, const std::string& path) {
  if (!v.is_number()) parse_fail(path, "expected a number");
  return v.get<double>();
}

Vector read_vector(const json& v, const std::string& path) {
  if (!v.is_array()) parse_fail(path, "expected an array of numbers");
  Vector out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) {
    out(static_cast<Eigen::Index>(i)) = read_number(v[i], path + "[" + std::to_string(i) + "]");
  }
  return out;
}

Matrix read_matrix(const json& v, const std::string& path) {
  if (!v.is_array() || v.empty()) parse_fail(path, "expected a non-empty array of rows");
  const std::size_t rows = v.size();
  std::size_t cols = 0;
  for (std::size_t i = 0; i < rows; ++i) {
    const std::string rp = path + "[" + std::to_string(i) + "]";
    if (!v[i].is_array()) parse_fail(rp, "expected an array of numbers");
    if (i == 0) cols = v[i].size();
    if (v[i].size() != cols) parse_fail(rp, "ragged row");
  }
  Matrix out(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          read_number(v[i][j], path + "[" + std::to_string(i) + "][" + std::to_string(j) + "]");
    }
  }
  return out;
}

bool read_bool(const json& obj, const char* key, bool fallback, const std::string& path) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return fallback;
  if (!it->is_boolean()) parse_fail(path + "." + key, "expected true or false");
  return it->get<bool>();
}

json vec_json(const Vector& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

json mat_json(const Matrix& a) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    std::vector<double> r(static_cast<std::size_t>(a.cols()));
    for (Eigen::Index j = 0; j < a.cols(); ++j) r[static_cast<std::size_t>(j)] = a(i, j);
    rows.push_back(std::move(r));
  }
  return rows;
}

json error_json(const std::string& stage, const Error& e) {
  return json{{"stage", stage}, {"code", std::string(to_string(e.code()))}, {"message", e.what()}};
}

json state_json(const State& s) { return json{{"x", vec_json(s.x)}, {"w", vec_json(s.w)}}; }

json rank_json(const RankResult& r) {
  return json{{"rank", r.rank}, {"full_rank", r.full_rank}, {"singular_values", r.singular_values},
              {"threshold", r.threshold}};
}

}  // namespace

Scenario parse_scenario(const json& doc) {
  if (!doc.is_object()) parse_fail("<root>", "expected an object");
  Scenario s;
  if (auto it = doc.find("name"); it != doc.end() && it->is_string()) s.name = it->get<std::string>();
  if (auto it = doc.find("description"); it != doc.end() && it->is_string()) s.description = it->get<std::string>();

  const json& pop = require_key(doc, "population", "");
  s.pop.beta = read_matrix(require_key(pop, "beta", "population"), "population.beta");
  s.pop.delta = read_vector(require_key(pop, "delta", "population"), "population.delta");
  const json& infra = require_key(doc, "infrastructure", "");
  s.infra.alpha = read_matrix(require_key(infra, "alpha", "infrastructure"), "infrastructure.alpha");
  s.infra.delta_w = read_vector(require_key(infra, "delta_w", "infrastructure"), "infrastructure.delta_w");
  const json& coup = require_key(doc, "coupling", "");
  s.coupling.beta_w = read_matrix(require_key(coup, "beta_w", "coupling"), "coupling.beta_w");
  s.coupling.c_w = read_matrix(require_key(coup, "c_w", "coupling"), "coupling.c_w");

  const json& regime = require_key(doc, "regime", "");
  if (regime == "A1") {
    s.regime = Regime::A1;
  } else if (regime == "A2") {
    s.regime = Regime::A2;
  } else {
    parse_fail("regime", "expected \"A1\" or \"A2\"");
  }

  if (auto it = doc.find("initial_state"); it != doc.end() && !it->is_null()) {
    State z0;
    z0.x = read_vector(require_key(*it, "x", "initial_state"), "initial_state.x");
    z0.w = read_vector(require_key(*it, "w", "initial_state"), "initial_state.w");
    s.initial_state = std::move(z0);
  }

  if (auto it = doc.find("simulation"); it != doc.end() && !it->is_null()) {
    const json& sim = *it;
    if (!sim.is_object()) parse_fail("simulation", "expected an object");
    if (sim.contains("t_end")) s.t_end = read_number(sim["t_end"], "simulation.t_end");
    if (sim.contains("samples")) {
      if (!sim["samples"].is_number_integer()) parse_fail("simulation.samples", "expected an integer");
      s.controls.samples = sim["samples"].get<int>();
    }
    if (sim.contains("rel_tol")) s.controls.rel_tol = read_number(sim["rel_tol"], "simulation.rel_tol");
    if (sim.contains("abs_tol")) s.controls.abs_tol = read_number(sim["abs_tol"], "simulation.abs_tol");
    if (sim.contains("clamp_tol")) s.controls.clamp_tol = read_number(sim["clamp_tol"], "simulation.clamp_tol");
    if (sim.contains("max_step")) s.controls.max_step = read_number(sim["max_step"], "simulation.max_step");
  }

  if (auto it = doc.find("analyses"); it != doc.end() && !it->is_null()) {
    const json& an = *it;
    if (!an.is_object()) parse_fail("analyses", "expected an object");
    s.analyses.spectral = read_bool(an, "spectral", s.analyses.spectral, "analyses");
    s.analyses.healthy_state = read_bool(an, "healthy_state", s.analyses.healthy_state, "analyses");
    s.analyses.equilibrium = read_bool(an, "equilibrium", s.analyses.equilibrium, "analyses");
    s.analyses.sis = read_bool(an, "sis", s.analyses.sis, "analyses");
    s.analyses.compare = read_bool(an, "compare", s.analyses.compare, "analyses");
    s.analyses.simulate = read_bool(an, "simulate", s.analyses.simulate, "analyses");
    if (auto ob = an.find("observe"); ob != an.end() && !ob->is_null() && *ob != false) {
      ObserveSpec o;
      if (ob->is_object()) {
        if (ob->contains("c")) o.c = read_matrix((*ob)["c"], "analyses.observe.c");
        if (ob->contains("w0")) o.w0 = read_vector((*ob)["w0"], "analyses.observe.w0");
        if (ob->contains("order")) o.order = static_cast<int>(read_number((*ob)["order"], "analyses.observe.order"));
        if (ob->contains("samples")) {
          o.samples = static_cast<int>(read_number((*ob)["samples"], "analyses.observe.samples"));
        }
      } else if (*ob != true) {
        parse_fail("analyses.observe", "expected an object or a boolean");
      }
      s.analyses.observe = std::move(o);
    }
  }

  if (auto it = doc.find("outputs"); it != doc.end() && !it->is_null()) {
    if (auto c = it->find("trajectory_csv"); c != it->end() && c->is_string()) s.trajectory_csv = c->get<std::string>();
    if (auto r = it->find("report_json"); r != it->end() && r->is_string()) s.report_json = r->get<std::string>();
  }

  if (auto it = doc.find("seed"); it != doc.end() && !it->is_null()) {
    if (!it->is_number_unsigned() && !(it->is_number_integer() && it->get<long long>() >= 0)) {
      parse_fail("seed", "expected a non-negative integer");
    }
    s.seed = it->get<std::uint64_t>();
  }

  if (s.analyses.simulate && !s.initial_state) {
    parse_fail("initial_state", "required when the simulate analysis is enabled");
  }
  if (s.initial_state) {
    if (s.initial_state->x.size() != s.pop.delta.size()) parse_fail("initial_state.x", "length differs from n");
    if (s.initial_state->w.size() != s.infra.delta_w.size()) parse_fail("initial_state.w", "length differs from m");
  }
  if (s.controls.samples < 1) parse_fail("simulation.samples", "must be >= 1");
  if (!(s.t_end > 0.0)) parse_fail("simulation.t_end", "must be > 0");
  return s;
}

Scenario parse_scenario_text(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    const std::size_t upto = std::min<std::size_t>(e.byte, text.size());
    const auto line = 1 + std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(upto), '\n');
    throw Error(ErrorCode::ParseError, "line " + std::to_string(line) + ": " + e.what());
  }
  return parse_scenario(doc);
}

Scenario load_scenario(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ParseError, "cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  Scenario s = parse_scenario_text(buf.str());
  if (s.name.empty()) s.name = path.stem().string();
  return s;
}

json scenario_to_json(const Scenario& s) {
  json doc;
  doc["name"] = s.name;
  doc["description"] = s.description;
  doc["population"] = {{"beta", mat_json(s.pop.beta)}, {"delta", vec_json(s.pop.delta)}};
  doc["infrastructure"] = {{"alpha", mat_json(s.infra.alpha)}, {"delta_w", vec_json(s.infra.delta_w)}};
  doc["coupling"] = {{"beta_w", mat_json(s.coupling.beta_w)}, {"c_w", mat_json(s.coupling.c_w)}};
  doc["regime"] = to_string(s.regime);
  doc["initial_state"] = s.initial_state ? state_json(*s.initial_state) : json(nullptr);
  doc["simulation"] = {{"t_end", s.t_end},
                       {"samples", s.controls.samples},
                       {"rel_tol", s.controls.rel_tol},
                       {"abs_tol", s.controls.abs_tol},
                       {"clamp_tol", s.controls.clamp_tol},
                       {"max_step", s.controls.max_step}};
  json an = {{"spectral", s.analyses.spectral},   {"healthy_state", s.analyses.healthy_state},
             {"equilibrium", s.analyses.equilibrium}, {"sis", s.analyses.sis},
             {"compare", s.analyses.compare},     {"simulate", s.analyses.simulate}};
  if (s.analyses.observe) {
    json ob = {{"order", s.analyses.observe->order}, {"samples", s.analyses.observe->samples}};
    if (s.analyses.observe->c) ob["c"] = mat_json(*s.analyses.observe->c);
    if (s.analyses.observe->w0) ob["w0"] = vec_json(*s.analyses.observe->w0);
    an["observe"] = ob;
  } else {
    an["observe"] = false;
  }
  doc["analyses"] = an;
  doc["outputs"] = {{"trajectory_csv", s.trajectory_csv}, {"report_json", s.report_json}};
  doc["seed"] = s.seed ? json(*s.seed) : json(nullptr);
  return doc;
}

json to_json(const LayeredModel& model) {
  return json{{"n", model.n()},
              {"m", model.m()},
              {"regime", to_string(model.regime())},
              {"satisfies_a1", model.satisfies_a1()},
              {"satisfies_a2", model.satisfies_a2()},
              {"b_f", mat_json(model.b_f())},
              {"d_f", vec_json(model.d_f_diag())}};
}

json to_json(const SpectralReport& rep) {
  return json{{"rho", rep.rho},
              {"rho_power", rep.rho_power},
              {"s_margin", rep.s_margin},
              {"irreducible", rep.irreducible},
              {"perron_right", rep.perron_right ? vec_json(*rep.perron_right) : json(nullptr)},
              {"perron_left", rep.perron_left ? vec_json(*rep.perron_left) : json(nullptr)},
              {"rho_pop", rep.rho_pop},
              {"classification", to_string(rep.classification)},
              {"warnings", rep.warnings}};
}

json to_json(const HealthyClassification& c) {
  json rules = json::array();
  for (HealthyRule r : c.rules) rules.push_back(to_string(r));
  return json{{"verdict", to_string(c.verdict)}, {"rules", rules}, {"s_j0", c.s_j0}, {"rho", c.rho}};
}

json to_json(const EquilibriumResult& r) {
  return json{{"kind", to_string(r.kind)},
              {"z_hat", r.z_hat ? state_json(*r.z_hat) : json(nullptr)},
              {"rho", r.rho},
              {"residual", r.residual},
              {"iterations", r.iterations},
              {"iterations_up", r.iterations_up},
              {"bracket_gap", r.bracket_gap},
              {"monotone", r.monotone},
              {"upper_bracket", r.upper_bracket.size() ? vec_json(r.upper_bracket) : json(nullptr)},
              {"lower_bracket", r.lower_bracket.size() ? vec_json(r.lower_bracket) : json(nullptr)}};
}

json to_json(const SisResult& r) {
  return json{{"kind", to_string(r.kind)},
              {"x_tilde", r.x_tilde ? vec_json(*r.x_tilde) : json(nullptr)},
              {"rho", r.rho},
              {"residual", r.residual},
              {"iterations", r.iterations}};
}

json to_json(const EndemicComparison& c) {
  return json{{"x_hat", vec_json(c.x_hat)}, {"x_tilde", vec_json(c.x_tilde)}, {"gap", vec_json(c.gap)},
              {"min_gap", c.min_gap},       {"max_gap", c.max_gap},           {"layered_dominates", c.layered_dominates}};
}

json to_json(const JacobianReport& r) {
  return json{{"j_matrix", mat_json(r.j_matrix)}, {"s_value", r.s_value}, {"verdict", to_string(r.verdict)}};
}

json to_json(const ObservabilityReport& r) {
  json w_eval = json::array();
  for (const auto& w : r.w_eval) w_eval.push_back(vec_json(w));
  json full_state_sensing = nullptr;
  if (r.full_state_sensing) {
    const SensorPlacement& f = *r.full_state_sensing;
    full_state_sensing = {{"observable", f.observable}, {"rank_bw", f.rank_bw}, {"deficiency", f.deficiency}};
  }
  return json{{"order", r.order},
              {"o_matrix", mat_json(r.o_matrix)},
              {"rank", r.rank.rank},
              {"full_rank", r.rank.full_rank},
              {"singular_values", r.rank.singular_values},
              {"rank_threshold", r.rank.threshold},
              {"rank_prev_order", r.rank_prev_order ? rank_json(*r.rank_prev_order) : json(nullptr)},
              {"w_eval", w_eval},
              {"sample_ranks", r.sample_ranks},
              {"generic", r.generic},
              {"f_condition",
               {{"rank_c", r.f_cond.rank_c}, {"rank_cbw", r.f_cond.rank_cbw}, {"holds", r.f_cond.holds}}},
              {"full_state_sensing", full_state_sensing},
              {"a_w_satisfies_a2", r.a_w_satisfies_a2},
              {"closed_form_mismatch", r.closed_form_mismatch},
              {"row3_mismatch", r.row3_mismatch ? json(*r.row3_mismatch) : json(nullptr)},
              {"diagnostics", r.diagnostics}};
}

RunOutcome run_scenario(const Scenario& s, const fs::path& out_dir, std::optional<std::uint64_t> seed_override) {
  RunOutcome out;
  json& rep = out.report;
  const std::optional<std::uint64_t> seed = seed_override ? seed_override : s.seed;
  rep["scenario"] = s.name;
  rep["description"] = s.description;
  rep["seed"] = seed ? json(*seed) : json(nullptr);
  for (const char* key : {"model", "spectral", "healthy_state", "equilibrium", "sis", "compare", "simulation",
                          "observability"}) {
    rep[key] = nullptr;
  }
  rep["errors"] = json::array();

  auto record = [&](const std::string& stage, const Error& e) {
    rep["errors"].push_back(error_json(stage, e));
    out.exit_code = std::max(out.exit_code, kExitHypothesis);
  };

  std::error_code ec;
  fs::create_directories(out_dir, ec);
  out.report_path = out_dir / s.report_json;

  auto finish = [&]() {
    rep["exit_code"] = out.exit_code;
    std::ofstream f(out.report_path);
    if (!f) {
      out.exit_code = kExitError;
      rep["exit_code"] = out.exit_code;
      return;
    }
    f << rep.dump(2) << '\n';
  };

  if (s.analyses.observe && s.analyses.observe->samples > 0 && !seed) {
    rep["errors"].push_back(
        {{"stage", "observe"}, {"code", "ParseError"}, {"message", "a seed is required for random w0 sampling"}});
    out.exit_code = kExitError;
    finish();
    return out;
  }

  std::optional<LayeredModel> model;
  try {
    model = s.validated();
    rep["model"] = to_json(*model);
  } catch (const Error& e) {
    record("validate", e);
    finish();
    return out;
  }

  if (s.analyses.spectral) {
    try {
      rep["spectral"] = to_json(reproduction_number(*model));
    } catch (const Error& e) {
      record("spectral", e);
    }
  }
  if (s.analyses.healthy_state) {
    try {
      rep["healthy_state"] = to_json(classify_healthy_state(*model));
    } catch (const Error& e) {
      record("healthy_state", e);
    }
  }

  std::optional<EquilibriumResult> equilibrium;
  if (s.analyses.equilibrium) {
    if (!model->satisfies_a2()) {
      // Outside regime A2 the endemic solver does not apply; the run still
      // simulates and reports the outcome without an equilibrium claim.
      rep["equilibrium"] = {{"kind", "Unclassified"},
                            {"reason", "WrongRegime: endemic equilibrium computation requires regime A2"}};
    } else {
      try {
        equilibrium = endemic_equilibrium(*model);
        rep["equilibrium"] = to_json(*equilibrium);
      } catch (const Error& e) {
        record("equilibrium", e);
      }
    }
  }
  if (s.analyses.sis) {
    try {
      rep["sis"] = to_json(sis_endemic(model->pop()));
    } catch (const Error& e) {
      record("sis", e);
    }
  }
  if (s.analyses.compare) {
    try {
      rep["compare"] = to_json(compare_endemic(*model));
    } catch (const Error& e) {
      record("compare", e);
    }
  }

  if (s.analyses.simulate) {
    try {
      const Trajectory traj = simulate(*model, *s.initial_state, s.t_end, s.controls);
      out.csv_path = out_dir / s.trajectory_csv;
      std::ofstream csv(*out.csv_path);
      if (!csv) throw Error(ErrorCode::ParseError, "cannot write " + out.csv_path->string());
      write_trajectory_csv(csv, traj);
      const State& last = traj.states.back();
      json sim = {{"t_end", s.t_end},
                  {"samples", s.controls.samples},
                  {"rows", traj.states.size()},
                  {"steps_accepted", traj.steps_accepted},
                  {"steps_rejected", traj.steps_rejected},
                  {"max_clamp", traj.max_clamp},
                  {"steady_at", traj.steady_at >= 0.0 ? json(traj.steady_at) : json(nullptr)},
                  {"final_state", state_json(last)},
                  {"final_inf_norm", last.stacked().lpNorm<Eigen::Infinity>()},
                  {"x_mean_final", last.x.mean()},
                  {"w_mean_final", last.w.mean()},
                  {"trajectory_csv", out.csv_path->filename().string()},
                  {"distance_to_equilibrium", nullptr}};
      if (equilibrium && equilibrium->z_hat) {
        sim["distance_to_equilibrium"] = (last.stacked() - equilibrium->z_hat->stacked()).lpNorm<Eigen::Infinity>();
      }
      rep["simulation"] = sim;
    } catch (const Error& e) {
      record("simulate", e);
    }
  }

  if (s.analyses.observe) {
    try {
      const ObserveSpec& o = *s.analyses.observe;
      MeasurementMap meas{o.c ? *o.c : Matrix(Matrix::Identity(model->n(), model->n()))};
      Vector w0 = o.w0 ? *o.w0 : (s.initial_state ? s.initial_state->w : Vector(Vector::Zero(model->m())));
      ObserveOptions opt;
      opt.order = o.order;
      opt.samples = o.samples;
      opt.seed = seed.value_or(0);
      rep["observability"] = to_json(analyze_observability(*model, meas, w0, opt));
    } catch (const Error& e) {
      record("observe", e);
    }
  }

  finish();
  return out;
}

RunOutcome run_scenario_file(const fs::path& path, const fs::path& out_dir,
                             std::optional<std::uint64_t> seed_override) {
  try {
    return run_scenario(load_scenario(path), out_dir, seed_override);
  } catch (const Error& e) {
    RunOutcome out;
    out.exit_code = kExitError;
    out.report = {{"scenario", path.stem().string()}, {"errors", json::array({error_json("parse", e)})},
                  {"exit_code", kExitError}};
    return out;
  }
}

BatchOutcome run_batch(const fs::path& dir, const fs::path& out_root, std::optional<std::uint64_t> seed_override,
                       unsigned max_threads) {
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());

  const unsigned threads = max_threads ? max_threads : std::max(1u, std::thread::hardware_concurrency());
  BatchOutcome out;
  std::vector<std::future<int>> pending;
  std::size_t next = 0;
  while (next < files.size() || !pending.empty()) {
    while (next < files.size() && pending.size() < threads) {
      const fs::path file = files[next++];
      pending.push_back(std::async(std::launch::async, [file, &out_root, seed_override] {
        return run_scenario_file(file, out_root / file.stem(), seed_override).exit_code;
      }));
    }
    const int code = pending.front().get();
    pending.erase(pending.begin());
    out.runs.emplace_back(files[out.runs.size()], code);
    out.exit_code = std::max(out.exit_code, code);
  }
  return out;
}

Scenario generate_random_scenario(int n, int m, double density, std::uint64_t seed, Target target) {
  if (n < 1 || m < 1) throw Error(ErrorCode::PreconditionViolated, "n and m must be >= 1");
  if (!(density > 0.0 && density <= 1.0)) throw Error(ErrorCode::PreconditionViolated, "density must be in (0, 1]");

  Rng rng(seed);
  auto sparse = [&](int rows, int cols, bool zero_diag) {
    Matrix a = Matrix::Zero(rows, cols);
    for (int i = 0; i < rows; ++i) {
      for (int j = 0; j < cols; ++j) {
        if (zero_diag && i == j) continue;
        if (rng.bernoulli(density)) a(i, j) = rng.uniform(0.1, 1.0);
      }
    }
    return a;
  };

  for (int attempt = 0; attempt < 1000; ++attempt) {
    Scenario s;
    s.pop.beta = sparse(n, n, true);
    s.infra.alpha = sparse(m, m, true);
    for (int j = 0; j < m; ++j) s.infra.alpha(j, j) = -s.infra.alpha.col(j).sum();
    s.coupling.beta_w = sparse(n, m, false);
    s.coupling.c_w = sparse(m, n, false);
    Vector delta_base(n), delta_w_base(m);
    for (int i = 0; i < n; ++i) delta_base(i) = rng.uniform(0.5, 1.5);
    for (int j = 0; j < m; ++j) delta_w_base(j) = rng.uniform(0.5, 1.5);
    const double target_rho = target == Target::SubThreshold ? rng.uniform(0.3, 0.7) : rng.uniform(1.5, 3.0);

    State z0{Vector(n), Vector(m)};
    for (int i = 0; i < n; ++i) z0.x(i) = rng.uniform();
    for (int j = 0; j < m; ++j) z0.w(j) = rng.uniform(0.0, 2.0);

    if (!is_irreducible(SiwsSystem(PopulationLayer{s.pop.beta, delta_base}, InfrastructureLayer{s.infra.alpha, delta_w_base},
                                   s.coupling)
                            .b_f())) {
      continue;
    }

    auto rho_at = [&](double scale) {
      SiwsSystem sys(PopulationLayer{s.pop.beta, scale * delta_base},
                     InfrastructureLayer{s.infra.alpha, scale * delta_w_base}, s.coupling);
      const Vector inv_d = sys.d_f_diag().cwiseInverse();
      return spectral_radius(inv_d.asDiagonal() * sys.b_f());
    };

    // rho decreases strictly in the scale; bracket the target, then bisect.
    double lo = 1.0, hi = 1.0;
    bool bracketed = true;
    for (int k = 0; rho_at(hi) > target_rho; ++k) {
      if (k > 200) { bracketed = false; break; }
      hi *= 2.0;
    }
    for (int k = 0; bracketed && rho_at(lo) < target_rho; ++k) {
      if (k > 200) { bracketed = false; break; }
      lo *= 0.5;
    }
    if (!bracketed) continue;
    for (int it = 0; it < 40; ++it) {
      const double mid = 0.5 * (lo + hi);
      (rho_at(mid) > target_rho ? lo : hi) = mid;
    }
    const double scale = target == Target::SubThreshold ? hi : lo;
    const double rho = rho_at(scale);
    if (target == Target::SubThreshold ? rho > 1.0 - 1e-3 : rho < 1.0 + 1e-3) continue;

    s.pop.delta = scale * delta_base;
    s.infra.delta_w = scale * delta_w_base;
    s.regime = Regime::A2;
    s.name = std::string("random-") + (target == Target::SubThreshold ? "sub" : "super") + "-" + std::to_string(seed);
    s.description = "generated: n=" + std::to_string(n) + " m=" + std::to_string(m) +
                    " density=" + format_double(density) + " rho=" + format_double(rho);
    s.initial_state = std::move(z0);
    s.analyses.equilibrium = target == Target::SuperThreshold;
    s.seed = seed;
    return s;
  }
  throw Error(ErrorCode::GenerationFailure, "no irreducible model with the requested threshold after 1000 draws");
}

}  // namespace siws
