#include "qctl/cli.hpp"

#include "qctl/entmax.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <iostream>
#include <limits>
#include <random>
#include <sstream>

namespace qctl::cli {

using nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct OutputFile
{
  std::string name;
  std::string content;
};

struct Run
{
  json solution;
  std::vector<OutputFile> files;
  Summary summary{};
};

std::string header(const std::string & lead, const std::string & prefix, Eigen::Index count)
{
  std::string h = lead;
  for (Eigen::Index i = 0; i < count; ++i) { h += "," + prefix + std::to_string(i); }
  return h + "\n";
}

std::string flat_header(const std::string & prefix, Eigen::Index rows, Eigen::Index cols)
{
  std::string h;
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) { h += "," + prefix + "_" + std::to_string(r) + "_" + std::to_string(c); }
  }
  return h;
}

void append_flat(std::vector<double> & row, const Eigen::MatrixXd & m)
{
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) { row.push_back(m(r, c)); }
  }
}

std::size_t count_zeros(const Eigen::MatrixXd & m) { return static_cast<std::size_t>((m.array() == 0.0).count()); }

DiscreteDistribution troc_initial(const io::LoadedInstance & loaded, std::size_t n)
{
  if (loaded.effective.contains("initial")) { return DiscreteDistribution(loaded.effective["initial"].get<std::vector<double>>()); }
  return DiscreteDistribution::uniform(n);
}

Run execute_qkl(const io::LoadedInstance & loaded, const QklInstance & inst, double parameter)
{
  const QklSolution sol = loaded.stationary ? solve_qkl_stationary(inst, 1e-10, inst.horizon) : solve_qkl(inst);
  const auto n = static_cast<Eigen::Index>(inst.num_states());
  Run run;
  run.solution = io::to_json(sol);

  std::string values = header("stage", "v", n);
  for (std::size_t k = 0; k < sol.values.size(); ++k) {
    std::vector<double> row{static_cast<double>(k)};
    row.insert(row.end(), sol.values[k].data(), sol.values[k].data() + n);
    values += io::csv_row(row);
  }
  std::string matrices = header("stage,row", "col", n);
  for (std::size_t k = 0; k < sol.horizon(); ++k) {
    for (Eigen::Index i = 0; i < n; ++i) {
      std::vector<double> row{static_cast<double>(k), static_cast<double>(i)};
      for (Eigen::Index j = 0; j < n; ++j) { row.push_back(sol.controlled_matrices[k](i, j)); }
      matrices += io::csv_row(row);
    }
  }
  std::string relative = "state,z\n";
  const Eigen::VectorXd z = relative_values(sol, 0, 0);
  for (Eigen::Index i = 0; i < n; ++i) { relative += io::csv_row({static_cast<double>(i), z(i)}); }
  run.files = {{"values.csv", values}, {"controlled_matrices.csv", matrices}, {"relative_values.csv", relative}};

  const Eigen::MatrixXd & p0 = sol.controlled_matrices.front();
  double cost = 0.0;
  double entropy = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    const double w = inst.initial[static_cast<std::size_t>(j)];
    cost += w * sol.values.front()(j);
    const Eigen::VectorXd col = p0.col(j);
    entropy += w * deformed_q_entropy(DiscreteDistribution(std::vector<double>(col.data(), col.data() + n)), inst.q);
  }
  run.summary = {parameter, cost, entropy, kNaN, static_cast<double>(count_zeros(p0))};
  return run;
}

Run execute_troc(const io::LoadedInstance & loaded, const FiniteTrocInstance & inst, double parameter)
{
  const TrocSolution sol = solve_troc(inst);
  const std::size_t n = inst.num_states();
  const auto m = static_cast<Eigen::Index>(inst.num_actions());
  Run run;
  run.solution = io::to_json(sol);

  std::string values = header("stage", "v", static_cast<Eigen::Index>(n));
  for (Eigen::Index k = 0; k < sol.value.rows(); ++k) {
    std::vector<double> row{static_cast<double>(k)};
    for (Eigen::Index x = 0; x < sol.value.cols(); ++x) { row.push_back(sol.value(k, x)); }
    values += io::csv_row(row);
  }
  std::string policy = header("stage,state", "u", m);
  for (std::size_t k = 0; k < sol.policy.size(); ++k) {
    for (std::size_t x = 0; x < n; ++x) {
      std::vector<double> row{static_cast<double>(k), static_cast<double>(x)};
      const auto w = sol.policy[k][x].weights();
      row.insert(row.end(), w.begin(), w.end());
      policy += io::csv_row(row);
    }
  }
  run.files = {{"values.csv", values}, {"policy.csv", policy}};

  const DiscreteDistribution initial = troc_initial(loaded, n);
  double cost = 0.0;
  double entropy = 0.0;
  double zeros = 0.0;
  for (std::size_t x = 0; x < n; ++x) {
    cost += initial[x] * sol.value(0, static_cast<Eigen::Index>(x));
    entropy += initial[x] * deformed_q_entropy(sol.policy[0][x], inst.q);
    zeros += static_cast<double>(sol.policy[0][x].size() - sol.policy[0][x].support_size());
  }
  run.summary = {parameter, cost, entropy, kNaN, zeros};
  return run;
}

Run execute_qlqr(const QlqrInstance & inst, double parameter, std::ostream & err)
{
  for (const auto & w : inst.cost_block_warnings()) { err << "warning: " << w << "\n"; }
  const QlqrSolution sol = solve_qlqr(inst);
  const QlqrStationary st = solve_qlqr_stationary(inst);
  const Eigen::Index n = inst.state_dim();
  const Eigen::Index m = inst.input_dim();
  Run run;
  run.solution = io::to_json(sol);

  std::string riccati = "stage" + flat_header("pi", n, n) + flat_header("k", m, n) + "\n";
  for (std::size_t k = 0; k < sol.pi_matrices.size(); ++k) {
    std::vector<double> row{static_cast<double>(k)};
    append_flat(row, sol.pi_matrices[k]);
    if (k < sol.horizon()) {
      append_flat(row, sol.gains[k]);
      riccati += io::csv_row(row);
    } else {
      std::string line = io::csv_row(row);
      line.pop_back();
      riccati += line + std::string(static_cast<std::size_t>(m * n), ',') + "\n";
    }
  }
  std::string noise = "stage,eta" + flat_header("sigma", m, m);
  for (Eigen::Index i = 0; i < m; ++i) { noise += ",radius" + std::to_string(i); }
  noise += "\n";
  for (std::size_t k = 0; k < sol.horizon(); ++k) {
    std::vector<double> row{static_cast<double>(k), sol.etas[k]};
    append_flat(row, sol.noise_covariances[k]);
    row.insert(row.end(), sol.support_radii[k].data(), sol.support_radii[k].data() + m);
    noise += io::csv_row(row);
  }
  auto matrix_json = [](const Eigen::MatrixXd & a) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < a.rows(); ++r) {
      json row = json::array();
      for (Eigen::Index c = 0; c < a.cols(); ++c) { row.push_back(a(r, c)); }
      rows.push_back(row);
    }
    return rows;
  };
  json stationary{
    {"pi", matrix_json(st.pi)},
    {"gain", matrix_json(st.gain)},
    {"r_tilde", matrix_json(st.r_tilde)},
    {"noise_covariance", matrix_json(st.noise_covariance)},
    {"eta", st.eta},
    {"support_radii", std::vector<double>(st.support_radii.data(), st.support_radii.data() + st.support_radii.size())},
    {"iterations", st.iterations},
    {"converged", st.converged}};
  run.files = {{"riccati.csv", riccati}, {"noise.csv", noise}, {"stationary.json", stationary.dump(2) + "\n"}};

  const QGaussian g = sol.noise(0);
  run.summary = {
    parameter, (sol.r_tilde[0] * sol.noise_covariances[0]).trace(), qgaussian_entropy(g), sol.support_radii.back().maxCoeff(), 0.0};
  return run;
}

Run execute(const io::LoadedInstance & loaded, double parameter, std::ostream & err)
{
  return std::visit(
    [&](const auto & inst) -> Run {
      using T = std::decay_t<decltype(inst)>;
      if constexpr (std::is_same_v<T, QklInstance>) {
        return execute_qkl(loaded, inst, parameter);
      } else if constexpr (std::is_same_v<T, FiniteTrocInstance>) {
        return execute_troc(loaded, inst, parameter);
      } else {
        return execute_qlqr(inst, parameter, err);
      }
    },
    loaded.instance);
}

double instance_q(const io::LoadedInstance & loaded) { return loaded.effective.at("q").get<double>(); }

std::string summary_csv(const std::vector<Summary> & rows)
{
  std::string out = "parameter,cost,entropy,support_radius,sparsity_count\n";
  for (const auto & r : rows) { out += io::csv_row({r.parameter, r.cost, r.entropy, r.support_radius, r.sparsity_count}); }
  return out;
}

json run_metadata(const io::LoadedInstance & loaded)
{
  return {
    {"kind", loaded.kind},
    {"instance_hash", io::hex64(loaded.hash)},
    {"q", loaded.effective.at("q")},
    {"lambda", loaded.effective.at("lambda")},
    {"horizon", loaded.effective.at("horizon")},
    {"seed", loaded.seed},
    {"effective_config", loaded.effective}};
}

/// Writes every file, then bundle.json listing them. Nothing touches disk before this point.
void emit(const std::filesystem::path & dir, const std::string & command, json metadata, const std::vector<OutputFile> & files,
          std::chrono::steady_clock::time_point started, std::ostream & out, json extra = json::object())
{
  std::filesystem::create_directories(dir);
  json manifest = json::array();
  for (const auto & f : files) {
    io::write_file_atomic(dir / f.name, f.content);
    manifest.push_back({{"name", f.name}, {"bytes", f.content.size()}, {"fnv1a64", io::hex64(io::fnv1a64(f.content))}});
  }
  metadata["command"] = command;
  metadata["schema_version"] = io::kSchemaVersion;
  metadata["wall_time_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  json bundle{{"run", metadata}, {"files", manifest}};
  for (auto it = extra.begin(); it != extra.end(); ++it) { bundle[it.key()] = it.value(); }
  io::write_file_atomic(dir / "bundle.json", bundle.dump(2) + "\n");
  out << "wrote " << files.size() + 1 << " files to " << dir.string() << "\n";
}

std::filesystem::path default_output_dir()
{
  const char * env = std::getenv("QCTL_OUTPUT_DIR");
  return (env && *env) ? std::filesystem::path(env) : std::filesystem::path("qctl_out");
}

struct CommonArgs
{
  std::string instance;
  std::string out;
  io::Overrides overrides;
};

void add_common(CLI::App * cmd, CommonArgs & args)
{
  cmd->add_option("instance", args.instance, "Instance JSON file")->required();
  cmd->add_option("--q", args.overrides.q, "Override the deformation parameter q in [0, 1)");
  cmd->add_option("--lambda", args.overrides.lambda, "Override the regularization weight");
  cmd->add_option("--horizon", args.overrides.horizon, "Override the horizon");
  cmd->add_option("--seed", args.overrides.seed, "Random seed");
  cmd->add_option("--out", args.out, "Output directory (default: $QCTL_OUTPUT_DIR or qctl_out)");
}

std::filesystem::path output_dir(const CommonArgs & args) { return args.out.empty() ? default_output_dir() : std::filesystem::path(args.out); }

int cmd_validate(const CommonArgs & args, std::ostream & out, std::ostream & err)
{
  const json doc = io::read_json_file(args.instance);
  const auto diagnostics = io::validate_instance_json(doc);
  if (diagnostics.empty()) {
    out << args.instance << ": valid " << doc.value("kind", "") << " instance\n";
    return kExitOk;
  }
  for (const auto & d : diagnostics) { err << args.instance << ": " << d << "\n"; }
  return kExitMalformed;
}

int cmd_solve(const CommonArgs & args, std::ostream & out, std::ostream & err)
{
  const auto started = std::chrono::steady_clock::now();
  const io::LoadedInstance loaded = io::load_instance_file(args.instance, args.overrides);
  Run run = execute(loaded, instance_q(loaded), err);
  run.solution["instance_hash"] = io::hex64(loaded.hash);
  std::vector<OutputFile> files{{"solution.json", run.solution.dump(2) + "\n"}};
  files.insert(files.end(), run.files.begin(), run.files.end());
  files.push_back({"summary.csv", summary_csv({run.summary})});
  emit(output_dir(args), "solve", run_metadata(loaded), files, started, out);
  return kExitOk;
}

int classify(const std::exception_ptr & e, std::string & message)
{
  try {
    std::rethrow_exception(e);
  } catch (const InfeasibleError & ex) {
    message = ex.what();
    return kExitInfeasible;
  } catch (const std::invalid_argument & ex) {
    message = ex.what();
    return kExitMalformed;
  } catch (const std::exception & ex) {
    message = ex.what();
    return kExitMalformed;
  }
}

int cmd_sweep(const CommonArgs & args, const std::string & parameter, const std::string & grid_text, std::ostream & out,
              std::ostream & err)
{
  const auto started = std::chrono::steady_clock::now();
  if (parameter != "q" && parameter != "lambda") { throw std::invalid_argument("--parameter must be \"q\" or \"lambda\""); }
  const std::vector<double> grid = parse_grid(grid_text);
  const json doc = io::read_json_file(args.instance);
  const io::LoadedInstance base = io::parse_instance(doc, args.overrides);

  std::vector<Summary> rows;
  json failures = json::array();
  int status = kExitOk;
  for (const double v : grid) {
    io::Overrides o = args.overrides;
    (parameter == "q" ? o.q : o.lambda) = v;
    try {
      rows.push_back(execute(io::parse_instance(doc, o), v, err).summary);
    } catch (...) {
      std::string message;
      const int code = classify(std::current_exception(), message);
      status = std::max(status, code);
      err << "sweep point " << parameter << "=" << io::format_double(v) << " failed: " << message << "\n";
      failures.push_back({{"value", v}, {"exit_code", code}, {"message", message}});
    }
  }
  json metadata = run_metadata(base);
  metadata["sweep_parameter"] = parameter;
  metadata["grid"] = grid;
  emit(output_dir(args), "sweep", metadata, {{"summary.csv", summary_csv(rows)}}, started, out, {{"failures", failures}});
  return status;
}

json load_solution_checked(const std::string & path, const io::LoadedInstance & loaded)
{
  const json sol = io::read_json_file(path);
  if (!sol.is_object() || sol.value("kind", "") != loaded.kind || sol.value("instance_hash", "") != io::hex64(loaded.hash)) {
    throw InfeasibleError("solution '" + path + "' does not belong to instance (kind or instance_hash mismatch)");
  }
  return sol;
}

int cmd_simulate(const CommonArgs & args, const std::string & solution_path, std::size_t trajectories, std::size_t steps,
                 std::ostream & out)
{
  const auto started = std::chrono::steady_clock::now();
  const io::LoadedInstance loaded = io::load_instance_file(args.instance, args.overrides);
  const json doc = load_solution_checked(solution_path, loaded);
  std::vector<OutputFile> files;

  if (const auto * inst = std::get_if<QlqrInstance>(&loaded.instance)) {
    const QlqrSolution sol = io::qlqr_solution_from_json(doc);
    const Eigen::Index n = inst->state_dim();
    const Eigen::Index m = inst->input_dim();
    const std::vector<StateBounds> env = support_envelope(*inst, sol, inst->initial_set_radius, steps);
    if (trajectories > 0) {
      const TrajectoryEnsemble ens = simulate_closed_loop(*inst, sol, trajectories, loaded.seed, steps);
      std::string csv = header("stage,trajectory", "x", n);
      csv.pop_back();
      for (Eigen::Index i = 0; i < m; ++i) { csv += ",u" + std::to_string(i); }
      csv += "\n";
      for (std::size_t k = 0; k < env.size(); ++k) {
        for (std::size_t t = 0; t < trajectories; ++t) {
          std::vector<double> row{static_cast<double>(k), static_cast<double>(t)};
          const Eigen::VectorXd & x = ens.states[t][k];
          row.insert(row.end(), x.data(), x.data() + n);
          if (k < ens.inputs[t].size()) {
            const Eigen::VectorXd & u = ens.inputs[t][k];
            row.insert(row.end(), u.data(), u.data() + m);
            csv += io::csv_row(row);
          } else {
            std::string line = io::csv_row(row);
            line.pop_back();
            csv += line + std::string(static_cast<std::size_t>(m), ',') + "\n";
          }
        }
      }
      files.push_back({"trajectories.csv", csv});
    }
    std::string envelope = "stage";
    for (Eigen::Index i = 0; i < n; ++i) { envelope += ",lower" + std::to_string(i) + ",upper" + std::to_string(i); }
    envelope += "\n";
    for (std::size_t k = 0; k < env.size(); ++k) {
      std::vector<double> row{static_cast<double>(k)};
      for (Eigen::Index i = 0; i < n; ++i) {
        row.push_back(env[k].lower(i));
        row.push_back(env[k].upper(i));
      }
      envelope += io::csv_row(row);
    }
    files.push_back({"envelope.csv", envelope});
  } else if (const auto * qkl = std::get_if<QklInstance>(&loaded.instance)) {
    const QklSolution sol = io::qkl_solution_from_json(doc);
    const std::size_t count = steps == 0 ? sol.horizon() : steps;
    if (trajectories > 0) {
      std::string csv = "stage,trajectory,state\n";
      std::vector<std::vector<std::size_t>> paths;
      for (std::size_t t = 0; t < trajectories; ++t) { paths.push_back(rollout(*qkl, sol, count, derive_seed(loaded.seed, t))); }
      for (std::size_t k = 0; k <= count; ++k) {
        for (std::size_t t = 0; t < trajectories; ++t) {
          csv += io::csv_row({static_cast<double>(k), static_cast<double>(t), static_cast<double>(paths[t][k])});
        }
      }
      files.push_back({"trajectories.csv", csv});
    }
  } else {
    const auto & troc = std::get<FiniteTrocInstance>(loaded.instance);
    const TrocSolution sol = io::troc_solution_from_json(doc);
    const std::size_t count = steps == 0 ? sol.policy.size() : steps;
    if (count > sol.policy.size()) { throw std::invalid_argument("simulate: more steps than solution stages"); }
    if (trajectories > 0) {
      const DiscreteDistribution initial = troc_initial(loaded, troc.num_states());
      std::string csv = "stage,trajectory,state,action\n";
      for (std::size_t t = 0; t < trajectories; ++t) {
        std::mt19937_64 rng(derive_seed(loaded.seed, t));
        std::discrete_distribution<std::size_t> start(initial.weights().begin(), initial.weights().end());
        std::size_t x = start(rng);
        for (std::size_t k = 0; k < count; ++k) {
          const auto w = sol.policy[k][x].weights();
          const std::size_t u = std::discrete_distribution<std::size_t>(w.begin(), w.end())(rng);
          csv += io::csv_row({static_cast<double>(k), static_cast<double>(t), static_cast<double>(x), static_cast<double>(u)});
          const Eigen::VectorXd row = troc.transitions[u].row(static_cast<Eigen::Index>(x));
          x = std::discrete_distribution<std::size_t>(row.data(), row.data() + row.size())(rng);
        }
        std::string line = io::csv_row({static_cast<double>(count), static_cast<double>(t), static_cast<double>(x)});
        line.pop_back();
        csv += line + ",\n";
      }
      files.push_back({"trajectories.csv", csv});
    }
  }
  json metadata = run_metadata(loaded);
  metadata["trajectories"] = trajectories;
  metadata["steps"] = steps;
  emit(output_dir(args), "simulate", metadata, files, started, out);
  return kExitOk;
}

}  // namespace

Summary summarize(const io::LoadedInstance & loaded, double parameter)
{
  std::ostringstream sink;
  return execute(loaded, parameter, sink).summary;
}

std::vector<double> parse_grid(const std::string & text)
{
  auto to_double = [&](const std::string & s) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(s, &used);
    } catch (const std::exception &) {
      used = 0;
    }
    if (used == 0 || used != s.size() || !std::isfinite(v)) { throw std::invalid_argument("--grid: cannot parse '" + s + "'"); }
    return v;
  };
  std::vector<double> grid;
  if (text.find(':') != std::string::npos) {
    std::vector<std::string> parts;
    std::stringstream ss(text);
    for (std::string p; std::getline(ss, p, ':');) { parts.push_back(p); }
    if (parts.size() != 3) { throw std::invalid_argument("--grid: expected start:stop:step"); }
    const double start = to_double(parts[0]);
    const double stop = to_double(parts[1]);
    const double step = to_double(parts[2]);
    if (!(step > 0.0) || stop < start) { throw std::invalid_argument("--grid: need step > 0 and stop >= start"); }
    const auto count = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9)) + 1;
    for (std::size_t i = 0; i < count; ++i) { grid.push_back(std::round((start + static_cast<double>(i) * step) * 1e12) / 1e12); }
  } else {
    std::stringstream ss(text);
    for (std::string p; std::getline(ss, p, ',');) { grid.push_back(to_double(p)); }
  }
  if (grid.empty()) { throw std::invalid_argument("--grid: empty grid"); }
  return grid;
}

int run(int argc, const char * const * argv, std::ostream & out, std::ostream & err)
{
  CLI::App app{"Tsallis-entropy-regularized optimal control", "qctl"};
  app.require_subcommand(1);

  CommonArgs args;
  std::string parameter = "q";
  std::string grid;
  std::string solution;
  std::size_t trajectories = 100;
  std::size_t steps = 0;

  auto * solve = app.add_subcommand("solve", "Solve an instance and write solution files");
  add_common(solve, args);
  auto * sweep = app.add_subcommand("sweep", "Re-solve over a grid of q or lambda values");
  add_common(sweep, args);
  sweep->add_option("--parameter", parameter, "Swept parameter: q or lambda")->check(CLI::IsMember({"q", "lambda"}));
  sweep->add_option("--grid", grid, "Comma list or start:stop:step")->required();
  auto * simulate = app.add_subcommand("simulate", "Sample trajectories from a stored solution");
  add_common(simulate, args);
  simulate->add_option("--solution", solution, "solution.json written by solve")->required();
  simulate->add_option("--trajectories", trajectories, "Number of trajectories");
  simulate->add_option("--steps", steps, "Stages to simulate (default: solution horizon)");
  auto * validate = app.add_subcommand("validate", "Schema-check an instance file");
  validate->add_option("instance", args.instance, "Instance JSON file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError & e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitMalformed;
  }

  try {
    if (*validate) { return cmd_validate(args, out, err); }
    if (*solve) { return cmd_solve(args, out, err); }
    if (*sweep) { return cmd_sweep(args, parameter, grid, out, err); }
    return cmd_simulate(args, solution, trajectories, steps, out);
  } catch (...) {
    std::string message;
    const int code = classify(std::current_exception(), message);
    err << "error: " << message << "\n";
    return code;
  }
}

int run(int argc, const char * const * argv) { return run(argc, argv, std::cout, std::cerr); }

}  // namespace qctl::cli
