// Command-line front end: tabulate coefficient maps, run step-size sweeps over
// benchmark targets, and recompute diagnostics from stored traces.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "saia/adapt.hpp"
#include "saia/diagnostics.hpp"
#include "saia/model.hpp"
#include "saia/sampler.hpp"

namespace {

using namespace saia;

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

struct Benchmark {
  std::string name;
  TargetModel model;
};

Benchmark parse_benchmark(const std::string& s, std::uint64_t seed) {
  if (s == "gaussian1") return {s, make_gaussian_wishart(1000, seed).to_model()};
  if (s == "gaussian2")
    return {s, make_gaussian_diag_mixture(990, 10, 1000.0, 10.0, 4000.0, 40.0, seed).to_model()};
  if (s.rfind("wishart:", 0) == 0) {
    const int d = std::stoi(s.substr(8));
    return {s, make_gaussian_wishart(d, seed).to_model()};
  }
  if (s.rfind("blr:", 0) == 0) {
    const auto data = load_dataset(s.substr(4), CsvLabelColumn::last, true, true);
    return {s, make_blr_model(data)};
  }
  throw CLI::ValidationError("--benchmark",
                             "expected gaussian1, gaussian2, wishart:D or blr:path, got " + s);
}

struct IntegratorChoice {
  std::string label;
  int stages = 1;
  enum class Kind { fixed, s_aia, aia } kind = Kind::fixed;
  SplittingScheme scheme;  // fixed only
};

IntegratorChoice parse_integrator(const std::string& label) {
  using K = IntegratorChoice::Kind;
  static const std::map<std::string, SplittingScheme> fixed = {
      {"VV", SplittingScheme::verlet()},   {"VV2", SplittingScheme::vv2()},
      {"VV3", SplittingScheme::vv3()},     {"BCSS2", SplittingScheme::bcss2()},
      {"BCSS3", SplittingScheme::bcss3()}, {"ME2", SplittingScheme::me2()},
      {"ME3", SplittingScheme::me3()}};
  if (auto it = fixed.find(label); it != fixed.end())
    return {label, it->second.stages, K::fixed, it->second};
  if (label == "AIA2") return {label, 2, K::aia, {}};
  if (label == "sAIA2") return {label, 2, K::s_aia, {}};
  if (label == "sAIA3") return {label, 3, K::s_aia, {}};
  throw CLI::ValidationError("--integrators", "unknown integrator label " + label);
}

int cmd_tabulate(int k, int n_grid, const std::string& out) {
  save_bopt_table(tabulate_bopt(k, n_grid), out);
  std::cout << "wrote " << out << "\n";
  return 0;
}

struct RunOptions {
  std::string benchmark;
  std::vector<std::string> integrators;
  int grid = 20;
  int reps = 10;
  std::string out = ".";
  bool traces = false;
  HmcConfig config;
};

void write_trace(const std::string& path, const std::string& label, int grid_index, int rep,
                 double dt_center, const ChainRecord& record) {
  std::ofstream out(path);
  out << "# saia-trace v1\n";
  out << "# integrator=" << label << "\n";
  out << "# stages=" << record.stages << "\n";
  out << "# lbar=" << fmt(record.lbar) << "\n";
  out << "# grid_index=" << grid_index << "\n";
  out << "# rep=" << rep << "\n";
  out << "# dt_center=" << fmt(dt_center) << "\n";
  out << "accepted,delta_h";
  for (int j = 0; j < record.samples.cols(); ++j) out << ",theta" << j;
  out << "\n";
  for (int i = 0; i < record.samples.rows(); ++i) {
    out << int(record.accepted[i]) << ',' << fmt(record.delta_h[i]);
    for (int j = 0; j < record.samples.cols(); ++j) out << ',' << fmt(record.samples(i, j));
    out << "\n";
  }
}

// Per-run RNG stream: independent of which other integrators were requested.
std::uint64_t run_stream(const std::string& label, int rep, int grid_index) {
  std::uint64_t h = 1469598103934665603ULL;
  for (char c : label) h = (h ^ std::uint64_t(c)) * 1099511628211ULL;
  h = (h ^ std::uint64_t(rep + 1)) * 1099511628211ULL;
  h = (h ^ std::uint64_t(grid_index)) * 1099511628211ULL;
  return h | 1;  // stream 0 is reserved for tuning/burn-in
}

int cmd_run(const RunOptions& opt) {
  namespace fs = std::filesystem;
  opt.config.validate();
  fs::create_directories(opt.out);

  const Benchmark bench = parse_benchmark(opt.benchmark, opt.config.seed);
  std::vector<IntegratorChoice> choices;
  bool need2 = false, need3 = false;
  for (const auto& label : opt.integrators) {
    choices.push_back(parse_integrator(label));
    need2 |= choices.back().kind != IntegratorChoice::Kind::fixed && choices.back().stages == 2;
    need3 |= choices.back().kind == IntegratorChoice::Kind::s_aia && choices.back().stages == 3;
  }
  if (choices.empty()) throw CLI::ValidationError("--integrators", "at least one label required");

  BOptTable table2, table3;
  if (need2) table2 = load_or_tabulate(2, opt.config.bopt_grid, opt.out);
  if (need3) table3 = load_or_tabulate(3, opt.config.bopt_grid, opt.out);

  // one tuning + burn-in per repetition, shared by every integrator and grid point
  std::vector<PipelineState> states;
  for (int r = 0; r < opt.reps; ++r) {
    Rng rng = make_rng(opt.config.seed, 2 * r);
    const double dt_vv = tune_step_size(bench.model, opt.config, rng);
    states.push_back(burn_in(bench.model, dt_vv, opt.config, rng));
  }

  std::ofstream runs(fs::path(opt.out) / "runs.csv");
  runs << "integrator,grid_index,rep,dt_center,ar,min_ess,min_ess_norm,min_inv_mcse_norm,"
          "max_divergences\n";
  std::ofstream summary(fs::path(opt.out) / "summary.csv");
  summary << "# benchmark=" << bench.name << "\n";
  summary << "# dimension=" << bench.model.dimension << "\n";
  summary << "# seed=" << opt.config.seed << "\n";
  summary << "# AR_burnin=" << fmt(states[0].ar_burnin) << "\n";
  summary << "# S=" << fmt(states[0].fit.s) << "\n";
  summary << "# S_omega=" << fmt(states[0].fit.s_omega) << "\n";
  summary << "# sigma=" << fmt(states[0].freq.sigma) << "\n";
  summary << "# dt_VV=" << fmt(states[0].dt_vv) << "\n";

  struct Cell {
    double dt_center = 0.0;
    double ar = 0.0, ess_n = 0.0, mcse_n = 0.0;
    std::vector<Eigen::MatrixXd> chains;
  };

  std::ostringstream body;
  for (const auto& choice : choices) {
    // dimensional stability limit for this integrator's stage count
    std::vector<double> sl(opt.reps);
    std::vector<PipelineState> local = states;
    for (int r = 0; r < opt.reps; ++r)
      sl[r] = estimate_stability_limit(choice.stages, local[r].fit, local[r].freq);
    summary << "# dt_SL[" << choice.label << "]=" << fmt(sl[0]) << "\n";

    HmcConfig cfg = opt.config;
    cfg.stages = choice.stages;
    for (int i = 1; i <= opt.grid; ++i) {
      Cell cell;
      for (int r = 0; r < opt.reps; ++r) {
        const double dt_center = i * sl[r] / opt.grid;
        ProductionPolicy policy;
        switch (choice.kind) {
          case IntegratorChoice::Kind::fixed:
            policy = ProductionPolicy::fixed(choice.scheme);
            break;
          case IntegratorChoice::Kind::s_aia:
            policy = ProductionPolicy::s_aia(choice.stages == 2 ? table2 : table3);
            break;
          case IntegratorChoice::Kind::aia:
            policy = ProductionPolicy::aia(table2);
            break;
        }
        Rng rng = make_rng(opt.config.seed, run_stream(choice.label, r, i));
        const ChainRecord record =
            production(bench.model, local[r], policy, cfg, rng, dt_center, cfg.n_pr);
        const DiagnosticsReport report = efficiency_summary(record);
        runs << choice.label << ',' << i << ',' << r << ',' << fmt(dt_center) << ','
             << fmt(report.ar) << ',' << fmt(report.min_ess) << ','
             << fmt(report.min_ess_normalized) << ',' << fmt(report.min_inv_mcse_normalized)
             << ',' << record.divergences << "\n";
        if (opt.traces) {
          std::ostringstream name;
          name << "trace_" << choice.label << "_g" << i << "_r" << r << ".csv";
          write_trace((fs::path(opt.out) / name.str()).string(), choice.label, i, r, dt_center,
                      record);
        }
        cell.dt_center += dt_center / opt.reps;
        cell.ar += report.ar / opt.reps;
        cell.ess_n += report.min_ess_normalized / opt.reps;
        cell.mcse_n += report.min_inv_mcse_normalized / opt.reps;
        cell.chains.push_back(record.samples);
      }
      const double psrf = cell.chains.size() >= 2 ? max_psrf(cell.chains) : 1.0;
      body << choice.label << ',' << i << ',' << fmt(cell.dt_center) << ',' << fmt(cell.ar)
           << ',' << fmt(cell.ess_n) << ',' << fmt(cell.mcse_n) << ',' << fmt(psrf) << "\n";
    }
  }
  summary << "integrator,grid_index,dt_center,ar,min_ess_norm,min_inv_mcse_norm,max_psrf\n";
  summary << body.str();
  std::cout << "wrote " << (fs::path(opt.out) / "summary.csv").string() << "\n";
  return 0;
}

struct Trace {
  std::string label;
  ChainRecord record;
};

Trace read_trace(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("analyze: cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || line.rfind("# saia-trace v1", 0) != 0)
    throw std::runtime_error("analyze: " + path + ": not a saia-trace v1 file");
  Trace trace;
  std::vector<std::vector<double>> rows;
  std::vector<char> accepted;
  std::vector<double> dh;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      const std::string key = line.substr(2, eq - 2);
      const std::string val = line.substr(eq + 1);
      if (key == "integrator") trace.label = val;
      if (key == "stages") trace.record.stages = std::stoi(val);
      if (key == "lbar") trace.record.lbar = std::stod(val);
      continue;
    }
    if (line.rfind("accepted,", 0) == 0) continue;  // column header
    std::vector<double> row;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) row.push_back(std::stod(field));
    if (row.size() < 3) throw std::runtime_error("analyze: " + path + ": short row");
    accepted.push_back(row[0] != 0.0 ? 1 : 0);
    dh.push_back(row[1]);
    rows.push_back({row.begin() + 2, row.end()});
  }
  if (rows.empty()) throw std::runtime_error("analyze: " + path + ": no samples");
  trace.record.samples.resize(static_cast<Eigen::Index>(rows.size()),
                              static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      trace.record.samples(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          rows[i][j];
  trace.record.accepted = std::move(accepted);
  trace.record.delta_h = std::move(dh);
  return trace;
}

int cmd_analyze(const std::vector<std::string>& paths, const std::string& out_path) {
  std::vector<Trace> traces;
  for (const auto& p : paths) traces.push_back(read_trace(p));

  std::ostringstream out;
  out << "file,integrator,ar,min_ess,min_ess_norm,min_inv_mcse_norm\n";
  std::vector<Eigen::MatrixXd> chains;
  for (std::size_t i = 0; i < traces.size(); ++i) {
    const auto report = efficiency_summary(traces[i].record);
    out << paths[i] << ',' << traces[i].label << ',' << fmt(report.ar) << ','
        << fmt(report.min_ess) << ',' << fmt(report.min_ess_normalized) << ','
        << fmt(report.min_inv_mcse_normalized) << "\n";
    chains.push_back(traces[i].record.samples);
  }
  if (chains.size() >= 2) out << "# max_psrf=" << fmt(max_psrf(chains)) << "\n";

  if (out_path.empty()) {
    std::cout << out.str();
  } else {
    std::ofstream f(out_path);
    f << out.str();
  }
  return 0;
}

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

// Flat `key = value` file; a key is applied only when its flag was not given.
void apply_config(const std::string& path, const CLI::App& run, RunOptions& opt,
                  std::string& integrators_csv) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open " + path);
  const std::map<std::string, std::function<void(const std::string&)>> setters = {
      {"benchmark", [&](const std::string& v) { opt.benchmark = v; }},
      {"integrators", [&](const std::string& v) { integrators_csv = v; }},
      {"grid", [&](const std::string& v) { opt.grid = std::stoi(v); }},
      {"reps", [&](const std::string& v) { opt.reps = std::stoi(v); }},
      {"seed", [&](const std::string& v) { opt.config.seed = std::stoull(v); }},
      {"out", [&](const std::string& v) { opt.out = v; }},
      {"i-omega", [&](const std::string& v) { opt.config.i_omega = v == "true" || v == "1"; }},
      {"tau", [&](const std::string& v) { opt.config.tau = std::stod(v); }},
      {"alpha-target", [&](const std::string& v) { opt.config.alpha_target = std::stod(v); }},
      {"n-tune", [&](const std::string& v) { opt.config.n_tune = std::stoi(v); }},
      {"n-burnin", [&](const std::string& v) { opt.config.n_burnin = std::stoi(v); }},
      {"n-pr", [&](const std::string& v) { opt.config.n_pr = std::stoi(v); }},
      {"n-grid", [&](const std::string& v) { opt.config.bopt_grid = std::stoi(v); }},
      {"traces", [&](const std::string& v) { opt.traces = v == "true" || v == "1"; }},
  };
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("config: " + path + ":" + std::to_string(lineno) +
                               ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    const auto it = setters.find(key);
    if (it == setters.end())
      throw std::runtime_error("config: " + path + ":" + std::to_string(lineno) +
                               ": unknown key " + key);
    if (run.count("--" + key) == 0) it->second(val);
  }
}

}  // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{"adaptive multi-stage splitting HMC experiments"};
  app.require_subcommand(1);

  int k = 2, n_grid = 2000;
  std::string tab_out = "bopt.csv";
  auto* tab = app.add_subcommand("tabulate", "tabulate the minimax coefficient map");
  tab->add_option("--k", k, "number of stages (2 or 3)")->check(CLI::IsMember({2, 3}));
  tab->add_option("--n-grid", n_grid, "grid resolution")->check(CLI::PositiveNumber);
  tab->add_option("--out", tab_out, "output CSV path");

  RunOptions opt;
  std::string integrators_csv;
  std::string config_path;
  auto* run = app.add_subcommand("run", "run a step-size sweep on a benchmark");
  run->add_option("--config", config_path, "flat key = value config file; flags override");
  run->add_option("--benchmark", opt.benchmark, "gaussian1 | gaussian2 | wishart:D | blr:path");
  run->add_option("--integrators", integrators_csv, "comma-separated integrator labels");
  run->add_option("--grid", opt.grid, "step-size grid points")->check(CLI::PositiveNumber);
  run->add_option("--reps", opt.reps, "repetitions per grid point")->check(CLI::PositiveNumber);
  run->add_option("--seed", opt.config.seed, "master seed");
  run->add_option("--out", opt.out, "output directory");
  run->add_flag("--i-omega", opt.config.i_omega, "force the frequency-based fitting factor");
  run->add_option("--tau", opt.config.tau, "trajectory-length constant");
  run->add_option("--alpha-target", opt.config.alpha_target, "tuning acceptance target");
  run->add_option("--n-tune", opt.config.n_tune, "tuning iterations");
  run->add_option("--n-burnin", opt.config.n_burnin, "burn-in iterations");
  run->add_option("--n-pr", opt.config.n_pr, "production iterations");
  run->add_option("--n-grid", opt.config.bopt_grid, "coefficient-table resolution");
  run->add_flag("--traces", opt.traces, "write per-run trace files");

  std::vector<std::string> trace_paths;
  std::string analyze_out;
  auto* analyze = app.add_subcommand("analyze", "recompute diagnostics from stored traces");
  analyze->add_option("traces", trace_paths, "trace CSV files")->required();
  analyze->add_option("--out", analyze_out, "output CSV path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;  // usage errors -> 1, --help -> 0
  }

  try {
    if (tab->parsed()) return cmd_tabulate(k, n_grid, tab_out);
    if (run->parsed()) {
      if (!config_path.empty()) apply_config(config_path, *run, opt, integrators_csv);
      if (opt.benchmark.empty() || integrators_csv.empty()) {
        std::cerr << "--benchmark and --integrators are required (flag or config file)\n";
        return 1;
      }
      std::stringstream ss(integrators_csv);
      std::string label;
      while (std::getline(ss, label, ',')) {
        if (!label.empty()) opt.integrators.push_back(label);
      }
      return cmd_run(opt);
    }
    return cmd_analyze(trace_paths, analyze_out);
  } catch (const CLI::ValidationError& e) {
    std::cerr << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
