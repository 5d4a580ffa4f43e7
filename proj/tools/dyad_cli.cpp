// Command-line front end: simulate, estimate, mc, spectrum, fnplot.
// Exit codes: 0 success, 1 config/usage error, 2 estimation error, 3 I/O error.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "dyad/harness.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

dyad::DesignSpec load_design_arg(int standard_index, const std::string& config_path) {
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    if (!in) throw dyad::io_error("cannot open design config " + config_path);
    json j;
    try {
      in >> j;
    } catch (const json::exception& e) {
      throw dyad::config_error(std::string("design config parse error: ") + e.what());
    }
    return dyad::design_spec_from_json(j);
  }
  if (standard_index < 1 || standard_index > 4)
    throw dyad::config_error("--design must be 1..4 (or use --config)");
  return dyad::standard_designs()[static_cast<std::size_t>(standard_index - 1)];
}

json vector_to_json(const dyad::Vector& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

json matrix_to_json(const dyad::Matrix& m) {
  json rows = json::array();
  for (dyad::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (dyad::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_estimate_outputs(const dyad::PipelineResult& pr, dyad::Index n,
                            const std::string& out_dir) {
  fs::create_directories(out_dir);
  const dyad::InferenceReport& inf = pr.inference;
  json j;
  j["n"] = n;
  j["method"] = dyad::to_string(pr.estimate.method);
  j["first_stage"] = vector_to_json(pr.first_stage.mu_hat);
  j["mu_hat"] = vector_to_json(pr.estimate.mu_hat);
  j["lambda_lead"] = pr.estimate.lambda_lead;
  j["delta_hat"] = inf.effects.delta_hat;
  j["moments"] = {{"m1", inf.effects.m1}, {"m2", inf.effects.m2}, {"m3", inf.effects.m3}};
  j["bias"] = vector_to_json(inf.bias);
  j["sigma_eps2"] = inf.sigma_eps2;
  j["sigma_v2"] = inf.sigma_v2;
  j["sigma_v2_degenerate"] = inf.sigma_v2_degenerate;
  j["covariance"] = matrix_to_json(inf.covariance);
  j["std_errors"] = vector_to_json(inf.std_errors);
  j["point"] = vector_to_json(inf.point);
  j["ci_lower"] = vector_to_json(inf.ci_lower);
  j["ci_upper"] = vector_to_json(inf.ci_upper);
  j["level"] = inf.level;
  std::ofstream jr(fs::path(out_dir) / "report.json", std::ios::binary);
  if (!jr) throw dyad::io_error("cannot write report.json");
  jr << j.dump(2) << '\n';

  std::ofstream cs(fs::path(out_dir) / "summary.csv", std::ios::binary);
  if (!cs) throw dyad::io_error("cannot write summary.csv");
  cs << "coefficient,estimate,debiased,std_error,ci_lower,ci_upper\n";
  for (dyad::Index l = 0; l < pr.estimate.mu_hat.size(); ++l)
    cs << l << ',' << dyad::format_g17(pr.estimate.mu_hat(l)) << ','
       << dyad::format_g17(inf.point(l)) << ',' << dyad::format_g17(inf.std_errors(l)) << ','
       << dyad::format_g17(inf.ci_lower(l)) << ',' << dyad::format_g17(inf.ci_upper(l)) << '\n';
}

std::vector<double> parse_grid(const std::string& s) {
  // "lo:hi:step"
  double lo, hi, step;
  if (std::sscanf(s.c_str(), "%lf:%lf:%lf", &lo, &hi, &step) != 3 || step <= 0.0 || hi < lo)
    throw dyad::config_error("--grid must be lo:hi:step with step > 0");
  std::vector<double> g;
  for (double v = lo; v <= hi + 0.5 * step; v += step) g.push_back(v);
  return g;
}

dyad::ParamVector parse_mu(const std::string& s) {
  std::vector<double> vals;
  std::string cur;
  for (char c : s + ",") {
    if (c == ',') {
      if (!cur.empty()) vals.push_back(std::stod(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  return Eigen::Map<const dyad::Vector>(vals.data(), static_cast<dyad::Index>(vals.size()));
}

int run(int argc, char** argv) {
  CLI::App app{"Eigenvalue-corrected least squares for dyadic regression"};
  app.require_subcommand(1);

  // simulate
  auto* sim_cmd = app.add_subcommand("simulate", "Simulate a design and write an edge-list CSV");
  int sim_design = 0;
  std::string sim_config, sim_out = ".";
  std::uint64_t sim_seed = 0;
  bool sim_seed_set = false;
  sim_cmd->add_option("--design", sim_design, "Standard design index (1..4)");
  sim_cmd->add_option("--config", sim_config, "Design spec JSON file");
  sim_cmd->add_option("--out", sim_out, "Output directory");
  sim_cmd->add_option("--seed", sim_seed, "Seed override")->each([&](const std::string&) {
    sim_seed_set = true;
  });

  // estimate
  auto* est_cmd = app.add_subcommand("estimate", "Estimate from an edge-list CSV");
  std::string est_in, est_out = ".", est_name = "two_step";
  double est_level = 0.95;
  est_cmd->add_option("--in", est_in, "Edge-list CSV")->required();
  est_cmd->add_option("--out", est_out, "Output directory");
  est_cmd->add_option("--estimator", est_name,
                      "ols|ols_adjusted|single_iteration|fixed_point|two_step");
  est_cmd->add_option("--level", est_level, "Confidence level");

  // mc
  auto* mc_cmd = app.add_subcommand("mc", "Monte Carlo sweep from a config file");
  std::string mc_config, mc_out;
  std::uint64_t mc_seed = 0;
  bool mc_seed_set = false;
  mc_cmd->add_option("--config", mc_config, "RunConfig JSON")->required();
  mc_cmd->add_option("--out", mc_out, "Output directory (overrides config output_dir)");
  mc_cmd->add_option("--seed", mc_seed, "Master seed override")->each([&](const std::string&) {
    mc_seed_set = true;
  });

  // spectrum
  auto* sp_cmd = app.add_subcommand("spectrum", "Eigenvalues of the residual matrix to CSV");
  std::string sp_in, sp_out = ".", sp_mu, sp_config;
  int sp_design = 0;
  std::uint64_t sp_seed = 0;
  bool sp_seed_set = false;
  sp_cmd->add_option("--in", sp_in, "Edge-list CSV input");
  sp_cmd->add_option("--design", sp_design, "Standard design index (1..4)");
  sp_cmd->add_option("--config", sp_config, "Design spec JSON file");
  sp_cmd->add_option("--seed", sp_seed, "Seed override for simulated input")
      ->each([&](const std::string&) { sp_seed_set = true; });
  sp_cmd->add_option("--mu", sp_mu, "Coefficients for M(mu), comma separated");
  sp_cmd->add_option("--out", sp_out, "Output directory");

  // fnplot
  auto* fn_cmd = app.add_subcommand("fnplot", "Profile f_N and the corrected objective");
  std::string fn_in, fn_config, fn_out = ".", fn_grid = "-1:3:0.01";
  std::uint64_t fn_seed = 0;
  bool fn_seed_set = false;
  fn_cmd->add_option("--in", fn_in, "Edge-list CSV (one regressor)");
  fn_cmd->add_option("--config", fn_config, "Design spec JSON (one regressor)");
  fn_cmd->add_option("--seed", fn_seed, "Seed override for simulated input")
      ->each([&](const std::string&) { fn_seed_set = true; });
  fn_cmd->add_option("--grid", fn_grid, "Grid as lo:hi:step");
  fn_cmd->add_option("--out", fn_out, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n\n" << app.help() << std::flush;
    return 1;
  }

  if (sim_cmd->parsed()) {
    dyad::DesignSpec spec = load_design_arg(sim_design, sim_config);
    if (sim_seed_set) spec.seed = sim_seed;
    const dyad::Simulation sim = dyad::simulate(spec);
    fs::create_directories(sim_out);
    dyad::save_edge_list(sim.design, sim.y, (fs::path(sim_out) / "edges.csv").string());
    std::cout << "wrote " << (fs::path(sim_out) / "edges.csv").string() << " (n=" << spec.n
              << ", L=" << sim.design.l() << ")\n";
  } else if (est_cmd->parsed()) {
    const dyad::EdgeListDataset data = dyad::load_edge_list(est_in);
    dyad::Method method = dyad::Method::two_step;
    {
      const std::string& s = est_name;
      if (s == "ols") method = dyad::Method::ols;
      else if (s == "ols_adjusted") method = dyad::Method::ols_adjusted;
      else if (s == "single_iteration") method = dyad::Method::single_iteration;
      else if (s == "fixed_point") method = dyad::Method::fixed_point;
      else if (s == "two_step") method = dyad::Method::two_step;
      else throw dyad::config_error("unknown estimator: " + s);
    }
    const dyad::PipelineResult pr =
        dyad::estimate_with_inference(data.design, data.y, method, est_level);
    write_estimate_outputs(pr, data.design.n(), est_out);
    std::cout << "wrote " << (fs::path(est_out) / "report.json").string() << "\n";
  } else if (mc_cmd->parsed()) {
    dyad::RunConfig config = dyad::load_run_config(mc_config);
    if (mc_seed_set) config.seed = mc_seed;
    if (!mc_out.empty()) config.output_dir = mc_out;
    if (config.output_dir.empty()) config.output_dir = ".";
    const dyad::McResult result = dyad::run_monte_carlo(config);
    dyad::write_mc_summary(result, config.output_dir);
    std::cout << "wrote " << (fs::path(config.output_dir) / "summary.csv").string() << " ("
              << result.cells.size() << " cells)\n";
  } else if (sp_cmd->parsed()) {
    fs::create_directories(sp_out);
    dyad::Vector eigenvalues;
    if (!sp_in.empty()) {
      const dyad::EdgeListDataset data = dyad::load_edge_list(sp_in);
      dyad::ParamVector mu = sp_mu.empty() ? dyad::first_stage(data.design, data.y).mu_hat
                                           : parse_mu(sp_mu);
      eigenvalues = dyad::eigenvalues_sym(
          dyad::build_residual_matrix(data.design, data.y, mu).m);
    } else {
      dyad::DesignSpec spec = load_design_arg(sp_design, sp_config);
      if (sp_seed_set) spec.seed = sp_seed;
      const dyad::Simulation sim = dyad::simulate(spec);
      const dyad::ParamVector mu = sp_mu.empty() ? sim.truth.mu0 : parse_mu(sp_mu);
      eigenvalues =
          dyad::eigenvalues_sym(dyad::build_residual_matrix(sim.design, sim.y, mu).m);
    }
    dyad::export_spectrum(eigenvalues, (fs::path(sp_out) / "spectrum.csv").string());
    std::cout << "wrote " << (fs::path(sp_out) / "spectrum.csv").string() << "\n";
  } else if (fn_cmd->parsed()) {
    fs::create_directories(fn_out);
    const std::vector<double> grid = parse_grid(fn_grid);
    const std::string path = (fs::path(fn_out) / "fn_profile.csv").string();
    if (!fn_in.empty()) {
      const dyad::EdgeListDataset data = dyad::load_edge_list(fn_in);
      dyad::emit_fn_profile(data.design, data.y, grid, path);
    } else {
      dyad::DesignSpec spec = load_design_arg(0, fn_config);
      if (fn_seed_set) spec.seed = fn_seed;
      const dyad::Simulation sim = dyad::simulate(spec);
      dyad::emit_fn_profile(sim.design, sim.y, grid, path);
    }
    std::cout << "wrote " << path << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const dyad::io_error& e) {
    std::cerr << "io error: " << e.what() << '\n';
    return 3;
  } catch (const dyad::estimation_error& e) {
    std::cerr << "estimation error: " << e.what() << '\n';
    return 2;
  } catch (const dyad::numerical_error& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return 2;
  } catch (const dyad::error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
