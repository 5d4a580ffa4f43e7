#pragma once

// Monte Carlo orchestration across designs, estimators and sample sizes,
// edge-list ingestion, and the CSV/JSON emitters. All floating-point output
// uses 17 significant digits so values round-trip through parsing.

#include <atomic>
#include <chrono>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "dyad/dgp.hpp"
#include "dyad/errors.hpp"
#include "dyad/inference.hpp"

namespace dyad {

inline std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace detail {

inline double parse_double(const std::string& tok, std::size_t line_no) {
  const char* begin = tok.c_str();
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(begin, &end);
  while (end && *end == ' ') ++end;
  if (end == begin || (end && *end != '\0') || errno == ERANGE)
    throw io_error("non-numeric cell '" + tok + "' at line " + std::to_string(line_no));
  return v;
}

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

inline unsigned worker_count() {
  if (const char* env = std::getenv("DYAD_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v > 0) return static_cast<unsigned>(v);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? hw : 1;
}

template <typename Fn>
void parallel_for(std::size_t count, Fn&& fn) {
  const unsigned workers = std::min<std::size_t>(worker_count(), count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) fn(i);
    });
  for (auto& t : pool) t.join();
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Edge-list ingestion

struct EdgeListDataset {
  DyadicDesign design;
  OutcomeMatrix y;
  std::vector<long long> node_labels;  // original labels, sorted
};

// CSV with header i,j,y,x1..xL over the complete graph (every unordered pair
// exactly once). Node labels are mapped to contiguous indices.
inline EdgeListDataset load_edge_list(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("load_edge_list: cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw io_error("load_edge_list: empty file " + path);
  const std::vector<std::string> header = detail::split_csv(line);
  if (header.size() < 4 || header[0] != "i" || header[1] != "j" || header[2] != "y")
    throw io_error("load_edge_list: header must be i,j,y,x1..xL");
  const std::size_t l = header.size() - 3;
  for (std::size_t k = 0; k < l; ++k)
    if (header[3 + k] != "x" + std::to_string(k + 1))
      throw io_error("load_edge_list: unexpected column name '" + header[3 + k] + "'");

  struct Row {
    long long i, j;
    double y;
    std::vector<double> x;
  };
  std::vector<Row> rows;
  std::map<long long, Index> labels;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::vector<std::string> tok = detail::split_csv(line);
    if (tok.size() != header.size())
      throw io_error("load_edge_list: wrong column count at line " + std::to_string(line_no));
    Row r;
    r.i = static_cast<long long>(detail::parse_double(tok[0], line_no));
    r.j = static_cast<long long>(detail::parse_double(tok[1], line_no));
    if (r.i == r.j)
      throw io_error("load_edge_list: self loop (" + std::to_string(r.i) + "," +
                     std::to_string(r.j) + ") at line " + std::to_string(line_no));
    r.y = detail::parse_double(tok[2], line_no);
    for (std::size_t k = 0; k < l; ++k)
      r.x.push_back(detail::parse_double(tok[3 + k], line_no));
    labels.emplace(r.i, 0);
    labels.emplace(r.j, 0);
    rows.push_back(std::move(r));
  }
  const Index n = static_cast<Index>(labels.size());
  if (n < 4) throw io_error("load_edge_list: needs at least 4 nodes");
  std::vector<long long> sorted_labels;
  sorted_labels.reserve(labels.size());
  for (auto& [label, idx] : labels) {
    idx = static_cast<Index>(sorted_labels.size());
    sorted_labels.push_back(label);
  }

  Matrix ym = Matrix::Zero(n, n);
  std::vector<Matrix> xs(l, Matrix::Zero(n, n));
  Matrix seen = Matrix::Zero(n, n);
  for (const Row& r : rows) {
    const Index a = labels[r.i];
    const Index b = labels[r.j];
    if (seen(a, b) != 0.0)
      throw io_error("load_edge_list: duplicate pair (" + std::to_string(r.i) + "," +
                     std::to_string(r.j) + ")");
    seen(a, b) = seen(b, a) = 1.0;
    ym(a, b) = ym(b, a) = r.y;
    for (std::size_t k = 0; k < l; ++k) xs[k](a, b) = xs[k](b, a) = r.x[k];
  }
  const auto expected = static_cast<std::ptrdiff_t>(n) * (n - 1) / 2;
  const auto present = static_cast<std::ptrdiff_t>(rows.size());
  if (present != expected)
    throw io_error("load_edge_list: incomplete graph, " +
                   std::to_string(expected - present) + " missing pair(s)");

  // A regressor that is exactly 1 off-diagonal is treated as the intercept.
  int intercept = -1;
  for (std::size_t k = 0; k < l && intercept < 0; ++k) {
    bool all_one = true;
    for (Index i = 0; i < n && all_one; ++i)
      for (Index j = 0; j < n; ++j)
        if (i != j && xs[k](i, j) != 1.0) {
          all_one = false;
          break;
        }
    if (all_one) intercept = static_cast<int>(k);
  }
  return {DyadicDesign(std::move(xs), intercept), OutcomeMatrix(std::move(ym)),
          std::move(sorted_labels)};
}

// Writes a simulated dataset as an edge list (rows i<j, 0-based labels).
inline void save_edge_list(const DyadicDesign& design, const OutcomeMatrix& y,
                           const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw io_error("save_edge_list: cannot open " + path);
  std::fputs("i,j,y", f);
  for (Index k = 0; k < design.l(); ++k) std::fprintf(f, ",x%lld", static_cast<long long>(k + 1));
  std::fputc('\n', f);
  for (Index i = 0; i < design.n(); ++i)
    for (Index j = i + 1; j < design.n(); ++j) {
      std::fprintf(f, "%lld,%lld,%s", static_cast<long long>(i), static_cast<long long>(j),
                   format_g17(y.y()(i, j)).c_str());
      for (Index k = 0; k < design.l(); ++k)
        std::fprintf(f, ",%s", format_g17(design.x(k)(i, j)).c_str());
      std::fputc('\n', f);
    }
  if (std::fclose(f) != 0) throw io_error("save_edge_list: write failed for " + path);
}

// ---------------------------------------------------------------------------
// Config

struct NamedDesign {
  std::string name;
  DesignSpec spec;
};

enum class McEstimator { ols, ols_adjusted, single_iteration, fixed_point, two_step, oracle_ols };

inline std::string to_string(McEstimator e) {
  switch (e) {
    case McEstimator::ols: return "ols";
    case McEstimator::ols_adjusted: return "ols_adjusted";
    case McEstimator::single_iteration: return "single_iteration";
    case McEstimator::fixed_point: return "fixed_point";
    case McEstimator::two_step: return "two_step";
    default: return "oracle_ols";
  }
}

inline McEstimator mc_estimator_from_string(const std::string& s) {
  if (s == "ols") return McEstimator::ols;
  if (s == "ols_adjusted") return McEstimator::ols_adjusted;
  if (s == "single_iteration") return McEstimator::single_iteration;
  if (s == "fixed_point") return McEstimator::fixed_point;
  if (s == "two_step") return McEstimator::two_step;
  if (s == "oracle_ols") return McEstimator::oracle_ols;
  throw config_error("unknown estimator: " + s);
}

struct RunConfig {
  std::vector<NamedDesign> designs;
  std::vector<McEstimator> estimators;
  int replications = 500;
  std::vector<Index> n_grid;
  std::uint64_t seed = 0;
  std::string output_dir;
  double ci_level = 0.95;

  void validate() const {
    if (designs.empty()) throw config_error("RunConfig: no designs");
    if (estimators.empty()) throw config_error("RunConfig: no estimators");
    if (replications < 1) throw config_error("RunConfig: replications must be >= 1");
    if (n_grid.empty()) throw config_error("RunConfig: empty n_grid");
    for (Index n : n_grid)
      if (n < 10) throw config_error("RunConfig: n_grid entries must be >= 10");
    if (!(ci_level > 0.0 && ci_level < 1.0))
      throw config_error("RunConfig: ci_level must be in (0,1)");
    for (const auto& d : designs) d.spec.validate();
  }
};

namespace detail {

inline void reject_unknown_keys(const nlohmann::json& j,
                                std::initializer_list<const char*> allowed,
                                const char* ctx) {
  for (const auto& item : j.items()) {
    bool ok = false;
    for (const char* k : allowed)
      if (item.key() == k) {
        ok = true;
        break;
      }
    if (!ok) throw config_error(std::string(ctx) + ": unknown key '" + item.key() + "'");
  }
}

inline DistSpec dist_from_json(const nlohmann::json& j, const char* ctx) {
  if (!j.is_object()) throw config_error(std::string(ctx) + ": distribution must be an object");
  reject_unknown_keys(j, {"name", "params"}, ctx);
  DistSpec d;
  d.name = j.at("name").get<std::string>();
  if (d.name != "normal" && d.name != "uniform")
    throw config_error(std::string(ctx) + ": unknown distribution '" + d.name + "'");
  const auto& p = j.at("params");
  if (!p.is_array() || p.size() != 2)
    throw config_error(std::string(ctx) + ": params must be [p1, p2]");
  d.p1 = p[0].get<double>();
  d.p2 = p[1].get<double>();
  return d;
}

inline nlohmann::json dist_to_json(const DistSpec& d) {
  return {{"name", d.name}, {"params", {d.p1, d.p2}}};
}

}  // namespace detail

inline DesignSpec design_spec_from_json(const nlohmann::json& j) {
  detail::reject_unknown_keys(j,
                              {"name", "n", "beta", "regressors", "gamma", "delta",
                               "effect_scale", "a_dist", "v_dist", "x_dist", "x_noise",
                               "seed"},
                              "design");
  DesignSpec d;
  if (j.contains("n")) d.n = j.at("n").get<Index>();
  if (!j.contains("beta") || !j.contains("regressors"))
    throw config_error("design: beta and regressors are required");
  const auto betas = j.at("beta").get<std::vector<double>>();
  d.beta = Eigen::Map<const Vector>(betas.data(), static_cast<Index>(betas.size()));
  for (const auto& r : j.at("regressors"))
    d.regressors.push_back(regressor_form_from_string(r.get<std::string>()));
  if (j.contains("gamma")) d.gamma = j.at("gamma").get<double>();
  if (j.contains("delta")) d.delta = j.at("delta").get<int>();
  if (j.contains("effect_scale")) d.effect_scale = j.at("effect_scale").get<double>();
  if (j.contains("a_dist")) d.a_dist = detail::dist_from_json(j.at("a_dist"), "a_dist");
  if (j.contains("v_dist")) d.v_dist = detail::dist_from_json(j.at("v_dist"), "v_dist");
  if (j.contains("x_dist")) d.x_dist = detail::dist_from_json(j.at("x_dist"), "x_dist");
  if (j.contains("x_noise")) {
    d.has_x_noise = true;
    d.x_noise_dist = detail::dist_from_json(j.at("x_noise"), "x_noise");
  }
  if (j.contains("seed")) d.seed = j.at("seed").get<std::uint64_t>();
  d.validate();
  return d;
}

inline nlohmann::json design_spec_to_json(const DesignSpec& d) {
  nlohmann::json j;
  j["n"] = d.n;
  j["beta"] = std::vector<double>(d.beta.data(), d.beta.data() + d.beta.size());
  std::vector<std::string> regs;
  for (RegressorForm f : d.regressors) regs.push_back(to_string(f));
  j["regressors"] = regs;
  j["gamma"] = d.gamma;
  j["delta"] = d.delta;
  j["effect_scale"] = d.effect_scale;
  j["a_dist"] = detail::dist_to_json(d.a_dist);
  j["v_dist"] = detail::dist_to_json(d.v_dist);
  j["x_dist"] = detail::dist_to_json(d.x_dist);
  if (d.has_x_noise) j["x_noise"] = detail::dist_to_json(d.x_noise_dist);
  j["seed"] = d.seed;
  return j;
}

inline RunConfig run_config_from_json(const nlohmann::json& j) {
  detail::reject_unknown_keys(j,
                              {"designs", "estimators", "replications", "n_grid", "seed",
                               "output_dir", "ci_level"},
                              "config");
  RunConfig c;
  if (!j.contains("designs")) throw config_error("config: designs is required");
  int counter = 0;
  for (const auto& dj : j.at("designs")) {
    ++counter;
    if (dj.is_string() && dj.get<std::string>().rfind("standard", 0) == 0) {
      // "standard1" .. "standard4"
      const std::string s = dj.get<std::string>();
      const int idx = std::atoi(s.c_str() + 8);
      if (idx < 1 || idx > 4)
        throw config_error("config: unknown design shorthand '" + s + "'");
      c.designs.push_back({"design" + std::to_string(idx),
                           standard_designs()[static_cast<std::size_t>(idx - 1)]});
      continue;
    }
    std::string name = "design" + std::to_string(counter);
    if (dj.contains("name")) name = dj.at("name").get<std::string>();
    c.designs.push_back({name, design_spec_from_json(dj)});
  }
  if (j.contains("estimators"))
    for (const auto& e : j.at("estimators"))
      c.estimators.push_back(mc_estimator_from_string(e.get<std::string>()));
  else
    c.estimators = {McEstimator::ols, McEstimator::two_step, McEstimator::oracle_ols};
  if (j.contains("replications")) c.replications = j.at("replications").get<int>();
  if (j.contains("n_grid")) c.n_grid = j.at("n_grid").get<std::vector<Index>>();
  else c.n_grid = {100};
  if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("output_dir")) c.output_dir = j.at("output_dir").get<std::string>();
  if (j.contains("ci_level")) c.ci_level = j.at("ci_level").get<double>();
  c.validate();
  return c;
}

inline RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open config " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw config_error("config parse error in " + path + ": " + e.what());
  }
  return run_config_from_json(j);
}

// ---------------------------------------------------------------------------
// Monte Carlo runner

struct McCell {
  std::string design;
  McEstimator estimator;
  Index n = 0;
  std::vector<double> estimates;  // slope of interest per successful replication
  int failures = 0;
  double mean = 0.0;
  double sd = 0.0;
  double rmse = 0.0;
  double coverage = std::numeric_limits<double>::quiet_NaN();
  double mean_runtime_s = 0.0;
  double truth = 0.0;
};

struct McResult {
  std::vector<McCell> cells;
};

namespace detail {

// Column whose estimate the harness tracks: the first non-intercept
// regressor, or column 0 for intercept-only designs.
inline Index slope_column(const DesignSpec& spec) {
  for (std::size_t l = 0; l < spec.regressors.size(); ++l)
    if (spec.regressors[l] != RegressorForm::intercept) return static_cast<Index>(l);
  return 0;
}

struct RepOutcome {
  bool ok = false;
  double estimate = 0.0;
  double covered = std::numeric_limits<double>::quiet_NaN();
  double runtime_s = 0.0;
};

inline bool needs_inference(McEstimator e) {
  return e == McEstimator::single_iteration || e == McEstimator::fixed_point ||
         e == McEstimator::two_step;
}

}  // namespace detail

inline McResult run_monte_carlo(const RunConfig& config) {
  config.validate();
  McResult result;
  const std::size_t n_est = config.estimators.size();

  for (std::size_t d = 0; d < config.designs.size(); ++d) {
    for (std::size_t g = 0; g < config.n_grid.size(); ++g) {
      DesignSpec base = config.designs[d].spec;
      base.n = config.n_grid[g];
      const Index slope_col = detail::slope_column(base);
      const double truth = [&] {
        DesignSpec probe = base;
        probe.seed = 0;
        // mu0 depends only on beta/gamma/delta, not on the draw
        return simulate(probe).truth.mu0(slope_col);
      }();

      std::vector<std::vector<detail::RepOutcome>> slots(
          static_cast<std::size_t>(config.replications),
          std::vector<detail::RepOutcome>(n_est));

      detail::parallel_for(static_cast<std::size_t>(config.replications), [&](std::size_t r) {
        DesignSpec spec = base;
        spec.seed = child_seed(config.seed, d, static_cast<std::uint64_t>(base.n), r);
        Simulation sim = simulate(spec);
        for (std::size_t e = 0; e < n_est; ++e) {
          detail::RepOutcome& slot = slots[r][e];
          const auto t0 = std::chrono::steady_clock::now();
          try {
            const McEstimator est = config.estimators[e];
            if (est == McEstimator::oracle_ols) {
              // same X and V draws with the individual effects removed
              Matrix yo = sim.truth.v;
              for (Index l = 0; l < sim.design.l(); ++l)
                yo.noalias() += spec.beta(l) * sim.design.x(l);
              yo.diagonal().setZero();
              slot.estimate = ols_dyadic(sim.design, OutcomeMatrix(std::move(yo))).mu_hat(slope_col);
            } else if (est == McEstimator::ols) {
              slot.estimate = ols_dyadic(sim.design, sim.y).mu_hat(slope_col);
            } else if (est == McEstimator::ols_adjusted) {
              slot.estimate = first_stage(sim.design, sim.y).mu_hat(slope_col);
            } else {
              const Method m = est == McEstimator::single_iteration ? Method::single_iteration
                               : est == McEstimator::fixed_point    ? Method::fixed_point
                                                                    : Method::two_step;
              const PipelineResult pr =
                  estimate_with_inference(sim.design, sim.y, m, config.ci_level);
              slot.estimate = pr.estimate.mu_hat(slope_col);
              slot.covered = (pr.inference.ci_lower(slope_col) <= truth &&
                              truth <= pr.inference.ci_upper(slope_col))
                                 ? 1.0
                                 : 0.0;
            }
            slot.ok = true;
          } catch (const error&) {
            slot.ok = false;
          }
          slot.runtime_s =
              std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        }
      });

      for (std::size_t e = 0; e < n_est; ++e) {
        McCell cell;
        cell.design = config.designs[d].name;
        cell.estimator = config.estimators[e];
        cell.n = base.n;
        cell.truth = truth;
        double cover_sum = 0.0;
        int cover_count = 0;
        double time_sum = 0.0;
        for (int r = 0; r < config.replications; ++r) {
          const detail::RepOutcome& slot = slots[static_cast<std::size_t>(r)][e];
          time_sum += slot.runtime_s;
          if (!slot.ok) {
            ++cell.failures;
            continue;
          }
          cell.estimates.push_back(slot.estimate);
          if (!std::isnan(slot.covered)) {
            cover_sum += slot.covered;
            ++cover_count;
          }
        }
        const auto m = static_cast<double>(cell.estimates.size());
        if (m > 0) {
          double sum = 0.0, sq = 0.0, se = 0.0;
          for (double v : cell.estimates) sum += v;
          cell.mean = sum / m;
          for (double v : cell.estimates) {
            sq += (v - cell.mean) * (v - cell.mean);
            se += (v - truth) * (v - truth);
          }
          cell.sd = std::sqrt(sq / m);
          cell.rmse = std::sqrt(se / m);
        }
        if (cover_count > 0) cell.coverage = cover_sum / cover_count;
        cell.mean_runtime_s = time_sum / config.replications;
        result.cells.push_back(std::move(cell));
      }
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// Emitters

inline void emit_histogram_csv(const std::vector<double>& estimates, const std::string& path) {
  if (estimates.empty()) throw contract_error("emit_histogram_csv: empty input");
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw io_error("emit_histogram_csv: cannot open " + path);
  std::fputs("estimate\n", f);
  for (double v : estimates) std::fprintf(f, "%s\n", format_g17(v).c_str());
  if (std::fclose(f) != 0) throw io_error("emit_histogram_csv: write failed for " + path);
}

// Deterministic aggregate table; timings go to a separate file because wall
// clock is not covered by the byte-determinism contract.
inline void write_mc_summary(const McResult& result, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  {
    std::ofstream out(fs::path(dir) / "summary.csv", std::ios::binary);
    if (!out) throw io_error("write_mc_summary: cannot open summary.csv");
    out << "design,estimator,n,replications,failures,mean,sd,rmse,coverage,truth\n";
    for (const McCell& c : result.cells) {
      out << c.design << ',' << to_string(c.estimator) << ',' << c.n << ','
          << (c.estimates.size() + static_cast<std::size_t>(c.failures)) << ',' << c.failures
          << ',' << format_g17(c.mean) << ',' << format_g17(c.sd) << ',' << format_g17(c.rmse)
          << ',' << (std::isnan(c.coverage) ? std::string("") : format_g17(c.coverage)) << ','
          << format_g17(c.truth) << '\n';
    }
  }
  {
    std::ofstream out(fs::path(dir) / "timings.csv", std::ios::binary);
    out << "design,estimator,n,mean_runtime_s\n";
    for (const McCell& c : result.cells)
      out << c.design << ',' << to_string(c.estimator) << ',' << c.n << ','
          << format_g17(c.mean_runtime_s) << '\n';
  }
  for (const McCell& c : result.cells) {
    if (c.estimates.empty()) continue;
    std::ostringstream name;
    name << "hist_" << c.design << '_' << to_string(c.estimator) << "_n" << c.n << ".csv";
    emit_histogram_csv(c.estimates, (fs::path(dir) / name.str()).string());
  }
}

// Tabulates the iteration map and the corrected objective on a grid of a
// one-regressor model; used to reproduce the objective-profile figure.
inline void emit_fn_profile(const DyadicDesign& design, const OutcomeMatrix& y,
                            const std::vector<double>& mu_grid, const std::string& path) {
  if (design.l() != 1)
    throw contract_error("emit_fn_profile: only 1-regressor models are supported");
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw io_error("emit_fn_profile: cannot open " + path);
  std::fputs("mu,f_n,objective_corrected\n", f);
  ParamVector mu(1);
  for (double m : mu_grid) {
    mu(0) = m;
    const ResidualMatrix rm = build_residual_matrix(design, y, mu);
    const SpectralSummary spec = eig_sym(rm.m);
    const double fn = f_n_apply(design, y, spec.nu)(0);
    const double obj = objective_corrected(rm, spec);
    std::fprintf(f, "%s,%s,%s\n", format_g17(m).c_str(), format_g17(fn).c_str(),
                 format_g17(obj).c_str());
  }
  if (std::fclose(f) != 0) throw io_error("emit_fn_profile: write failed for " + path);
}

}  // namespace dyad
