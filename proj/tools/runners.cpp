#include "runners.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "driftlab/constants.hpp"
#include "driftlab/manifest.hpp"
#include "driftlab/rng.hpp"
#include "driftlab/meanfield.hpp"
#include "driftlab/model.hpp"
#include "driftlab/simulate.hpp"
#include "driftlab/spectral.hpp"
#include "driftlab/transport.hpp"

namespace driftlab::cli {

namespace {

namespace fs = std::filesystem;

double now_seconds() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

std::string join(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

DriftModel model_from(const Config& cfg, const std::string& section) {
  const std::string id = cfg.str(section + ".id");
  return make_model(id, cfg.number_map(section));
}

// the CLI mean-field family: confinement by zoo id, difference kernel by name
MeanFieldSpec meanfield_from(const Config& cfg, const std::string& section) {
  MeanFieldSpec s;
  const std::string fid = cfg.str_or(section + ".F", "cubic");
  s.T = cfg.number(section + ".T");
  if (fid == "cubic") {
    s.F = [](const Vec& x) { return Vec(-x.array().pow(3).matrix()); };
    s.C_F = 0.0;
    s.R = cfg.number_or(section + ".R", 1.0);
    // inf over y of x^2 + xy + y^2 = (3/4) x^2 at |x| = R
    s.c = 0.75 * s.R * s.R;
  } else if (fid == "ou") {
    s.F = [](const Vec& x) { return Vec(-x); };
    s.C_F = 0.0;
    s.R = 0.0;
    s.c = 1.0;
  } else {
    throw std::invalid_argument("meanfield: unknown confinement '" + fid + "'");
  }
  const std::string kernel = cfg.str_or(section + ".kernel", "none");
  if (kernel == "tanh") {
    const double strength = cfg.number_or(section + ".strength", 0.1);
    s.H_diff_1d = [strength](double u) { return -strength * std::tanh(u); };
    s.antisymmetric = true;
    s.a = 0.0;
    s.M_H = strength;
    s.L_H = 1.05 * strength;  // probe Lipschitz of tanh, 5% inflated
  } else if (kernel == "linear") {
    const double kappa0 = cfg.number_or(section + ".kappa0", 0.5);
    s.H_diff_1d = [kappa0](double u) { return -kappa0 * u; };
    s.antisymmetric = true;
    s.a = 0.0;
    s.M_H = 0.0;  // unbounded kernel: particle constants do not apply
    s.L_H = kappa0;
  } else if (kernel != "none") {
    throw std::invalid_argument("meanfield: unknown kernel '" + kernel + "'");
  }
  // declared interaction defect may be overridden (validate checks it)
  s.a = cfg.number_or(section + ".a", s.a);
  return s;
}

SimConfig sim_from(const Config& cfg, const GlobalOpts& g,
                   const std::string& section) {
  SimConfig c;
  c.T = cfg.number(section + ".T");
  c.t_max = cfg.number(section + ".t_max");
  c.dt = cfg.number_or(section + ".dt", 1e-3);
  c.n_traj = static_cast<int>(cfg.number_or(section + ".n_traj", 1000));
  c.seed = g.seed;
  c.workers = g.workers;
  c.output_times = cfg.array_or(section + ".output_times", {});
  if (c.output_times.empty())
    for (int k = 0; k <= 16; ++k) c.output_times.push_back(c.t_max * k / 16.0);
  for (double& t : c.output_times)  // snap to the step grid
    t = std::round(t / c.dt) * c.dt;
  return c;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

void emit_plot_script(const std::string& dir, const std::string& csv,
                      const std::string& title, const std::string& xlabel,
                      const std::string& cols) {
  std::ostringstream gp;
  gp << "set datafile separator ','\n"
     << "set key autotitle columnhead\n"
     << "set logscale y\n"
     << "set xlabel '" << xlabel << "'\n"
     << "set title '" << title << "'\n"
     << "plot " << cols << "\n";
  write_text(join(dir, "plot.gp"), gp.str());
}

ordered_json cc_json(const ContractionConstants& cc) {
  ordered_json j;
  j["alpha"] = cc.alpha;
  j["T0"] = cc.T0;
  j["M"] = cc.M;
  j["lambda"] = cc.lambda;
  j["provenance"] = cc.provenance;
  return j;
}

}  // namespace

RunResult run_constants(const Config& cfg, const GlobalOpts& g) {
  RunResult res;
  const DriftModel model = model_from(cfg, "model");
  const double T = cfg.number("constants.T");
  const double alpha = cfg.number_or("constants.alpha", 2.0);
  if (!model.assumption)
    throw std::invalid_argument("constants: model has no (K,R,c) declaration");
  const auto [K, R, c] = *model.assumption;

  ManifestBuilder manifest("constants", g.seed, g.workers);
  manifest.set_config_text(cfg.text());

  std::vector<std::pair<std::string, double>> table;
  table.emplace_back("K", K);
  table.emplace_back("R", R);
  table.emplace_back("c", c);
  const double Rs = r_star(K, c, R, model.dim);
  table.emplace_back("r_star", Rs);
  const T0Result t0 = t0_threshold(model, alpha);
  table.emplace_back("t0", t0.t0);
  table.emplace_back("t0_safe", t0.t0_safe);
  table.emplace_back("sup_minus_xb", t0.sup_minus_xb);
  const ContractionConstants cc =
      contraction_constants(K, c, R, model.dim, T, alpha);
  if (T < t0.t0)
    std::cerr << "warning: T = " << T << " is below the threshold t0 = " << t0.t0
              << "; the formulas still evaluate but the contraction is not "
                 "certified\n";
  table.emplace_back("T", T);
  table.emplace_back("M", cc.M);
  table.emplace_back("lambda", cc.lambda);
  table.emplace_back("cp_contraction", poincare_from_contraction(cc.M, cc.lambda, T));
  if (model.is_gradient)
    table.emplace_back("cp_reversible",
                       poincare_from_contraction(cc.M, cc.lambda, T, true));
  table.emplace_back("cp_holley_stroock", holley_stroock_bound(K, c, R, T));
  const WeightFunction w = build_weight(K, c, R, model.dim);
  table.emplace_back("kappa_inf", w.kappa_inf());
  table.emplace_back("kappa_bound", 2.0 * w.k_star() * w.r_star2() / model.dim);
  if (model.dim == 1) {
    const double lim = std::sqrt(w.trivial() ? 36.0 : w.support_r2() * 2.0) + 2.0;
    const BakryEmeryReport be = verify_bakry_emery_weight(
        model, w, T, axis_grid(1, -lim, lim, 2001));
    table.emplace_back("T_tilde0", be.T_tilde0);
    table.emplace_back("Q_tilde", be.Q_tilde);
  }

  manifest.add_provenance("r_star = R(2+2K/c)^{1/d}",
                          {{"K", K}, {"R", R}, {"c", c}, {"d", model.dim}}, Rs);
  manifest.add_provenance(
      "t0 = (2K+c)(alpha(K+c/4)R*^2 + 2 sup(-x.b))/(cd)",
      {{"alpha", alpha}, {"grid_per_axis", t0.grid_points_per_axis}}, t0.t0);
  manifest.add_provenance("M = (1+alpha(2K+c)R*^2/(4dT))^{1/alpha}; lambda = c/4",
                          {{"T", T}, {"alpha", alpha}}, cc_json(cc));

  if (g.format == "json") {
    ordered_json j;
    for (const auto& [k, v] : table) j[k] = v;
    const std::string path = join(g.out_dir, "constants.json");
    write_text(path, j.dump(2) + "\n");
    res.outputs.push_back(path);
    std::cout << j.dump(2) << "\n";
  } else {
    CsvWriter csv({"name", "value"});
    std::ostringstream show;
    std::string body = "name,value\n";
    for (const auto& [k, v] : table) {
      char num[32];
      std::snprintf(num, sizeof(num), "%.12g", v);
      body += k + "," + num + "\n";
    }
    const std::string path = join(g.out_dir, "constants.csv");
    write_text(path, body);
    res.outputs.push_back(path);
    std::cout << body;
  }
  for (const std::string& o : res.outputs) manifest.add_output_file(o);
  const std::string mpath = join(g.out_dir, "constants_manifest.json");
  manifest.write(mpath, 0.0);
  res.outputs.push_back(mpath);
  res.summary.push_back("constants: table written");
  return res;
}

RunResult run_couple(const Config& cfg, const GlobalOpts& g) {
  RunResult res;
  const double t_start = now_seconds();
  const DriftModel model = model_from(cfg, "model");
  SimConfig sim = sim_from(cfg, g, "sim");
  const double alpha = cfg.number_or("couple.alpha", 2.0);
  const double x0 = cfg.number_or("couple.x0", 0.0);
  const double y0 = cfg.number_or("couple.y0", 2.0);
  const bool with_weight = cfg.boolean_or("couple.weight", true);
  const bool check_bound = cfg.boolean_or("couple.check_bound", true);
  const bool submartingale = cfg.boolean_or("couple.submartingale", false);

  auto init = [&](std::uint64_t) {
    Vec a = Vec::Zero(model.dim), b = Vec::Zero(model.dim);
    a[0] = x0;
    b[0] = y0;
    return std::pair{a, b};
  };

  ContractionConstants cc;
  double t0_val = 0.0;
  if (model.assumption) {
    const auto [K, R, c] = *model.assumption;
    cc = contraction_constants(K, c, R, model.dim, sim.T, alpha);
    t0_val = t0_threshold(model, alpha).t0;
  }
  std::optional<WeightFunction> weight;
  if (with_weight && model.assumption) {
    const auto [K, R, c] = *model.assumption;
    weight.emplace(K, c, R, model.dim);
  }

  const CouplingStats st = synchronous_coupling(model, init, sim, alpha,
                                                weight ? &*weight : nullptr);
  const double w0 = std::abs(x0 - y0);
  CsvWriter csv(weight
                    ? std::vector<std::string>{"t", "dist", "se_pow", "dist_upper",
                                               "bound", "rho", "rho_se"}
                    : std::vector<std::string>{"t", "dist", "se_pow", "dist_upper",
                                               "bound"});
  bool below = true;
  for (std::size_t k = 0; k < st.times.size(); ++k) {
    const double bound =
        model.assumption ? cc.M * std::exp(-cc.lambda * st.times[k]) * w0 : 0.0;
    if (check_bound && model.assumption && st.dist_upper[k] > bound)
      below = false;
    if (weight)
      csv.row({st.times[k], st.dist[k], st.pow_moment.stderr_[k], st.dist_upper[k],
               bound, st.rho->mean[k], st.rho->stderr_[k]});
    else
      csv.row({st.times[k], st.dist[k], st.pow_moment.stderr_[k], st.dist_upper[k],
               bound});
  }
  const std::string cpath = join(g.out_dir, "couple.csv");
  csv.write(cpath);
  res.outputs.push_back(cpath);
  emit_plot_script(g.out_dir, "couple.csv", "synchronous coupling decay", "t",
                   "'couple.csv' using 1:2 with lines, '' using 1:5 with lines");

  ManifestBuilder manifest("couple", g.seed, g.workers);
  manifest.set_config_text(cfg.text());
  manifest.add_resolved("model", model.name);
  manifest.add_resolved("alpha", alpha);
  manifest.add_resolved("T", sim.T);
  manifest.add_resolved("dt", sim.dt);
  manifest.add_resolved("n_traj", sim.n_traj);
  manifest.add_resolved("t0", t0_val);
  if (model.assumption) manifest.add_resolved("constants", cc_json(cc));
  if (check_bound && model.assumption) {
    manifest.add_check("coupling_below_contraction_bound", below,
                       {{"M", cc.M}, {"lambda", cc.lambda}, {"w0", w0}});
    res.summary.push_back(std::string("couple: bound check ") +
                          (below ? "pass" : "fail"));
    res.pass = res.pass && below;
  }
  if (submartingale && weight) {
    const SubmartingaleReport rep = submartingale_check(
        model, *weight, init, sim, alpha, cc.lambda, t0_val);
    manifest.add_check("discounted_weighted_distance_nonincreasing", rep.pass,
                       {{"lambda", rep.lambda},
                        {"first_violation", rep.first_violation},
                        {"temperature_ok", rep.temperature_ok}});
    res.summary.push_back(std::string("couple: submartingale check ") +
                          (rep.pass ? "pass" : "fail"));
    res.pass = res.pass && rep.pass;
  }
  manifest.add_output_file(cpath);
  const std::string mpath = join(g.out_dir, "couple_manifest.json");
  manifest.write(mpath, now_seconds() - t_start);
  res.outputs.push_back(mpath);
  return res;
}

RunResult run_perturb(const Config& cfg, const GlobalOpts& g) {
  RunResult res;
  const double t_start = now_seconds();
  const DriftModel base = model_from(cfg, "model");
  const double eps = cfg.number_or("perturb.eps", 0.5);
  const DriftModel tilde = make_perturbed(base, eps);
  SimConfig sim = sim_from(cfg, g, "sim");
  const double alpha = cfg.number_or("perturb.alpha", 2.0);
  const double spread = cfg.number_or("perturb.init_spread", 1.0);

  const PerturbedReport rep = perturbed_coupling(
      base, tilde,
      [&](std::uint64_t i) {
        Vec x = Vec::Zero(base.dim);
        const CounterRng rng(sim.seed + 17, i);
        for (int k = 0; k < base.dim; ++k)
          x[k] = spread * rng.normal(0, static_cast<std::uint32_t>(k));
        return x;
      },
      sim, alpha);

  CsvWriter csv({"t", "w_empirical", "bound"});
  for (std::size_t k = 0; k < rep.times.size(); ++k)
    csv.row({rep.times[k], rep.w_empirical[k], rep.bound[k]});
  const std::string cpath = join(g.out_dir, "perturb.csv");
  csv.write(cpath);
  res.outputs.push_back(cpath);

  // stationary comparison on the grid (1d): exact quantile W2 vs M^a/l * sup
  ManifestBuilder manifest("perturb", g.seed, g.workers);
  manifest.set_config_text(cfg.text());
  manifest.add_resolved("eps", eps);
  manifest.add_resolved("sup_diff", rep.sup_diff);
  manifest.add_check("transient_below_perturbation_bound", rep.all_below,
                     {{"sup_diff", rep.sup_diff}});
  res.summary.push_back(std::string("perturb: transient bound ") +
                        (rep.all_below ? "pass" : "fail"));
  res.pass = res.pass && rep.all_below;
  if (base.dim == 1 && base.assumption) {
    const double half = cfg.number_or("perturb.half", 10.0);
    const int nodes = static_cast<int>(cfg.number_or("perturb.nodes", 2001));
    const GridOperator op_b = build_operator(base, sim.T, Grid(half, nodes));
    const GridOperator op_t = build_operator(tilde, sim.T, Grid(half, nodes));
    const double w2 = grid_w2_1d(op_b, op_b.mu, op_t.mu);
    const auto [K, R, c] = *base.assumption;
    const ContractionConstants cc =
        contraction_constants(K, c, R, base.dim, sim.T, alpha);
    const double bound =
        std::pow(cc.M, alpha) / cc.lambda * rep.sup_diff;
    const bool ok = w2 < bound;
    manifest.add_check("stationary_below_perturbation_bound", ok,
                       {{"w2", w2}, {"bound", bound}});
    res.summary.push_back(std::string("perturb: stationary bound ") +
                          (ok ? "pass" : "fail"));
    res.pass = res.pass && ok;
  }
  manifest.add_output_file(cpath);
  const std::string mpath = join(g.out_dir, "perturb_manifest.json");
  manifest.write(mpath, now_seconds() - t_start);
  res.outputs.push_back(mpath);
  return res;
}

RunResult run_particles(const Config& cfg, const GlobalOpts& g) {
  RunResult res;
  const double t_start = now_seconds();
  const MeanFieldSpec spec = meanfield_from(cfg, "particles");
  const int N = static_cast<int>(cfg.number("particles.N"));
  const double dt = cfg.number_or("particles.dt", 1e-3);
  const double t_max = cfg.number("particles.t_max");
  const double init_spread = cfg.number_or("particles.init_spread", 1.0);

  SimConfig sim;
  sim.T = spec.T;
  sim.dt = dt;
  sim.t_max = t_max;
  sim.seed = g.seed;
  sim.workers = g.workers;
  for (int k = 0; k <= 16; ++k)
    sim.output_times.push_back(std::round(t_max * k / 16.0 / dt) * dt);

  InteractionSpec inter;
  inter.H_diff_1d = spec.H_diff_1d;
  inter.antisymmetric = spec.antisymmetric;
  Mat x0(N, 1);
  const CounterRng rng(g.seed + 5, 0);
  for (int i = 0; i < N; ++i)
    x0(i, 0) = init_spread * rng.normal(static_cast<std::uint64_t>(i), 0);
  const ParticlePath path = particle_system(spec.F, 1, inter, N, x0, sim);
  const MomentSeries ms = moment_tracker(path);

  CsvWriter csv({"t", "m2", "m2_se", "m5", "m5_se"});
  for (std::size_t k = 0; k < ms.times.size(); ++k)
    csv.row({ms.times[k], ms.m2[k], ms.m2_se[k], ms.m5[k], ms.m5_se[k]});
  const std::string cpath = join(g.out_dir, "particles.csv");
  csv.write(cpath);
  res.outputs.push_back(cpath);

  ManifestBuilder manifest("particles", g.seed, g.workers);
  manifest.set_config_text(cfg.text());
  manifest.add_resolved("N", N);
  // moment dissipation with the proof's Q when the metadata allows it
  if (spec.c > spec.a) {
    const double F0 = spec.F(Vec::Zero(1)).norm();
    const double Q = spec.T + 2.0 * (spec.C_F + spec.c) * spec.R * spec.R +
                     F0 * F0 / (spec.c - spec.a);
    const double m20 = ms.m2.front();
    bool ok = true;
    for (std::size_t k = 0; k < ms.times.size(); ++k) {
      const double bound = std::exp(-(spec.c - spec.a) * ms.times[k]) * m20 +
                           Q / (spec.c - spec.a) + 3.0 * ms.m2_se[k];
      if (ms.m2[k] > bound) ok = false;
    }
    manifest.add_check("second_moment_dissipation", ok, {{"Q", Q}});
    res.summary.push_back(std::string("particles: moment bound ") +
                          (ok ? "pass" : "fail"));
    res.pass = res.pass && ok;
  }
  manifest.add_output_file(cpath);
  const std::string mpath = join(g.out_dir, "particles_manifest.json");
  manifest.write(mpath, now_seconds() - t_start);
  res.outputs.push_back(mpath);
  return res;
}

RunResult run_poincare(const Config& cfg, const GlobalOpts& g) {
  RunResult res;
  const double t_start = now_seconds();
  const DriftModel model = model_from(cfg, "model");
  const double T = cfg.number("poincare.T");
  const double half = cfg.number_or("poincare.half", 8.0);
  const int nodes = static_cast<int>(cfg.number_or("poincare.nodes", 2001));
  Grid grid = model.dim == 2
                  ? Grid(half, nodes, cfg.number_or("poincare.half2", half),
                         static_cast<int>(cfg.number_or("poincare.nodes2", nodes)))
                  : Grid(half, nodes);
  const PoincareReport rep = poincare_with_refinement(model, T, grid);

  ordered_json j;
  j["C_P"] = rep.C_P;
  j["C_P_coarse"] = rep.C_P_coarse;
  j["richardson_slope"] = rep.richardson_slope;
  j["discretization_error"] = rep.discretization_error;
  ordered_json bounds = ordered_json::object();
  bool chain_ok = true;
  if (model.assumption) {
    const auto [K, R, c] = *model.assumption;
    const ContractionConstants cc =
        contraction_constants(K, c, R, model.dim, T, 2.0);
    bounds["contraction"] = poincare_from_contraction(cc.M, cc.lambda, T);
    if (model.is_gradient)
      bounds["reversible"] = poincare_from_contraction(cc.M, cc.lambda, T, true);
    bounds["holley_stroock"] = holley_stroock_bound(K, c, R, T);
    for (const auto& [name, v] : bounds.items())
      if (rep.C_P > v.get<double>()) chain_ok = false;
  }
  if (model.name == "power") {
    const CpBetaBound bb = cp_beta_bound(4.0, model.dim);
    bounds["beta_family"] = bb.bound * std::pow(T, 0.5);  // C_P(mu_T) = T^(2/beta) C_P(mu_1)
    if (bb.has_window) {
      bounds["window_lo"] = bb.window_lo * std::pow(T, 0.5);
      bounds["window_hi"] = bb.window_hi * std::pow(T, 0.5);
    }
  }
  j["bounds"] = bounds;
  const std::string jpath = join(g.out_dir, "poincare.json");
  write_text(jpath, j.dump(2) + "\n");
  std::cout << j.dump(2) << "\n";
  res.outputs.push_back(jpath);

  ManifestBuilder manifest("poincare", g.seed, g.workers);
  manifest.set_config_text(cfg.text());
  manifest.add_check("poincare_bound_chain", chain_ok, bounds);
  res.summary.push_back(std::string("poincare: bound chain ") +
                        (chain_ok ? "pass" : "fail"));
  res.pass = res.pass && chain_ok;
  manifest.add_output_file(jpath);
  const std::string mpath = join(g.out_dir, "poincare_manifest.json");
  manifest.write(mpath, now_seconds() - t_start);
  res.outputs.push_back(mpath);
  return res;
}

namespace {

EmpiricalMeasure read_cloud_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("transport: cannot open " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    bool numeric = true;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(cell, &used));
      } catch (const std::exception&) {
        numeric = false;
        break;
      }
    }
    if (!numeric) {
      if (rows.empty()) continue;  // header row
      throw std::invalid_argument("transport: non-numeric row in " + path);
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw std::invalid_argument("transport: ragged rows in " + path);
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::invalid_argument("transport: empty cloud " + path);
  Eigen::MatrixXd pts(static_cast<Eigen::Index>(rows.size()),
                      static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows.front().size(); ++j)
      pts(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  return EmpiricalMeasure(std::move(pts));
}

}  // namespace

RunResult run_transport(const Config& cfg, const GlobalOpts& g) {
  RunResult res;
  const EmpiricalMeasure X = read_cloud_csv(cfg.str("transport.x_csv"));
  const EmpiricalMeasure Y = read_cloud_csv(cfg.str("transport.y_csv"));
  const double alpha = cfg.number_or("transport.alpha", 2.0);
  std::string method = cfg.str_or("transport.method", "auto");
  if (method == "auto") method = X.dim() == 1 ? "1d" : "assignment";
  const int n_boot = static_cast<int>(cfg.number_or("transport.n_boot", 0));

  TransportResult r;
  SinkhornOptions opt;
  opt.epsilon = cfg.number_or("transport.epsilon", 0.05);
  opt.debiased = cfg.boolean_or("transport.debiased", true);
  if (n_boot > 0) {
    const TransportMethod m = method == "1d" ? TransportMethod::OneDExact
                              : method == "assignment" ? TransportMethod::Assignment
                                                        : TransportMethod::Entropic;
    r = bootstrap_ci(X, Y, alpha, m, n_boot, g.seed, opt);
  } else if (method == "1d") {
    r = w_alpha_1d(X, Y, alpha);
  } else if (method == "assignment") {
    r = w2_assignment(X, Y, alpha);
  } else if (method == "entropic") {
    r = w2_entropic(X, Y, alpha, opt);
  } else {
    throw std::invalid_argument("transport: unknown method '" + method + "'");
  }

  ordered_json j;
  j["cost"] = r.cost;
  j["alpha"] = r.alpha;
  j["method"] = r.method;
  if (r.method == "entropic") {
    j["epsilon"] = r.epsilon;
    j["iterations"] = r.iterations;
    j["converged"] = r.converged;
    j["marginal_violation"] = r.marginal_violation;
  }
  if (r.has_ci) {
    j["ci_lo"] = r.ci_lo;
    j["ci_hi"] = r.ci_hi;
    j["n_boot"] = r.n_boot;
  }
  const std::string jpath = join(g.out_dir, "transport.json");
  write_text(jpath, j.dump(2) + "\n");
  std::cout << j.dump(2) << "\n";
  res.outputs.push_back(jpath);
  res.summary.push_back("transport: " + r.method + " cost computed");
  return res;
}

RunResult run_chaos(const Config& cfg, const GlobalOpts& g) {
  RunResult res;
  const double t_start = now_seconds();
  const MeanFieldSpec spec = meanfield_from(cfg, "chaos");
  const double half = cfg.number_or("chaos.half", 10.0);
  const int nodes = static_cast<int>(cfg.number_or("chaos.nodes", 513));
  const Grid grid(half, nodes);
  const Eigen::VectorXd nu0 =
      gaussian_density(grid, cfg.number_or("chaos.init_mean", 0.0),
                       cfg.number_or("chaos.init_var", 1.0));
  std::vector<int> Ns;
  for (double v : cfg.array("chaos.Ns")) Ns.push_back(static_cast<int>(v));
  const double t = cfg.number("chaos.t");
  const int n_reps = static_cast<int>(cfg.number_or("chaos.n_reps", 200));
  const double dt = cfg.number_or("chaos.dt", 2e-3);

  const ChaosReport rep =
      chaos_experiment(spec, grid, nu0, Ns, t, n_reps, dt, g.seed, g.workers);

  CsvWriter csv({"N", "w2_marginal", "w2_marginal_se", "coupled_rms",
                 "coupled_rms_se", "bound"});
  for (const ChaosPoint& pt : rep.points)
    csv.row({static_cast<double>(pt.N), pt.w2_marginal, pt.w2_marginal_se,
             pt.coupled_rms, pt.coupled_rms_se, pt.bound});
  const std::string cpath = join(g.out_dir, "chaos.csv");
  csv.write(cpath);
  res.outputs.push_back(cpath);
  emit_plot_script(g.out_dir, "chaos.csv", "propagation of chaos", "N",
                   "'chaos.csv' using 1:4 with linespoints, '' using 1:6 with lines");

  ManifestBuilder manifest("chaos", g.seed, g.workers);
  manifest.set_config_text(cfg.text());
  manifest.add_resolved("constants", cc_json(rep.cc));
  manifest.add_resolved("alpha_chaos", rep.constants.alpha);
  manifest.add_resolved("beta_chaos", rep.constants.beta);
  manifest.add_resolved("Q", rep.constants.Q);
  manifest.add_resolved("kappa_inf", rep.constants.kappa_inf);
  manifest.add_resolved("m2_initial", rep.m2_initial);
  manifest.add_resolved("slope", rep.slope);
  manifest.add_resolved("slope_se", rep.slope_se);
  const bool slope_ok = rep.slope > -0.65 && rep.slope < -0.35;
  manifest.add_check("chaos_rate_near_sqrt_N", slope_ok,
                     {{"slope", rep.slope}, {"se", rep.slope_se}});
  manifest.add_check("chaos_points_below_bound", rep.all_below_bound,
                     {{"alpha", rep.constants.alpha}, {"beta", rep.constants.beta}});
  res.summary.push_back(std::string("chaos: slope window ") +
                        (slope_ok ? "pass" : "fail"));
  res.summary.push_back(std::string("chaos: bound ") +
                        (rep.all_below_bound ? "pass" : "fail"));
  res.pass = res.pass && slope_ok && rep.all_below_bound;
  if (cfg.boolean_or("chaos.rate", false)) {
    const RateReport rr = empirical_measure_rate(spec, grid, nu0, Ns, t,
                                                 std::max(20, n_reps / 4), dt,
                                                 g.seed + 1, g.workers);
    CsvWriter rcsv({"N", "mean_w2_sq", "rms_w2", "se"});
    for (const RatePoint& pt : rr.points)
      rcsv.row({static_cast<double>(pt.N), pt.mean_w2_sq, pt.rms_w2, pt.se});
    const std::string rpath = join(g.out_dir, "rate.csv");
    rcsv.write(rpath);
    res.outputs.push_back(rpath);
    manifest.add_resolved("rate_exponent", rr.exponent);
    manifest.add_resolved("rate_exponent_se", rr.exponent_se);
    manifest.add_output_file(rpath);
    res.summary.push_back("chaos: empirical-measure rate exponent " +
                          std::to_string(rr.exponent));
  }
  manifest.add_output_file(cpath);
  const std::string mpath = join(g.out_dir, "chaos_manifest.json");
  manifest.write(mpath, now_seconds() - t_start);
  res.outputs.push_back(mpath);
  return res;
}

RunResult run_meanfield(const Config& cfg, const GlobalOpts& g) {
  RunResult res;
  const double t_start = now_seconds();
  const MeanFieldSpec spec = meanfield_from(cfg, "meanfield");
  const double half = cfg.number_or("meanfield.half", 8.0);
  const int nodes = static_cast<int>(cfg.number_or("meanfield.nodes", 801));
  const Grid grid(half, nodes);
  const Eigen::VectorXd nu0 =
      gaussian_density(grid, cfg.number_or("meanfield.init_mean", 0.0),
                       cfg.number_or("meanfield.init_var", 1.0));
  const double dt = cfg.number_or("meanfield.dt", 1e-3);
  const std::string kind = cfg.str_or("meanfield.kind", "evolve");

  ManifestBuilder manifest("meanfield", g.seed, g.workers);
  manifest.set_config_text(cfg.text());
  Eigen::VectorXd density;
  if (kind == "evolve") {
    const double t = cfg.number("meanfield.t");
    const MeanFieldState st = evolve_mckean_vlasov_1d(spec, grid, nu0, dt, t);
    density = st.density;
    manifest.add_resolved("m2", st.m2);
    manifest.add_resolved("m5", st.m5);
    res.summary.push_back("meanfield: evolved to t = " + std::to_string(t));
  } else if (kind == "stationary") {
    const double tol = cfg.number_or("meanfield.tol", 1e-7);
    const double t1 = cfg.number_or("meanfield.t1", 2.0);
    const double t2 = cfg.number_or("meanfield.t2", 3.0);
    const StationaryResult st =
        stationary_meanfield(spec, grid, nu0, tol, t1, t2, dt);
    if (!st.converged)
      throw std::runtime_error("meanfield: fixed point iteration did not converge "
                               "(last increment " +
                               std::to_string(st.final_increment) + ")");
    density = st.density;
    manifest.add_resolved("iterations", st.iterations);
    manifest.add_resolved("stationarity_check", st.stationarity_check);
    const double var = moment_of(grid, density, 2.0);
    manifest.add_resolved("variance", var);
    if (cfg.has("meanfield.expect_variance")) {
      const double expect = cfg.number("meanfield.expect_variance");
      const bool ok = std::abs(var - expect) < 1e-3;
      manifest.add_check("stationary_variance", ok,
                         {{"variance", var}, {"expected", expect}});
      res.summary.push_back(std::string("meanfield: stationary variance ") +
                            (ok ? "pass" : "fail"));
      res.pass = res.pass && ok;
    }
  } else {
    throw std::invalid_argument("meanfield: unknown kind '" + kind + "'");
  }

  CsvWriter csv({"x", "density"});
  for (int i = 0; i < grid.n[0]; ++i) csv.row({grid.coord(0, i), density[i]});
  const std::string cpath = join(g.out_dir, "meanfield.csv");
  csv.write(cpath);
  res.outputs.push_back(cpath);
  manifest.add_output_file(cpath);
  const std::string mpath = join(g.out_dir, "meanfield_manifest.json");
  manifest.write(mpath, now_seconds() - t_start);
  res.outputs.push_back(mpath);
  return res;
}

RunResult run_validate(const Config& cfg, const GlobalOpts& g) {
  RunResult res;
  ManifestBuilder manifest("validate", g.seed, g.workers);
  manifest.set_config_text(cfg.text());
  if (cfg.has("model.id")) {
    const DriftModel model = model_from(cfg, "model");
    if (!model.assumption)
      throw std::invalid_argument("validate: model has no (K,R,c) declaration");
    ProbeSpec spec;
    spec.r_max = cfg.number_or("validate.probe_radius", 8.0);
    const Assumption1Report rep = verify_assumption1(model, spec);
    manifest.add_check("drift_contractivity_declaration", rep.pass,
                       {{"worst_global", rep.worst_global},
                        {"worst_outer", rep.worst_outer},
                        {"K_hat", rep.profile.K_hat},
                        {"samples_per_point", rep.profile.samples_per_point}});
    res.summary.push_back(std::string("validate: (K,R,c) declaration ") +
                          (rep.pass ? "pass" : "fail"));
    res.pass = res.pass && rep.pass;
  }
  if (cfg.has("meanfield.T")) {
    const MeanFieldSpec spec = meanfield_from(cfg, "meanfield");
    if (spec.a >= spec.c)
      throw std::invalid_argument(
          "validate: mean-field spec violates a < c in the pair dissipativity "
          "condition (x-y).(H(x,x')-H(y,y')) + (x'-y').(H(x',x)-H(y',y)) <= "
          "a(|x-y|^2+|x'-y'|^2)");
    const PairConditionReport rep = validate_pair_condition(spec);
    manifest.add_check("interaction_pair_condition", rep.pass,
                       {{"worst", rep.worst},
                        {"measured_L_H", rep.measured_L_H},
                        {"declared_a", spec.a}});
    res.summary.push_back(std::string("validate: pair condition ") +
                          (rep.pass ? "pass" : "fail"));
    res.pass = res.pass && rep.pass;
  }
  const std::string mpath = join(g.out_dir, "validate_manifest.json");
  manifest.write(mpath, 0.0);
  res.outputs.push_back(mpath);
  return res;
}

RunResult run_config(const std::string& path, const GlobalOpts& g_in) {
  const Config cfg = Config::parse_file(path);
  GlobalOpts g = g_in;
  const std::string id = cfg.str_or("experiment.id", "experiment");
  const std::string kind = cfg.str("experiment.kind");
  g.seed = static_cast<std::uint64_t>(cfg.number_or("experiment.seed",
                                                    static_cast<double>(g.seed)));
  g.workers = static_cast<int>(
      cfg.number_or("experiment.workers", static_cast<double>(g.workers)));
  std::filesystem::create_directories(g.out_dir);

  RunResult res;
  try {
    if (kind == "constants") res = run_constants(cfg, g);
    else if (kind == "couple") res = run_couple(cfg, g);
    else if (kind == "perturb") res = run_perturb(cfg, g);
    else if (kind == "particles") res = run_particles(cfg, g);
    else if (kind == "poincare") res = run_poincare(cfg, g);
    else if (kind == "transport") res = run_transport(cfg, g);
    else if (kind == "chaos") res = run_chaos(cfg, g);
    else if (kind == "meanfield") res = run_meanfield(cfg, g);
    else if (kind == "validate") res = run_validate(cfg, g);
    else
      throw std::invalid_argument("run: unknown experiment kind '" + kind + "'");
    cfg.ensure_all_consumed();
  } catch (...) {
    for (const std::string& f : res.outputs) {
      std::error_code ec;
      std::filesystem::remove(f, ec);
    }
    throw;
  }

  std::string summary = "experiment: " + id + "\n";
  for (const std::string& line : res.summary) summary += line + "\n";
  summary += res.pass ? "summary: pass\n" : "summary: fail\n";
  const std::string spath = join(g.out_dir, "summary.txt");
  write_text(spath, summary);
  res.outputs.push_back(spath);
  std::cout << summary;
  return res;
}

}  // namespace driftlab::cli
