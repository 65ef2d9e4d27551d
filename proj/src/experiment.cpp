#include "momentlab/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <numbers>
#include <sstream>
#include <thread>

#include "momentlab/greens.hpp"
#include "momentlab/linalg.hpp"
#include "momentlab/moments.hpp"
#include "momentlab/output.hpp"
#include "momentlab/walks.hpp"

namespace momentlab::cli {

using nlohmann::json;
using io::format_double;

namespace {

std::string short_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

std::string boundary_tag(const lattice::BoundarySpec& b) {
  std::string s;
  for (std::size_t a = 0; a < b.axes.size(); ++a) {
    const auto& c = b.axes[a];
    s += a ? "-" : "";
    if (c.kind == lattice::Closure::Kind::Open) s += "obc";
    else if (c.kind == lattice::Closure::Kind::Periodic) s += "pbc";
    else s += "gbc" + short_number(c.coupling);
  }
  return s;
}

json complex_json(Complex z) { return json::array({z.real(), z.imag()}); }

double amplitude_sum(const lattice::LatticeModel& model) {
  double s = 0.0;
  for (const auto& h : model.hoppings()) s += std::abs(h.amplitude);
  return s;
}

// |a - b| against max(|a|, |b|, 1e-3 (sum |A|)^m), so orders whose value
// cancels to zero are compared on the natural scale of the model.
double route_error(Complex a, Complex b, double scale, int m) {
  const double denom = std::max({std::abs(a), std::abs(b), 1e-3 * std::pow(scale, m)});
  return denom > 0 ? std::abs(a - b) / denom : 0.0;
}

json check_entry(bool pass, double value, double tolerance) {
  return {{"pass", pass}, {"value", value}, {"tolerance", tolerance}};
}

lattice::LatticeDomain build_domain(const Geometry& g) { return lattice::LatticeDomain::build(g.extents, g.mask); }

void guard_dense(int sites, const std::string& what) {
  if (sites > kMaxDenseSites)
    throw InvalidArgument(what + " has " + std::to_string(sites) + " sites; dense eigen solves are limited to N <= " +
                          std::to_string(kMaxDenseSites));
}

// ---------------------------------------------------------------------------

TaskResult run_spectrum(const TaskPlan& t, bool with_moments, const ExperimentConfig& cfg) {
  const auto model = t.model.build();
  const auto h = lattice::assemble(model, build_domain(t.geometry), t.boundary);
  const auto spec = linalg::eigenvalues(h, "direct");

  TaskResult r;
  r.spectrum = spec.eigenvalues;
  json sj = {{"sites", h.size()}, {"boundary", boundary_json(t.boundary)},
             {"extents", t.geometry.extents}, {"eigenvalues", io::spectrum_json(spec)}};
  r.files.push_back({t.id + "/spectrum.json", sj.dump(2) + "\n"});
  r.summary = {{"sites", h.size()}};
  if (!with_moments) return r;

  const bool central = cfg.moments.central;
  const Complex ref = central ? model.onsite() : Complex{};
  auto eig = moments::eigen_moments(spec, ref, t.m_max);
  eig.linear_size = t.geometry.extents.empty() ? 0 : *std::max_element(t.geometry.extents.begin(), t.geometry.extents.end());
  const auto tr = moments::trace_moments(h, ref, t.m_max);
  const auto bulk = moments::bulk_moments(model, t.m_max, !central);
  const auto dev = moments::deviations(eig, bulk);
  const double scale = central ? amplitude_sum(model) : amplitude_sum(model) + std::abs(model.onsite());

  std::string csv = "m,eigen_re,eigen_im,trace_re,trace_im,bulk_re,bulk_im,r,r_valid\n";
  double worst = 0.0;
  for (int m = 0; m <= t.m_max; ++m) {
    worst = std::max(worst, route_error(eig[m], tr[m], scale, m));
    csv += io::csv_line({std::to_string(m), format_double(eig[m].real()), format_double(eig[m].imag()),
                         format_double(tr[m].real()), format_double(tr[m].imag()), format_double(bulk[m].real()),
                         format_double(bulk[m].imag()), m ? format_double(dev.relative[m]) : "0",
                         m && dev.valid[m] ? "1" : "0"});
  }
  r.files.push_back({t.id + "/moments.csv", csv});
  r.moments = eig.values;
  r.reference = ref;
  const double tol = cfg.tolerances.at("route_rel");
  r.summary["checks"]["moment_routes"] = check_entry(worst <= tol, worst, tol);
  r.checks_passed = worst <= tol;
  return r;
}

TaskResult run_scaling(const TaskPlan& t, const ExperimentConfig& cfg) {
  const auto model = t.model.build();
  const auto& opt = cfg.scaling;
  const int m_top = *std::max_element(opt.orders.begin(), opt.orders.end());
  const auto bulk = moments::bulk_moments(model, m_top, !opt.central);
  const Complex ref = opt.central ? model.onsite() : Complex{};

  std::string csv = "N,m,M_re,M_im,w_re,w_im,r,r_valid\n";
  std::vector<std::vector<moments::Point>> by_order(m_top + 1);
  std::vector<std::vector<moments::Point>> by_size(opt.sizes.size());
  for (std::size_t s = 0; s < opt.sizes.size(); ++s) {
    const int n = opt.sizes[s];
    std::vector<int> extents(model.dimension(), n);
    const auto h = lattice::assemble(model, lattice::LatticeDomain::build(extents), t.boundary);
    auto series = moments::eigen_moments(linalg::eigenvalues(h), ref, m_top);
    series.linear_size = n;
    const auto dev = moments::deviations(series, bulk);
    for (int m : opt.orders) {
      csv += io::csv_line({std::to_string(n), std::to_string(m), format_double(series[m].real()),
                           format_double(series[m].imag()), format_double(bulk[m].real()),
                           format_double(bulk[m].imag()), format_double(dev.relative[m]), dev.valid[m] ? "1" : "0"});
      if (dev.valid[m] && dev.relative[m] > 0) {
        by_order[m].push_back({static_cast<double>(n), dev.relative[m]});
        by_size[s].push_back({static_cast<double>(m), n * dev.relative[m]});
      }
    }
  }
  TaskResult r;
  r.files.push_back({t.id + "/deviation.csv", csv});
  json fits = {{"versus_size", json::array()}, {"versus_order", json::array()}};
  for (int m : opt.orders)
    if (by_order[m].size() >= 3) {
      const auto f = moments::fit_power_law(by_order[m]);
      fits["versus_size"].push_back({{"m", m}, {"exponent", f.exponent}, {"prefactor", f.prefactor}, {"r_squared", f.r_squared}});
    }
  for (std::size_t s = 0; s < opt.sizes.size(); ++s)
    if (by_size[s].size() >= 3) {
      const auto f = moments::fit_power_law(by_size[s]);
      fits["versus_order"].push_back({{"N", opt.sizes[s]}, {"exponent", f.exponent}, {"prefactor", f.prefactor}, {"r_squared", f.r_squared}});
    }
  r.files.push_back({t.id + "/fits.json", fits.dump(2) + "\n"});
  r.summary = {{"fits", fits}};
  return r;
}

TaskResult run_walks(const TaskPlan& t, const ExperimentConfig& cfg) {
  const auto model = t.model.build();
  const auto domain = build_domain(t.geometry);
  const auto graph = walks::build_walk_graph(model, domain, t.boundary);
  const auto dist = walks::boundary_hop_distance(model, domain, t.boundary, t.m_max);

  std::string csv = "site,coord,boundary_distance,m,rooted_re,rooted_im,missing_re,missing_im\n";
  json reports = json::array();
  double worst = 0.0, worst_dfs = 0.0;
  bool shells = true;
  for (int m = 1; m <= t.m_max; ++m) {
    const Complex bulk = walks::bulk_walk_weight(model, m);
    const auto rooted = walks::rooted_walk_sums(graph, m);
    for (int i = 0; i < domain.size(); ++i) {
      std::string coord;
      for (int a = 0; a < domain.dimension(); ++a) coord += (a ? ":" : "") + std::to_string(domain.site(i)[a]);
      const Complex miss = bulk - rooted[i];
      csv += io::csv_line({std::to_string(i), coord, std::to_string(dist[i]), std::to_string(m),
                           format_double(rooted[i].real()), format_double(rooted[i].imag()),
                           format_double(miss.real()), format_double(miss.imag())});
      if (cfg.walks.exhaustive) {
        const Complex dfs = walks::rooted_walk_sum_exhaustive(model, domain, t.boundary, i, m);
        worst_dfs = std::max(worst_dfs, route_error(dfs, rooted[i], amplitude_sum(model), m));
      }
    }
    const auto rep = walks::decomposition_check(model, domain, t.boundary, m, cfg.tolerances.at("decomposition_rel"));
    worst = std::max(worst, rep.relative_error);
    shells = shells && rep.shell_bound_holds;
    reports.push_back({{"m", m},
                       {"trace_moment", complex_json(rep.trace_moment)},
                       {"ledger_moment", complex_json(rep.ledger_moment)},
                       {"relative_error", rep.relative_error},
                       {"identity_holds", rep.identity_holds},
                       {"observed_shell", rep.observed_shell},
                       {"predicted_shell", rep.predicted_shell},
                       {"shell_bound_holds", rep.shell_bound_holds}});
  }
  TaskResult r;
  r.files.push_back({t.id + "/walks.csv", csv});
  r.files.push_back({t.id + "/decomposition.json", reports.dump(2) + "\n"});
  const double tol = cfg.tolerances.at("decomposition_rel");
  r.summary["checks"]["decomposition_identity"] = check_entry(worst <= tol, worst, tol);
  r.summary["checks"]["shell_bound"] = {{"pass", shells}};
  r.checks_passed = worst <= tol && shells;
  if (cfg.walks.exhaustive) {
    const double rt = cfg.tolerances.at("route_rel");
    r.summary["checks"]["exhaustive_walks"] = check_entry(worst_dfs <= rt, worst_dfs, rt);
    r.checks_passed = r.checks_passed && worst_dfs <= rt;
  }
  return r;
}

TaskResult run_greens(const TaskPlan& t, const ExperimentConfig& cfg) {
  const auto model = t.model.build();
  const auto h = lattice::assemble(model, build_domain(t.geometry), t.boundary);
  const auto direct = linalg::eigenvalues(h, "direct");
  const auto& o = cfg.greens;
  auto grid = greens::grid_for_spectrum(direct, o.step, o.margin);
  const auto stack = greens::synth_response(h.matrix, std::move(grid), o.noise, t.seed);
  const auto rec = greens::reconstruct_spectrum(stack, o.residual_threshold);
  const double dist = linalg::matching_distance(rec.spectrum.eigenvalues, direct.eigenvalues);

  json poles = json::array();
  int flagged = 0, crossings = 0;
  double min_overlap = 1.0;
  for (std::size_t b = 0; b < rec.poles.size(); ++b) {
    const auto& p = rec.poles[b];
    flagged += p.flagged;
    crossings += rec.branches[b].unresolved_crossing;
    min_overlap = std::min(min_overlap, rec.branches[b].min_overlap);
    poles.push_back({{"branch", p.branch},
                     {"eigenvalue", complex_json(p.eigenvalue)},
                     {"prefactor", complex_json(p.prefactor)},
                     {"residual", p.residual},
                     {"window", {p.window_low, p.window_high}},
                     {"window_points", p.window_points},
                     {"flagged", p.flagged},
                     {"min_overlap", rec.branches[b].min_overlap}});
  }
  json out = {{"direct", io::spectrum_json(direct)},
              {"reconstructed", io::spectrum_json(rec.spectrum)},
              {"matching_distance", dist},
              {"grid", {{"points", stack.size()}, {"skipped", stack.skipped}, {"step", o.step}}},
              {"noise", o.noise},
              {"seed", t.seed},
              {"poles", poles}};
  TaskResult r;
  r.files.push_back({t.id + "/reconstruction.json", out.dump(2) + "\n"});
  if (o.write_stack) {
    std::ostringstream os;
    greens::write_stack_csv(os, stack);
    r.files.push_back({t.id + "/response.csv", os.str()});
  }
  r.spectrum = rec.spectrum.eigenvalues;
  r.summary = {{"matching_distance", dist}, {"flagged_poles", flagged}, {"unresolved_crossings", crossings},
               {"min_overlap", min_overlap}};
  if (o.noise == 0.0) {
    const double tol = cfg.tolerances.at("roundtrip_hz");
    r.summary["checks"]["roundtrip"] = check_entry(dist <= tol, dist, tol);
    r.checks_passed = dist <= tol;
  }
  return r;
}

TaskResult run_dynamics(const TaskPlan& t, const ExperimentConfig& cfg) {
  const auto& d = cfg.dynamics;
  auto run = d.run;
  run.sites = t.geometry.extents[0];
  const double gamma = t.model.pt->gamma, alpha = t.model.pt->alpha;
  const Complex onsite = t.model.onsite;
  const auto res = dynamics::run_pulse(gamma, alpha, onsite, run);
  const double eps = d.search.epsilon_rate;
  const int source = run.sites / 2;

  const auto& comp = res.field.compensated;
  const auto& norm = res.field.normalized;
  std::string field_csv = "t,site,abs,arg\n", heat = "t";
  for (int i = 0; i < comp.sites(); ++i) heat += "," + std::to_string(i);
  heat += "\n";
  std::string source_csv = "t,raw_abs,compensated_abs,normalized_abs\n";
  double norm_err = 0.0;
  for (int s = 0; s < comp.slices(); ++s) {
    if (norm.valid[s]) norm_err = std::max(norm_err, std::abs(norm.amplitudes.row(s).squaredNorm() - 1.0));
    source_csv += io::csv_line({format_double(comp.times[s]), format_double(std::abs(res.field.raw.amplitudes(s, source))),
                                format_double(std::abs(comp.amplitudes(s, source))),
                                format_double(std::abs(norm.amplitudes(s, source)))});
    if (s % d.export_every) continue;
    const std::string ts = format_double(comp.times[s]);
    heat += ts;
    for (int i = 0; i < comp.sites(); ++i) {
      const Complex a = comp.amplitudes(s, i);
      field_csv += io::csv_line({ts, std::to_string(i), format_double(std::abs(a)), format_double(std::arg(a))});
      heat += "," + format_double(std::abs(norm.amplitudes(s, i)));
    }
    heat += "\n";
  }
  json summary = {{"gamma", gamma},
                  {"alpha", alpha},
                  {"growth_rate", res.growth},
                  {"saddle_growth", res.saddle},
                  {"regime", res.growth > eps ? "proliferative" : "dispersive"},
                  {"saddle_regime", res.saddle > eps ? "proliferative" : "dispersive"},
                  {"peak_gain", res.peak_gain},
                  {"drift_velocity", res.drift},
                  {"zero_slices", res.field.zero_slices},
                  {"epsilon_rate", eps}};
  TaskResult r;
  r.files.push_back({t.id + "/field.csv", field_csv});
  r.files.push_back({t.id + "/heatmap.csv", heat});
  r.files.push_back({t.id + "/source.csv", source_csv});
  r.files.push_back({t.id + "/summary.json", summary.dump(2) + "\n"});
  const double tol = cfg.tolerances.at("norm");
  summary["checks"]["norm_contract"] = check_entry(norm_err <= tol, norm_err, tol);
  r.checks_passed = norm_err <= tol;
  r.summary = summary;
  return r;
}

TaskResult run_critical(const TaskPlan& t, const ExperimentConfig& cfg) {
  const auto& d = cfg.dynamics;
  auto run = d.run;
  run.sites = t.geometry.extents[0];
  double alpha = t.model.pt->alpha;
  json out;
  if (d.calibrate) {
    alpha = dynamics::calibrate_alpha(d.calibrate_target, t.model.onsite, 0.1, 0.3, 1e-5, d.search);
    out["calibrated_alpha"] = alpha;
    out["calibrate_target"] = d.calibrate_target;
  }
  const auto time = dynamics::critical_gamma_time(alpha, t.model.onsite, run, d.search);
  const auto sad = dynamics::critical_gamma_saddle(alpha, t.model.onsite, d.search);
  const bool monotone = dynamics::saddle_monotone(alpha, t.model.onsite, d.search);
  const double diff = std::abs(time.gamma - sad.gamma);
  out["alpha"] = alpha;
  out["bracket"] = {d.search.low, d.search.high};
  out["tolerance"] = d.search.tolerance;
  out["epsilon_rate"] = d.search.epsilon_rate;
  out["time_domain"] = {{"gamma_c", time.gamma}, {"interval", {time.low, time.high}}, {"evaluations", time.evaluations}};
  out["saddle"] = {{"gamma_c", sad.gamma}, {"interval", {sad.low, sad.high}}, {"evaluations", sad.evaluations}};
  out["difference"] = diff;
  out["monotone_in_bracket"] = monotone;
  TaskResult r;
  r.files.push_back({t.id + "/critical.json", out.dump(2) + "\n"});
  out["checks"]["critical_agreement"] = check_entry(diff <= 0.01, diff, 0.01);
  r.checks_passed = diff <= 0.01;
  r.summary = out;
  return r;
}

// Moment spread across sweep points against spectral reshaping.
json collapse_report(const std::vector<TaskResult>& results, int m_top) {
  std::vector<moments::MomentSeries> series;
  double radius = 0.0;
  for (const auto& r : results) {
    moments::MomentSeries s;
    s.reference = r.reference;
    s.values = r.moments;
    series.push_back(s);
    for (const auto& e : r.spectrum) radius = std::max(radius, std::abs(e - r.reference));
  }
  json spread = json::array();
  for (int m = 1; m <= m_top; ++m) spread.push_back({{"m", m}, {"relative_spread", moments::relative_spread(series, m)}});
  json pairs = json::array();
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (std::size_t a = 0; a < results.size(); ++a)
    for (std::size_t b = a + 1; b < results.size(); ++b) {
      const double h = linalg::hausdorff_distance(results[a].spectrum, results[b].spectrum) / radius;
      lo = std::min(lo, h);
      hi = std::max(hi, h);
      pairs.push_back({{"a", results[a].id}, {"b", results[b].id}, {"normalized_hausdorff", h}});
    }
  return {{"spread", spread}, {"hausdorff", pairs}, {"hausdorff_min", lo}, {"hausdorff_max", hi},
          {"spectral_radius", radius}};
}

}  // namespace

std::vector<TaskPlan> plan_tasks(const ExperimentConfig& cfg) {
  const auto& ax = cfg.axes;
  if (!ax.g.empty() && !ax.boundaries.empty())
    throw InvalidArgument("config.sweep: \"g\" and \"boundaries\" both set the boundary; use one");
  if (cfg.task == TaskKind::Scaling && !ax.sizes.empty())
    throw InvalidArgument("config.sweep.N: scaling runs take their sizes from scaling.sizes");

  // fixed nesting order: geometry, boundary, g, N, m_max, gamma
  auto or_one = [](auto const& v, auto fallback) {
    using T = std::decay_t<decltype(fallback)>;
    return v.empty() ? std::vector<T>{fallback} : std::vector<T>(v.begin(), v.end());
  };
  const auto geos = or_one(ax.geometries, cfg.geometry);
  const auto bcs = or_one(ax.boundaries, cfg.boundary);
  const auto gs = or_one(ax.g, -1.0);
  const auto ns = or_one(ax.sizes, -1);
  const auto ms = or_one(ax.m_max, cfg.task == TaskKind::Walks ? cfg.walks.m_max : cfg.moments.m_max);
  const auto gams = or_one(ax.gamma, cfg.model.pt ? cfg.model.pt->gamma : 0.0);

  std::vector<TaskPlan> out;
  for (const auto& geo : geos)
    for (const auto& bc : bcs)
      for (double g : gs)
        for (int n : ns)
          for (int m : ms)
            for (double gam : gams) {
              TaskPlan t;
              t.kind = cfg.task;
              t.model = cfg.model;
              t.geometry = geo;
              t.boundary = bc;
              t.m_max = m;
              std::string tag = kind_name(cfg.task);
              if (!ax.geometries.empty()) {
                t.labels["geometry"] = geo.label();
                tag += "-" + geo.label();
              }
              if (!ax.boundaries.empty()) {
                t.labels["boundary"] = boundary_json(bc);
                tag += "-" + boundary_tag(bc);
              }
              if (g >= 0) {
                t.boundary = lattice::BoundarySpec::uniform(cfg.model.dimension, lattice::Closure::generalized(g));
                t.labels["g"] = g;
                tag += "-g" + short_number(g);
              }
              if (n > 0) {
                if (!t.geometry.mask.empty()) throw InvalidArgument("config.sweep.N: size sweeps need an unmasked chain");
                t.geometry.extents = {n};
                t.labels["N"] = n;
                tag += "-N" + std::to_string(n);
              }
              if (!ax.m_max.empty()) {
                t.labels["m_max"] = m;
                tag += "-m" + std::to_string(m);
              }
              if (!ax.gamma.empty()) {
                t.model.pt->gamma = gam;
                t.labels["gamma"] = gam;
                tag += "-gamma" + short_number(gam);
              }
              t.index = static_cast<int>(out.size());
              char prefix[16];
              std::snprintf(prefix, sizeof prefix, "%03d-", t.index);
              t.id = prefix + tag;
              t.seed = cfg.seed + 0x9e3779b97f4a7c15ull * static_cast<std::uint64_t>(t.index);
              out.push_back(std::move(t));
            }

  if (cfg.task == TaskKind::Dynamics && cfg.dynamics.critical) {
    TaskPlan t = out.front();
    t.critical = true;
    t.index = static_cast<int>(out.size());
    char prefix[16];
    std::snprintf(prefix, sizeof prefix, "%03d-", t.index);
    t.id = std::string(prefix) + "critical";
    t.labels = json::object();
    out.push_back(std::move(t));
  }

  // Cost guards.
  for (const auto& t : out) {
    const auto domain = build_domain(t.geometry);
    const int n = domain.size();
    switch (t.kind) {
      case TaskKind::Spectrum:
      case TaskKind::Moments:
      case TaskKind::Greens: guard_dense(n, t.id); break;
      case TaskKind::Scaling:
        for (int s : cfg.scaling.sizes) {
          long sites = 1;
          for (int a = 0; a < cfg.model.dimension; ++a) sites *= s;
          guard_dense(static_cast<int>(std::min<long>(sites, 1L << 30)), t.id + " size " + std::to_string(s));
        }
        break;
      case TaskKind::Walks:
        if (n > walks::kMaxDecompositionSites)
          throw InvalidArgument(t.id + ": walk ledgers are limited to N <= " +
                                std::to_string(walks::kMaxDecompositionSites));
        if (cfg.walks.exhaustive && n > walks::kMaxExhaustiveSites)
          throw InvalidArgument(t.id + ": exhaustive walk enumeration is limited to N <= " +
                                std::to_string(walks::kMaxExhaustiveSites));
        if (t.m_max > walks::kMaxDecompositionOrder)
          throw InvalidArgument(t.id + ": walk orders are limited to m <= " +
                                std::to_string(walks::kMaxDecompositionOrder));
        break;
      case TaskKind::Dynamics:
        if (t.model.pt->gamma < 0 || t.model.pt->gamma >= 1) throw InvalidArgument(t.id + ": gamma outside [0, 1)");
        if (t.geometry.extents[0] > 100000) throw InvalidArgument(t.id + ": chain too long");
        break;
    }
    if (t.m_max > kMaxMomentOrder) throw InvalidArgument(t.id + ": m_max exceeds " + std::to_string(kMaxMomentOrder));
  }
  return out;
}

TaskResult run_task(const TaskPlan& t, const ExperimentConfig& cfg) {
  TaskResult r;
  if (t.critical) {
    r = run_critical(t, cfg);
  } else {
    switch (t.kind) {
      case TaskKind::Spectrum: r = run_spectrum(t, false, cfg); break;
      case TaskKind::Moments: r = run_spectrum(t, true, cfg); break;
      case TaskKind::Scaling: r = run_scaling(t, cfg); break;
      case TaskKind::Walks: r = run_walks(t, cfg); break;
      case TaskKind::Greens: r = run_greens(t, cfg); break;
      case TaskKind::Dynamics: r = run_dynamics(t, cfg); break;
    }
  }
  r.id = t.id;
  r.summary["id"] = t.id;
  r.summary["kind"] = t.critical ? "critical" : kind_name(t.kind);
  r.summary["labels"] = t.labels;
  r.summary["checks_passed"] = r.checks_passed;
  return r;
}

std::vector<OutputFile> render_experiment(const ExperimentConfig& cfg, int workers, bool* checks_passed) {
  const auto tasks = plan_tasks(cfg);
  std::vector<TaskResult> results(tasks.size());
  std::vector<std::exception_ptr> errors(tasks.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t i; (i = next.fetch_add(1)) < tasks.size();) {
      try {
        results[i] = run_task(tasks[i], cfg);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const int pool = std::max(1, std::min<int>(workers, static_cast<int>(tasks.size())));
  std::vector<std::thread> threads;
  for (int w = 1; w < pool; ++w) threads.emplace_back(worker);
  worker();
  for (auto& th : threads) th.join();
  for (std::size_t i = 0; i < tasks.size(); ++i)
    if (errors[i]) {
      try {
        std::rethrow_exception(errors[i]);
      } catch (const std::exception& e) {
        throw NumericalError("task " + tasks[i].id + " failed: " + e.what());
      }
    }

  std::vector<OutputFile> files;
  json summary = {{"tasks", json::array()}};
  bool passed = true;
  for (auto& r : results) {
    passed = passed && r.checks_passed;
    summary["tasks"].push_back(r.summary);
    for (auto& f : r.files) files.push_back(std::move(f));
  }
  if (cfg.task == TaskKind::Moments && results.size() >= 2) {
    const auto report = collapse_report(results, std::min(cfg.moments.m_max, 10));
    files.push_back({"collapse.json", report.dump(2) + "\n"});
    summary["collapse"] = report;
  }
  summary["checks_passed"] = passed;
  files.push_back({"summary.json", summary.dump(2) + "\n"});

  // Where the files land is not part of the experiment.
  json hashed = cfg.source;
  if (hashed.is_object()) hashed.erase("output");
  json manifest = {{"tool", "momentlab"},
                   {"version", MOMENTLAB_VERSION},
                   {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                 std::to_string(EIGEN_MINOR_VERSION)},
                   {"config_hash", io::hex64(io::fnv1a(hashed.dump()))},
                   {"seed", cfg.seed},
                   {"kind", cfg.sweep ? "sweep" : kind_name(cfg.task)},
                   {"task_count", tasks.size()},
                   {"files", json::array()}};
  for (const auto& f : files) manifest["files"].push_back({{"path", f.path}, {"fnv1a", io::hex64(io::fnv1a(f.content))}});
  files.push_back({"manifest.json", manifest.dump(2) + "\n"});
  if (checks_passed) *checks_passed = passed;
  return files;
}

RunReport run_experiment(const ExperimentConfig& cfg, int workers) {
  RunReport rep;
  rep.output = cfg.output;
  rep.tasks = static_cast<int>(plan_tasks(cfg).size());
  // Fail on an unwritable location before spending time on the tasks.
  std::error_code ec;
  std::filesystem::create_directories(rep.output, ec);
  if (ec) throw std::runtime_error("cannot create output directory " + rep.output.string() + ": " + ec.message());
  {
    const auto probe = rep.output / ".momentlab-write-test";
    std::ofstream os(probe);
    if (!os) throw std::runtime_error("output directory " + rep.output.string() + " is not writable");
    os.close();
    std::filesystem::remove(probe, ec);
  }
  bool passed = true;
  auto files = render_experiment(cfg, workers, &passed);
  rep.checks_passed = passed;
  for (const auto& f : files) {
    io::write_text(rep.output / f.path, f.content);
    rep.files.push_back(f.path);
  }
  return rep;
}

}  // namespace momentlab::cli
