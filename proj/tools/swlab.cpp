// swlab command-line entry point. Every subcommand accepts --config <json>
// (keys are long option names, the command line wins), --seed, --out and
// --workers. Exit status: 0 success, 1 usage or configuration error,
// 2 a property suite failed, 3 a numerical failure inside a computation.

#include <chrono>
#include <cstdio>
#include <functional>
#include <map>
#include <string>
#include <type_traits>
#include <vector>

#include "report.hpp"

using namespace swlab;
using cli::json;

namespace {

struct Options {
  std::string config, out, csv;
  std::uint64_t seed = 0;
  std::size_t workers = 0;

  // fields
  std::string potential, grid, rho = "from-potential", weight, f;
  std::size_t dim = 3;
  double tol = 1e-3;

  // agmon
  std::string source, method = "fmm", stencil = "full", mean = "harmonic", check = "all";

  // classes
  std::string cls = "h", radius_law = "uniform:0.5,2";
  double p = 2.0, c = 0.5, m = 1.0, theta = 0.0, margin = 0.0, local_lo = 0.25;
  std::size_t family = 512, centers = 24, radius_count = 32;
  double cover_margin = 0.0, radius_step = 0.5;

  // kernels and operators
  std::string family_kind = "mehler", op = "adapted", mode = "centered", points, x, y;
  double t = 0.5, N = 1.0, t_min = 1e-3, t_max = 10.0, cutoff = 0.0;
  std::size_t j = 1, per_decade = 40, panel = 64, random = 4;
  bool physical = false;

  // verify
  std::string suite = "all";
  bool quick = false;
};

std::size_t grid_dim(const Options& o) { return o.grid.empty() ? o.dim : parse_grid_spec(o.grid).dim; }

template <class F>
auto with_dim(std::size_t d, F&& f) {
  switch (d) {
    case 1:
      return f(std::integral_constant<std::size_t, 1>{});
    case 2:
      return f(std::integral_constant<std::size_t, 2>{});
    case 3:
      return f(std::integral_constant<std::size_t, 3>{});
  }
  throw ParseError("dim", "dimension must be 1, 2 or 3");
}

const std::string& need(const std::string& v, const char* field) {
  if (v.empty()) throw ParseError(field, "required");
  return v;
}

template <std::size_t D>
Grid<D> load_grid(const Options& o) {
  return parse_grid_spec(need(o.grid, "grid")).make<D>();
}

// A rho CSV, or the critical radius of --potential on --grid (d = 3 only).
template <std::size_t D>
Field<D> load_rho(const Options& o) {
  if (o.rho != "from-potential") return read_field_csv<D>(o.rho);
  if constexpr (D == 3) {
    RhoOptions ro;
    ro.tol = o.tol;
    const auto V = parse_potential<3>(need(o.potential, "potential"));
    return rho_field(V, load_grid<3>(o), ro).rho;
  } else {
    throw ParseError("rho", "the critical radius of a potential needs dim 3; pass a rho CSV instead");
  }
}

template <std::size_t D>
Field<D> load_input(const Options& o, const Grid<D>& g) {
  const Expression e(need(o.f, "f"));
  if (e.max_variable() > static_cast<int>(D)) throw ParseError("f", "expression uses a coordinate beyond the dimension");
  return Field<D>::sample(g, [&](const Point<D>& x) { return e(x.data(), D); });
}

// "x,y,z;x,y,z" to nearest cells; all cells when empty.
template <std::size_t D>
std::vector<std::size_t> eval_cells(const Options& o, const Grid<D>& g) {
  if (o.points.empty()) return all_cells(g.size());
  std::vector<std::size_t> out;
  for (const auto& item : split(o.points, ';')) {
    const auto x = parse_point<D>(item, "points");
    if (!g.contains(x)) throw ParseError("points", "point " + item + " lies outside the grid");
    out.push_back(g.nearest(x));
  }
  return out;
}

template <std::size_t D>
void write_values_csv(const std::string& path, const Grid<D>& g, const MaximalResult& r, const std::vector<std::size_t>& cells,
                      const char* arg) {
  std::string s;
  for (std::size_t a = 0; a < D; ++a) s += "x" + std::to_string(a + 1) + ",";
  s += std::string("value,") + arg + "\n";
  for (std::size_t k = 0; k < cells.size(); ++k) {
    for (double v : g.point(cells[k])) s += cli::csv_number(v) + ",";
    s += cli::csv_number(r.values[k]) + "," + cli::csv_number(r.argmax.empty() ? std::nan("") : r.argmax[k]) + "\n";
  }
  cli::write_text(path, s);
}

json maximal_summary(const MaximalResult& r) {
  double mx = 0.0;
  for (double v : r.values) mx = std::max(mx, v);
  return {{"evaluated", r.values.size()}, {"max", cli::number(mx)}, {"skipped", r.skipped}, {"warnings", r.warnings}};
}

AgmonOptions agmon_options(const Options& o) {
  AgmonOptions a;
  a.method = o.method == "dijkstra" ? AgmonMethod::dijkstra : AgmonMethod::fast_marching;
  a.stencil = o.stencil == "axis" ? Stencil::axis : Stencil::full;
  a.mean = o.mean == "arithmetic" ? EdgeMean::arithmetic : EdgeMean::harmonic;
  return a;
}

// ---------------------------------------------------------------------------

struct Run {
  const Options& o;
  const json& config;
  std::string command;

  void emit(json body) const { cli::write_json(o.out, cli::envelope(command, config, std::move(body))); }
  // Field-producing commands write CSV to --out and the summary to stdout.
  void summary(json body) const { cli::write_json("", cli::envelope(command, config, std::move(body))); }
  void mirror(const std::string& text) const {
    if (!o.csv.empty()) cli::write_text(o.csv, text);
  }
};

int cmd_rho(const Run& run) {
  const auto& o = run.o;
  if (grid_dim(o) != 3) throw ParseError("dim", "the critical radius needs dim 3");
  RhoOptions ro;
  ro.tol = o.tol;
  const auto V = parse_potential<3>(need(o.potential, "potential"));
  const auto res = rho_field(V, load_grid<3>(o), ro);
  if (!o.out.empty()) write_field_csv(res.rho, o.out, "rho");
  const auto& g = res.rho.grid();
  run.summary({{"cells", g.size()},
               {"min", res.rho.min()},
               {"max", res.rho.max()},
               {"at_origin", res.rho.interpolate(Point<3>{})},
               {"bracket", {res.bracket.r_min, res.bracket.r_max}},
               {"output", o.out}});
  return 0;
}

int cmd_agmon(const Run& run) {
  const auto& o = run.o;
  return with_dim(grid_dim(o), [&](auto dc) {
    constexpr std::size_t D = decltype(dc)::value;
    const AgmonSolver<D> solver(load_rho<D>(o), agmon_options(o));
    const Point<D> src = o.source.empty() ? Point<D>{} : parse_point<D>(o.source, "source");
    if (!solver.grid().contains(src)) throw ParseError("source", "source lies outside the grid");
    const auto u = solver.solve(src);
    if (!o.out.empty()) write_field_csv(u.u, o.out, "u");
    run.summary({{"solver", u.solver}, {"source", std::vector<double>(src.begin(), src.end())}, {"max", u.u.max()},
                 {"unreachable", u.unreachable}, {"output", o.out}});
    return 0;
  });
}

int cmd_agmon_suite(const Run& run) {
  const auto& o = run.o;
  static const std::map<std::string, std::string> names{{"shen", "shen-fit"},        {"local", "local-comparability"},
                                                        {"global", "global-bounds"}, {"balls", "ball-inclusions"},
                                                        {"doubling", "doubling"},    {"cover", "critical-cover"}};
  return with_dim(grid_dim(o), [&](auto dc) {
    constexpr std::size_t D = decltype(dc)::value;
    GeometryConfig cfg;
    cfg.seed += o.seed;
    auto res = geometry_suite<D>(load_rho<D>(o), o.potential.empty() ? o.rho : o.potential, cfg);
    if (o.check != "all") {
      std::erase_if(res.report.checks, [&](const SuiteCheck& c) { return c.name != names.at(o.check); });
    }
    json checks = json::array();
    for (const auto& c : res.report.checks) {
      auto j = cli::to_json(c);
      j["violations"] = c.constants.count("violations") ? c.constants.at("violations") : 0.0;
      checks.push_back(j);
    }
    run.emit({{"suite", res.report.suite}, {"verdict", res.report.pass() ? "PASS" : "FAIL"}, {"checks", checks}});
    run.mirror(cli::suites_csv({res.report}));
    return res.report.pass() ? 0 : 2;
  });
}

int cmd_weight_class(const Run& run) {
  const auto& o = run.o;
  return with_dim(grid_dim(o), [&](auto dc) {
    constexpr std::size_t D = decltype(dc)::value;
    const auto rho = load_rho<D>(o);
    const auto& g = rho.grid();
    const AgmonSolver<D> solver(rho);
    auto ws = sample_weight(parse_weight<D>(need(o.weight, "weight"), &solver), g, o.p);
    ws.evaluator_below = g.cell_diagonal();
    ClassConstantEstimate est;
    if (o.cls == "s") {
      std::vector<double> radii;
      for (std::size_t k = 1; k <= o.radius_count; ++k) radii.push_back(o.radius_step * static_cast<double>(k));
      est = s_class_constant(ws, o.c, solver, cover_centers(rho, o.cover_margin, o.centers), radii);
    } else if (o.cls == "ap-loc") {
      auto fam = local_ball_family(rho, o.family, o.local_lo, o.seed, o.margin);
      order_by_reach(fam.balls);
      est = ap_loc_constant(ws, rho, fam);
    } else {
      auto fam = sample_ball_family(g, o.family, parse_radius_law(o.radius_law), o.seed, o.margin);
      order_by_reach(fam.balls);
      est = o.cls == "h" ? h_class_constant(ws, o.c, o.m, rho, fam) : ap_theta_constant(ws, o.theta, rho, fam);
    }
    auto body = cli::to_json(est);
    body["weight"] = ws.source;
    run.emit(body);
    run.mirror(cli::trace_csv(est));
    return 0;
  });
}

int cmd_kernel(const Run& run) {
  const auto& o = run.o;
  const auto xs = parse_numbers(need(o.x, "x"), "x"), ys = parse_numbers(need(o.y, "y"), "y");
  if (xs.size() != ys.size()) throw ParseError("y", "x and y need the same number of coordinates");
  if (!(o.t > 0.0)) throw ParseError("t", "time must be positive");
  return with_dim(xs.size(), [&](auto dc) {
    constexpr std::size_t D = decltype(dc)::value;
    Point<D> x{}, y{};
    std::copy(xs.begin(), xs.end(), x.begin());
    std::copy(ys.begin(), ys.end(), y.begin());
    json body{{"family", o.family_kind}, {"x", xs}, {"y", ys}};
    if (o.family_kind == "mehler") {
      const double t = o.physical ? kernels::mehler_time_from_physical(o.t) : o.t;
      body["t"] = t;
      body["physical_time"] = kernels::mehler_physical_from_time(t);
      body["value"] = kernels::mehler_kernel<D>(t, x, y);
    } else {
      body["t"] = o.t;
      body["N"] = o.N;
      body["value"] = kernels::heat_kernel_constant<D>(o.N, o.t, x, y);
    }
    run.emit(body);
    return 0;
  });
}

int cmd_heat1d(const Run& run) {
  const auto& o = run.o;
  if (grid_dim(o) != 1) throw ParseError("dim", "heat1d needs a one-dimensional grid");
  if (!(o.t > 0.0)) throw ParseError("t", "time must be positive");
  const auto g = load_grid<1>(o);
  const auto V = parse_potential<1>(need(o.potential, "potential"));
  V.validate_on(g);
  std::vector<double> v(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) v[i] = V(g.point(i));
  const kernels::DiscreteSemigroup sg(g, v);
  const auto K = sg.kernel(o.t);
  if (!o.out.empty()) {
    std::string s = "x";
    for (std::size_t jj = 0; jj < g.size(); ++jj) s += "," + cli::csv_number(g.point(jj)[0]);
    s += "\n";
    for (std::size_t i = 0; i < g.size(); ++i) {
      s += cli::csv_number(g.point(i)[0]);
      for (std::size_t jj = 0; jj < g.size(); ++jj) s += "," + cli::csv_number(K(i, jj));
      s += "\n";
    }
    cli::write_text(o.out, s);
  }
  run.summary({{"cells", g.size()}, {"lowest_eigenvalue", sg.eigenvalues()[0]}, {"max", K.maxCoeff()}, {"output", o.out}});
  return 0;
}

int cmd_maximal(const Run& run) {
  const auto& o = run.o;
  return with_dim(grid_dim(o), [&](auto dc) {
    constexpr std::size_t D = decltype(dc)::value;
    const auto rho = load_rho<D>(o);
    const auto& g = rho.grid();
    const auto f = load_input<D>(o, g);
    const auto cells = eval_cells<D>(o, g);
    const auto mode = o.mode == "uncentered" ? MaximalMode::uncentered : MaximalMode::centered;
    MaximalResult r;
    if (o.op == "adapted") {
      const AgmonSolver<D> solver(rho, agmon_options(o));
      r = maximal_adapted<D>(f, agmon_distances(solver), o.c, mode, default_metric_radii(rho, o.per_decade), cells);
    } else {
      r = maximal_phi<D>(f, rho, o.c, o.m, log_grid(0.5 * g.min_spacing(), g.diameter(), o.per_decade), cells, mode);
    }
    if (!o.out.empty()) write_values_csv<D>(o.out, g, r, cells, "radius");
    auto body = maximal_summary(r);
    body["op"] = o.op;
    body["output"] = o.out;
    run.summary(body);
    return 0;
  });
}

int cmd_heat(const Run& run) {
  const auto& o = run.o;
  if (!(o.t_min > 0.0) || !(o.t_max > o.t_min)) throw ParseError("t-min", "need 0 < t-min < t-max");
  return with_dim(grid_dim(o), [&](auto dc) {
    constexpr std::size_t D = decltype(dc)::value;
    const auto g = load_grid<D>(o);
    const auto f = load_input<D>(o, g);
    const auto cells = eval_cells<D>(o, g);
    const auto fam = o.family_kind == "mehler" ? mehler_family<D>() : heat_constant_family<D>(o.N);
    const auto r = heat_maximal<D>(f, fam, log_grid(o.t_min, o.t_max, o.per_decade), cells);
    if (!o.out.empty()) write_values_csv<D>(o.out, g, r, cells, "time");
    auto body = maximal_summary(r);
    body["family"] = fam.name;
    body["output"] = o.out;
    run.summary(body);
    return 0;
  });
}

int cmd_riesz(const Run& run) {
  const auto& o = run.o;
  return with_dim(grid_dim(o), [&](auto dc) {
    constexpr std::size_t D = decltype(dc)::value;
    if (o.j < 1 || o.j > D) throw ParseError("j", "component must lie in 1.." + std::to_string(D));
    const auto g = load_grid<D>(o);
    const auto f = load_input<D>(o, g);
    const double cut = o.cutoff > 0.0 ? o.cutoff : std::numeric_limits<double>::infinity();
    const RieszConstant<D> R(g, o.N, o.j - 1, cut);
    const Field<D> out(g, R.apply(f.values()));
    if (!o.out.empty()) write_field_csv(out, o.out, "riesz");
    run.summary({{"N", o.N}, {"j", o.j}, {"min", out.min()}, {"max", out.max()}, {"output", o.out}});
    return 0;
  });
}

// "identity", "riesz:N,j" (j 1-based) or "maximal:c".
template <std::size_t D>
DiscreteOperator parse_operator(const Options& o, const Grid<D>& g, const Field<D>* rho, std::unique_ptr<AgmonSolver<D>>& solver) {
  const auto colon = o.op.find(':');
  const std::string kind = o.op.substr(0, colon);
  const std::string rest = colon == std::string::npos ? "" : o.op.substr(colon + 1);
  if (kind == "identity") return identity_operator();
  if (kind == "riesz") {
    const auto v = parse_numbers(rest, "op");
    if (v.size() != 2 || v[1] < 1 || v[1] > static_cast<double>(D) || v[1] != std::floor(v[1]))
      throw ParseError("op", "riesz expects N,j with j in 1.." + std::to_string(D));
    return riesz_operator<D>(std::make_shared<const RieszConstant<D>>(g, v[0], static_cast<std::size_t>(v[1]) - 1));
  }
  if (kind == "maximal") {
    if (!rho) throw ParseError("op", "the maximal operator needs a rho field");
    if (!solver) solver = std::make_unique<AgmonSolver<D>>(*rho);
    return maximal_adapted_operator<D>(g, cached_distances<D>(g, agmon_distances(*solver)), parse_number(rest, "op"),
                                       default_metric_radii(*rho, 20));
  }
  throw ParseError("op", "unknown operator '" + kind + "'");
}

int cmd_norm_bound(const Run& run) {
  const auto& o = run.o;
  return with_dim(grid_dim(o), [&](auto dc) {
    constexpr std::size_t D = decltype(dc)::value;
    const bool needs_rho = o.op.rfind("maximal", 0) == 0 || o.weight.rfind("exp-agmon", 0) == 0;
    std::unique_ptr<Field<D>> rho;
    if (needs_rho) rho = std::make_unique<Field<D>>(load_rho<D>(o));
    const Grid<D> g = rho ? rho->grid() : load_grid<D>(o);
    std::unique_ptr<AgmonSolver<D>> solver;
    if (rho) solver = std::make_unique<AgmonSolver<D>>(*rho);
    const auto ws = sample_weight(parse_weight<D>(need(o.weight, "weight"), solver.get()), g, o.p);
    const auto T = parse_operator<D>(o, g, rho.get(), solver);
    const auto fam = sample_ball_family(g, o.panel, parse_radius_law(o.radius_law), o.seed, o.margin);
    auto cands = adversarial_candidates(ws, fam.balls);
    for (auto& c : indicator_candidates(g, fam.balls)) cands.push_back(std::move(c));
    for (auto& c : random_candidates(g, o.random, o.seed)) cands.push_back(std::move(c));
    const auto nb = weighted_norm_lower_bound(T, ws, cands);
    run.emit({{"op", T.tag},
              {"params", cli::constants(T.params)},
              {"weight", ws.source},
              {"p", o.p},
              {"bound", cli::number(nb.bound)},
              {"attaining", nb.attaining},
              {"candidates", cands.size()}});
    std::string s = "candidate,ratio\n";
    for (std::size_t k = 0; k < cands.size(); ++k) s += "\"" + cands[k].name + "\"," + cli::csv_number(nb.ratios[k]) + "\n";
    run.mirror(s);
    return 0;
  });
}

// ---------------------------------------------------------------------------
// Experiments with full detail.

json inclusion_json(const InclusionPanelResult& r) {
  json weights = json::array();
  for (const auto& w : r.weights) {
    json scan = json::array(), chains = json::array();
    for (const auto& e : w.s_scan) scan.push_back(cli::to_json(e));
    for (std::size_t k = 0; k < w.chains.size(); ++k) {
      json rows = json::array();
      for (const auto& row : w.chains[k].rows)
        rows.push_back({{"class", row.cls},
                        {"params", cli::constants(row.params)},
                        {"verdict", to_string(row.verdict)},
                        {"value", cli::number(std::exp(row.log_value))},
                        {"trace", cli::to_json(row.trace)}});
      chains.push_back({{"family", w.family_sizes[k]}, {"pass", w.chains[k].pass}, {"failures", w.chains[k].failures}, {"rows", rows}});
    }
    weights.push_back({{"weight", w.weight}, {"c_fit", cli::number(w.c_fit)}, {"s_scan", scan}, {"chains", chains}});
  }
  return {{"k0", r.k0}, {"m1", r.m1}, {"m2", r.m2}, {"weights", weights}, {"report", cli::to_json(r.report)}};
}

json necessity_json(const NecessityResult& r) {
  json weights = json::array();
  for (const auto& w : r.weights) {
    json steps = json::array(), trace = json::array(), scan = json::array();
    for (const auto& s : w.steps)
      steps.push_back({{"L", s.L},
                       {"candidates", s.candidates},
                       {"bound", cli::number(s.bound.bound)},
                       {"attaining", s.bound.attaining},
                       {"level_set_bound", cli::number(std::exp(s.log_Q))},
                       {"damped_product", cli::number(std::exp(s.log_P))}});
    for (const auto& e : w.s_trace) trace.push_back(cli::to_json(e));
    for (const auto& e : w.threshold_scan)
      scan.push_back({{"c", e.params.at("c")}, {"verdict", to_string(e.verdict)}, {"value", cli::number(e.value())}});
    weights.push_back({{"b", w.b},
                       {"weight", w.weight},
                       {"norm_verdict", norm_verdict_name(w.norm)},
                       {"steps", steps},
                       {"s_verdict", to_string(w.s)},
                       {"s_trace", trace},
                       {"threshold", cli::number(w.threshold)},
                       {"threshold_scan", scan},
                       {"agree", w.agree}});
  }
  return {{"rho0", r.rho0}, {"weights", weights}, {"report", cli::to_json(r.report)}};
}

json domination_json(const DominationResult& r) {
  json checks = json::array();
  for (const auto& c : r.checks) {
    json levels = json::array();
    for (const auto& lv : c.levels)
      levels.push_back({{"cells", lv.cells},
                        {"C", cli::number(lv.C)},
                        {"samples", lv.samples},
                        {"hard_violations", lv.hard},
                        {"witness_f", lv.witness_f},
                        {"witness_x", cli::numbers(lv.witness_x)},
                        {"warnings", lv.warnings}});
    checks.push_back({{"name", c.name},
                      {"statement", c.statement},
                      {"params", cli::constants(c.params)},
                      {"asserted", c.asserted},
                      {"pass", c.pass},
                      {"drift", cli::number(c.drift)},
                      {"levels", levels}});
  }
  return {{"checks", checks}, {"report", cli::to_json(r.report)}};
}

json local_json(const LocalEquivalenceResult& r) {
  json rows = json::array();
  for (const auto& row : r.rows)
    rows.push_back({{"weight", row.weight}, {"op", row.op}, {"bounds", cli::numbers(row.bounds)}, {"verdict", norm_verdict_name(row.verdict)}});
  return {{"rho0", r.rho0}, {"rows", rows}, {"report", cli::to_json(r.report)}};
}

struct ExperimentOptions {
  InclusionPanelConfig inclusion;
  std::string inclusion_law = "uniform:2,6";
  NecessityConfig necessity;
  DominationConfig domination;
  LocalEquivalenceConfig local;
};

int finish_experiment(const Run& run, const SuiteReport& rep, json body) {
  run.emit(std::move(body));
  run.mirror(cli::suites_csv({rep}));
  return rep.pass() ? 0 : 2;
}

// ---------------------------------------------------------------------------
// verify: every property suite with its pass/fail verdict.

struct SuiteRun {
  std::string name;
  std::function<std::vector<SuiteReport>()> fn;
};

int cmd_verify(const Run& run) {
  const auto& o = run.o;
  static const std::vector<std::string> order{"geometry", "kernels", "inclusion", "domination", "necessity", "local-equivalence"};
  const std::uint64_t seed = o.seed;
  const bool quick = o.quick;
  std::map<std::string, std::function<std::vector<SuiteReport>()>> suites{
      {"geometry",
       [seed, quick] {
         // Quick grids stay at 32^3; the full profile refines to 48^3.
         const auto g = Grid<3>::cube(-4, 4, quick ? 32 : 48);
         RhoOptions ro;
         ro.bracket = {1e-4, 20.0};
         GeometryConfig cfg;
         cfg.seed += seed;
         std::vector<SuiteReport> out;
         for (const char* spec : {"const:1", "harmonic"})
           out.push_back(geometry_suite<3>(rho_field(parse_potential<3>(spec), g, ro).rho, spec, cfg).report);
         return out;
       }},
      {"kernels", [] { return std::vector<SuiteReport>{kernel_suite()}; }},
      {"inclusion",
       [seed] {
         InclusionPanelConfig cfg;
         cfg.seed += seed;
         return std::vector<SuiteReport>{inclusion_panel(cfg).report};
       }},
      {"domination",
       [seed, quick] {
         DominationConfig cfg;
         cfg.seed = seed;
         cfg.quick = quick;
         return std::vector<SuiteReport>{domination_suite(cfg).report};
       }},
      {"necessity", [] { return std::vector<SuiteReport>{necessity_experiment().report}; }},
      {"local-equivalence",
       [seed] {
         LocalEquivalenceConfig cfg;
         cfg.seed = seed;
         return std::vector<SuiteReport>{local_equivalence(cfg).report};
       }},
  };
  std::vector<SuiteReport> reports;
  for (const auto& name : order) {
    if (o.suite != "all" && o.suite != name) continue;
    const auto t0 = std::chrono::steady_clock::now();
    for (auto& r : suites.at(name)()) {
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      std::fprintf(stderr, "[verify] %-24s %s  (%.1f s)\n", r.suite.c_str(), r.pass() ? "PASS" : "FAIL", secs);
      reports.push_back(std::move(r));
    }
  }
  bool pass = true;
  json list = json::array();
  for (const auto& r : reports) {
    pass = pass && r.pass();
    list.push_back(cli::to_json(r));
  }
  run.emit({{"verdict", pass ? "PASS" : "FAIL"}, {"suites", list}});
  run.mirror(cli::suites_csv(reports));
  return pass ? 0 : 2;
}

// ---------------------------------------------------------------------------

void common(CLI::App* s, Options& o) {
  s->add_option("--config", o.config, "JSON file of option values");
  s->add_option("--seed", o.seed, "base seed");
  s->add_option("--out", o.out, "output path");
  s->add_option("--workers", o.workers, "worker threads (default: SWLAB_WORKERS or all cores)");
}

void field_source(CLI::App* s, Options& o) {
  s->add_option("--potential", o.potential, "potential spec: const:N | harmonic | poly:... | tab:<csv> | expr:<expression>");
  s->add_option("--grid", o.grid, "grid spec dim:d;lo:..;hi:..;h:.. (or n:..)");
  s->add_option("--rho", o.rho, "rho CSV, or from-potential");
  s->add_option("--dim", o.dim, "dimension when reading a rho CSV without --grid")->check(CLI::Range(1, 3));
  s->add_option("--tol", o.tol, "relative tolerance of the critical radius");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Numerical experiments on critical radius geometry and weighted estimates for Schrodinger operators"};
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();
  app.set_version_flag("--version", std::string(cli::version()));
  Options o;
  ExperimentOptions x;
  std::vector<std::pair<CLI::App*, std::function<int(const Run&)>>> commands;

  auto* rho = app.add_subcommand("rho", "critical radius field of a potential (d = 3)");
  common(rho, o);
  rho->add_option("--potential", o.potential, "potential spec");
  rho->add_option("--grid", o.grid, "grid spec");
  rho->add_option("--tol", o.tol, "relative tolerance");
  commands.push_back({rho, cmd_rho});

  auto* agmon = app.add_subcommand("agmon", "Agmon distance from one source");
  common(agmon, o);
  field_source(agmon, o);
  agmon->add_option("--source", o.source, "source point x,y,z (default origin)");
  agmon->add_option("--method", o.method)->check(CLI::IsMember({"fmm", "dijkstra"}));
  agmon->add_option("--stencil", o.stencil)->check(CLI::IsMember({"axis", "full"}));
  agmon->add_option("--mean", o.mean)->check(CLI::IsMember({"harmonic", "arithmetic"}));
  commands.push_back({agmon, cmd_agmon});

  auto* suite = app.add_subcommand("agmon-suite", "geometry property checks for one rho field");
  common(suite, o);
  field_source(suite, o);
  suite->add_option("--check", o.check)->check(CLI::IsMember({"all", "shen", "local", "global", "balls", "doubling", "cover"}));
  suite->add_option("--csv", o.csv, "CSV mirror of the report");
  commands.push_back({suite, cmd_agmon_suite});

  auto* wc = app.add_subcommand("weight-class", "class constant estimate of one weight");
  common(wc, o);
  field_source(wc, o);
  wc->add_option("--class", o.cls)->check(CLI::IsMember({"s", "h", "ap-theta", "ap-loc"}));
  wc->add_option("--weight", o.weight, "weight spec: one | power:a | exp-linear:b[,axis] | exp-agmon:eps | gaussian:a | tab:<csv>");
  wc->add_option("--p", o.p);
  wc->add_option("--c", o.c);
  wc->add_option("--m", o.m);
  wc->add_option("--theta", o.theta);
  wc->add_option("--family", o.family, "number of Euclidean balls");
  wc->add_option("--radius-law", o.radius_law, "fixed:r | uniform:a,b | log:a,b");
  wc->add_option("--margin", o.margin, "interior margin of ball centers");
  wc->add_option("--local-lo", o.local_lo, "smallest radius / rho for ap-loc balls");
  wc->add_option("--centers", o.centers, "S class: number of cover centers");
  wc->add_option("--cover-margin", o.cover_margin, "S class: interior margin of cover centers");
  wc->add_option("--radius-step", o.radius_step, "S class: metric radius step");
  wc->add_option("--radius-count", o.radius_count, "S class: number of metric radii");
  wc->add_option("--csv", o.csv, "CSV mirror of the trace");
  commands.push_back({wc, cmd_weight_class});

  auto* exp = app.add_subcommand("experiment", "experiments with full detail");
  exp->require_subcommand(1);
  {
    auto* s = exp->add_subcommand("inclusion", "inclusion chain on a power and an exponential weight");
    common(s, o);
    auto& c = x.inclusion;
    s->add_option("--half", c.half);
    s->add_option("--n", c.n);
    s->add_option("--p", c.p);
    s->add_option("--eps", c.eps);
    s->add_option("--power", c.power);
    s->add_option("--family-sizes", c.family_sizes);
    s->add_option("--radius-law", x.inclusion_law);
    s->add_option("--margin", c.margin);
    s->add_option("--local-lo", c.local_lo);
    s->add_option("--s-scan", c.s_scan);
    s->add_option("--cover-margin", c.cover_margin);
    s->add_option("--cover-count", c.cover_count);
    s->add_option("--radius-step", c.radius_step);
    s->add_option("--radius-count", c.radius_count);
    s->add_option("--shen-pairs", c.shen_pairs);
    s->add_option("--csv", o.csv);
    commands.push_back({s, [&x](const Run& run) {
                          auto cfg = x.inclusion;
                          cfg.law = parse_radius_law(x.inclusion_law);
                          cfg.seed += run.o.seed;
                          const auto r = inclusion_panel(cfg);
                          return finish_experiment(run, r.report, inclusion_json(r));
                        }});
  }
  {
    auto* s = exp->add_subcommand("necessity", "Riesz norm growth against S-class traces for e^{b x1}");
    common(s, o);
    auto& c = x.necessity;
    s->add_option("--N", c.N);
    s->add_option("--p", c.p);
    s->add_option("--Ls", c.Ls);
    s->add_option("--spacing", c.h);
    s->add_option("--bs", c.bs);
    s->add_option("--cs", c.cs);
    s->add_option("--threshold-cs", c.threshold_cs);
    s->add_option("--s-half", c.s_half);
    s->add_option("--s-n", c.s_n);
    s->add_option("--s-radii", c.s_radii);
    s->add_option("--s-radius-max", c.s_radius_max);
    s->add_option("--csv", o.csv);
    commands.push_back({s, [&x](const Run& run) {
                          const auto r = necessity_experiment(x.necessity);
                          return finish_experiment(run, r.report, necessity_json(r));
                        }});
  }
  {
    auto* s = exp->add_subcommand("domination", "pointwise dominations between maximal operators");
    common(s, o);
    auto& c = x.domination;
    s->add_option("--points", c.points);
    s->add_option("--bump-sums", c.bump_sums);
    s->add_option("--drift-limit", c.drift_limit);
    s->add_option("--csv", o.csv);
    commands.push_back({s, [&x](const Run& run) {
                          auto cfg = x.domination;
                          cfg.seed = run.o.seed;
                          const auto r = domination_suite(cfg);
                          return finish_experiment(run, r.report, domination_json(r));
                        }});
  }
  {
    auto* s = exp->add_subcommand("local-equivalence", "local operators for a constant potential on a line");
    common(s, o);
    auto& c = x.local;
    s->add_option("--N", c.N);
    s->add_option("--p", c.p);
    s->add_option("--Ls", c.Ls);
    s->add_option("--spacing", c.h);
    s->add_option("--c", c.c);
    s->add_option("--power", c.power);
    s->add_option("--exp-rate", c.exp_rate);
    s->add_option("--random", c.random);
    s->add_option("--csv", o.csv);
    commands.push_back({s, [&x](const Run& run) {
                          auto cfg = x.local;
                          cfg.seed = run.o.seed;
                          const auto r = local_equivalence(cfg);
                          return finish_experiment(run, r.report, local_json(r));
                        }});
  }

  auto* kernel = app.add_subcommand("kernel", "evaluate an explicit heat kernel");
  common(kernel, o);
  kernel->add_option("--family", o.family_kind)->check(CLI::IsMember({"mehler", "const"}));
  kernel->add_option("--t", o.t, "kernel parameter (Mehler: t = sinh 2s unless --physical)");
  kernel->add_flag("--physical", o.physical, "read --t as physical semigroup time");
  kernel->add_option("--N", o.N, "constant potential");
  kernel->add_option("--x", o.x);
  kernel->add_option("--y", o.y);
  commands.push_back({kernel, cmd_kernel});

  auto* heat1d = app.add_subcommand("heat1d", "dense discrete heat kernel on a line");
  common(heat1d, o);
  heat1d->add_option("--potential", o.potential);
  heat1d->add_option("--grid", o.grid);
  heat1d->add_option("--t", o.t);
  commands.push_back({heat1d, cmd_heat1d});

  auto* maximal = app.add_subcommand("maximal", "adapted or Phi-damped maximal function of an expression");
  common(maximal, o);
  field_source(maximal, o);
  maximal->add_option("--op", o.op)->check(CLI::IsMember({"adapted", "phi"}));
  maximal->add_option("--f", o.f, "input expression in x1, x2, x3, r");
  maximal->add_option("--c", o.c);
  maximal->add_option("--m", o.m);
  maximal->add_option("--mode", o.mode)->check(CLI::IsMember({"centered", "uncentered"}));
  maximal->add_option("--points", o.points, "evaluation points x,y,z;x,y,z (default: every cell)");
  maximal->add_option("--per-decade", o.per_decade);
  commands.push_back({maximal, cmd_maximal});

  auto* heat = app.add_subcommand("heat", "heat maximal function of an expression");
  common(heat, o);
  heat->add_option("--family", o.family_kind)->check(CLI::IsMember({"mehler", "const"}));
  heat->add_option("--N", o.N);
  heat->add_option("--grid", o.grid);
  heat->add_option("--f", o.f);
  heat->add_option("--t-min", o.t_min);
  heat->add_option("--t-max", o.t_max);
  heat->add_option("--per-decade", o.per_decade);
  heat->add_option("--points", o.points);
  commands.push_back({heat, cmd_heat});

  auto* riesz = app.add_subcommand("riesz", "Riesz transform of -Delta + N applied to an expression");
  common(riesz, o);
  riesz->add_option("--N", o.N);
  riesz->add_option("--j", o.j, "component, 1-based");
  riesz->add_option("--grid", o.grid);
  riesz->add_option("--f", o.f);
  riesz->add_option("--cutoff", o.cutoff, "truncate the kernel beyond this radius (0: none)");
  commands.push_back({riesz, cmd_riesz});

  auto* nb = app.add_subcommand("norm-bound", "weighted operator norm lower bound");
  common(nb, o);
  field_source(nb, o);
  nb->add_option("--op", o.op, "identity | riesz:N,j | maximal:c");
  nb->add_option("--weight", o.weight);
  nb->add_option("--p", o.p);
  nb->add_option("--panel", o.panel, "number of panel balls");
  nb->add_option("--radius-law", o.radius_law);
  nb->add_option("--margin", o.margin);
  nb->add_option("--random", o.random, "random candidates");
  nb->add_option("--csv", o.csv);
  commands.push_back({nb, cmd_norm_bound});

  auto* verify = app.add_subcommand("verify", "run property suites and report PASS/FAIL");
  common(verify, o);
  verify->add_option("--suite", o.suite)
      ->check(CLI::IsMember({"all", "geometry", "kernels", "inclusion", "domination", "necessity", "local-equivalence"}));
  verify->add_flag("--quick", o.quick, "grids capped at 48^3 (d = 3) and 2000 cells (d = 1)");
  verify->add_option("--csv", o.csv);
  commands.push_back({verify, cmd_verify});

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  for (auto& [sub, fn] : commands) {
    if (!sub->parsed()) continue;
    std::string name = sub->get_name();
    if (sub->get_parent() != &app) name = sub->get_parent()->get_name() + " " + name;
    try {
      if (!o.config.empty()) cli::apply_config(*sub, o.config);
      if (o.workers > 0) set_worker_count(o.workers);
      const json config = cli::effective_config(*sub);
      return fn(Run{o, config, name});
    } catch (const ParseError& e) {
      std::fprintf(stderr, "error: invalid %s\n", e.what());
      return 1;
    } catch (const ConfigurationError& e) {
      std::fprintf(stderr, "error: configuration: %s\n", e.what());
      return 1;
    } catch (const std::exception& e) {
      std::fprintf(stderr, "error: %s\n", e.what());
      return 3;
    }
  }
  return 1;
}
