#include "breaklab/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include <Eigen/Core>

#include "breaklab/flow.hpp"
#include "breaklab/spectral.hpp"

#ifndef BREAKLAB_VERSION
#define BREAKLAB_VERSION "0.0.0"
#endif

namespace breaklab::report {

namespace {

using scenario::Kind;

Json vec_json(const Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

// Non-finite values become null so the document stays valid JSON.
Json num(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

struct Builder {
  Outcome out;
  Json checks = Json::object();

  void check(const std::string& name, Verdict v, Json evidence) {
    checks[name] = {{"verdict", verdict_name(v)}, {"evidence", std::move(evidence)}};
    if (v == Verdict::fail) out.findings_failed = true;
  }
  Table& table(std::string name, std::vector<std::string> columns) {
    out.tables.push_back({std::move(name), std::move(columns), {}});
    return out.tables.back();
  }

  Outcome finish(const Scenario& s, std::uint64_t seed, Json parameters, Json extra = Json::object()) {
    Json& r = out.report;
    r["schema"] = "breaklab-report/1";
    r["scenario"] = s.source;
    r["kind"] = scenario::kind_name(s.kind);
    r["name"] = s.name;
    r["seed"] = seed;
    r["checks"] = checks;
    int counts[3] = {0, 0, 0};
    for (const auto& [_, c] : checks.items()) {
      const auto v = c.at("verdict").get<std::string>();
      ++counts[v == "pass" ? 0 : v == "fail" ? 1 : 2];
    }
    r["summary"] = {{"pass", counts[0]}, {"fail", counts[1]}, {"not-applicable", counts[2]}};
    Json tables = Json::object();
    for (const auto& t : out.tables)
      tables[t.name] = {{"file", t.name + ".csv"}, {"columns", t.columns}, {"rows", t.rows.size()}};
    r["tables"] = tables;
    r["provenance"] = {{"breaklab", BREAKLAB_VERSION},
                       {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                                     "." + std::to_string(EIGEN_MINOR_VERSION)},
                       {"seed", seed},
                       {"parameters", std::move(parameters)}};
    for (auto& [k, v] : extra.items()) r[k] = v;
    return std::move(out);
  }
};

std::vector<double> sorted_unique(std::vector<double> t) {
  std::sort(t.begin(), t.end());
  t.erase(std::unique(t.begin(), t.end()), t.end());
  return t;
}

// At most `limit` bumps, preferring the largest face pairing |<phi, Lap psi>|
// so that bumps straddling interfaces are kept. Battery order is preserved.
std::vector<TestFunction> pick(const potential::PiecewiseAffinePotential& phi, const std::vector<TestFunction>& all,
                               std::size_t limit) {
  if (all.size() <= limit) return all;
  std::vector<double> weight(all.size());
  for (std::size_t k = 0; k < all.size(); ++k) weight[k] = std::abs(potential::face_sum_pairing(phi, all[k]).value);
  std::vector<std::size_t> order(all.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return weight[a] > weight[b]; });
  order.resize(limit);
  std::sort(order.begin(), order.end());
  std::vector<TestFunction> out;
  for (std::size_t k : order) out.push_back(all[k]);
  return out;
}

constexpr std::size_t kGpsiBumps = 6;

// Checks on a piecewise affine potential; returns the parameters used.
Json potential_checks(Builder& b, const potential::PiecewiseAffinePotential& phi, const Scenario& s,
                      std::uint64_t seed) {
  const int dim = phi.dimension();
  const std::vector<double> times = s.t_grid.empty() ? flow::default_time_grid(seed) : s.t_grid;

  const auto val = potential::validate(phi);
  {
    double tang = 0.0;
    double gap = 0.0;
    for (const auto& r : val.residuals) tang = std::max(tang, r.tangential), gap = std::max(gap, r.value_gap);
    b.check("validate", val.ok ? Verdict::pass : Verdict::fail,
            {{"cells", phi.partition().size()},
             {"faces", phi.partition().faces().size()},
             {"max_tangential_jump", tang},
             {"max_value_gap", gap},
             {"violations", val.violations}});
  }

  const auto hess = potential::distributional_hessian_report(phi);
  const auto conv = potential::is_locally_convex(phi);
  {
    Json witnesses = Json::array();
    for (std::size_t k = 0; k < conv.witnesses.size() && k < 16; ++k) {
      const auto& w = conv.witnesses[k];
      witnesses.push_back({{"face", w.face},
                           {"cell_a", w.cell_a},
                           {"cell_b", w.cell_b},
                           {"normal", vec_json(w.normal)},
                           {"lambda", w.lambda}});
    }
    double min_lambda = std::numeric_limits<double>::infinity();
    for (const auto& j : hess.jumps) min_lambda = std::min(min_lambda, j.lambda);
    b.check("convexity", conv.convex ? Verdict::pass : Verdict::fail,
            {{"jumps", hess.jumps.size()},
             {"min_lambda", num(min_lambda)},
             {"total_variation", hess.total_variation},
             {"witness_count", conv.witnesses.size()},
             {"witnesses", witnesses}});
    auto& t = b.table("jumps", {"face", "cell_a", "cell_b", "lambda", "face_mass"});
    for (const auto& j : hess.jumps) t.rows.push_back({j.face, j.cell_a, j.cell_b, j.lambda, j.face_mass});
  }

  const auto mpc = flow::mpc_verdict(phi, times);
  {
    b.check("mpc", mpc.preserving ? Verdict::pass : Verdict::fail,
            {{"times", times.size()},
             {"tolerance", mpc.tolerance},
             {"max_overlap", *std::max_element(mpc.overlaps.begin(), mpc.overlaps.end())},
             {"witness_t", mpc.preserving ? Json(nullptr) : Json(mpc.witness_t)},
             {"witness_overlap", mpc.preserving ? Json(nullptr) : Json(mpc.witness_overlap)}});
    auto& t = b.table("mpc", {"t", "overlap_volume", "tolerance"});
    for (std::size_t k = 0; k < times.size(); ++k) t.rows.push_back({times[k], mpc.overlaps[k], mpc.tolerance});
  }

  std::vector<double> etimes = s.expanding_times;
  if (etimes.empty()) {
    const auto sorted = sorted_unique(times);
    etimes = {sorted.front(), sorted[sorted.size() / 2], sorted.back()};
    if (!mpc.preserving) etimes.push_back(mpc.witness_t);
    etimes = sorted_unique(etimes);
  }
  {
    auto& t = b.table("expanding", {"t", "violated_fraction", "probe_volume", "exact_volume", "probes"});
    bool all = true;
    double worst = 0.0;
    for (std::size_t k = 0; k < etimes.size(); ++k) {
      const auto e = flow::expanding_verdict(phi, etimes[k], s.expanding_probes, seed + 1000003 * (k + 1));
      all = all && e.expanding;
      worst = std::max(worst, e.violated_fraction);
      t.rows.push_back({etimes[k], e.violated_fraction, e.probe_volume, e.exact_volume, e.probes});
    }
    b.check("expanding", all ? Verdict::pass : Verdict::fail,
            {{"times", etimes}, {"probes", s.expanding_probes}, {"max_violated_fraction", worst},
             {"threshold", flow::kExpandingFraction}});
  }

  const auto sub = potential::subharmonicity_battery(phi, seed);
  {
    const bool ok = sub.min_pairing >= -s.tol.pairing;
    auto& t = b.table("subharmonicity", {"bump", "center", "radius", "volume_route", "face_route", "error"});
    for (std::size_t k = 0; k < sub.records.size(); ++k) {
      const auto& r = sub.records[k];
      std::ostringstream c;
      for (int a = 0; a < dim; ++a) c << (a ? " " : "") << Json(r.psi.center(a)).dump();
      t.rows.push_back({k, c.str(), r.psi.radius, r.volume_route, r.face_route, r.error});
    }
    b.check("subharmonicity", sub.records.empty() ? Verdict::not_applicable : ok ? Verdict::pass : Verdict::fail,
            {{"bumps", sub.records.size()},
             {"min_pairing", num(sub.min_pairing)},
             {"max_route_gap", sub.max_route_gap},
             {"tolerance", s.tol.pairing}});
  }

  {
    std::vector<double> gt = times;
    gt.push_back(0.0);
    gt = sorted_unique(gt);
    const auto bumps = pick(phi, potential::bump_battery(phi.partition().domain()), kGpsiBumps);
    auto& t = b.table("gpsi", {"bump", "t", "value", "error"});
    bool monotone = true;
    bool any_increase = false;
    double excess = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < bumps.size(); ++k) {
      const auto curve = flow::gpsi_curve(phi, bumps[k], gt, seed + 7 * (k + 1));
      monotone = monotone && flow::gpsi_monotone(curve, s.tol.gpsi);
      any_increase = any_increase || flow::gpsi_initial_increase(curve);
      for (const auto& smp : curve.samples) {
        excess = std::max(excess, smp.value - curve.samples.front().value);
        t.rows.push_back({k, smp.t, smp.value, smp.error});
      }
    }
    b.check("gpsi_monotonicity", bumps.empty() ? Verdict::not_applicable : monotone ? Verdict::pass : Verdict::fail,
            {{"bumps", bumps.size()},
             {"times", gt.size()},
             {"max_excess", num(excess)},
             {"initial_increase", any_increase},
             {"tolerance", s.tol.gpsi}});
  }

  {
    // The absolutely continuous Hessian of an affine piece vanishes.
    const auto sweep_times = sorted_unique(times);
    bool rigid = true;
    double eps = 0.0;
    double max_eig = 0.0;
    for (std::size_t i = 0; i < phi.partition().size(); ++i) {
      const auto r = spectral::unit_det_sweep(spectral::SymMatrix::Zero(dim, dim), sweep_times, s.tol.det);
      rigid = rigid && r.rigid_zero;
      eps = r.epsilon;
      max_eig = std::max(max_eig, r.max_abs_eigenvalue);
    }
    b.check("det_sweep", rigid ? Verdict::pass : Verdict::fail,
            {{"cells", phi.partition().size()},
             {"times", sweep_times.size()},
             {"epsilon", eps},
             {"max_abs_eigenvalue", max_eig},
             {"tolerance", s.tol.det}});
  }

  return {{"t_grid", times},
          {"expanding_times", etimes},
          {"expanding_probes", s.expanding_probes},
          {"gpsi_bumps", kGpsiBumps},
          {"tolerances",
           {{"pairing", s.tol.pairing}, {"gpsi", s.tol.gpsi}, {"det", s.tol.det}, {"overlap_rel", flow::kOverlapRelTol}}}};
}

Json sdot_section(Builder& b, const transport::LaguerreDiagram& d, const transport::DiscreteTarget& target,
                  const std::vector<int>& pruned) {
  double worst = 0.0;
  for (double r : d.residuals) worst = std::max(worst, std::abs(r));
  auto& t = b.table("sdot", {"site", "x", "mass", "weight", "volume", "residual"});
  for (std::size_t i = 0; i < d.sites.size(); ++i) {
    std::ostringstream c;
    for (Eigen::Index a = 0; a < d.sites[i].size(); ++a) c << (a ? " " : "") << Json(d.sites[i](a)).dump();
    t.rows.push_back({i, c.str(), target.masses[i], d.weights[i], d.volumes[i], d.residuals[i]});
  }
  auto& h = b.table("residual_history", {"iteration", "max_residual"});
  for (std::size_t k = 0; k < d.residual_history.size(); ++k) h.rows.push_back({k, d.residual_history[k]});
  return {{"sites", d.sites.size()},
          {"iterations", d.iterations},
          {"ascent_steps", d.ascent_steps},
          {"max_residual", worst},
          {"weights", d.weights},
          {"pruned_cells", pruned}};
}

transport::LaguerreDiagram solve(const Scenario& s) {
  return transport::solve_sdot(s.domain, *s.target, s.tol.sdot);
}

void require_kind(const Scenario& s, Kind k) {
  if (s.kind != k)
    throw scenario::SchemaError("/kind", std::string("this command needs kind '") + scenario::kind_name(k) + "'");
}

Json polar_checks(Builder& b, const Scenario& s, std::uint64_t seed) {
  const auto& f = *s.field;
  const auto grid = std::make_shared<field::Grid>(s.domain, f.grid);
  const auto bf = field::GridVectorField::sample(grid, field::make_generator(f.b, s.dimension));
  const auto split = field::helmholtz_project(bf, s.tol.helmholtz);
  const auto idem = field::projector_idempotence_check(bf, s.tol.helmholtz);
  const double bb = field::inner(bf, bf);
  const double gg = field::inner(split.gradient_part, split.gradient_part);
  const double ss = field::inner(split.solenoidal_part, split.solenoidal_part);
  const double orth = std::abs(split.cross_inner);
  const double pyth = std::abs(bb - gg - ss);
  const double tol = s.tol.helmholtz;
  const bool ok = orth <= 10 * tol * std::max(bb, 1e-300) && pyth <= 20 * tol * std::max(bb, 1e-300) && idem.ok;
  b.check("helmholtz", bb == 0.0 || ok ? Verdict::pass : Verdict::fail,
          {{"norm_b", std::sqrt(bb)},
           {"norm_gradient_part", std::sqrt(gg)},
           {"norm_solenoidal_part", std::sqrt(ss)},
           {"cross_inner", split.cross_inner},
           {"pythagoras_defect", pyth},
           {"divergence_norm", split.divergence_norm},
           {"cg_iterations", split.iterations},
           {"relative_residual", split.relative_residual},
           {"idempotence_defect", idem.defect},
           {"idempotence_bound", idem.bound}});

  const std::vector<double> ts = s.t_grid.empty() ? std::vector<double>{0.4, 0.2, 0.1, 0.05} : s.t_grid;
  const auto r = transport::polar_experiment(bf, ts, f.samples, seed, f.polar);
  auto& t = b.table("polar", {"t", "err_grad", "err_phi", "w2", "noise_floor"});
  bool at_floor = true;
  for (const auto& st : r.steps) {
    t.rows.push_back({st.t, st.err_grad, num(st.err_phi), st.w2, r.noise_floor});
    at_floor = at_floor && st.err_grad <= 1.05 * r.noise_floor + 1e-12;
  }
  auto& bins = b.table("polar_bins", {"bin", "t", "centroid", "volume", "grad_h"});
  auto coords = [](const Vec& v) {
    std::ostringstream c;
    for (Eigen::Index a = 0; a < v.size(); ++a) c << (a ? " " : "") << Json(v(a)).dump();
    return c.str();
  };
  for (const auto& st : r.steps)
    for (std::size_t k = 0; k < st.grad_h.size(); ++k)
      bins.rows.push_back({k, st.t, coords(r.bins.centroids[k]), r.bins.volumes[k], coords(st.grad_h[k])});
  const double factor = r.reduction_factor();
  const bool decreasing = r.strictly_decreasing() && factor >= 1.5;
  b.check("polar_limit", decreasing || at_floor ? Verdict::pass : Verdict::fail,
          {{"strictly_decreasing", r.strictly_decreasing()},
           {"reduction_factor", num(factor)},
           {"at_noise_floor", at_floor},
           {"noise_floor", r.noise_floor},
           {"projected_norm", r.projected_norm},
           {"lipschitz", r.lipschitz},
           {"bins", r.bins.regions.size()},
           {"bin_block", r.bins.block}});
  return {{"t_grid", ts},
          {"grid", f.grid},
          {"samples", f.samples},
          {"samples_per_bin", f.polar.samples_per_bin},
          {"estimator", f.polar.estimator == transport::PolarEstimator::semidiscrete ? "semidiscrete" : "assignment"},
          {"tolerances", {{"helmholtz", s.tol.helmholtz}, {"sdot", s.tol.sdot}}}};
}

}  // namespace

const char* verdict_name(Verdict v) {
  switch (v) {
    case Verdict::pass:
      return "pass";
    case Verdict::fail:
      return "fail";
    case Verdict::not_applicable:
      return "not-applicable";
  }
  return "?";
}

std::string to_csv(const Table& table) {
  auto field = [](const std::string& f) {
    if (f.find_first_of(",\"\r\n") == std::string::npos) return f;
    std::string q = "\"";
    for (char c : f) {
      if (c == '"') q += '"';
      q += c;
    }
    return q + "\"";
  };
  auto cell = [&](const Json& v) -> std::string {
    if (v.is_null()) return "";
    if (v.is_string()) return field(v.get<std::string>());
    if (v.is_boolean()) return v.get<bool>() ? "1" : "0";
    return v.dump();
  };
  std::string out;
  for (std::size_t c = 0; c < table.columns.size(); ++c) out += (c ? "," : "") + field(table.columns[c]);
  out += "\r\n";
  for (const auto& row : table.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) out += (c ? "," : "") + cell(row[c]);
    out += "\r\n";
  }
  return out;
}

std::uint64_t resolve_seed(std::optional<std::uint64_t> cli, const Scenario& s) {
  if (cli) return *cli;
  if (s.seed) return *s.seed;
  if (const char* env = std::getenv("BREAKLAB_SEED"); env && *env) {
    const std::string v(env);
    if (v.find_first_not_of("0123456789") != std::string::npos || v.size() > 19)
      throw scenario::SchemaError("$BREAKLAB_SEED", "expected a non-negative integer");
    return std::stoull(v);
  }
  return 0;
}

Outcome run(const Scenario& s, std::uint64_t seed) {
  Builder b;
  switch (s.kind) {
    case Kind::potential:
      return b.finish(s, seed, potential_checks(b, *s.potential, s, seed));
    case Kind::sdot: {
      const auto d = solve(s);
      std::vector<int> pruned;
      const auto phi = transport::brenier_potential(d, &pruned);
      const Json sd = sdot_section(b, d, *s.target, pruned);
      b.check("sdot_converged", Verdict::pass,
              {{"max_residual", sd.at("max_residual")}, {"tolerance", s.tol.sdot * s.domain.volume()}});
      Json params = potential_checks(b, phi, s, seed);
      params["tolerances"]["sdot"] = s.tol.sdot;
      return b.finish(s, seed, params, {{"sdot", sd}});
    }
    case Kind::field:
      return b.finish(s, seed, polar_checks(b, s, seed));
  }
  return {};
}

Outcome solve_sdot(const Scenario& s, std::uint64_t seed) {
  require_kind(s, Kind::sdot);
  Builder b;
  const auto d = solve(s);
  std::vector<int> pruned;
  const auto phi = transport::brenier_potential(d, &pruned);
  const Json sd = sdot_section(b, d, *s.target, pruned);
  b.check("sdot_converged", Verdict::pass,
          {{"max_residual", sd.at("max_residual")}, {"tolerance", s.tol.sdot * s.domain.volume()}});
  b.out.documents.emplace_back("potential_scenario.json",
                               scenario::potential_scenario(s.name + "-brenier", s.domain, phi, seed));
  return b.finish(s, seed, {{"tolerances", {{"sdot", s.tol.sdot}}}}, {{"sdot", sd}});
}

Outcome polar(const Scenario& s, std::uint64_t seed) {
  require_kind(s, Kind::field);
  Builder b;
  return b.finish(s, seed, polar_checks(b, s, seed));
}

std::string dump(const Json& doc) { return doc.dump(2) + "\n"; }

void write(const Outcome& o, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto put = [&](const std::string& name, const std::string& body) {
    std::ofstream f(dir / name, std::ios::binary);
    f << body;
    if (!f) throw Error("cannot write " + (dir / name).string());
  };
  put("report.json", dump(o.report));
  for (const auto& t : o.tables) put(t.name + ".csv", to_csv(t));
  for (const auto& [name, doc] : o.documents) put(name, dump(doc));
}

}  // namespace breaklab::report
