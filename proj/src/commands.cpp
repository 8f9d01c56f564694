#include "allelo/commands.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "allelo/blocks.hpp"
#include "allelo/dual.hpp"
#include "allelo/io.hpp"
#include "allelo/parallel.hpp"
#include "allelo/random.hpp"

namespace allelo {

using nlohmann::json;

namespace {

constexpr std::uint64_t kQueryTag = 0xd0a1'0000'0000'0007ULL;

std::vector<double> sample_grid(double horizon, double every, const std::vector<double>& extra) {
  std::vector<double> t;
  for (std::size_t k = 0;; ++k) {
    const double s = static_cast<double>(k) * every;
    if (s > horizon) break;
    t.push_back(s);
  }
  if (t.back() < horizon) t.push_back(horizon);
  t.insert(t.end(), extra.begin(), extra.end());
  std::sort(t.begin(), t.end());
  t.erase(std::unique(t.begin(), t.end()), t.end());
  return t;
}

std::vector<std::string> header_fields(const std::string& header) {
  std::vector<std::string> out;
  std::istringstream is(header);
  for (std::string f; std::getline(is, f, ',');) out.push_back(f);
  return out;
}

void write_timeseries(io::OutputDir& out, const std::string& name, const Trajectory& tr) {
  io::CsvWriter csv(out.file(name), {"t", "density0", "density1", "density2", "density3", "count1", "count2"});
  for (const Sample& s : tr.samples) {
    csv.row({format_number(s.time), format_number(s.density[0]), format_number(s.density[1]), format_number(s.density[2]),
             format_number(s.density[3]), std::to_string(s.count[1]), std::to_string(s.count[2])});
  }
}

json gamma_json(const Params& p) { return p.gamma_infinite ? json("inf") : json(p.gamma); }

json proportion_json(const Proportion& q) {
  return {{"successes", q.successes}, {"trials", q.trials}, {"value", q.value}, {"ci_lo", q.lo}, {"ci_hi", q.hi}};
}

std::string fmt_densities(const std::array<double, kNumStates>& d) {
  std::ostringstream os;
  os.precision(4);
  os << d[0] << ' ' << d[1] << ' ' << d[2] << ' ' << d[3];
  return os.str();
}

std::string run_simulate(const RunConfig& c, io::OutputDir& out) {
  const DomainPtr dom = make_domain(c.sides, c.params.neighborhood);
  const GraphicalRep rep = build_events(c.seed, c.params, dom, c.horizon);
  const Configuration xi0 = make_initial(c.initial, c.seed, dom);
  RunOptions opt;
  opt.sample_times = sample_grid(c.horizon, c.simulate.sample_every, c.simulate.snapshots);
  opt.snapshot_times = c.simulate.snapshots;
  const Trajectory tr = run(xi0, rep, c.params, opt);
  write_timeseries(out, "timeseries.csv", tr);
  for (std::size_t i = 0; i < tr.snapshots.size(); ++i) {
    io::write_pgm(out.file("snapshot_" + std::to_string(i) + "_t" + format_number(tr.snapshot_times[i]) + ".pgm"),
                  tr.snapshots[i]);
  }
  const Sample& last = tr.samples.back();
  return "densities at T (free blue red frozen): " + fmt_densities(last.density) + "; " +
         std::to_string(tr.events_processed) + " events";
}

std::string run_couple(const RunConfig& c, io::OutputDir& out, unsigned threads) {
  std::vector<Params> variants;
  for (double v : c.couple.values) {
    Params p = c.params;
    if (c.couple.vary == VariedParameter::lambda1) p.lambda1 = v;
    if (c.couple.vary == VariedParameter::lambda2) p.lambda2 = v;
    if (c.couple.vary == VariedParameter::gamma) {
      p.gamma_infinite = std::isinf(v);
      p.gamma = p.gamma_infinite ? 1.0 : v;
    }
    variants.push_back(p);
  }
  const DomainPtr dom = make_domain(c.sides, c.params.neighborhood);
  const Configuration xi0 = make_initial(c.initial, c.seed, dom);
  CoupleOptions opt;
  opt.sample_times = sample_grid(c.horizon, c.couple.sample_every, {});
  opt.check_event_times = c.couple.event_times;
  opt.threads = threads;
  const CoupledRun cr = couple(c.seed, variants, xi0, c.horizon, opt);
  out.write_text("coupling.json", coupling_report_json(cr) + "\n");
  for (std::size_t i = 0; i < cr.trajectories.size(); ++i) {
    write_timeseries(out, "timeseries_variant" + std::to_string(i) + ".csv", cr.trajectories[i]);
  }
  std::size_t failed = 0;
  for (const auto& v : cr.verdicts) failed += std::count(v.holds.begin(), v.holds.end(), false);
  return std::to_string(cr.verdicts.size()) + " comparable pairs, " + std::to_string(failed) +
         " failed sample checks; domination " + (cr.all_hold() ? "holds" : "VIOLATED");
}

std::string run_dual_check(const RunConfig& c, io::OutputDir& out) {
  const Params& p = c.params;
  const DomainPtr dom = make_domain(c.sides, p.neighborhood);
  const GraphicalRep rep = build_events(c.seed, p, dom, c.horizon);
  const Configuration xi0 = make_initial(c.initial, c.seed, dom);
  ForwardEngine eng(rep, p, xi0);
  StateHistory hist(eng.state());
  eng.set_history(&hist);
  eng.advance_to(c.horizon);
  hist.set_horizon(c.horizon);

  ColorResolver resolver(rep, p, xi0);
  DualIndex index(rep, p);
  const CounterRng rng = CounterRng(c.seed).split(kQueryTag);
  json queries = json::array();
  std::size_t agree = 0;
  for (std::size_t q = 0; q < c.dual_check.queries; ++q) {
    Site x = center_site(dom->torus());
    double t = c.horizon;
    if (q > 0) {
      x = static_cast<Site>(std::min<double>(std::floor(rng.uniform(2 * q) * static_cast<double>(dom->size())),
                                             static_cast<double>(dom->size() - 1)));
      t = c.horizon * (1.0 - rng.uniform(2 * q + 1));
    }
    const SiteState fwd = hist.state_at(x, t);
    const SiteState dual = resolver.state_at(x, t);
    agree += fwd == dual;
    const DistinguishedPath path = distinguished_path(index, x, t, hist);
    const double hd = c.dual_check.dual_horizon > 0.0 ? std::min(c.dual_check.dual_horizon, t) : t;
    const auto trees = lower_trees(index, path, hd);
    const auto favorable = std::count_if(trees.begin(), trees.end(), [](const LowerTree& lt) { return lt.favorable; });
    queries.push_back({{"site", x},
                       {"t", t},
                       {"forward", index_of(fwd)},
                       {"dual", index_of(dual)},
                       {"agree", fwd == dual},
                       {"arrows", path.arrows.size()},
                       {"frozen_visits", path.frozen_visits},
                       {"died", path.died},
                       {"died_at", path.died ? json(path.died_at) : json(nullptr)},
                       {"lower_trees", trees.size()},
                       {"favorable_trees", favorable}});
  }
  {
    std::ofstream f(out.file("dual_tree.txt"));
    write_dual_tree(f, dual_tree(index, center_site(dom->torus()), c.horizon, c.horizon));
  }
  json j;
  j["seed"] = c.seed;
  j["horizon"] = c.horizon;
  j["gamma"] = gamma_json(p);
  j["queries"] = queries;
  j["agreements"] = agree;
  j["all_agree"] = agree == c.dual_check.queries;
  if (!p.gamma_infinite) {
    const FavorabilityCheck fc = favorability_rate_check(p.lambda1, p.gamma, c.dual_check.favorability_samples, c.seed);
    j["favorability"] = {{"gamma", fc.gamma},
                         {"lambda", fc.lambda},
                         {"empirical", proportion_json(fc.empirical)},
                         {"cross_first", fc.cross_first},
                         {"birth_first", fc.birth_first},
                         {"printed", fc.printed}};
  }
  out.write_text("dual_check.json", j.dump(2) + "\n");
  return std::to_string(agree) + "/" + std::to_string(c.dual_check.queries) + " dual colors agree with the forward run";
}

json stability_json(const meanfield::StabilityReport& r) {
  return {{"point", std::vector<double>(r.point.data(), r.point.data() + 4)},
          {"real_parts", r.real_parts},
          {"simplex_real_parts", r.simplex_real_parts},
          {"stability", meanfield::to_string(r.stability)},
          {"unstable_direction_inward", r.unstable_direction_inward}};
}

std::string run_meanfield(const RunConfig& c, io::OutputDir& out) {
  namespace mf = meanfield;
  const Params& p = c.params;
  const auto& m = c.meanfield;
  const mf::State u0(m.start[0], m.start[1], m.start[2], m.start[3]);
  const mf::Integration run = mf::integrate(u0, p, m.form, m.dt, m.T, m.record_every);
  io::CsvWriter csv(out.file("trajectory.csv"), {"t", "u0", "u1", "u2", "u3"});
  for (const auto& pt : run.points) {
    csv.row({format_number(pt.t), format_number(pt.u[0]), format_number(pt.u[1]), format_number(pt.u[2]),
             format_number(pt.u[3])});
  }
  const mf::Regions reg = mf::classify_region(p.lambda1, p.lambda2, p.gamma);
  json j;
  j["lambda1"] = p.lambda1;
  j["lambda2"] = p.lambda2;
  j["gamma"] = p.gamma;
  j["form"] = mf::to_string(m.form);
  j["regions"] = {{"in_w1", reg.in_w1}, {"in_w2", reg.in_w2}, {"coexist", reg.coexistence}};
  const auto ub = mf::boundary_fixed_point_blue(p);
  const auto vb = mf::boundary_fixed_point_red(p);
  j["ubar"] = ub ? stability_json(mf::stability(*ub, p, m.form)) : json(nullptr);
  j["vbar"] = vb ? stability_json(mf::stability(*vb, p, m.form)) : json(nullptr);
  const mf::InteriorSearch in = mf::interior_fixed_point(p);
  j["interior"] = {{"status", mf::to_string(in.status)},
                   {"residual", in.residual},
                   {"starts_used", in.starts_used},
                   {"report", in.point ? stability_json(mf::stability(*in.point, p, m.form)) : json(nullptr)}};
  const mf::State end = run.points.back().u;
  j["final"] = std::vector<double>(end.data(), end.data() + 4);
  j["halving_error"] = run.halving_error;
  out.write_text("fixed_points.json", j.dump(2) + "\n");
  std::ostringstream os;
  os.precision(6);
  os << "u(T) = (" << end[0] << ", " << end[1] << ", " << end[2] << ", " << end[3] << "); interior point "
     << mf::to_string(in.status);
  return os.str();
}

std::string run_sweep(const RunConfig& c, io::OutputDir& out, unsigned threads) {
  std::vector<std::array<double, 3>> grid;
  for (double a : c.sweep.lambda1) {
    for (double b : c.sweep.lambda2) {
      for (double g : c.sweep.gamma) grid.push_back({a, b, g});
    }
  }
  std::vector<std::string> rows(grid.size());
  parallel_for(grid.size(), threads, [&](std::size_t i) {
    rows[i] = meanfield::phase_csv_row(meanfield::phase_point(grid[i][0], grid[i][1], grid[i][2]));
  });
  io::CsvWriter csv(out.file("phase.csv"), header_fields(meanfield::phase_csv_header()));
  for (const auto& r : rows) csv.line(r);
  return std::to_string(rows.size()) + " phase points";
}

std::string run_blocks(const RunConfig& c, io::OutputDir& out, unsigned threads) {
  const auto& b = c.blocks;
  const blocks::BlockGeometry g = blocks::BlockGeometry::make(b.L, b.M, b.T, b.ell);
  blocks::ExperimentOptions opt;
  opt.replicas = b.replicas;
  opt.base_seed = c.seed;
  opt.threads = threads;
  opt.start.box_red = b.box_red;
  opt.start.environment = b.environment;
  io::CsvWriter csv(out.file("blocks.csv"), header_fields(blocks::blocks_csv_header()));
  json rows = json::array();
  std::vector<std::size_t> hits, trials;
  std::vector<double> scores;
  std::ostringstream summary;
  for (double gamma : b.gammas) {
    Params p = c.params;
    p.gamma_infinite = std::isinf(gamma);
    p.gamma = p.gamma_infinite ? 1.0 : gamma;
    std::optional<blocks::OccupancyEstimate> occ;
    std::optional<blocks::BlockingResult> blk;
    if (b.occupancy) occ = blocks::estimate_occupancy(p, g, opt);
    if (b.blocking) blk = blocks::blocking_experiment(p, g, opt);
    csv.line(blocks::blocks_csv_row(gamma, g, occ, blk));
    json row{{"gamma", gamma_json(p)}};
    if (occ) {
      row["occupancy"] = {{"pooled", proportion_json(occ->pooled)},
                          {"child_1_1", proportion_json(occ->per_child[0])},
                          {"child_m1_m1", proportion_json(occ->per_child[1])}};
    }
    if (blk) {
      row["blocking"] = {{"blocked", proportion_json(blk->blocked)},
                         {"gamma_term", blk->gamma_term},
                         {"gamma_bound", blk->gamma_bound}};
      if (!p.gamma_infinite) {
        hits.push_back(blk->blocked.successes);
        trials.push_back(blk->blocked.trials);
        scores.push_back(std::log(gamma));
      }
    }
    rows.push_back(row);
    summary << "gamma " << format_number(gamma);
    if (occ) summary << " occupancy " << occ->pooled.value;
    if (blk) summary << " blocked " << blk->blocked.value;
    summary << "; ";
  }
  json j{{"L", g.L}, {"T", g.T}, {"M", g.M}, {"ell", g.ell}, {"replicas", b.replicas}, {"rows", rows}};
  if (scores.size() >= 2) j["blocking_trend_p"] = cochran_armitage_decreasing(hits, trials, scores);
  out.write_text("blocks.json", j.dump(2) + "\n");
  return summary.str();
}

}  // namespace

RunReport execute(const RunConfig& cfg, unsigned threads) {
  io::OutputDir out(cfg.output);
  out.write_text("config.resolved", resolved_config(cfg));
  RunReport rep;
  switch (cfg.mode) {
    case Mode::simulate: rep.summary = run_simulate(cfg, out); break;
    case Mode::couple: rep.summary = run_couple(cfg, out, threads); break;
    case Mode::dual_check: rep.summary = run_dual_check(cfg, out); break;
    case Mode::meanfield: rep.summary = run_meanfield(cfg, out); break;
    case Mode::sweep: rep.summary = run_sweep(cfg, out, threads); break;
    case Mode::blocks: rep.summary = run_blocks(cfg, out, threads); break;
  }
  rep.dir = out.path();
  rep.files = out.files();
  rep.manifest = out.write_manifest();
  return rep;
}

}  // namespace allelo
