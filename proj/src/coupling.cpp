#include "allelo/coupling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <stdexcept>

#include <json.hpp>

#include "allelo/parallel.hpp"

namespace allelo {

std::optional<Site> domination_violation(const Configuration& a, const Configuration& b) {
  if (!a.domain().same_geometry(b.domain())) throw std::invalid_argument("domination needs a common domain");
  for (Site x = 0; x < static_cast<Site>(a.size()); ++x) {
    if (!dominates_at(a[x], b[x])) return x;
  }
  return std::nullopt;
}

bool check_domination(const Configuration& a, const Configuration& b) { return !domination_violation(a, b); }

const char* to_string(VariedParameter v) {
  switch (v) {
    case VariedParameter::none: return "none";
    case VariedParameter::lambda1: return "lambda1";
    case VariedParameter::lambda2: return "lambda2";
    case VariedParameter::gamma: return "gamma";
  }
  return "?";
}

namespace {

bool same_gamma(const Params& a, const Params& b) {
  if (a.gamma_infinite || b.gamma_infinite) return a.gamma_infinite == b.gamma_infinite;
  return a.gamma == b.gamma;
}

bool gamma_less(const Params& a, const Params& b) {
  if (a.gamma_infinite) return false;
  return b.gamma_infinite || a.gamma < b.gamma;
}

}  // namespace

std::vector<ComparablePair> comparable_pairs(std::span<const Params> variants) {
  std::vector<ComparablePair> out;
  for (std::size_t i = 0; i < variants.size(); ++i) {
    for (std::size_t j = i + 1; j < variants.size(); ++j) {
      const Params& a = variants[i];
      const Params& b = variants[j];
      const bool l1 = a.lambda1 == b.lambda1;
      const bool l2 = a.lambda2 == b.lambda2;
      const bool g = same_gamma(a, b);
      const int differing = !l1 + !l2 + !g;
      if (differing > 1) continue;
      if (differing == 0) {
        out.push_back({i, j, VariedParameter::none});
      } else if (!g) {
        out.push_back(gamma_less(a, b) ? ComparablePair{i, j, VariedParameter::gamma}
                                       : ComparablePair{j, i, VariedParameter::gamma});
      } else if (!l1) {
        out.push_back(a.lambda1 > b.lambda1 ? ComparablePair{i, j, VariedParameter::lambda1}
                                            : ComparablePair{j, i, VariedParameter::lambda1});
      } else {
        out.push_back(a.lambda2 < b.lambda2 ? ComparablePair{i, j, VariedParameter::lambda2}
                                            : ComparablePair{j, i, VariedParameter::lambda2});
      }
    }
  }
  return out;
}

bool CoupledRun::all_hold() const {
  for (const auto& v : verdicts) {
    if (v.first_violation) return false;
  }
  return true;
}

CoupledRun couple(const GraphicalRep& rep, std::span<const Params> variants, const Configuration& xi0,
                  const CoupleOptions& options) {
  if (variants.empty()) throw std::invalid_argument("couple needs at least one variant");
  for (const Params& p : variants) {
    if (!(p.neighborhood == variants[0].neighborhood)) {
      throw std::invalid_argument("coupled variants must share the neighborhood");
    }
  }
  const auto& ts = options.sample_times;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    if (ts[i] < 0.0 || ts[i] > rep.horizon()) throw std::invalid_argument("sample time outside [0, horizon]");
    if (i > 0 && ts[i] < ts[i - 1]) throw std::invalid_argument("sample times must be sorted");
  }
  for (double s : options.snapshot_times) {
    if (!std::binary_search(ts.begin(), ts.end(), s)) {
      throw std::invalid_argument("snapshot times must be among the sample times");
    }
  }

  CoupledRun out;
  out.seed = rep.seed();
  out.variants.assign(variants.begin(), variants.end());
  out.rates = rep.rates();
  out.horizon = rep.horizon();
  out.sample_times = ts;
  out.event_times_checked = options.check_event_times;
  out.trajectories.resize(variants.size());
  for (const auto& pair : comparable_pairs(variants)) out.verdicts.push_back({pair, {}, 0, std::nullopt});

  std::vector<std::unique_ptr<ForwardEngine>> engines;
  for (const Params& p : variants) engines.push_back(std::make_unique<ForwardEngine>(rep, p, xi0));

  auto full_check = [&](double t) {
    for (auto& v : out.verdicts) {
      const auto bad = domination_violation(engines[v.pair.upper]->state(), engines[v.pair.lower]->state());
      v.holds.push_back(!bad);
      if (bad && !v.first_violation) v.first_violation = Violation{t, *bad};
    }
  };

  std::vector<Site> changed;
  auto lockstep_to = [&](double target) {
    while (true) {
      double t = std::numeric_limits<double>::infinity();
      for (const auto& e : engines) t = std::min(t, e->peek_time());
      if (t > target) break;
      changed.clear();
      for (auto& e : engines) {
        if (e->peek_time() == t) {
          e->step();
          if (e->last_effect().changed) changed.push_back(*e->last_effect().changed);
        }
      }
      for (auto& v : out.verdicts) {
        ++v.event_checks;
        if (v.first_violation) continue;
        const Configuration& a = engines[v.pair.upper]->state();
        const Configuration& b = engines[v.pair.lower]->state();
        for (Site x : changed) {
          if (!dominates_at(a[x], b[x])) {
            v.first_violation = Violation{t, x};
            break;
          }
        }
      }
    }
  };

  for (double t : ts) {
    if (options.check_event_times) lockstep_to(t);
    parallel_for(engines.size(), options.threads, [&](std::size_t i) { engines[i]->advance_to(t); });
    full_check(t);
    const bool snap = std::binary_search(options.snapshot_times.begin(), options.snapshot_times.end(), t);
    for (std::size_t i = 0; i < engines.size(); ++i) {
      Trajectory& tr = out.trajectories[i];
      tr.samples.push_back(take_sample(*engines[i]));
      if (snap && (tr.snapshot_times.empty() || tr.snapshot_times.back() != t)) {
        tr.snapshot_times.push_back(t);
        tr.snapshots.push_back(engines[i]->state());
      }
    }
  }
  for (std::size_t i = 0; i < engines.size(); ++i) {
    Trajectory& tr = out.trajectories[i];
    tr.blue_survived = engines[i]->counts()[index_of(SiteState::blue)] > 0;
    tr.red_survived = engines[i]->counts()[index_of(SiteState::red)] > 0;
    tr.events_processed = engines[i]->events_processed();
  }
  return out;
}

CoupledRun couple(std::uint64_t seed, std::span<const Params> variants, const Configuration& xi0, double horizon,
                  const CoupleOptions& options) {
  const GraphicalRep rep(seed, xi0.domain_ptr(), base_rates_for(variants), horizon);
  return couple(rep, variants, xi0, options);
}

std::string coupling_report_json(const CoupledRun& run) {
  using nlohmann::json;
  json j;
  j["seed"] = run.seed;
  j["horizon"] = run.horizon;
  j["arrow_rate"] = run.rates.arrow;
  j["dot_rate"] = run.rates.dot;
  j["event_times_checked"] = run.event_times_checked;
  j["sample_times"] = run.sample_times;
  json vs = json::array();
  for (const Params& p : run.variants) {
    json v;
    v["lambda1"] = p.lambda1;
    v["lambda2"] = p.lambda2;
    if (p.gamma_infinite) {
      v["gamma"] = "inf";
    } else {
      v["gamma"] = p.gamma;
    }
    vs.push_back(v);
  }
  j["variants"] = vs;
  json pairs = json::array();
  for (const auto& v : run.verdicts) {
    json pj;
    pj["upper"] = v.pair.upper;
    pj["lower"] = v.pair.lower;
    pj["parameter"] = to_string(v.pair.parameter);
    pj["holds"] = v.holds;
    pj["event_checks"] = v.event_checks;
    if (v.first_violation) {
      pj["first_violation"] = {{"time", v.first_violation->time}, {"site", v.first_violation->site}};
    } else {
      pj["first_violation"] = nullptr;
    }
    pairs.push_back(pj);
  }
  j["pairs"] = pairs;
  j["all_hold"] = run.all_hold();
  return j.dump(2);
}

}  // namespace allelo
