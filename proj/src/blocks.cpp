#include "allelo/blocks.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "allelo/format.hpp"
#include "allelo/parallel.hpp"
#include "allelo/random.hpp"

namespace allelo::blocks {

namespace {

constexpr std::uint64_t kBoxTag = 0xb10c'0000'0000'0001ULL;

int floor_div(int a, int b) { return a >= 0 ? a / b : -((-a + b - 1) / b); }

}  // namespace

BlockGeometry BlockGeometry::make(int L, int M, std::optional<int> T, std::optional<int> ell) {
  BlockGeometry g;
  g.L = L;
  g.M = M;
  g.T = T ? *T : L * L;
  g.ell = ell ? *ell : std::max(1, static_cast<int>(std::lround(std::pow(static_cast<double>(L), 0.1))));
  g.validate();
  return g;
}

void BlockGeometry::validate() const {
  if (L < 1) throw std::invalid_argument("blocks.L must be a positive integer");
  if (M < 1) throw std::invalid_argument("blocks.M must be a positive integer");
  if (T < 1) throw std::invalid_argument("blocks.T must be a positive integer");
  if (ell < 1) throw std::invalid_argument("blocks.ell must be a positive integer");
  if (ell > 2 * L) throw std::invalid_argument("blocks.ell must not exceed 2L, or I_z is empty");
}

bool BlockGeometry::in_box(Point z, Point c) const {
  const Point o = phi(z);
  return std::abs(c[0] - o[0]) <= L && std::abs(c[1] - o[1]) <= L;
}

std::vector<Point> BlockGeometry::tile_indices(Point z) const {
  // D(w) inside B(z) per axis: l w - l/2 >= L z - L and l w + l/2 <= L z + L,
  // doubled to stay in integers.
  std::array<std::pair<int, int>, 2> range;
  for (int a = 0; a < 2; ++a) {
    const int lo2 = 2 * (L * z[a] - L) + ell;
    const int hi2 = 2 * (L * z[a] + L) - ell;
    range[a] = {floor_div(lo2 + 2 * ell - 1, 2 * ell), floor_div(hi2, 2 * ell)};
  }
  std::vector<Point> out;
  for (int w0 = range[0].first; w0 <= range[0].second; ++w0) {
    for (int w1 = range[1].first; w1 <= range[1].second; ++w1) out.push_back({w0, w1});
  }
  return out;
}

std::vector<Point> BlockGeometry::tile_points(Point w) const {
  // Integers c with l w - l/2 < c <= l w + l/2.
  std::array<std::pair<int, int>, 2> range;
  for (int a = 0; a < 2; ++a) {
    const int hi = floor_div(2 * ell * w[a] + ell, 2);
    range[a] = {hi - ell + 1, hi};
  }
  std::vector<Point> out;
  for (int c0 = range[0].first; c0 <= range[0].second; ++c0) {
    for (int c1 = range[1].first; c1 <= range[1].second; ++c1) out.push_back({c0, c1});
  }
  return out;
}

Site site_at(const Torus& torus, Point c) {
  if (torus.dim() != 2) throw std::invalid_argument("block geometry needs a planar torus");
  std::array<int, 2> idx{};
  for (int a = 0; a < 2; ++a) {
    const int side = torus.sides()[static_cast<std::size_t>(a)];
    const int v = side / 2 + c[static_cast<std::size_t>(a)];
    if (v < 0 || v >= side) throw std::out_of_range("block point outside the torus window");
    idx[static_cast<std::size_t>(a)] = v;
  }
  return torus.index(idx);
}

bool is_good_box(const Configuration& xi, Point z, const BlockGeometry& g) {
  const Torus& torus = xi.domain().torus();
  const Point o = g.phi(z);
  site_at(torus, {o[0] - g.L, o[1] - g.L});
  site_at(torus, {o[0] + g.L, o[1] + g.L});
  for (int a = -g.L; a <= g.L; ++a) {
    for (int b = -g.L; b <= g.L; ++b) {
      if (xi[site_at(torus, {o[0] + a, o[1] + b})] == SiteState::blue) return false;
    }
  }
  for (const Point& w : g.tile_indices(z)) {
    bool red = false;
    for (const Point& c : g.tile_points(w)) {
      if (xi[site_at(torus, c)] == SiteState::red) {
        red = true;
        break;
      }
    }
    if (!red) return false;
  }
  return true;
}

bool parity_ok(Point z, int k) {
  const int want = ((k % 2) + 2) % 2;
  return ((z[0] % 2) + 2) % 2 == want && ((z[1] % 2) + 2) % 2 == want;
}

bool is_occupied(const Configuration& state_at_kT, Point z, int k, const BlockGeometry& g) {
  if (!parity_ok(z, k)) {
    throw std::invalid_argument("(z, k) violates the parity rule: z1, z2 must share the parity of k");
  }
  return is_good_box(state_at_kT, z, g);
}

namespace {

std::vector<std::uint8_t> square_mask(const Domain& domain, Point centre, int half) {
  std::vector<std::uint8_t> mask(domain.size(), 0);
  const Torus& torus = domain.torus();
  for (int a = -half; a <= half; ++a) {
    for (int b = -half; b <= half; ++b) mask[static_cast<std::size_t>(site_at(torus, {centre[0] + a, centre[1] + b}))] = 1;
  }
  return mask;
}

}  // namespace

std::vector<std::uint8_t> restriction_mask(const Domain& domain, Point z, const BlockGeometry& g) {
  return square_mask(domain, g.phi(z), g.M * g.L);
}

std::vector<std::uint8_t> kappa_mask(const Domain& domain, Point z, const BlockGeometry& g) {
  // [-ML/3, ML/3] holds the integers up to floor(ML/3).
  return square_mask(domain, g.phi(z), g.M * g.L / 3);
}

void BlockStart::validate() const {
  if (!(box_red >= 0.0 && box_red <= 1.0)) throw std::invalid_argument("blocks.box_red must lie in [0, 1]");
  InitialSpec s;
  s.densities = environment;
  s.validate();
}

Configuration block_initial(const BlockStart& start, std::uint64_t seed, const BlockGeometry& g, DomainPtr domain) {
  start.validate();
  InitialSpec env;
  env.densities = start.environment;
  Configuration xi = make_initial(env, seed, domain);
  const Torus& torus = domain->torus();
  const CounterRng rng = CounterRng(seed).split(kBoxTag);
  for (int a = -g.L; a <= g.L; ++a) {
    for (int b = -g.L; b <= g.L; ++b) {
      const Site x = site_at(torus, {a, b});
      xi[x] = rng.uniform(static_cast<std::uint64_t>(x)) < start.box_red ? SiteState::red : SiteState::free;
    }
  }
  for (const Point& w : g.tile_indices({0, 0})) {
    const auto pts = g.tile_points(w);
    const bool any = std::any_of(pts.begin(), pts.end(), [&](const Point& c) { return xi[site_at(torus, c)] == SiteState::red; });
    if (!any) xi[site_at(torus, pts[pts.size() / 2])] = SiteState::red;
  }
  return xi;
}

namespace {

DomainPtr block_domain(const Params& p, const BlockGeometry& g) {
  if (p.neighborhood.dim != 2) throw std::invalid_argument("block experiments need a planar neighborhood (d = 2)");
  const int side = g.torus_side();
  return make_domain({side, side}, p.neighborhood);
}

void check_options(const ExperimentOptions& opt) {
  if (opt.replicas < 30) throw std::invalid_argument("block experiments need at least 30 replicas");
  opt.start.validate();
}

}  // namespace

OccupancyEstimate estimate_occupancy(const Params& p, const BlockGeometry& g, const ExperimentOptions& opt) {
  g.validate();
  check_options(opt);
  const DomainPtr dom = block_domain(p, g);
  OccupancyEstimate out;
  std::array<std::vector<std::uint8_t>, 2> masks;
  for (std::size_t c = 0; c < 2; ++c) masks[c] = restriction_mask(*dom, out.children[c], g);
  const BaseRates rates = base_rates_for(p);
  std::vector<std::array<std::uint8_t, 2>> hit(opt.replicas);
  parallel_for(opt.replicas, opt.threads, [&](std::size_t r) {
    const std::uint64_t seed = opt.base_seed + r;
    const GraphicalRep rep(seed, dom, rates, static_cast<double>(g.T));
    const Configuration xi0 = block_initial(opt.start, seed, g, dom);
    for (std::size_t c = 0; c < 2; ++c) {
      ForwardEngine eng(rep, p, xi0, &masks[c]);
      eng.advance_to(static_cast<double>(g.T));
      hit[r][c] = is_occupied(eng.state(), out.children[c], 1, g) ? 1 : 0;
    }
  });
  std::array<std::size_t, 2> wins{};
  for (const auto& h : hit) {
    wins[0] += h[0];
    wins[1] += h[1];
  }
  for (std::size_t c = 0; c < 2; ++c) out.per_child[c] = wilson(wins[c], opt.replicas);
  out.pooled = wilson(wins[0] + wins[1], 2 * opt.replicas);
  return out;
}

BlockingResult blocking_experiment(const Params& p, const BlockGeometry& g, const ExperimentOptions& opt) {
  g.validate();
  check_options(opt);
  const DomainPtr dom = block_domain(p, g);
  const auto mask = restriction_mask(*dom, {0, 0}, g);
  const auto kappa = kappa_mask(*dom, {0, 0}, g);
  const BaseRates rates = base_rates_for(p);
  BlockingResult out;
  out.per_replica.assign(opt.replicas, 0);
  parallel_for(opt.replicas, opt.threads, [&](std::size_t r) {
    const std::uint64_t seed = opt.base_seed + r;
    const GraphicalRep rep(seed, dom, rates, static_cast<double>(g.T));
    const Thinning th(p, rates);
    ForwardEngine eng(rep, p, block_initial(opt.start, seed, g, dom), &mask);
    bool blocked = false;
    eng.set_observer([&](const Event& e, SiteState source, const EventEffect&) {
      if (e.kind != EventKind::arrow || source != SiteState::red || !th.red_usable(e.coin)) return;
      if (kappa[static_cast<std::size_t>(e.target)] && eng.state()[e.target] == SiteState::frozen) blocked = true;
    });
    eng.advance_until(static_cast<double>(g.T), [&] {
      const auto& n = eng.counts();
      return blocked || n[index_of(SiteState::blue)] + n[index_of(SiteState::frozen)] == 0;
    });
    out.per_replica[r] = blocked ? 1 : 0;
  });
  std::size_t hits = 0;
  for (auto b : out.per_replica) hits += b;
  out.blocked = wilson(hits, opt.replicas);
  if (!p.gamma_infinite) {
    out.gamma_term = 2.0 * p.lambda2 * g.T / (p.gamma * (p.gamma + 1.0));
    out.gamma_bound = (2.0 / 3.0) * g.M * g.L * out.gamma_term;
  }
  return out;
}

std::string blocks_csv_header() { return "gamma,L,T,M,occupancy,ci_lo,ci_hi,blocked_fraction"; }

std::string blocks_csv_row(double gamma, const BlockGeometry& g, const std::optional<OccupancyEstimate>& occ,
                           const std::optional<BlockingResult>& blk) {
  std::ostringstream os;
  os << format_number(gamma) << ',' << g.L << ',' << g.T << ',' << g.M << ',';
  if (occ) os << format_number(occ->pooled.value) << ',' << format_number(occ->pooled.lo) << ',' << format_number(occ->pooled.hi);
  else os << ",,";
  os << ',';
  if (blk) os << format_number(blk->blocked.value);
  return os.str();
}

}  // namespace allelo::blocks
