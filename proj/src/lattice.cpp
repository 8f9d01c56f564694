#include "allelo/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <numeric>

namespace allelo {

SiteState site_state_from_int(int v) {
  if (v < 0 || v >= kNumStates) {
    throw std::invalid_argument("site state must be in {0,1,2,3}, got " + std::to_string(v));
  }
  return static_cast<SiteState>(v);
}

const char* to_string(SiteState s) {
  switch (s) {
    case SiteState::free: return "free";
    case SiteState::blue: return "blue";
    case SiteState::red: return "red";
    case SiteState::frozen: return "frozen";
  }
  return "?";
}

Norm norm_from_string(const std::string& name) {
  if (name == "l1" || name == "L1") return Norm::l1;
  if (name == "l2" || name == "L2") return Norm::l2;
  if (name == "linf" || name == "Linf" || name == "max") return Norm::linf;
  throw std::invalid_argument("unknown norm '" + name + "' (expected l1, l2 or linf)");
}

const char* to_string(Norm n) {
  switch (n) {
    case Norm::l1: return "l1";
    case Norm::l2: return "l2";
    case Norm::linf: return "linf";
  }
  return "?";
}

namespace {

bool within(const Offset& y, Norm norm, double r) {
  switch (norm) {
    case Norm::l1: {
      long s = 0;
      for (int c : y) s += std::abs(c);
      return static_cast<double>(s) <= r;
    }
    case Norm::l2: {
      long s = 0;
      for (int c : y) s += static_cast<long>(c) * c;
      // Integer squared lengths; the slack only absorbs rounding of r*r.
      return static_cast<double>(s) <= r * r * (1.0 + 1e-12);
    }
    case Norm::linf: {
      int m = 0;
      for (int c : y) m = std::max(m, std::abs(c));
      return static_cast<double>(m) <= r;
    }
  }
  return false;
}

}  // namespace

Neighborhood::Neighborhood(const NeighborhoodSpec& spec) : spec_(spec) {
  if (spec.dim < 1) throw std::invalid_argument("neighborhood dimension must be >= 1");
  if (!(spec.radius >= 1.0) || !std::isfinite(spec.radius)) {
    throw std::invalid_argument("neighborhood radius must be a finite value >= 1");
  }
  const int reach = static_cast<int>(std::floor(spec.radius));
  // Odometer enumeration over [-reach, reach]^d is already lexicographic.
  Offset y(static_cast<std::size_t>(spec.dim), -reach);
  while (true) {
    bool zero = std::all_of(y.begin(), y.end(), [](int c) { return c == 0; });
    if (!zero && within(y, spec.norm, spec.radius)) offsets_.push_back(y);
    int axis = spec.dim - 1;
    while (axis >= 0 && y[static_cast<std::size_t>(axis)] == reach) {
      y[static_cast<std::size_t>(axis)] = -reach;
      --axis;
    }
    if (axis < 0) break;
    ++y[static_cast<std::size_t>(axis)];
  }
  reach_ = reach;

  opposite_.resize(offsets_.size());
  for (std::size_t k = 0; k < offsets_.size(); ++k) {
    Offset neg = offsets_[k];
    for (int& c : neg) c = -c;
    auto it = std::lower_bound(offsets_.begin(), offsets_.end(), neg);
    opposite_[k] = static_cast<std::size_t>(it - offsets_.begin());
  }
}

Neighborhood build_neighborhood(double radius, Norm norm, int dim) {
  return Neighborhood(NeighborhoodSpec{radius, norm, dim});
}

Torus::Torus(std::vector<int> sides) : sides_(std::move(sides)) {
  if (sides_.empty()) throw std::invalid_argument("torus needs at least one axis");
  for (int s : sides_) {
    if (s < 1) throw std::invalid_argument("torus side lengths must be positive");
  }
  strides_.assign(sides_.size(), 1);
  for (std::size_t a = sides_.size() - 1; a > 0; --a) {
    strides_[a - 1] = strides_[a] * static_cast<std::size_t>(sides_[a]);
  }
  size_ = strides_[0] * static_cast<std::size_t>(sides_[0]);
  if (size_ > static_cast<std::size_t>(std::numeric_limits<Site>::max())) {
    throw std::invalid_argument("torus too large");
  }
}

Site Torus::index(std::span<const int> coords) const {
  std::size_t idx = 0;
  for (std::size_t a = 0; a < sides_.size(); ++a) {
    int c = coords[a] % sides_[a];
    if (c < 0) c += sides_[a];
    idx += static_cast<std::size_t>(c) * strides_[a];
  }
  return static_cast<Site>(idx);
}

std::vector<int> Torus::coords(Site s) const {
  std::vector<int> c(sides_.size());
  auto rem = static_cast<std::size_t>(s);
  for (std::size_t a = 0; a < sides_.size(); ++a) {
    c[a] = static_cast<int>(rem / strides_[a]);
    rem %= strides_[a];
  }
  return c;
}

Site Torus::shift(Site s, std::span<const int> offset) const {
  auto c = coords(s);
  for (std::size_t a = 0; a < c.size(); ++a) c[a] += offset[a];
  return index(c);
}

Domain::Domain(Torus torus, Neighborhood nbhd) : torus_(std::move(torus)), nbhd_(std::move(nbhd)) {
  if (torus_.dim() != nbhd_.dim()) {
    throw std::invalid_argument("torus and neighborhood dimensions differ");
  }
  const std::size_t n = torus_.size();
  const std::size_t deg = nbhd_.size();
  table_.resize(n * deg);
  for (std::size_t s = 0; s < n; ++s) {
    auto c = torus_.coords(static_cast<Site>(s));
    std::vector<int> shifted(c.size());
    for (std::size_t k = 0; k < deg; ++k) {
      for (std::size_t a = 0; a < c.size(); ++a) shifted[a] = c[a] + nbhd_[k][a];
      table_[s * deg + k] = torus_.index(shifted);
    }
  }
}

DomainPtr make_domain(std::vector<int> sides, const NeighborhoodSpec& spec) {
  return std::make_shared<const Domain>(Torus(std::move(sides)), Neighborhood(spec));
}

Configuration::Configuration(DomainPtr domain, SiteState fill)
    : domain_(std::move(domain)), states_(domain_->size(), fill) {}

std::array<std::size_t, kNumStates> Configuration::counts() const {
  std::array<std::size_t, kNumStates> c{};
  for (SiteState s : states_) ++c[static_cast<std::size_t>(s)];
  return c;
}

std::array<double, kNumStates> Configuration::densities() const {
  auto c = counts();
  std::array<double, kNumStates> d{};
  const double n = static_cast<double>(states_.size());
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = static_cast<double>(c[i]) / n;
  return d;
}

void Params::validate() const {
  if (!(lambda1 >= 0.0) || !std::isfinite(lambda1)) throw std::invalid_argument("lambda1 must be finite and >= 0");
  if (!(lambda2 >= 0.0) || !std::isfinite(lambda2)) throw std::invalid_argument("lambda2 must be finite and >= 0");
  if (!gamma_infinite && (!(gamma > 0.0) || !std::isfinite(gamma))) {
    throw std::invalid_argument("gamma must be finite and > 0");
  }
}

double fraction_occupied(Site x, const Configuration& xi, SiteState i) {
  const Domain& dom = xi.domain();
  std::size_t hits = 0;
  for (std::size_t k = 0; k < dom.degree(); ++k) {
    if (xi[dom.neighbor(x, k)] == i) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(dom.degree());
}

double transition_rate(Site x, const Configuration& xi, SiteState target, const Params& p) {
  const SiteState from = xi[x];
  using S = SiteState;
  switch (from) {
    case S::free:
      if (target == S::blue) return p.lambda1 * fraction_occupied(x, xi, S::blue);
      if (target == S::red) return p.lambda2 * fraction_occupied(x, xi, S::red);
      return 0.0;
    case S::frozen:
      if (target == S::blue) return p.lambda1 * fraction_occupied(x, xi, S::blue);
      if (target == S::free) return p.gamma_infinite ? std::numeric_limits<double>::infinity() : p.gamma;
      return 0.0;
    case S::blue:
      if (target == (p.gamma_infinite ? S::free : S::frozen)) return 1.0;
      return 0.0;
    case S::red:
      return target == S::free ? 1.0 : 0.0;
  }
  return 0.0;
}

bool is_table_transition(SiteState source, SiteState target, bool gamma_infinite) {
  using S = SiteState;
  switch (source) {
    case S::free: return target == S::blue || target == S::red;
    case S::frozen: return target == S::blue || (!gamma_infinite && target == S::free);
    case S::blue: return target == (gamma_infinite ? S::free : S::frozen);
    case S::red: return target == S::free;
  }
  return false;
}

}  // namespace allelo
