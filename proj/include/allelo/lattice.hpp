#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace allelo {

/// State of a single lattice site.
enum class SiteState : std::uint8_t { free = 0, blue = 1, red = 2, frozen = 3 };

inline constexpr int kNumStates = 4;

constexpr int index_of(SiteState s) { return static_cast<int>(s); }

/// Throws std::invalid_argument for values outside {0,1,2,3}.
SiteState site_state_from_int(int v);

const char* to_string(SiteState s);

enum class Norm { l1, l2, linf };

Norm norm_from_string(const std::string& name);
const char* to_string(Norm n);

using Offset = std::vector<int>;

struct NeighborhoodSpec {
  double radius = 1.0;
  Norm norm = Norm::l1;
  int dim = 2;

  bool operator==(const NeighborhoodSpec&) const = default;
};

/// Nonzero integer offsets within the given radius, in lexicographic order.
class Neighborhood {
 public:
  explicit Neighborhood(const NeighborhoodSpec& spec);

  const NeighborhoodSpec& spec() const { return spec_; }
  int dim() const { return spec_.dim; }
  std::size_t size() const { return offsets_.size(); }
  const Offset& operator[](std::size_t k) const { return offsets_[k]; }
  const std::vector<Offset>& offsets() const { return offsets_; }

  /// Index of the offset -offsets()[k].
  std::size_t opposite(std::size_t k) const { return opposite_[k]; }

  /// Largest coordinate magnitude among the offsets.
  int reach() const { return reach_; }

 private:
  NeighborhoodSpec spec_;
  std::vector<Offset> offsets_;
  std::vector<std::size_t> opposite_;
  int reach_ = 0;
};

Neighborhood build_neighborhood(double radius, Norm norm, int dim);

using Site = std::int32_t;

/// Periodic box with row-major site indexing (first axis slowest).
class Torus {
 public:
  explicit Torus(std::vector<int> sides);

  int dim() const { return static_cast<int>(sides_.size()); }
  const std::vector<int>& sides() const { return sides_; }
  std::size_t size() const { return size_; }

  Site index(std::span<const int> coords) const;
  std::vector<int> coords(Site s) const;
  Site shift(Site s, std::span<const int> offset) const;

  bool operator==(const Torus& o) const { return sides_ == o.sides_; }

 private:
  std::vector<int> sides_;
  std::vector<std::size_t> strides_;
  std::size_t size_ = 0;
};

/// Torus plus neighborhood, with the neighbor table precomputed.
class Domain {
 public:
  Domain(Torus torus, Neighborhood nbhd);

  const Torus& torus() const { return torus_; }
  const Neighborhood& neighborhood() const { return nbhd_; }
  std::size_t size() const { return torus_.size(); }
  std::size_t degree() const { return nbhd_.size(); }

  /// Site reached from s by neighborhood offset k.
  Site neighbor(Site s, std::size_t k) const {
    return table_[static_cast<std::size_t>(s) * nbhd_.size() + k];
  }

  bool same_geometry(const Domain& o) const {
    return torus_ == o.torus_ && nbhd_.spec() == o.nbhd_.spec();
  }

 private:
  Torus torus_;
  Neighborhood nbhd_;
  std::vector<Site> table_;
};

using DomainPtr = std::shared_ptr<const Domain>;

DomainPtr make_domain(std::vector<int> sides, const NeighborhoodSpec& spec);

/// Dense per-site states on a domain.
class Configuration {
 public:
  Configuration() = default;
  Configuration(DomainPtr domain, SiteState fill);

  const DomainPtr& domain_ptr() const { return domain_; }
  const Domain& domain() const { return *domain_; }
  std::size_t size() const { return states_.size(); }

  SiteState operator[](Site s) const { return states_[static_cast<std::size_t>(s)]; }
  SiteState& operator[](Site s) { return states_[static_cast<std::size_t>(s)]; }

  std::span<const SiteState> states() const { return states_; }

  std::array<std::size_t, kNumStates> counts() const;
  std::array<double, kNumStates> densities() const;

  bool operator==(const Configuration& o) const { return states_ == o.states_; }

 private:
  DomainPtr domain_;
  std::vector<SiteState> states_;
};

/// Model rates. `gamma_infinite` selects the limit where a cross on a blue
/// site frees it directly (the plain multitype contact process).
struct Params {
  double lambda1 = 1.0;
  double lambda2 = 1.0;
  double gamma = 1.0;
  bool gamma_infinite = false;
  NeighborhoodSpec neighborhood{};

  void validate() const;
  bool operator==(const Params&) const = default;
};

/// card{y in x + N : xi(y) = i} / card N.
double fraction_occupied(Site x, const Configuration& xi, SiteState i);

/// Instantaneous rate of the flip xi(x) -> target.
double transition_rate(Site x, const Configuration& xi, SiteState target, const Params& p);

/// True iff source -> target appears in the rate table. With
/// `gamma_infinite`, 1 -> 0 replaces 1 -> 3 and 3 -> 0.
bool is_table_transition(SiteState source, SiteState target, bool gamma_infinite = false);

}  // namespace allelo
