#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "allelo/forward.hpp"
#include "allelo/stats.hpp"

namespace allelo::blocks {

/// Planar lattice point, in coordinates relative to the torus center.
using Point = std::array<int, 2>;

/// Space-time scales of the block construction on Z^2:
/// B(z) = (L z1, L z2) + [-L, L]^2, tiles D(w) = (l w1, l w2) + (-l/2, l/2]^2,
/// and I_z = {w : D(w) inside B(z)}.
struct BlockGeometry {
  int L = 20;
  int T = 400;
  int M = 3;
  int ell = 1;

  /// T defaults to L^2 and ell to max(1, round(L^0.1)).
  static BlockGeometry make(int L, int M, std::optional<int> T = std::nullopt, std::optional<int> ell = std::nullopt);
  void validate() const;

  Point phi(Point z) const { return {L * z[0], L * z[1]}; }
  bool in_box(Point z, Point c) const;
  /// Tile indices w in I_z, row-major.
  std::vector<Point> tile_indices(Point z) const;
  /// Lattice points of D(w).
  std::vector<Point> tile_points(Point w) const;
  /// Side of the torus holding the restriction boxes of (0,0) and its children.
  int torus_side() const { return 2 * L * (M + 1) + 1; }
};

/// Site of the torus at `c` relative to the center; throws if c falls outside
/// the centered window [-side/2, side - 1 - side/2] on some axis.
Site site_at(const Torus& torus, Point c);

/// No site of B(z) is blue and every tile D(w), w in I_z, holds a red site.
/// Throws std::out_of_range if B(z) leaves the torus window.
bool is_good_box(const Configuration& xi, Point z, const BlockGeometry& g);

/// Parity rule: z1, z2 both even for even k, both odd for odd k.
bool parity_ok(Point z, int k);

/// (z, k) is occupied iff B(z) is good in `state_at_kT`, a run restricted to
/// restriction_mask(z). Throws std::invalid_argument on a parity violation.
bool is_occupied(const Configuration& state_at_kT, Point z, int k, const BlockGeometry& g);

/// Sites of [-ML, ML]^2 + phi(z).
std::vector<std::uint8_t> restriction_mask(const Domain& domain, Point z, const BlockGeometry& g);
/// Sites of kappa(z) = phi(z) + [-ML/3, ML/3]^2.
std::vector<std::uint8_t> kappa_mask(const Domain& domain, Point z, const BlockGeometry& g);

/// Start of a block experiment: B(0) holds red at density `box_red` and no
/// blue, with one red forced into every tile that drew none; the other
/// sites follow the product `environment`, by default sparse blue seeds.
struct BlockStart {
  double box_red = 0.5;
  std::array<double, kNumStates> environment{0.98, 0.02, 0.0, 0.0};

  void validate() const;
};

Configuration block_initial(const BlockStart& start, std::uint64_t seed, const BlockGeometry& g, DomainPtr domain);

struct ExperimentOptions {
  std::size_t replicas = 200;
  std::uint64_t base_seed = 0;
  unsigned threads = 1;
  BlockStart start{};
};

struct OccupancyEstimate {
  /// Children (1,1) and (-1,-1) at k = 1.
  std::array<Point, 2> children{Point{1, 1}, Point{-1, -1}};
  std::array<Proportion, 2> per_child{};
  /// Pooled over both children: the estimate of 1 - delta.
  Proportion pooled;
};

/// Replica r uses seed base_seed + r for the events and the start.
OccupancyEstimate estimate_occupancy(const Params& p, const BlockGeometry& g, const ExperimentOptions& opt);

struct BlockingResult {
  Proportion blocked;
  /// 2 lambda2 T / (gamma (gamma + 1)); 0 for gamma infinite.
  double gamma_term = 0.0;
  /// (2/3) M L times gamma_term, the bound without its C e^{-beta T} part.
  double gamma_bound = 0.0;
  std::vector<std::uint8_t> per_replica;
};

/// Fraction of runs, restricted to the box of (0,0), in which some
/// red-usable arrow from a red site hits a frozen site of kappa(0) during
/// [0, T]. A run stops early once it holds neither blue nor frozen sites.
BlockingResult blocking_experiment(const Params& p, const BlockGeometry& g, const ExperimentOptions& opt);

std::string blocks_csv_header();
std::string blocks_csv_row(double gamma, const BlockGeometry& g, const std::optional<OccupancyEstimate>& occ,
                           const std::optional<BlockingResult>& blk);

}  // namespace allelo::blocks
