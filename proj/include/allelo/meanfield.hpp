#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "allelo/lattice.hpp"

namespace allelo::meanfield {

/// Densities (u0, u1, u2, u3) of free, blue, red and frozen sites.
using State = Eigen::Vector4d;
using Matrix = Eigen::Matrix4d;

/// `corrected` carries the 3 -> 1 flow as lambda1 u1 u3 in u1', so that the
/// simplex is invariant. `literal` keeps lambda1 u0 u3 as printed; its
/// components sum to lambda1 u3 (u0 - u1).
enum class Form { corrected, literal };

const char* to_string(Form f);
Form form_from_string(const std::string& s);

State rhs(const State& u, const Params& p, Form form = Form::corrected);

/// Analytic partial derivatives of rhs.
Matrix jacobian(const State& u, const Params& p, Form form = Form::corrected);

struct TrajectoryPoint {
  double t;
  State u;
};

struct Integration {
  std::vector<TrajectoryPoint> points;
  /// Max-norm gap at time T between the run with dt and the run with dt/2.
  double halving_error = 0.0;
};

/// Fixed-step RK4 from u0 up to T, recording every `record_every` time units
/// (0 records every step). Throws std::runtime_error once any |u_i| > 10.
Integration integrate(const State& u0, const Params& p, Form form, double dt, double T, double record_every = 0.0);

/// ubar on the boundary u2 = 0; exists iff lambda1 > 1.
std::optional<State> boundary_fixed_point_blue(const Params& p);
/// vbar on the boundary u1 = u3 = 0; exists iff lambda2 > 1.
std::optional<State> boundary_fixed_point_red(const Params& p);

struct Regions {
  bool in_w1 = false;
  bool in_w2 = false;
  bool coexistence = false;
};

/// Relative slack on the strict region inequalities.
constexpr double kRegionTol = 1e-12;

Regions classify_region(double lambda1, double lambda2, double gamma);

enum class Stability { attracting, unstable, marginal };

const char* to_string(Stability s);

struct StabilityReport {
  State point;
  /// Real parts of the eigenvalues of the full 4x4 Jacobian, ascending.
  std::array<double, 4> real_parts{};
  /// Real parts on the simplex tangent space (u0 eliminated), ascending.
  std::array<double, 3> simplex_real_parts{};
  Stability stability = Stability::marginal;
  /// For an unstable point on the boundary: whether the eigenvector of the
  /// largest eigenvalue, signed to be positive in the coordinate that is
  /// zero on the boundary, points into the interior.
  bool unstable_direction_inward = false;
  Regions regions;
};

constexpr double kStabilityTol = 1e-8;

/// Classifies by the tangent-space eigenvalues: the full Jacobian always has
/// the eigenvalue 0 of the conserved sum.
StabilityReport stability(const State& u, const Params& p, Form form = Form::corrected);

enum class SearchStatus { found, absent, not_converged };

const char* to_string(SearchStatus s);

struct InteriorSearch {
  SearchStatus status = SearchStatus::absent;
  std::optional<State> point;
  double residual = 0.0;
  std::size_t starts_used = 0;
};

/// Damped Newton from the simplex center and 15 jittered starts, at most
/// 200 iterations each. Newton runs on the simplex with the u1 and u2
/// equations divided by u1 and u2, which keeps the boundary equilibria out
/// of reach. `absent` is reported only when the regions predict no interior
/// point; a failed search inside w1 and w2 is `not_converged`.
InteriorSearch interior_fixed_point(const Params& p);

struct PhaseRow {
  double lambda1, lambda2, gamma;
  Regions regions;
  bool ubar_exists, vbar_exists, interior_exists;
};

PhaseRow phase_point(double lambda1, double lambda2, double gamma);

std::string phase_csv_header();
std::string phase_csv_row(const PhaseRow& r);

}  // namespace allelo::meanfield
