#include "allelo/meanfield.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "allelo/format.hpp"
#include "allelo/random.hpp"

namespace allelo::meanfield {

const char* to_string(Form f) { return f == Form::corrected ? "corrected" : "literal"; }

Form form_from_string(const std::string& s) {
  if (s == "corrected") return Form::corrected;
  if (s == "literal") return Form::literal;
  throw std::invalid_argument("unknown mean-field form '" + s + "'");
}

const char* to_string(Stability s) {
  switch (s) {
    case Stability::attracting: return "attracting";
    case Stability::unstable: return "unstable";
    case Stability::marginal: return "marginal";
  }
  return "?";
}

const char* to_string(SearchStatus s) {
  switch (s) {
    case SearchStatus::found: return "found";
    case SearchStatus::absent: return "absent";
    case SearchStatus::not_converged: return "not_converged";
  }
  return "?";
}

State rhs(const State& u, const Params& p, Form form) {
  const double l1 = p.lambda1, l2 = p.lambda2, g = p.gamma;
  const double u0 = u[0], u1 = u[1], u2 = u[2], u3 = u[3];
  const double regrowth = form == Form::corrected ? l1 * u1 * u3 : l1 * u0 * u3;
  State d;
  d[0] = u2 + g * u3 - l1 * u0 * u1 - l2 * u0 * u2;
  d[1] = l1 * u0 * u1 + regrowth - u1;
  d[2] = l2 * u0 * u2 - u2;
  d[3] = u1 - l1 * u1 * u3 - g * u3;
  return d;
}

Matrix jacobian(const State& u, const Params& p, Form form) {
  const double l1 = p.lambda1, l2 = p.lambda2, g = p.gamma;
  const double u0 = u[0], u1 = u[1], u2 = u[2], u3 = u[3];
  Matrix j = Matrix::Zero();
  j(0, 0) = -l1 * u1 - l2 * u2;
  j(0, 1) = -l1 * u0;
  j(0, 2) = 1.0 - l2 * u0;
  j(0, 3) = g;
  if (form == Form::corrected) {
    j(1, 0) = l1 * u1;
    j(1, 1) = l1 * u0 + l1 * u3 - 1.0;
    j(1, 3) = l1 * u1;
  } else {
    j(1, 0) = l1 * u1 + l1 * u3;
    j(1, 1) = l1 * u0 - 1.0;
    j(1, 3) = l1 * u0;
  }
  j(2, 0) = l2 * u2;
  j(2, 2) = l2 * u0 - 1.0;
  j(3, 1) = 1.0 - l1 * u3;
  j(3, 3) = -l1 * u1 - g;
  return j;
}

namespace {

State rk4_step(const State& u, const Params& p, Form form, double h) {
  const State k1 = rhs(u, p, form);
  const State k2 = rhs(u + 0.5 * h * k1, p, form);
  const State k3 = rhs(u + 0.5 * h * k2, p, form);
  const State k4 = rhs(u + h * k3, p, form);
  return u + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

std::size_t step_count(double dt, double T) {
  return static_cast<std::size_t>(std::max(1.0, std::ceil(T / dt - 1e-9)));
}

State run_rk4(State u, const Params& p, Form form, std::size_t n, double h, double record_every,
              std::vector<TrajectoryPoint>* out) {
  double next_record = 0.0;
  for (std::size_t i = 0; i <= n; ++i) {
    const double t = static_cast<double>(i) * h;
    if (out && (record_every <= 0.0 || t >= next_record - 1e-9 * h || i == n)) {
      out->push_back({t, u});
      next_record += record_every;
    }
    if (i == n) break;
    u = rk4_step(u, p, form, h);
    if (!u.allFinite() || u.cwiseAbs().maxCoeff() > 10.0) {
      throw std::runtime_error("mean-field integration diverged at t = " + std::to_string(t + h));
    }
  }
  return u;
}

}  // namespace

Integration integrate(const State& u0, const Params& p, Form form, double dt, double T, double record_every) {
  if (!(dt > 0.0)) throw std::invalid_argument("integration step must be positive");
  if (!(T >= 0.0)) throw std::invalid_argument("integration time must be nonnegative");
  Integration out;
  if (T == 0.0) {
    out.points.push_back({0.0, u0});
    return out;
  }
  const std::size_t n = step_count(dt, T);
  const double h = T / static_cast<double>(n);
  const State coarse = run_rk4(u0, p, form, n, h, record_every, &out.points);
  const State fine = run_rk4(u0, p, form, 2 * n, h / 2.0, 0.0, nullptr);
  out.halving_error = (coarse - fine).cwiseAbs().maxCoeff();
  return out;
}

std::optional<State> boundary_fixed_point_blue(const Params& p) {
  if (!(p.lambda1 > 1.0)) return std::nullopt;
  const double u1 = 1.0 - 1.0 / p.lambda1;
  const double u3 = u1 / (p.lambda1 * u1 + p.gamma);
  return State(1.0 / p.lambda1 - u3, u1, 0.0, u3);
}

std::optional<State> boundary_fixed_point_red(const Params& p) {
  if (!(p.lambda2 > 1.0)) return std::nullopt;
  return State(1.0 / p.lambda2, 0.0, 1.0 - 1.0 / p.lambda2, 0.0);
}

Regions classify_region(double lambda1, double lambda2, double gamma) {
  if (!(gamma > 0.0)) throw std::invalid_argument("region classification needs gamma > 0");
  // Points within rounding of a boundary curve count as on it: there the
  // interior equilibrium has merged with a boundary one.
  auto less = [](double a, double b) { return a < b - kRegionTol * std::max({1.0, std::abs(a), std::abs(b)}); };
  Regions r;
  const double edge = lambda1 * (lambda1 + gamma - 1.0);
  r.in_w1 = less(1.0, lambda1) && less(gamma * lambda2, edge);
  r.in_w2 = less(1.0, lambda2) && less(lambda1, lambda2);
  r.coexistence = less(lambda1, lambda2) && less(gamma * lambda2, edge);
  return r;
}

namespace {

using Matrix3 = Eigen::Matrix3d;

// Tangent-space Jacobian in (u1, u2, u3) with u0 = 1 - u1 - u2 - u3.
Matrix3 reduced(const Matrix& j) {
  Matrix3 r;
  for (int a = 0; a < 3; ++a) {
    for (int b = 0; b < 3; ++b) r(a, b) = j(a + 1, b + 1) - j(a + 1, 0);
  }
  return r;
}

template <int N>
std::array<double, N> sorted_real_parts(const Eigen::Matrix<double, N, N>& m) {
  Eigen::EigenSolver<Eigen::Matrix<double, N, N>> es(m, false);
  std::array<double, N> out{};
  for (int i = 0; i < N; ++i) out[static_cast<std::size_t>(i)] = es.eigenvalues()[i].real();
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

StabilityReport stability(const State& u, const Params& p, Form form) {
  StabilityReport rep;
  rep.point = u;
  rep.regions = classify_region(p.lambda1, p.lambda2, p.gamma);
  const Matrix j = jacobian(u, p, form);
  rep.real_parts = sorted_real_parts<4>(j);
  const Matrix3 r = reduced(j);
  rep.simplex_real_parts = sorted_real_parts<3>(r);
  const double top = rep.simplex_real_parts[2];
  if (top < -kStabilityTol) {
    rep.stability = Stability::attracting;
  } else if (top > kStabilityTol) {
    rep.stability = Stability::unstable;
  } else {
    rep.stability = Stability::marginal;
  }
  if (rep.stability == Stability::unstable) {
    Eigen::EigenSolver<Matrix3> es(r, true);
    int best = 0;
    for (int i = 1; i < 3; ++i) {
      if (es.eigenvalues()[i].real() > es.eigenvalues()[best].real()) best = i;
    }
    const Eigen::Vector3d v3 = es.eigenvectors().col(best).real();
    const State v(-v3.sum(), v3[0], v3[1], v3[2]);
    std::vector<int> zero;
    for (int i = 0; i < 4; ++i) {
      if (std::abs(u[i]) < 1e-12) zero.push_back(i);
    }
    if (!zero.empty()) {
      const double sign = v[zero.front()] < 0.0 ? -1.0 : 1.0;
      rep.unstable_direction_inward =
          std::all_of(zero.begin(), zero.end(), [&](int i) { return sign * v[i] > 1e-12; });
    }
  }
  return rep;
}

namespace {

// u1 and u2 equations divided by u1 and u2; unknowns (u1, u2, u3).
Eigen::Vector3d per_capita(const Eigen::Vector3d& x, const Params& p) {
  const double u0 = 1.0 - x.sum();
  return {p.lambda1 * (u0 + x[2]) - 1.0, p.lambda2 * u0 - 1.0,
          x[0] - p.lambda1 * x[0] * x[2] - p.gamma * x[2]};
}

Matrix3 per_capita_jacobian(const Eigen::Vector3d& x, const Params& p) {
  Matrix3 j;
  j << -p.lambda1, -p.lambda1, 0.0, -p.lambda2, -p.lambda2, -p.lambda2, 1.0 - p.lambda1 * x[2], 0.0,
      -p.lambda1 * x[0] - p.gamma;
  return j;
}

State embed(const Eigen::Vector3d& x) { return State(1.0 - x.sum(), x[0], x[1], x[2]); }

std::optional<Eigen::Vector3d> newton(Eigen::Vector3d x, const Params& p) {
  double norm = per_capita(x, p).norm();
  for (int it = 0; it < 200; ++it) {
    if (norm < 1e-14) return x;
    const Eigen::FullPivLU<Matrix3> lu(per_capita_jacobian(x, p));
    if (!lu.isInvertible()) return std::nullopt;
    const Eigen::Vector3d step = lu.solve(-per_capita(x, p));
    double alpha = 1.0;
    bool moved = false;
    for (int k = 0; k < 30; ++k, alpha *= 0.5) {
      const Eigen::Vector3d y = x + alpha * step;
      const double n = per_capita(y, p).norm();
      if (n < norm) {
        x = y;
        norm = n;
        moved = true;
        break;
      }
    }
    if (!moved) return norm < 1e-12 ? std::optional(x) : std::nullopt;
  }
  return norm < 1e-12 ? std::optional(x) : std::nullopt;
}

}  // namespace

InteriorSearch interior_fixed_point(const Params& p) {
  const Regions reg = classify_region(p.lambda1, p.lambda2, p.gamma);
  InteriorSearch out;
  SequentialRng rng{CounterRng(0x6d66)};
  for (std::size_t s = 0; s < 16; ++s) {
    Eigen::Vector3d x(0.25, 0.25, 0.25);
    if (s > 0) {
      // Uniform point of the open simplex.
      std::array<double, 4> e{};
      double total = 0.0;
      for (double& v : e) total += (v = -std::log(1.0 - rng.uniform()));
      x = Eigen::Vector3d(e[1], e[2], e[3]) / total;
    }
    out.starts_used = s + 1;
    const auto root = newton(x, p);
    if (!root) continue;
    const State u = embed(*root);
    const double res = rhs(u, p).cwiseAbs().maxCoeff();
    if (u.minCoeff() > 1e-8 && res < 1e-10) {
      out.status = SearchStatus::found;
      out.point = u;
      out.residual = res;
      return out;
    }
  }
  out.status = reg.in_w1 && reg.in_w2 ? SearchStatus::not_converged : SearchStatus::absent;
  return out;
}

PhaseRow phase_point(double lambda1, double lambda2, double gamma) {
  Params p;
  p.lambda1 = lambda1;
  p.lambda2 = lambda2;
  p.gamma = gamma;
  PhaseRow r{lambda1, lambda2, gamma, classify_region(lambda1, lambda2, gamma), false, false, false};
  r.ubar_exists = boundary_fixed_point_blue(p).has_value();
  r.vbar_exists = boundary_fixed_point_red(p).has_value();
  r.interior_exists = interior_fixed_point(p).status == SearchStatus::found;
  return r;
}

std::string phase_csv_header() {
  return "lambda1,lambda2,gamma,in_w1,in_w2,coexist,ubar_exists,vbar_exists,interior_exists";
}

std::string phase_csv_row(const PhaseRow& r) {
  std::ostringstream os;
  os << format_number(r.lambda1) << ',' << format_number(r.lambda2) << ',' << format_number(r.gamma) << ',' << r.regions.in_w1 << ',' << r.regions.in_w2 << ','
     << r.regions.coexistence << ',' << r.ubar_exists << ',' << r.vbar_exists << ',' << r.interior_exists;
  return os.str();
}

}  // namespace allelo::meanfield
