#include "nbody/asymptotics.hpp"

#include <cmath>
#include <limits>

namespace nbody {

PowerLawFit fit_power_law(const std::vector<double>& t,
                          const std::vector<double>& y, double window_lo,
                          double window_hi) {
  if (t.size() != y.size())
    throw ValidationError("fit_power_law: size mismatch");
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i] < window_lo || t[i] > window_hi) continue;
    if (!(t[i] > 0.0))
      throw std::domain_error("fit_power_law: times must be positive");
    if (!(y[i] > 0.0))
      throw std::domain_error(
          "fit_power_law: non-positive value in window; subtract constants "
          "or offsets before fitting");
    lx.push_back(std::log(t[i]));
    ly.push_back(std::log(y[i]));
  }
  int n = static_cast<int>(lx.size());
  if (n < 10)
    throw ValidationError("fit_power_law: need at least 10 points in window");

  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int i = 0; i < n; ++i) {
    sx += lx[i];
    sy += ly[i];
    sxx += lx[i] * lx[i];
    sxy += lx[i] * ly[i];
  }
  double det = n * sxx - sx * sx;
  double slope = (n * sxy - sx * sy) / det;
  double intercept = (sy - slope * sx) / n;

  double ss_res = 0, ss_tot = 0, ybar = sy / n;
  for (int i = 0; i < n; ++i) {
    double pred = intercept + slope * lx[i];
    ss_res += (ly[i] - pred) * (ly[i] - pred);
    ss_tot += (ly[i] - ybar) * (ly[i] - ybar);
  }
  PowerLawFit fit;
  fit.exponent = slope;
  fit.coefficient = std::exp(intercept);
  fit.r_squared = ss_tot > 0.0 ? std::max(0.0, 1.0 - ss_res / ss_tot) : 1.0;
  fit.window_lo = window_lo;
  fit.window_hi = window_hi;
  fit.points = n;
  return fit;
}

// ---------------------------------------------------------------------------
// Expansion specs and residuals
// ---------------------------------------------------------------------------

ExpansionSpec make_expansion_spec(const PotentialModel& model,
                                  const ReferencePath& path) {
  const double alpha = model.alpha;
  ExpansionSpec spec;
  spec.regime = path.regime;
  spec.alpha = alpha;

  auto add_power = [&](const Vec& c, double e) {
    spec.terms.push_back({c, e, false, false});
  };
  auto add_log = [&](const Vec& c) {
    spec.terms.push_back({c, 0.0, true, false});
  };

  switch (path.regime) {
    case Regime::Hyperbolic: {
      add_power(path.a, 1.0);
      if (std::abs(alpha - 1.0) < 1e-12) {
        add_log(-mass_gradient(model, path.a));
        spec.remainder_exponent = 0.0;  // o(1)
        break;
      }
      const GammaCoefficients& gc = *path.gamma;
      for (std::size_t k = 1; k <= gc.gammas.size(); ++k)
        add_power(gc.gammas[k - 1], 1.0 - static_cast<double>(k) * alpha);
      if (alpha == 0.5) {
        add_log(*gc.tilde_gamma);
        spec.remainder_exponent = 0.0;  // o(log t)
      } else if (alpha > 0.5 && alpha < 1.0) {
        add_power(gamma_term(model, path.a, 2), 1.0 - 2.0 * alpha);
        spec.remainder_exponent = 1.0 - 2.0 * alpha;
      } else {
        spec.remainder_exponent =
            1.0 - gc.expansion_order * alpha;  // o(t^{1 - P alpha})
      }
      break;
    }
    case Regime::Parabolic: {
      add_power(path.parab, 2.0 / (2.0 + alpha));
      spec.remainder_exponent = alpha / (2.0 + alpha);
      break;
    }
    case Regime::HyperbolicParabolic: {
      add_power(path.a, 1.0);
      add_power(path.parab, 2.0 / (2.0 + alpha));
      spec.remainder_exponent =
          std::max(1.0 - alpha, alpha / (2.0 + alpha));
      break;
    }
  }
  return spec;
}

ExpansionResidual expansion_residual(const MassSystem& sys,
                                     const Trajectory& traj,
                                     const ExpansionSpec& spec,
                                     bool fit_constants, double window_lo,
                                     double window_hi) {
  int n = traj.n_samples();
  if (n < 10) throw ValidationError("expansion_residual: too few samples");
  double T = traj.times.back();
  if (window_hi <= 0.0) window_hi = T;
  if (window_lo <= 0.0) window_lo = std::sqrt(T);
  if (T < 10.0 * window_lo)
    throw ValidationError(
        "expansion_residual: horizon must be at least 10x the window start");

  std::vector<int> idx;
  for (int i = 0; i < n; ++i)
    if (traj.times[i] >= window_lo && traj.times[i] <= window_hi)
      idx.push_back(i);
  if (idx.size() < 10)
    throw ValidationError("expansion_residual: window holds too few samples");

  int dof = static_cast<int>(traj.positions.cols());
  Mat resid(idx.size(), dof);
  for (std::size_t r = 0; r < idx.size(); ++r) {
    double t = traj.times[idx[r]];
    Vec y = traj.positions.row(idx[r]).transpose();
    for (const ExpansionTerm& term : spec.terms) {
      if (term.fit) continue;
      double basis = term.is_log ? std::log(t) : std::pow(t, term.exponent);
      y -= term.coeff * basis;
    }
    resid.row(r) = y.transpose();
  }

  // joint least squares for the free terms (and the constant)
  ExpansionResidual out;
  std::vector<const ExpansionTerm*> free_terms;
  for (const ExpansionTerm& term : spec.terms)
    if (term.fit) free_terms.push_back(&term);
  int ncols = static_cast<int>(free_terms.size()) + (fit_constants ? 1 : 0);
  if (ncols > 0) {
    Mat A(idx.size(), ncols);
    for (std::size_t r = 0; r < idx.size(); ++r) {
      double t = traj.times[idx[r]];
      for (std::size_t c = 0; c < free_terms.size(); ++c)
        A(r, c) = free_terms[c]->is_log ? std::log(t)
                                        : std::pow(t, free_terms[c]->exponent);
      if (fit_constants) A(r, ncols - 1) = 1.0;
    }
    Eigen::JacobiSVD<Mat> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
    double cond = svd.singularValues()(0) /
                  svd.singularValues()(svd.singularValues().size() - 1);
    out.conditioning_warning = !(cond < 1e10);
    Mat coeffs = svd.solve(resid);  // ncols x dof
    resid -= A * coeffs;
    for (int c = 0; c < ncols; ++c)
      out.fitted_coefficients.push_back(coeffs.row(c).transpose());
  }

  out.times.resize(idx.size());
  out.residual_norm.resize(idx.size());
  for (std::size_t r = 0; r < idx.size(); ++r) {
    out.times[r] = traj.times[idx[r]];
    out.residual_norm[r] = mass_norm(sys, resid.row(r).transpose());
  }
  double floor_val = 0.0;
  for (double v : out.residual_norm) floor_val = std::max(floor_val, v);
  floor_val *= 1e-14;
  std::vector<double> clipped = out.residual_norm;
  for (double& v : clipped) v = std::max(v, floor_val);
  if (floor_val > 0.0) {
    out.fit = fit_power_law(out.times, clipped, window_lo, window_hi);
  } else {
    out.fit = PowerLawFit{};  // identically zero residual
    out.fit.window_lo = window_lo;
    out.fit.window_hi = window_hi;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Chazy classification
// ---------------------------------------------------------------------------

const char* chazy_name(ChazyClass c) {
  switch (c) {
    case ChazyClass::H:
      return "H";
    case ChazyClass::P:
      return "P";
    case ChazyClass::HP:
      return "HP";
  }
  return "?";
}

ChazyReport chazy_classify(const PotentialModel& model, const Trajectory& traj,
                           double band) {
  const MassSystem& sys = model.system;
  int n = traj.n_samples();
  if (n < 20) throw ValidationError("chazy_classify: too few samples");
  double T = traj.times.back();
  double lo = std::sqrt(T), hi = T;

  // expansiveness gate: U must decay along the tail
  {
    int checks = 0, decreasing = 0;
    double u_prev = std::numeric_limits<double>::quiet_NaN();
    double u_first = 0.0, u_last = 0.0;
    for (int i = 0; i < n; ++i) {
      if (traj.times[i] < lo) continue;
      double u = potential_energy(model, traj.positions.row(i).transpose());
      if (checks == 0) u_first = u;
      u_last = u;
      if (checks > 0 && u < u_prev) ++decreasing;
      u_prev = u;
      ++checks;
    }
    if (checks < 5 || !(u_last < 0.9 * u_first) ||
        decreasing < static_cast<int>(0.8 * (checks - 1)))
      throw ClassificationError(
          "trajectory is not expansive on the tail window (U does not decay)");
  }

  ChazyReport rep;
  std::vector<double> dist(n);
  for (int i = 0; i < sys.n_bodies(); ++i) {
    for (int j = i + 1; j < sys.n_bodies(); ++j) {
      for (int k = 0; k < n; ++k) {
        Vec x = traj.positions.row(k).transpose();
        dist[k] = (sys.body(x, i) - sys.body(x, j)).norm();
      }
      PowerLawFit f = fit_power_law(traj.times, dist, lo, hi);
      rep.pair_exponents.emplace_back(i, j, f.exponent);
    }
  }

  std::vector<double> nrm(n);
  for (int k = 0; k < n; ++k)
    nrm[k] = mass_norm(sys, traj.positions.row(k).transpose());
  rep.norm_growth_exponent = fit_power_law(traj.times, nrm, lo, hi).exponent;
  rep.asymptotic_velocity = traj.positions.row(n - 1).transpose() / T;

  double p_exp = 2.0 / (2.0 + traj.alpha);
  bool all_h = true, all_p = true;
  for (auto& [i, j, e] : rep.pair_exponents) {
    if (std::abs(e - 1.0) > band) all_h = false;
    if (std::abs(e - p_exp) > band) all_p = false;
  }
  bool sublinear = rep.norm_growth_exponent < 0.5 * (1.0 + p_exp);
  if (all_h) {
    rep.label = ChazyClass::H;
  } else if (all_p && sublinear) {
    rep.label = ChazyClass::P;
  } else {
    rep.label = ChazyClass::HP;
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Singular ODE oracle
// ---------------------------------------------------------------------------

namespace {

// trapezoid cumulative integral of g over ts, I[0] = 0
std::vector<double> cumtrapz(const std::vector<double>& ts,
                             const std::vector<double>& g) {
  std::vector<double> I(ts.size(), 0.0);
  for (std::size_t i = 1; i < ts.size(); ++i)
    I[i] = I[i - 1] + 0.5 * (g[i] + g[i - 1]) * (ts[i] - ts[i - 1]);
  return I;
}

}  // namespace

SingularOdeSolution singular_ode_solution(double mu,
                                          const std::vector<double>& ts,
                                          const std::vector<double>& fs) {
  if (!(mu < 0.25))
    throw std::domain_error(
        "singular_ode_solution: need mu < 1/4 for two real exponents");
  if (ts.size() != fs.size() || ts.size() < 12)
    throw ValidationError("singular_ode_solution: bad sample arrays");

  SingularOdeSolution sol;
  double disc = std::sqrt(1.0 - 4.0 * mu);
  sol.theta_minus = 0.5 * (1.0 - disc);
  sol.theta_plus = 0.5 * (1.0 + disc);
  sol.times = ts;
  int n = static_cast<int>(ts.size());

  double fmax = 0.0;
  for (double v : fs) fmax = std::max(fmax, std::abs(v));
  if (fmax == 0.0) {
    sol.y_p.assign(n, 0.0);
    sol.dy_p.assign(n, 0.0);
    return sol;
  }

  // decay exponent of |f| from the last decade, for the tail estimates
  double f_exp;
  {
    std::vector<double> af(fs.size());
    for (std::size_t i = 0; i < fs.size(); ++i)
      af[i] = std::max(std::abs(fs[i]), 1e-300);
    f_exp = fit_power_law(ts, af, ts.back() / 10.0, ts.back()).exponent;
  }

  auto weighted_integral = [&](double theta) {
    std::vector<double> g(n);
    for (int i = 0; i < n; ++i) g[i] = std::pow(ts[i], theta) * fs[i];
    std::vector<double> I = cumtrapz(ts, g);
    double growth = theta + f_exp;
    if (growth < -1.0 - 1e-9) {
      // integrable at infinity: anchor there so no t^{theta_opposite}
      // component sneaks into y_p
      double tail = g.back() * ts.back() / (-1.0 - growth);
      double total = I.back() + tail;
      for (double& v : I) v -= total;
    }
    return I;
  };

  std::vector<double> Im = weighted_integral(sol.theta_minus);
  std::vector<double> Ip = weighted_integral(sol.theta_plus);
  sol.y_p.resize(n);
  sol.dy_p.resize(n);
  for (int i = 0; i < n; ++i) {
    double tp = std::pow(ts[i], sol.theta_plus);
    double tm = std::pow(ts[i], sol.theta_minus);
    sol.y_p[i] = (tp * Im[i] - tm * Ip[i]) / disc;
    sol.dy_p[i] = (sol.theta_plus * tp / ts[i] * Im[i] -
                   sol.theta_minus * tm / ts[i] * Ip[i]) /
                  disc;
  }
  return sol;
}

// ---------------------------------------------------------------------------
// b_m projection decay
// ---------------------------------------------------------------------------

ProjectionDecay b_projection_decay(const PotentialModel& model,
                                   const Trajectory& traj,
                                   const ReferencePath& path, double window_lo,
                                   double window_hi) {
  const MassSystem& sys = model.system;
  if (path.regime != Regime::Parabolic)
    throw ValidationError("b_projection_decay expects a parabolic reference");
  const double alpha = model.alpha;
  double bnorm = mass_norm(sys, path.parab);
  Vec b_m = path.parab / bnorm;

  int n = traj.n_samples();
  ProjectionDecay out;
  out.times = traj.times;
  out.psi_b.resize(n);
  double scale = 0.0;
  for (int i = 0; i < n; ++i) {
    Vec diff = traj.positions.row(i).transpose() -
               reference_state(path, traj.times[i]).position;
    out.psi_b[i] = mass_inner_product(sys, diff, b_m);
    scale = std::max(scale, mass_norm(sys, diff));
  }

  double A = 2.0 * alpha * (1.0 + alpha) / ((2.0 + alpha) * (2.0 + alpha));
  double m_minus = 0.5 * (1.0 - std::sqrt(1.0 + 4.0 * A));
  double yp_exp = (2.0 * alpha - 2.0) / (2.0 + alpha);
  out.bound_exponent = alpha < 1.0 ? std::max(m_minus, yp_exp) : yp_exp;

  double psi_max = 0.0;
  for (double v : out.psi_b) psi_max = std::max(psi_max, std::abs(v));
  if (psi_max <= 1e-12 * std::max(1.0, scale)) {
    out.negligible = true;
    return out;
  }

  double T = traj.times.back();
  if (window_hi <= 0.0) window_hi = T;
  if (window_lo <= 0.0) window_lo = std::sqrt(T);
  std::vector<double> av(n);
  for (int i = 0; i < n; ++i)
    av[i] = std::max(std::abs(out.psi_b[i]), 1e-14 * psi_max);
  out.fit = fit_power_law(out.times, av, window_lo, window_hi);
  return out;
}

}  // namespace nbody
