#include "leglab/ratelab.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>

namespace leglab {

namespace {

struct Pt {
  double x;
  double y;
};

double cross(const Pt& o, const Pt& a, const Pt& b) {
  return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

// Upper (sign = +1) or lower (sign = -1) hull of points sorted by x.
std::vector<Pt> hull(const std::vector<Pt>& pts, int sign) {
  std::vector<Pt> h;
  for (const auto& p : pts) {
    while (h.size() >= 2 && sign * cross(h[h.size() - 2], h.back(), p) >= 0) h.pop_back();
    h.push_back(p);
  }
  return h;
}

// Slope of the hull edge spanning xbar.
double edge_slope(const std::vector<Pt>& h, double xbar) {
  for (std::size_t i = 0; i + 1 < h.size(); ++i) {
    if (h[i].x <= xbar && xbar <= h[i + 1].x) return (h[i + 1].y - h[i].y) / (h[i + 1].x - h[i].x);
  }
  return (h.back().y - h.front().y) / (h.back().x - h.front().x);
}

std::vector<Pt> window_points(const ErrorSweep& sw, const FitWindow& w, bool keep_zero = false) {
  std::vector<Pt> pts;
  for (std::size_t i = 0; i < sw.pvalues.size(); ++i) {
    const int p = sw.pvalues[i];
    if (p < w.pmin || p > w.pmax) continue;
    if (sw.abs_error[i] <= 0 && !keep_zero) continue;
    pts.push_back({std::log(static_cast<double>(p)), std::log(sw.abs_error[i])});
  }
  return pts;
}

FitWindow resolve_window(const ErrorSweep& sw, std::optional<FitWindow> window) {
  if (sw.pvalues.size() < 100) {
    throw DomainError("rate fit needs at least 100 sweep entries, got " + std::to_string(sw.pvalues.size()));
  }
  FitWindow w = window ? *window : default_window(sw);
  if (w.pmin > w.pmax || w.pmin < sw.pvalues.front() || w.pmax > sw.pvalues.back()) {
    throw DomainError("fit window outside sweep range");
  }
  return w;
}

// Fills residual, envelope_size and validity of a fit whose line is
// log C - alpha log p; `sign` selects the upper or lower envelope.
void score(RateFit& f, const std::vector<Pt>& pts, int sign) {
  const double logC = std::log(f.C);
  auto gap = [&](const Pt& p) { return sign * (logC - f.alpha * p.x - p.y); };
  f.envelope_size = static_cast<int>(std::count_if(pts.begin(), pts.end(), [&](const Pt& p) { return gap(p) <= 0.05; }));
  // Envelope maxima are the hull vertices. A window end sitting in a trough
  // drags a steep staircase of vertices into the hull; edges whose slope is
  // off the fitted rate by more than kEndSlope are treated as that artifact.
  constexpr double kEndSlope = 2.0;
  const auto h = hull(pts, sign);
  std::size_t lo = 0, hi = h.empty() ? 0 : h.size() - 1;
  auto off_rate = [&](std::size_t i) {
    const double s = (h[i + 1].y - h[i].y) / (h[i + 1].x - h[i].x);
    return std::abs(s + f.alpha) > kEndSlope;
  };
  while (lo < hi && off_rate(lo)) ++lo;
  while (hi > lo && off_rate(hi - 1)) --hi;
  double ss = 0;
  for (std::size_t i = lo; i <= hi && i < h.size(); ++i) ss += gap(h[i]) * gap(h[i]);
  f.residual = h.empty() ? 0.0 : std::sqrt(ss / static_cast<double>(hi - lo + 1));
  f.valid = f.envelope_size >= kMinEnvelope && f.residual <= kMaxResidual;
}

double mean_x(const std::vector<Pt>& pts) {
  double s = 0;
  for (const auto& p : pts) s += p.x;
  return s / static_cast<double>(pts.size());
}

RateFit upper_fit(const ErrorSweep& sw, std::optional<FitWindow> window) {
  RateFit f;
  f.window = resolve_window(sw, window);
  const auto pts = window_points(sw, f.window);
  if (pts.size() < 2) return f;
  const auto h = hull(pts, 1);
  f.alpha = h.size() < 2 ? 0.0 : -edge_slope(h, mean_x(pts));
  double logC = -std::numeric_limits<double>::infinity();
  for (const auto& p : pts) logC = std::max(logC, p.y + f.alpha * p.x);
  f.C = std::exp(logC);
  score(f, pts, 1);
  return f;
}

RateFit lower_fit(const ErrorSweep& sw, std::optional<FitWindow> window) {
  const RateFit up = upper_fit(sw, window);
  RateFit f;
  f.window = up.window;
  if (up.C <= 0) return f;
  auto pts = window_points(sw, f.window);
  const double xbar = mean_x(pts);
  // Near-zeros of an oscillating error are sign changes, not a lower bound.
  const double cut = std::log(up.C) + std::log(1e-3);
  std::erase_if(pts, [&](const Pt& p) { return p.y < cut - up.alpha * p.x; });
  if (pts.size() < 2) return f;
  const auto h = hull(pts, -1);
  f.alpha = h.size() < 2 ? 0.0 : -edge_slope(h, xbar);
  double logC = std::numeric_limits<double>::infinity();
  for (const auto& p : pts) logC = std::min(logC, p.y + f.alpha * p.x);
  f.C = std::exp(logC);
  score(f, pts, -1);
  return f;
}

std::string describe_fit(const RateFit& f) {
  return "alpha=" + std::to_string(f.alpha) + " envelope=" + std::to_string(f.envelope_size) +
         " residual=" + std::to_string(f.residual);
}

}  // namespace

nlohmann::json to_json(const RateFit& f) {
  return {{"alpha", f.alpha},
          {"C", f.C},
          {"window", {f.window.pmin, f.window.pmax}},
          {"residual", f.residual},
          {"envelope_size", f.envelope_size},
          {"alpha_pinned", f.alpha_pinned},
          {"valid", f.valid}};
}

FitWindow default_window(const ErrorSweep& sw) {
  if (sw.pvalues.empty()) throw DomainError("empty sweep");
  const int lo = sw.pvalues.front(), hi = sw.pvalues.back();
  return {std::max(lo, (hi + 1) / 2), hi};
}

RateFit fit_rate_nothrow(const ErrorSweep& sw, std::optional<FitWindow> window) { return upper_fit(sw, window); }

RateFit fit_rate(const ErrorSweep& sw, std::optional<FitWindow> window) {
  RateFit f = upper_fit(sw, window);
  if (!f.valid) throw FitUnreliable("upper envelope unreliable at x=" + sw.x_label + ": " + describe_fit(f), f);
  return f;
}

RateFit fit_lower_bound_nothrow(const ErrorSweep& sw, std::optional<FitWindow> window) { return lower_fit(sw, window); }

RateFit fit_lower_bound(const ErrorSweep& sw, std::optional<FitWindow> window) {
  RateFit f = lower_fit(sw, window);
  if (!f.valid) throw FitUnreliable("lower envelope unreliable at x=" + sw.x_label + ": " + describe_fit(f), f);
  return f;
}

RateFit fit_pinned(const ErrorSweep& sw, double alpha, std::optional<FitWindow> window) {
  RateFit f;
  f.window = resolve_window(sw, window);
  f.alpha = alpha;
  f.alpha_pinned = true;
  const auto pts = window_points(sw, f.window);
  if (pts.empty()) return f;
  double logC = -std::numeric_limits<double>::infinity();
  for (const auto& p : pts) logC = std::max(logC, p.y + alpha * p.x);
  f.C = std::exp(logC);
  score(f, pts, 1);
  return f;
}

double window_shift_drift(const ErrorSweep& sw, const RateFit& fit) {
  FitWindow w{static_cast<int>(std::lround(fit.window.pmin / 1.5)), static_cast<int>(std::lround(fit.window.pmax / 1.5))};
  w.pmin = std::max(w.pmin, sw.pvalues.front());
  const RateFit shifted = fit.alpha_pinned ? fit_pinned(sw, fit.alpha, w) : fit_rate_nothrow(sw, w);
  return std::abs(shifted.alpha - fit.alpha);
}

std::pair<double, double> loglog_line(const std::vector<double>& x, const std::vector<double>& y) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const auto n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  return {slope, (sy - slope * sx) / n};
}

// ---------------------------------------------------------------------------

namespace {

PrecisionContext context_for_run(const FamilyParams& fam, int pmax, const PrecisionContext& requested) {
  const auto need = fam.minimal_context(pmax);
  if (need.mode() == PrecisionMode::BigFloat &&
      (requested.mode() == PrecisionMode::Float64 ||
       (requested.mode() == PrecisionMode::BigFloat && requested.bits() < need.bits()))) {
    return need;
  }
  return requested;
}

}  // namespace

nlohmann::json to_json(const ConstantGrowthFit& g) {
  return {{"xi", g.xi_values},     {"C", g.C_values},           {"pmax_used", g.pmax_used},
          {"dropped_xi", g.dropped_xi}, {"fixed_alpha", g.fixed_alpha}, {"exponent", g.exponent},
          {"prefactor", g.prefactor},   {"valid", g.valid}};
}

ConstantGrowthFit constant_growth(const FamilyParams& fam, const Rational& approach, int side,
                                  const std::vector<Rational>& xi_grid, double fixed_alpha, const GrowthOptions& opt) {
  if (side != 1 && side != -1) throw DomainError("constant_growth: side must be +1 or -1");
  ConstantGrowthFit g;
  g.fixed_alpha = fixed_alpha;
  std::vector<Rational> xs;
  for (const auto& xi : xi_grid) {
    if (xi < Rational(1, 1000000)) throw DomainError("constant_growth: xi below 1e-6");
    xs.push_back(approach + side * xi);
  }
  // One coefficient computation serves the whole grid at the starting pmax.
  const auto first = xs.empty() ? std::vector<ErrorSweep>{}
                                : family_sweeps(fam, xs, opt.pmax, context_for_run(fam, opt.pmax, opt.ctx));
  for (std::size_t i = 0; i < xs.size(); ++i) {
    int pm = opt.pmax;
    ErrorSweep sw = first[i];
    bool kept = false;
    for (;;) {
      const RateFit free = fit_rate_nothrow(sw);
      if (free.valid && std::abs(free.alpha - fixed_alpha) <= opt.alpha_tolerance) {
        g.xi_values.push_back(xi_grid[i].convert_to<double>());
        g.C_values.push_back(fit_pinned(sw, fixed_alpha).C);
        g.pmax_used.push_back(pm);
        kept = true;
        break;
      }
      if (pm >= opt.pmax_ceiling) break;
      pm = std::min(2 * pm, opt.pmax_ceiling);
      sw = family_sweeps(fam, {xs[i]}, pm, context_for_run(fam, pm, opt.ctx))[0];
    }
    if (!kept) g.dropped_xi.push_back(xi_grid[i].convert_to<double>());
  }
  if (g.xi_values.size() >= 2) {
    const auto [slope, icpt] = loglog_line(g.xi_values, g.C_values);
    g.exponent = slope;
    g.prefactor = std::exp(icpt);
    g.valid = true;
  }
  return g;
}

// ---------------------------------------------------------------------------

nlohmann::json to_json(const GibbsReport& g) {
  return {{"p", g.pvalues},
          {"location", g.location},
          {"magnitude", g.magnitude},
          {"D", g.D},
          {"D_spread", g.D_spread},
          {"near_p", g.near_p},
          {"near_xi", g.near_xi},
          {"near_envelope", g.near_envelope},
          {"near_exponent", g.near_exponent},
          {"near_constant", g.near_constant},
          {"near_rate", g.near_rate}};
}

GibbsReport gibbs_probe(const FamilyParams& fam, const Rational& a, const std::vector<int>& pvalues,
                        const PrecisionContext& ctx, double near_rate) {
  if (pvalues.empty()) throw DomainError("gibbs_probe: no p values");
  constexpr int kSteps = 500;  // 10/p at spacing 1/(50p)
  GibbsReport r;
  r.pvalues = pvalues;
  r.near_rate = near_rate;
  for (int p : pvalues) {
    std::vector<Rational> xs;
    std::vector<int> offset;
    for (int j = -kSteps; j <= kSteps; ++j) {
      const Rational x = a + Rational(j, 50 * p);
      if (x < -1 || x > 1) continue;
      xs.push_back(x);
      offset.push_back(j);
    }
    const auto err = family_errors_on_grid(fam, xs, p, context_for_run(fam, p, ctx));
    // Walking away from a on each side, skip the transition layer where the
    // error rises to the half jump and falls off again, then take the largest
    // error: the overshoot.
    std::size_t centre = 0;
    while (offset[centre] != 0) ++centre;
    std::size_t best = centre;
    double best_err = -1;
    for (int dir : {-1, 1}) {
      std::size_t i = centre;
      auto next = [&](std::size_t k) { return static_cast<std::ptrdiff_t>(k) + dir; };
      auto inside = [&](std::size_t k) { return next(k) >= 0 && next(k) < static_cast<std::ptrdiff_t>(xs.size()); };
      while (inside(i) && err[static_cast<std::size_t>(next(i))] >= err[i]) i = static_cast<std::size_t>(next(i));
      while (inside(i) && err[static_cast<std::size_t>(next(i))] <= err[i]) i = static_cast<std::size_t>(next(i));
      for (; i < xs.size(); i = static_cast<std::size_t>(next(i))) {
        if (err[i] > best_err) {
          best_err = err[i];
          best = i;
        }
        if (next(i) < 0) break;
      }
    }
    if (std::abs(offset[best]) == kSteps) {
      throw GridTooCoarse("gibbs_probe: maximum at the scan boundary for p = " + std::to_string(p));
    }
    r.location.push_back(xs[best].convert_to<double>());
    r.magnitude.push_back(err[best]);
  }
  const double ad = a.convert_to<double>();
  double sum = 0;
  for (std::size_t i = 0; i < pvalues.size(); ++i) sum += std::abs(r.location[i] - ad) * pvalues[i];
  r.D = sum / static_cast<double>(pvalues.size());
  for (std::size_t i = 0; i < pvalues.size(); ++i) {
    r.D_spread = std::max(r.D_spread, std::abs(std::abs(r.location[i] - ad) * pvalues[i] - r.D));
  }

  // Local envelope of the error at a + xi: maximum over one local oscillation
  // period 2 pi sqrt(1 - x^2)/p.
  const int p = *std::max_element(pvalues.begin(), pvalues.end());
  r.near_p = p;
  const double xi_hi = 0.5 * (1 - ad);
  const double xi_lo = 20.0 / p;
  if (xi_lo < xi_hi) {
    constexpr int kXi = 24, kSub = 48;
    for (int i = 0; i < kXi; ++i) {
      const double xi = xi_lo * std::pow(xi_hi / xi_lo, i / (kXi - 1.0));
      const double x0 = ad + xi;
      const double period = 2 * std::numbers::pi * std::sqrt(1 - x0 * x0) / p;
      std::vector<Rational> xs;
      for (int j = 0; j < kSub; ++j) xs.push_back(Rational(x0 + period * j / kSub));
      const auto err = family_errors_on_grid(fam, xs, p, context_for_run(fam, p, ctx));
      const double env = *std::max_element(err.begin(), err.end());
      r.near_xi.push_back(xi);
      r.near_envelope.push_back(env);
      r.near_constant = std::max(r.near_constant, env * xi * std::pow(p, near_rate));
    }
    r.near_exponent = loglog_line(r.near_xi, r.near_envelope).first;
  }
  return r;
}

// ---------------------------------------------------------------------------

std::vector<Rational> resolving_grid(const Rational& a, int pmax, int background) {
  std::vector<Rational> g;
  for (int i = 0; i <= background; ++i) g.push_back(Rational(2 * i, background) - 1);
  for (const Rational& s : {Rational(-1), a, Rational(1)}) {
    for (int k = -160; k <= 160; ++k) {
      const Rational x = s + Rational(k, 4 * pmax);
      if (x >= -1 && x <= 1) g.push_back(x);
    }
  }
  std::sort(g.begin(), g.end());
  g.erase(std::unique(g.begin(), g.end()), g.end());
  return g;
}

WeightedSupResult weighted_sup_norm(const FamilyParams& fam, const std::vector<Rational>& grid,
                                    const std::vector<int>& pvalues, double wa, double wb, double wg,
                                    const Rational& a, const PrecisionContext& ctx) {
  WeightedSupResult r;
  r.pvalues = pvalues;
  const double ad = a.convert_to<double>();
  std::vector<double> w(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double x = grid[i].convert_to<double>();
    auto pw = [](double base, double e) { return e == 0 ? 1.0 : std::pow(base, e); };
    w[i] = pw(std::abs(1 - x), wa) * pw(std::abs(1 + x), wb) * pw(std::abs(x - ad), wg);
  }
  std::vector<double> ps;
  for (int p : pvalues) {
    const auto err = family_errors_on_grid(fam, grid, p, context_for_run(fam, p, ctx));
    double best = -1;
    std::size_t arg = 0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      if (err[i] * w[i] > best) {
        best = err[i] * w[i];
        arg = i;
      }
    }
    r.sup.push_back(best);
    r.argmax.push_back(grid[arg].convert_to<double>());
    ps.push_back(p);
    // Fewer than 20 points within 10/p of a special point cannot resolve it.
    for (double s : {-1.0, ad, 1.0}) {
      const auto n = std::count_if(grid.begin(), grid.end(), [&](const Rational& x) {
        return std::abs(x.convert_to<double>() - s) <= 10.0 / p;
      });
      if (n < 20) r.grid_warning = true;
    }
  }
  if (ps.size() >= 2) r.slope = loglog_line(ps, r.sup).first;
  return r;
}

void write_plot_data(const ErrorSweep& sw, const RateFit& fit, const std::string& csv_path) {
  std::ofstream out(csv_path);
  if (!out) throw ConfigError("cannot write " + csv_path);
  out << "log10_p,log10_err,log10_fit\n";
  for (std::size_t i = 0; i < sw.pvalues.size(); ++i) {
    const int p = sw.pvalues[i];
    if (sw.abs_error[i] <= 0) continue;
    out << to_decimal(std::log10(static_cast<double>(p))) << ',' << to_decimal(std::log10(sw.abs_error[i])) << ',';
    if (p >= fit.window.pmin && p <= fit.window.pmax && fit.C > 0) {
      out << to_decimal(std::log10(fit.C) - fit.alpha * std::log10(static_cast<double>(p)));
    }
    out << '\n';
  }
}

}  // namespace leglab
