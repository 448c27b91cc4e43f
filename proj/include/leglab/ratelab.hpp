#pragma once

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "leglab/series.hpp"

namespace leglab {

struct FitWindow {
  int pmin = 0;
  int pmax = 0;
};

/// error(p) <= C p^-alpha over the window. The envelope is the upper concave
/// hull of (log p, log error); alpha is the slope of the hull edge above the
/// window's mean log p, so the fitted line touches the data and dominates it.
struct RateFit {
  double alpha = 0;
  double C = 0;
  FitWindow window;
  /// rms log-distance of the envelope maxima (upper hull vertices, less the
  /// steep chains a window end in a trough adds) from the fitted line.
  double residual = 0;
  /// Number of samples within 0.05 (natural log) of the fitted line.
  int envelope_size = 0;
  bool alpha_pinned = false;
  bool valid = false;
};

nlohmann::json to_json(const RateFit& f);

class FitUnreliable : public LabError {
 public:
  FitUnreliable(const std::string& what, RateFit fit) : LabError("FitUnreliable", what), fit_(fit) {}
  const RateFit& fit() const noexcept { return fit_; }

 private:
  RateFit fit_;
};

inline constexpr int kMinEnvelope = 8;
inline constexpr double kMaxResidual = 0.2;

/// Upper-envelope fit; the default window is the upper half of the p range.
/// Throws FitUnreliable (carrying the fit) if envelope_size < 8 or residual > 0.2.
RateFit fit_rate(const ErrorSweep& sw, std::optional<FitWindow> window = std::nullopt);
/// Same, returning the fit with valid = false instead of throwing.
RateFit fit_rate_nothrow(const ErrorSweep& sw, std::optional<FitWindow> window = std::nullopt);

/// Lower-envelope mirror of fit_rate: error(p) >= C p^-alpha on the window,
/// ignoring samples below 1e-3 of the upper envelope (sign changes).
RateFit fit_lower_bound(const ErrorSweep& sw, std::optional<FitWindow> window = std::nullopt);
RateFit fit_lower_bound_nothrow(const ErrorSweep& sw, std::optional<FitWindow> window = std::nullopt);

/// C = max over the window of error(p) p^alpha with alpha fixed.
RateFit fit_pinned(const ErrorSweep& sw, double alpha, std::optional<FitWindow> window = std::nullopt);

FitWindow default_window(const ErrorSweep& sw);

/// Refit on the window scaled by 1/1.5 (both ends) and compare alphas.
/// Returns |alpha - alpha_shifted|.
double window_shift_drift(const ErrorSweep& sw, const RateFit& fit);

struct ConstantGrowthFit {
  std::vector<double> xi_values;
  std::vector<double> C_values;
  std::vector<int> pmax_used;
  /// xi values whose window stayed preasymptotic up to the pmax ceiling.
  std::vector<double> dropped_xi;
  double fixed_alpha = 0;
  /// log C = log D + exponent log xi.
  double exponent = 0;
  double prefactor = 0;
  bool valid = false;
};

nlohmann::json to_json(const ConstantGrowthFit& g);

struct GrowthOptions {
  int pmax = 2200;
  int pmax_ceiling = 10000;
  /// A window counts as asymptotic when the free fit is valid and its alpha
  /// lies within this distance of the pinned one.
  double alpha_tolerance = 0.1;
  PrecisionContext ctx = PrecisionContext::float64();
};

inline constexpr double kMinXi = 1e-6;

/// C(x) at x = approach + side * xi with alpha pinned, then a log-log fit of C
/// against xi. Preasymptotic windows escalate pmax (doubling) up to the
/// ceiling and are dropped if still preasymptotic.
ConstantGrowthFit constant_growth(const FamilyParams& fam, const Rational& approach, int side,
                                  const std::vector<Rational>& xi_grid, double fixed_alpha,
                                  const GrowthOptions& opt = {});

struct GibbsReport {
  std::vector<int> pvalues;
  std::vector<double> location;   // y(p)
  std::vector<double> magnitude;  // overshoot |error| on the scan
  double D = 0;                   // mean of |y - a| p
  double D_spread = 0;            // max deviation of |y - a| p from D
  /// Local error envelope at a + xi for the largest p.
  int near_p = 0;
  std::vector<double> near_xi;
  std::vector<double> near_envelope;
  double near_exponent = 0;  // slope of log envelope against log xi
  double near_constant = 0;  // max of envelope * xi * p^near_rate
  double near_rate = 0;
};

nlohmann::json to_json(const GibbsReport& g);

/// Scans x = a +- j/(50p), j = 0..500, for each p; past the layer where the
/// error decays from the jump, locates the largest error (the overshoot).
/// near_rate is the p-exponent used to normalise the near-point envelope.
GibbsReport gibbs_probe(const FamilyParams& fam, const Rational& a, const std::vector<int>& pvalues,
                        const PrecisionContext& ctx, double near_rate = 1.0);

struct WeightedSupResult {
  std::vector<int> pvalues;
  std::vector<double> sup;
  std::vector<double> argmax;
  double slope = 0;
  bool grid_warning = false;
};

/// Grid with spacing 1/(4 pmax) within 40/pmax of -1, a and 1, plus a uniform
/// background of `background` points.
std::vector<Rational> resolving_grid(const Rational& a, int pmax, int background = 2000);

/// max_x |error(p, x)| |1-x|^wa |1+x|^wb |x-a|^wg per p.
WeightedSupResult weighted_sup_norm(const FamilyParams& fam, const std::vector<Rational>& grid,
                                    const std::vector<int>& pvalues, double wa, double wb, double wg,
                                    const Rational& a, const PrecisionContext& ctx);

/// Least-squares slope and intercept of log y against log x.
std::pair<double, double> loglog_line(const std::vector<double>& x, const std::vector<double>& y);

/// log10 p, log10 error and the fitted line (blank outside the window).
void write_plot_data(const ErrorSweep& sw, const RateFit& fit, const std::string& csv_path);

}  // namespace leglab
