#include "leglab/series.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"

namespace leglab {

Target Target::step(const Rational& a) {
  detail::check_open_interval(a, "Target::step");
  Target t;
  t.kind_ = Kind::Step;
  t.a_ = a;
  return t;
}

Target Target::abs_shift(const Rational& a) {
  detail::check_open_interval(a, "Target::abs_shift");
  Target t;
  t.kind_ = Kind::AbsShift;
  t.a_ = a;
  return t;
}

Target Target::spec(SingularFunctionSpec s) {
  Target t;
  t.kind_ = Kind::Spec;
  t.spec_ = std::move(s);
  return t;
}

Target Target::power_shift(const Rational& beta) {
  detail::check_exponent(beta, "Target::power_shift");
  Target t;
  t.kind_ = Kind::PowerShift;
  t.beta_ = beta;
  return t;
}

std::string Target::describe() const {
  switch (kind_) {
    case Kind::Step:
      return "step u'(x)=(a-1)/2+H(x-a), a=" + a_.str() + ", mean of limits at a";
    case Kind::AbsShift:
      return "u(x)=(|x-a|+a*x-1)/2, a=" + a_.str();
    case Kind::Spec:
      return spec_->describe();
    case Kind::PowerShift:
      break;
  }
  return "|x+1|^(" + beta_.str() + ")";
}

bool Target::singular_at(const Rational& x) const {
  switch (kind_) {
    case Kind::Spec:
      return spec_->singular_at(x);
    case Kind::PowerShift:
      return x == -1 && beta_ < 0;
    default:
      return false;
  }
}

std::optional<Rational> Target::exact_value(const Rational& x) const {
  switch (kind_) {
    case Kind::Step:
      if (x == a_) return a_ / 2;
      return x < a_ ? (a_ - 1) / 2 : (a_ + 1) / 2;
    case Kind::AbsShift:
      return (mp::abs(x - a_) + a_ * x - 1) / 2;
    case Kind::Spec:
      return spec_->exact_value(x);
    case Kind::PowerShift:
      if (beta_ == 0) return Rational(1);
      if (mp::denominator(beta_) == 1 && beta_ > 0) {
        Rational r = 1;
        for (long i = 0; i < static_cast<long>(mp::numerator(beta_)); ++i) r *= x + 1;
        return r;
      }
      return std::nullopt;
  }
  return std::nullopt;
}

double Target::value_f64(const Rational& x) const {
  if (auto e = exact_value(x)) return e->convert_to<double>();
  if (kind_ == Kind::Spec) return spec_->value(x.convert_to<double>());
  return std::pow((x + 1).convert_to<double>(), beta_.convert_to<double>());
}

BigFloat Target::value_big(const Rational& x) const {
  if (auto e = exact_value(x)) return from_rational<BigFloat>(*e);
  if (kind_ == Kind::PowerShift) {
    return mp::pow(from_rational<BigFloat>(x + 1), from_rational<BigFloat>(beta_));
  }
  BigFloat v = 0;
  for (const auto& t : spec_->terms()) {
    const Rational d = mp::abs(x - t.center);
    if (t.exponent == 0) {
      v += from_rational<BigFloat>(t.weight);
    } else if (d != 0) {
      v += from_rational<BigFloat>(t.weight) * mp::pow(from_rational<BigFloat>(d), from_rational<BigFloat>(t.exponent));
    }
  }
  const BigFloat xb = from_rational<BigFloat>(x);
  BigFloat poly = 0;
  const auto& c = spec_->analytic_part();
  for (auto it = c.rbegin(); it != c.rend(); ++it) poly = poly * xb + from_rational<BigFloat>(*it);
  return v + poly;
}

std::optional<double> Target::norm_sq() const {
  switch (kind_) {
    case Kind::Step:
      return ((1 - a_ * a_) / 2).convert_to<double>();
    case Kind::AbsShift: {
      const Rational s = 1 - a_ * a_;
      return (s * s / 6).convert_to<double>();
    }
    case Kind::Spec: {
      if (spec_->terms().size() != 1 || !spec_->analytic_part().empty()) return std::nullopt;
      const auto& t = spec_->terms()[0];
      const double b = t.exponent.convert_to<double>();
      if (b <= -0.5) return std::nullopt;
      const double a = t.center.convert_to<double>();
      const double w = t.weight.convert_to<double>();
      return w * w * (std::pow(1 + a, 2 * b + 1) + std::pow(1 - a, 2 * b + 1)) / (2 * b + 1);
    }
    case Kind::PowerShift: {
      const double b = beta_.convert_to<double>();
      if (b <= -0.5) return std::nullopt;
      return std::pow(2.0, 2 * b + 1) / (2 * b + 1);
    }
  }
  return std::nullopt;
}

std::string to_string(Norm n) { return n == Norm::L2 ? "L2" : "Energy"; }

void write_sweep(const ErrorSweep& sw, const std::string& csv_path) {
  std::ofstream out(csv_path);
  if (!out) throw ConfigError("cannot write " + csv_path);
  out << "p,abs_error\n";
  for (std::size_t i = 0; i < sw.pvalues.size(); ++i) out << sw.pvalues[i] << ',' << to_decimal(sw.abs_error[i]) << '\n';
  nlohmann::json j;
  j["x"] = sw.x_label;
  j["target"] = sw.target;
  j["series"] = sw.series_id;
  j["pmax"] = sw.pvalues.empty() ? 0 : sw.pvalues.back();
  j["records_partial_sum"] = sw.singular_target;
  std::ofstream side(csv_path + ".json");
  side << j.dump(2) << '\n';
}

ErrorSweep read_sweep(const std::string& csv_path) {
  std::ifstream in(csv_path);
  if (!in) throw ConfigError("cannot read " + csv_path);
  std::string line;
  if (!std::getline(in, line) || line != "p,abs_error") throw ConfigError(csv_path + ": expected header p,abs_error");
  ErrorSweep sw;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw ConfigError(csv_path + ": malformed line '" + line + "'");
    try {
      sw.pvalues.push_back(std::stoi(line.substr(0, comma)));
      sw.abs_error.push_back(std::stod(line.substr(comma + 1)));
    } catch (const std::exception&) {
      throw ConfigError(csv_path + ": malformed line '" + line + "'");
    }
  }
  std::ifstream side(csv_path + ".json");
  if (side) {
    const auto j = nlohmann::json::parse(side, nullptr, false);
    if (!j.is_discarded()) {
      sw.x_label = j.value("x", "");
      sw.target = j.value("target", "");
      sw.series_id = j.value("series", "");
      sw.singular_target = j.value("records_partial_sum", false);
      if (!sw.x_label.empty()) sw.x = parse_rational(sw.x_label).convert_to<double>();
    }
  }
  return sw;
}

void write_norm_sweep(const NormSweep& ns, const std::string& csv_path) {
  std::ofstream out(csv_path);
  if (!out) throw ConfigError("cannot write " + csv_path);
  out << "p,norm_error\n";
  for (std::size_t i = 0; i < ns.pvalues.size(); ++i) out << ns.pvalues[i] << ',' << to_decimal(ns.norm_error[i]) << '\n';
  nlohmann::json j;
  j["norm"] = to_string(ns.norm);
  j["truncation_fraction"] = ns.truncation_fraction;
  j["truncation_warning"] = ns.truncation_warning;
  std::ofstream side(csv_path + ".json");
  side << j.dump(2) << '\n';
}

std::string to_string(Family f) {
  switch (f) {
    case Family::StepDerivative:
      return "StepDerivative";
    case Family::AbsShift:
      return "AbsShift";
    case Family::ConstrainedPVersion:
      return "ConstrainedPVersion";
    case Family::PowerAbs:
      return "PowerAbs";
    case Family::PowerShift:
      return "PowerShift";
    case Family::CustomSpec:
      break;
  }
  return "CustomSpec";
}

Family parse_family(const std::string& name) {
  for (Family f : {Family::StepDerivative, Family::AbsShift, Family::ConstrainedPVersion, Family::PowerAbs,
                   Family::PowerShift, Family::CustomSpec}) {
    if (to_string(f) == name) return f;
  }
  throw ConfigError("unknown family '" + name + "'");
}

Target FamilyParams::target() const {
  switch (family) {
    case Family::StepDerivative:
      return Target::step(a);
    case Family::AbsShift:
    case Family::ConstrainedPVersion:
      return Target::abs_shift(a);
    case Family::PowerAbs:
      return Target::spec(SingularFunctionSpec({{Rational(1), Rational(0), beta}}));
    case Family::PowerShift:
      return Target::power_shift(beta);
    case Family::CustomSpec:
      break;
  }
  if (!spec) throw ConfigError("CustomSpec family without a spec");
  return Target::spec(*spec);
}

std::string FamilyParams::describe() const {
  std::ostringstream os;
  os << to_string(family);
  switch (family) {
    case Family::StepDerivative:
    case Family::AbsShift:
    case Family::ConstrainedPVersion:
      os << " a=" << a.str();
      break;
    case Family::PowerAbs:
    case Family::PowerShift:
      os << " beta=" << beta.str();
      break;
    case Family::CustomSpec:
      if (spec) os << ' ' << spec->describe();
      break;
  }
  return os.str();
}

PrecisionContext FamilyParams::minimal_context(int pmax) const {
  switch (family) {
    case Family::PowerShift:
      return PrecisionContext::big_float(appendix_a_required_bits(pmax));
    case Family::PowerAbs:
      return beta <= Rational(-1, 2) ? PrecisionContext::big_float() : PrecisionContext::float64();
    case Family::CustomSpec:
      if (spec) {
        for (const auto& t : spec->terms()) {
          if (t.center == 0 && t.exponent <= Rational(-1, 2)) return PrecisionContext::big_float();
        }
      }
      return PrecisionContext::float64();
    default:
      return PrecisionContext::float64();
  }
}

namespace {

template <LabScalar T>
LegendreSeries<T> family_series(const FamilyParams& fam, int pmax) {
  switch (fam.family) {
    case Family::StepDerivative:
    case Family::ConstrainedPVersion:
      return step_derivative_coeffs<T>(fam.a, pmax);
    case Family::AbsShift:
      return abs_shift_coeffs<T>(fam.a, pmax);
    case Family::PowerAbs:
      return power_abs_coeffs<T>(fam.beta, pmax);
    case Family::PowerShift:
      return power_shift_series<T>(fam.beta, pmax);
    case Family::CustomSpec:
      break;
  }
  if (!fam.spec) throw ConfigError("CustomSpec family without a spec");
  return spec_coeffs<T>(*fam.spec, pmax);
}

}  // namespace

std::vector<ErrorSweep> family_sweeps(const FamilyParams& fam, const std::vector<Rational>& xs, int pmax,
                                      const PrecisionContext& ctx) {
  return dispatch(ctx, [&]<class T>(std::type_identity<T>) {
    const auto series = family_series<T>(fam, pmax);
    const Target target = fam.target();
    std::vector<ErrorSweep> out;
    out.reserve(xs.size());
    for (const auto& x : xs) {
      if (fam.family == Family::ConstrainedPVersion) {
        out.push_back(constrained_error_sweep(series, target, x, pmax));
      } else {
        out.push_back(error_sweep(series, target, x, pmax));
      }
    }
    return out;
  });
}

std::vector<double> family_partial_sums(const FamilyParams& fam, const Rational& x, int pmax,
                                        const PrecisionContext& ctx) {
  if (fam.family == Family::ConstrainedPVersion) {
    throw ConfigError("family_partial_sums: constrained family has no single series");
  }
  if (pmax < 1) throw IndexError("family_partial_sums: pmax must be positive");
  return dispatch(ctx, [&]<class T>(std::type_identity<T>) {
    const auto series = family_series<T>(fam, pmax);
    const T xt = from_rational<T>(x);
    detail::check_unit_interval(xt, "family_partial_sums");
    LegendreStepper<T> st(xt);
    CompensatedSum<T> acc;
    acc.add(series.coeffs[0]);
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(pmax));
    for (int k = 1; k <= pmax; ++k) {
      st.advance();
      acc.add(series.coeffs[static_cast<std::size_t>(k)] * st.value());
      out.push_back(to_double(acc.value()));
    }
    return out;
  });
}

void write_family_coefficients(const FamilyParams& fam, int P, const PrecisionContext& ctx, const std::string& csv_path) {
  dispatch(ctx, [&]<class T>(std::type_identity<T>) {
    if (fam.family == Family::ConstrainedPVersion) {
      write_series(constrained_pversion_coeffs<T>(fam.a, P), csv_path);
    } else {
      write_series(family_series<T>(fam, P), csv_path);
    }
    return 0;
  });
}

NormSweep family_norm_sweep(const FamilyParams& fam, int pmax, const PrecisionContext& ctx) {
  if (fam.family == Family::ConstrainedPVersion) {
    throw ConfigError("family_norm_sweep: constrained family has no single series");
  }
  const Norm norm = fam.family == Family::StepDerivative ? Norm::Energy : Norm::L2;
  return dispatch(ctx, [&]<class T>(std::type_identity<T>) {
    return norm_sweep(family_series<T>(fam, pmax), fam.target().norm_sq(), pmax, norm);
  });
}

std::vector<double> family_errors_on_grid(const FamilyParams& fam, const std::vector<Rational>& xs, int p,
                                          const PrecisionContext& ctx) {
  if (fam.family == Family::ConstrainedPVersion) {
    throw ConfigError("family_errors_on_grid: constrained family has no single series");
  }
  return dispatch(ctx, [&]<class T>(std::type_identity<T>) {
    const auto series = family_series<T>(fam, p);
    return errors_on_grid(series, fam.target(), xs, p);
  });
}

}  // namespace leglab
