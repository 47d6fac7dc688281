#include "coverage/population.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <sstream>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/math/special_functions/zeta.hpp>

#include "coverage/errors.hpp"
#include "coverage/numeric.hpp"

namespace coverage {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void validate(const ParetoFamily& f) {
  if (!(f.a > 0.0) || !std::isfinite(f.a)) throw Error("pareto: a must be positive");
  if (!(f.b > 1.0) || !std::isfinite(f.b)) throw Error("pareto: b must exceed 1");
}

void validate(const TwoStepFamily& f) {
  if (!(f.w1 > 0.0 && f.w1 <= 1.0)) throw Error("two-step: w1 must lie in (0,1]");
  if (!(f.a1 > 0.0) || !std::isfinite(f.a1)) throw Error("two-step: a1 must be positive");
  if (f.w2() > 0.0) {
    if (!(f.a2 > 0.0) || !std::isfinite(f.a2))
      throw Error("two-step: a2 must be positive when w2 > 0");
    if (f.w1 / f.a1 < f.w2() / f.a2)
      throw Error("two-step: need w1/a1 >= w2/a2 for a decreasing density");
  }
}

double pareto_normalizer(double b) { return boost::math::zeta(b) - 1.0; }

// sum_{i>=1} exp(-i/a) / a
double exponential_normalizer(double a) {
  return std::exp(-1.0 / a) / (a * -std::expm1(-1.0 / a));
}

std::int64_t checked_atoms(double required, std::int64_t cap) {
  if (!std::isfinite(required) || required > static_cast<double>(cap)) {
    std::ostringstream msg;
    msg << "truncation requires ";
    if (std::isfinite(required))
      msg << static_cast<long double>(required);
    else
      msg << "an unbounded number of";
    msg << " atoms, exceeding the cap of " << cap;
    throw Error(msg.str());
  }
  return std::max<std::int64_t>(1, static_cast<std::int64_t>(required));
}

std::vector<double> normalize(std::vector<double> w, double& total) {
  CompensatedSum acc;
  for (double x : w) acc.add(x);
  total = acc.value();
  for (double& x : w) x /= total;
  return w;
}

PopulationModel build_pareto(const ParetoFamily& f, std::int64_t n, double tol,
                             std::int64_t cap) {
  validate(f);
  const double b = f.b;
  const double nd = static_cast<double>(n);
  // (I+1)^{b-1} >= n / (tol (b-1) (zeta(b)-1))
  const double target = nd / (tol * (b - 1.0) * pareto_normalizer(b));
  std::int64_t kept = checked_atoms(std::ceil(std::pow(target, 1.0 / (b - 1.0))) - 1.0, cap);
  for (;;) {
    std::vector<double> w(static_cast<std::size_t>(kept));
    for (std::int64_t i = 1; i <= kept; ++i)
      w[static_cast<std::size_t>(i - 1)] = std::pow(static_cast<double>(i + 1), -b);
    double kept_mass = 0.0;
    auto probs = normalize(std::move(w), kept_mass);
    // sum_{i>I} (i+1)^{-b} <= int_I^inf (x+1)^{-b} dx
    const double tail = std::pow(static_cast<double>(kept + 1), 1.0 - b) / (b - 1.0);
    const double bound = tail / (kept_mass + tail);
    if (nd * bound <= tol)
      return PopulationModel(std::move(probs), f, Truncation{kept, bound, true});
    kept = checked_atoms(std::ceil(static_cast<double>(kept) * 1.05) + 1.0, cap);
  }
}

PopulationModel build_exponential(const ExponentialFamily& f, std::int64_t n, double tol,
                                  std::int64_t cap) {
  const double a = f.a_n(n);
  if (!(a > 0.0) || !std::isfinite(a)) throw Error("exponential: a_n must be positive");
  const double nd = static_cast<double>(n);
  // discarded fraction after I atoms is exactly exp(-I/a)
  const std::int64_t kept =
      nd <= tol ? 1 : checked_atoms(std::ceil(a * std::log(nd / tol)), cap);
  std::vector<double> w(static_cast<std::size_t>(kept));
  for (std::int64_t i = 1; i <= kept; ++i)
    w[static_cast<std::size_t>(i - 1)] = std::exp(-static_cast<double>(i) / a);
  double total = 0.0;
  auto probs = normalize(std::move(w), total);
  const double bound = std::exp(-static_cast<double>(kept) / a);
  return PopulationModel(std::move(probs), f, Truncation{kept, bound, true});
}

PopulationModel build_two_step(const TwoStepFamily& f, const FamilySpec& tag,
                               std::int64_t cap) {
  validate(f);
  const double c1 = std::ceil(f.a1);
  const double c2 = f.w2() > 0.0 ? std::ceil(f.a2) : 0.0;
  const std::int64_t kept = checked_atoms(c1 + c2, cap);
  std::vector<double> w;
  w.reserve(static_cast<std::size_t>(kept));
  w.insert(w.end(), static_cast<std::size_t>(c1), f.w1 / f.a1);
  if (c2 > 0.0) w.insert(w.end(), static_cast<std::size_t>(c2), f.w2() / f.a2);
  double total = 0.0;
  auto probs = normalize(std::move(w), total);
  return PopulationModel(std::move(probs), tag, Truncation{kept, 0.0, total != 1.0});
}

PopulationModel build_explicit(const ExplicitFamily& f, std::int64_t cap) {
  std::vector<double> w;
  for (double x : f.weights) {
    if (!(x >= 0.0) || !std::isfinite(x))
      throw Error("explicit: weights must be finite and nonnegative");
    if (x > 0.0) w.push_back(x);
  }
  if (w.empty()) throw Error("explicit: at least one positive weight is required");
  checked_atoms(static_cast<double>(w.size()), cap);
  std::sort(w.begin(), w.end(), std::greater<>());
  const auto kept = static_cast<std::int64_t>(w.size());
  double total = 0.0;
  auto probs = normalize(std::move(w), total);
  return PopulationModel(std::move(probs), f, Truncation{kept, 0.0, total != 1.0});
}

// Integrate f over (0, inf), split at the points where the scaled density
// n q(x) crosses a ladder of levels so each piece is smooth and unimodal.
template <class F>
double integrate_split(F f, std::vector<double> breaks) {
  using boost::math::quadrature::gauss_kronrod;
  breaks.push_back(0.0);
  std::erase_if(breaks, [](double x) { return !(x >= 0.0) || !std::isfinite(x); });
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());
  CompensatedSum acc;
  for (std::size_t k = 0; k < breaks.size(); ++k) {
    const double lo = breaks[k];
    const double hi = k + 1 < breaks.size() ? breaks[k + 1]
                                            : std::numeric_limits<double>::infinity();
    acc.add(gauss_kronrod<double, 61>::integrate(f, lo, hi, 20, 1e-8));
  }
  return acc.value();
}

const std::vector<double> kLevels{1e4, 1e3, 1e2, 10.0, 3.0, 1.0, 0.3, 0.1, 1e-2, 1e-3, 1e-4};

template <class Q>
IntegralApproximation integrate_density(Q q, std::vector<double> breaks, double nd) {
  IntegralApproximation out;
  out.ef1_approx = integrate_split(
      [&](double x) {
        const double t = nd * q(x);
        return t * std::exp(-t);
      },
      breaks);
  out.s_sq_approx = integrate_split(
      [&](double x) {
        const double t = nd * q(x);
        return t * (1.0 + t) * std::exp(-t);
      },
      breaks);
  return out;
}

}  // namespace

double ExponentialFamily::a_n(std::int64_t n) const {
  return scale * std::pow(static_cast<double>(n), power);
}

TwoStepFamily TwoStepCase::at(std::int64_t n) const {
  if (n < 3) throw Error("two-step case scenarios need n >= 3");
  const double nd = static_cast<double>(n);
  const double log_n = std::log(nd);
  if (rate && !(*rate > 0.0)) throw Error("two-step case: rate must be positive");
  switch (number) {
    case 1: {
      const double b1 = log_n - std::log(log_n);
      return TwoStepFamily{1.0, nd / b1, 0.0};
    }
    case 2: {
      const double b1 = rate.value_or(1.0 / log_n);
      return TwoStepFamily{1.0, nd / b1, 0.0};
    }
    case 3: {
      const double w1 = 1.0 - 1.0 / nd;
      const double b1 = 2.0 * log_n;
      const double b2 = rate.value_or(1.0 / log_n);
      return TwoStepFamily{w1, nd * w1 / b1, nd * (1.0 - w1) / b2};
    }
    default:
      throw Error("two-step case must be 1, 2 or 3");
  }
}

std::string describe(const FamilySpec& family) {
  return std::visit(
      Overloaded{
          [](const ExplicitFamily& f) {
            return "explicit{atoms=" + std::to_string(f.weights.size()) + "}";
          },
          [](const ParetoFamily& f) {
            return "pareto{a=" + fmt(f.a) + ",b=" + fmt(f.b) + "}";
          },
          [](const ExponentialFamily& f) {
            return "exponential{scale=" + fmt(f.scale) + ",power=" + fmt(f.power) + "}";
          },
          [](const TwoStepFamily& f) {
            return "two-step{w1=" + fmt(f.w1) + ",a1=" + fmt(f.a1) + ",a2=" + fmt(f.a2) +
                   "}";
          },
          [](const TwoStepCase& f) {
            std::string s = "two-step-case{case=" + std::to_string(f.number);
            if (f.rate) s += ",rate=" + fmt(*f.rate);
            return s + "}";
          },
      },
      family);
}

FamilySpec uniform_family(std::int64_t k) {
  if (k < 1) throw Error("uniform: k must be positive");
  return TwoStepFamily{1.0, static_cast<double>(k), 0.0};
}

PopulationModel::PopulationModel(std::vector<double> probs, FamilySpec family,
                                 Truncation truncation)
    : probs_(std::move(probs)), family_(std::move(family)), truncation_(truncation) {
  if (probs_.empty()) throw Error("population model has no atoms");
  for (double p : probs_)
    if (!(p > 0.0 && p <= 1.0)) throw Error("atom probability outside (0,1]");
  truncation_.kept_atoms = static_cast<std::int64_t>(probs_.size());
}

double default_truncation_tolerance(const FamilySpec& family, std::int64_t n) {
  const double nd = static_cast<double>(n);
  double ef1 = 0.0;
  if (const auto* p = std::get_if<ParetoFamily>(&family)) {
    validate(*p);
    ef1 = pareto_ef1_closed_form(p->b, n);
  } else if (const auto* e = std::get_if<ExponentialFamily>(&family)) {
    const double a = e->a_n(n);
    if (!(a > 0.0)) throw Error("exponential: a_n must be positive");
    ef1 = a * -std::expm1(-nd / (a * exponential_normalizer(a)));
  }
  return 0.01 * std::max(1.0, std::sqrt(ef1));
}

PopulationModel build_model(const FamilySpec& family, std::int64_t n,
                            const BuildOptions& options) {
  if (n < 1) throw Error("sample size must be positive");
  const double tol =
      options.truncation_tolerance.value_or(default_truncation_tolerance(family, n));
  if (!(tol > 0.0)) throw Error("truncation tolerance must be positive");
  const std::int64_t cap = options.max_atoms;
  return std::visit(
      Overloaded{
          [&](const ExplicitFamily& f) { return build_explicit(f, cap); },
          [&](const ParetoFamily& f) { return build_pareto(f, n, tol, cap); },
          [&](const ExponentialFamily& f) { return build_exponential(f, n, tol, cap); },
          [&](const TwoStepFamily& f) { return build_two_step(f, family, cap); },
          [&](const TwoStepCase& f) { return build_two_step(f.at(n), family, cap); },
      },
      family);
}

PopulationModel build_model(const FamilySpec& family, std::int64_t n,
                            double truncation_tolerance) {
  BuildOptions options;
  options.truncation_tolerance = truncation_tolerance;
  return build_model(family, n, options);
}

double expected_fj(const PopulationModel& model, std::int64_t n, std::int64_t j) {
  if (n < 0 || j < 0) throw Error("expected_fj: n and j must be nonnegative");
  if (j > n) throw Error("expected_fj: j exceeds n");
  const double log_c = log_choose(n, j);
  const double jd = static_cast<double>(j);
  const double rest = static_cast<double>(n - j);
  CompensatedSum acc;
  for (double p : model.probs()) {
    if (p >= 1.0) {
      acc.add(j == n ? 1.0 : 0.0);
      continue;
    }
    double lt = log_c;
    if (j > 0) lt += jd * std::log(p);
    if (n > j) lt += rest * std::log1p(-p);
    acc.add(std::exp(lt));
  }
  return acc.value();
}

double s_squared(const PopulationModel& model, double lambda) {
  if (!(lambda > 0.0)) throw Error("s_squared: lambda must be positive");
  CompensatedSum acc;
  for (double p : model.probs()) {
    const double t = lambda * p;
    acc.add(t * (1.0 + t) * std::exp(-t));
  }
  return acc.value();
}

double lindeberg_statistic(const PopulationModel& model, std::int64_t n, double epsilon) {
  if (!(epsilon > 0.0)) throw Error("lindeberg: epsilon must be positive");
  const double nd = static_cast<double>(n);
  const double s_sq = s_squared(model, nd);
  if (!(s_sq > 0.0)) throw Error("degenerate model");
  const double cut = epsilon * std::sqrt(s_sq);
  CompensatedSum acc;
  for (double p : model.probs()) {
    const double t = nd * p;
    if (t > cut) acc.add(t * t * std::exp(-t));
  }
  return std::clamp(acc.value() / s_sq, 0.0, 1.0);
}

double pareto_ef1_closed_form(double b, std::int64_t n) {
  if (!(b > 1.0)) throw Error("pareto: b must exceed 1");
  const double scale = 1.0 / pareto_normalizer(b);
  return std::pow(static_cast<double>(n) * scale, 1.0 / b) / b *
         boost::math::tgamma(1.0 - 1.0 / b);
}

IntegralApproximation integral_approximations(const FamilySpec& family, std::int64_t n) {
  if (n < 1) throw Error("sample size must be positive");
  const double nd = static_cast<double>(n);
  auto two_step = [&](const TwoStepFamily& f) {
    validate(f);
    IntegralApproximation out;
    const double ws[2] = {f.w1, f.w2()};
    const double as[2] = {f.a1, f.a2};
    for (int k = 0; k < 2; ++k) {
      if (ws[k] <= 0.0) continue;
      const double bk = nd * ws[k] / as[k];
      out.ef1_approx += nd * ws[k] * std::exp(-bk);
      out.s_sq_approx += nd * ws[k] * (1.0 + bk) * std::exp(-bk);
    }
    return out;
  };
  return std::visit(
      Overloaded{
          [&](const ExplicitFamily&) -> IntegralApproximation {
            throw Error("integral approximations need a density-defined family");
          },
          [&](const ParetoFamily& f) {
            validate(f);
            const double scale = 1.0 / pareto_normalizer(f.b);
            std::vector<double> breaks;
            for (double t : kLevels) breaks.push_back(std::pow(nd * scale / t, 1.0 / f.b) - 1.0);
            return integrate_density(
                [&](double x) { return scale * std::pow(x + 1.0, -f.b); }, breaks, nd);
          },
          [&](const ExponentialFamily& f) {
            const double a = f.a_n(n);
            if (!(a > 0.0)) throw Error("exponential: a_n must be positive");
            const double height = 1.0 / (a * exponential_normalizer(a));
            std::vector<double> breaks;
            for (double t : kLevels) breaks.push_back(a * std::log(nd * height / t));
            return integrate_density([&](double x) { return height * std::exp(-x / a); },
                                     breaks, nd);
          },
          [&](const TwoStepFamily& f) { return two_step(f); },
          [&](const TwoStepCase& f) { return two_step(f.at(n)); },
      },
      family);
}

SandwichCheck occupancy_sandwich(const PopulationModel& model, std::int64_t n,
                                 double epsilon) {
  const double nd = static_cast<double>(n);
  const double s_sq = s_squared(model, nd);
  SandwichCheck c;
  c.value = expected_fj(model, n, 1) + 2.0 * expected_fj(model, n, 2);
  c.lower = (1.0 - 1.0 / nd) * std::exp(-epsilon) * s_sq -
            nd * nd * std::exp(-std::sqrt(epsilon * nd));
  c.upper = std::exp(2.0 * epsilon) * s_sq +
            nd * (nd + 1.0) * std::exp(-(nd - 2.0) * epsilon);
  return c;
}

SandwichCheck intensity_sandwich(const PopulationModel& model, double lambda_prime,
                                 double lambda, double epsilon) {
  if (!(lambda_prime > 0.0 && lambda_prime < lambda))
    throw Error("intensity_sandwich: need 0 < lambda' < lambda");
  const double s_sq = s_squared(model, lambda);
  const double ratio = lambda_prime / lambda;
  SandwichCheck c;
  c.value = s_squared(model, lambda_prime);
  c.lower = ratio * ratio * s_sq;
  c.upper = std::exp(epsilon) * s_sq +
            lambda * (1.0 + lambda) *
                std::exp(-lambda_prime * epsilon / (lambda - lambda_prime));
  return c;
}

const char* to_string(Trend trend) {
  switch (trend) {
    case Trend::increasing: return "increasing";
    case Trend::decreasing: return "decreasing";
    case Trend::constant: return "constant";
    case Trend::mixed: return "mixed";
  }
  return "mixed";
}

ConditionReport condition_report(const FamilySpec& family,
                                 const std::vector<std::int64_t>& n_grid,
                                 const std::vector<double>& epsilon_grid,
                                 const BuildOptions& options) {
  if (n_grid.empty() || epsilon_grid.empty())
    throw Error("condition_report: grids must be nonempty");
  for (std::size_t k = 0; k < n_grid.size(); ++k) {
    if (n_grid[k] < 1) throw Error("condition_report: n values must be positive");
    if (k > 0 && n_grid[k] <= n_grid[k - 1])
      throw Error("condition_report: n grid must be increasing");
  }
  for (std::size_t k = 0; k < epsilon_grid.size(); ++k) {
    if (!(epsilon_grid[k] > 0.0)) throw Error("condition_report: epsilons must be positive");
    if (k > 0 && epsilon_grid[k] <= epsilon_grid[k - 1])
      throw Error("condition_report: epsilon grid must be increasing");
  }
  ConditionReport report;
  report.family = describe(family);
  report.epsilons = epsilon_grid;
  for (std::int64_t n : n_grid) {
    const auto model = build_model(family, n, options);
    const double nd = static_cast<double>(n);
    ConditionRow row;
    row.n = n;
    row.kept_atoms = model.truncation().kept_atoms;
    row.tail_mass_bound = model.truncation().tail_mass_bound;
    row.ef1 = expected_fj(model, n, 1);
    row.ef2 = n >= 2 ? expected_fj(model, n, 2) : 0.0;
    row.ef1_over_n = std::clamp(row.ef1 / nd, 0.0, 1.0);
    row.ef2_over_n = row.ef2 / nd;
    row.ef1_plus_ef2 = row.ef1 + row.ef2;
    row.ef1_plus_2ef2 = row.ef1 + 2.0 * row.ef2;
    row.s_sq = s_squared(model, nd);
    row.s_over_log_n = n > 1 ? std::sqrt(row.s_sq) / std::log(nd)
                             : std::numeric_limits<double>::infinity();
    for (double eps : epsilon_grid) row.lindeberg.push_back(lindeberg_statistic(model, n, eps));
    report.rows.push_back(std::move(row));
  }
  return report;
}

namespace {

Trend trend_of(const std::vector<double>& xs) {
  bool up = false, down = false;
  for (std::size_t k = 1; k < xs.size(); ++k) {
    const double tol = 1e-12 * std::max(std::abs(xs[k]), std::abs(xs[k - 1]));
    if (xs[k] > xs[k - 1] + tol) up = true;
    if (xs[k] < xs[k - 1] - tol) down = true;
  }
  if (up && down) return Trend::mixed;
  if (up) return Trend::increasing;
  if (down) return Trend::decreasing;
  return Trend::constant;
}

}  // namespace

Trend trend(const ConditionReport& report, double ConditionRow::*field) {
  std::vector<double> xs;
  for (const auto& row : report.rows) xs.push_back(row.*field);
  return trend_of(xs);
}

Trend lindeberg_trend(const ConditionReport& report, std::size_t epsilon_index) {
  std::vector<double> xs;
  for (const auto& row : report.rows) xs.push_back(row.lindeberg.at(epsilon_index));
  return trend_of(xs);
}

HeuristicClassification classify(const ConditionReport& report,
                                 const TrendThresholds& thresholds) {
  if (report.rows.empty()) throw Error("classify: empty report");
  const auto it = std::find_if(report.epsilons.begin(), report.epsilons.end(), [&](double e) {
    return std::abs(e - thresholds.lindeberg_epsilon) <= 1e-12 * e;
  });
  if (it == report.epsilons.end())
    throw ConfigError("classify: lindeberg epsilon " + fmt(thresholds.lindeberg_epsilon) +
                      " is not on the report's epsilon grid");
  const auto& last = report.rows.back();
  HeuristicClassification c;
  c.ef1_fraction_ok = last.ef1_over_n <= thresholds.max_ef1_over_n;
  c.mass_large = last.ef1_plus_ef2 >= thresholds.min_ef1_plus_ef2;
  c.lindeberg_small =
      last.lindeberg[static_cast<std::size_t>(it - report.epsilons.begin())] <=
      thresholds.max_lindeberg;
  return c;
}

void write_model_table(std::ostream& out, const PopulationModel& model) {
  const auto& t = model.truncation();
  out << "# family=" << describe(model.family()) << '\n'
      << "# kept_atoms=" << t.kept_atoms << '\n'
      << "# tail_mass_bound=" << fmt(t.tail_mass_bound) << '\n'
      << "# renormalized=" << (t.renormalized ? "true" : "false") << '\n'
      << "index\tprobability\n";
  const auto& probs = model.probs();
  for (std::size_t i = 0; i < probs.size(); ++i) out << (i + 1) << '\t' << fmt(probs[i]) << '\n';
}

}  // namespace coverage
