#pragma once

// Species-probability populations and the deterministic quantities that
// decide whether the coverage CLT holds: exact E F_j, s^2, the Lindeberg
// statistic, integral approximations, and sandwich bounds relating E F1 + 2 E F2
// to s^2.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace coverage {

/// Arbitrary positive weights; normalized and sorted in decreasing order.
struct ExplicitFamily {
  std::vector<double> weights;
};

/// p(x) = a / (x+1)^b. The scale a cancels after normalization of the atoms.
struct ParetoFamily {
  double a = 1.0;
  double b = 2.0;
};

/// p_n(x) = exp(-x / a_n) / a_n with a_n = scale * n^power.
struct ExponentialFamily {
  double scale = 1.0;
  double power = 0.0;
  double a_n(std::int64_t n) const;
};

/// Two-step density: height w1/a1 on (0, a1], height w2/a2 on (a1, a1+a2].
/// Discretized as ceil(a1) atoms of weight w1/a1 then ceil(a2) atoms of
/// weight w2/a2, renormalized. w2 = 1 - w1.
struct TwoStepFamily {
  double w1 = 1.0;
  double a1 = 1.0;
  double a2 = 0.0;
  double w2() const { return 1.0 - w1; }
};

/// n-dependent two-step scenarios:
///   case 1: uniform, b_1n = log n - log log n (Lindeberg fails)
///   case 2: uniform, b_1n = rate (default 1/log n), so E F1/n -> 1
///   case 3: w_1n = 1 - 1/n, b_1n = 2 log n, b_2n = rate (default 1/log n)
/// where b_jn = n w_jn / a_jn.
struct TwoStepCase {
  int number = 1;
  std::optional<double> rate;
  TwoStepFamily at(std::int64_t n) const;
};

using FamilySpec =
    std::variant<ExplicitFamily, ParetoFamily, ExponentialFamily, TwoStepFamily, TwoStepCase>;

std::string describe(const FamilySpec& family);

/// Uniform population on k species (two-step with w1 = 1, a1 = k).
FamilySpec uniform_family(std::int64_t k);

struct Truncation {
  std::int64_t kept_atoms = 0;
  /// Proven upper bound on the probability mass discarded before renormalizing.
  double tail_mass_bound = 0.0;
  bool renormalized = false;
};

/// Immutable, normalized, nonincreasing probability vector.
class PopulationModel {
 public:
  PopulationModel(std::vector<double> probs, FamilySpec family, Truncation truncation);

  const std::vector<double>& probs() const { return probs_; }
  std::size_t size() const { return probs_.size(); }
  const FamilySpec& family() const { return family_; }
  const Truncation& truncation() const { return truncation_; }

 private:
  std::vector<double> probs_;
  FamilySpec family_;
  Truncation truncation_;
};

struct BuildOptions {
  /// Keep atoms until n * (discarded mass) <= tolerance. Defaults to
  /// 0.01 * max(1, sqrt(E F1 approx)).
  std::optional<double> truncation_tolerance;
  std::int64_t max_atoms = 10'000'000;
};

PopulationModel build_model(const FamilySpec& family, std::int64_t n,
                            const BuildOptions& options = {});
PopulationModel build_model(const FamilySpec& family, std::int64_t n,
                            double truncation_tolerance);

double default_truncation_tolerance(const FamilySpec& family, std::int64_t n);

/// E F_j(n) = sum_i C(n,j) p^j (1-p)^(n-j), each term evaluated in log space,
/// accumulated in descending-p order with compensated summation.
double expected_fj(const PopulationModel& model, std::int64_t n, std::int64_t j);

/// s_lambda^2 = sum_i (lambda p) e^{-lambda p} (1 + lambda p).
double s_squared(const PopulationModel& model, double lambda);

/// s_n^{-2} sum_i (n p)^2 e^{-n p} 1{n p > eps s_n}. Throws on s_n^2 = 0.
double lindeberg_statistic(const PopulationModel& model, std::int64_t n, double epsilon);

struct IntegralApproximation {
  double ef1_approx = 0.0;
  double s_sq_approx = 0.0;
};

/// Continuous approximations of E F1 and s_n^2 obtained by integrating the
/// normalized atom function over (0, inf). Pareto and exponential use
/// adaptive Gauss-Kronrod quadrature; two-step is closed form.
IntegralApproximation integral_approximations(const FamilySpec& family, std::int64_t n);

/// (n A)^{1/b} / b * Gamma(1 - 1/b), A = 1/(zeta(b) - 1): the Pareto E F1
/// integral in closed form.
double pareto_ef1_closed_form(double b, std::int64_t n);

/// lower <= value <= upper
struct SandwichCheck {
  double lower = 0.0;
  double value = 0.0;
  double upper = 0.0;
  bool holds() const { return lower <= value && value <= upper; }
};

/// (1-1/n) e^{-eps} s_n^2 - n^2 e^{-sqrt(eps n)} <= E F1 + 2 E F2
///     <= e^{2 eps} s_n^2 + n (n+1) e^{-(n-2) eps}
SandwichCheck occupancy_sandwich(const PopulationModel& model, std::int64_t n,
                                 double epsilon);

/// (l'/l)^2 s_l^2 <= s_l'^2 <= e^eps s_l^2 + l (1+l) exp(-l' eps / (l - l'))
SandwichCheck intensity_sandwich(const PopulationModel& model, double lambda_prime,
                                 double lambda, double epsilon);

inline const std::vector<double> kDefaultEpsilons{0.01, 0.05, 0.1, 0.5, 1.0};

struct ConditionRow {
  std::int64_t n = 0;
  std::int64_t kept_atoms = 0;
  double tail_mass_bound = 0.0;
  double ef1 = 0.0;
  double ef2 = 0.0;
  double ef1_over_n = 0.0;     // normality needs limsup < 1
  double ef2_over_n = 0.0;     // limit c2
  double ef1_plus_ef2 = 0.0;   // normality needs -> infinity
  double ef1_plus_2ef2 = 0.0;  // limit c*
  double s_sq = 0.0;
  double s_over_log_n = 0.0;
  std::vector<double> lindeberg;  // aligned with ConditionReport::epsilons
};

enum class Trend { increasing, decreasing, constant, mixed };
const char* to_string(Trend trend);

struct ConditionReport {
  std::string family;
  std::vector<double> epsilons;
  std::vector<ConditionRow> rows;
};

/// Per-n exact values over the grid. Makes no claim about limits.
ConditionReport condition_report(const FamilySpec& family,
                                 const std::vector<std::int64_t>& n_grid,
                                 const std::vector<double>& epsilon_grid,
                                 const BuildOptions& options = {});

/// Direction of a tracker along the n grid.
Trend trend(const ConditionReport& report, double ConditionRow::*field);
Trend lindeberg_trend(const ConditionReport& report, std::size_t epsilon_index);

/// User-supplied cutoffs applied at the largest grid n. Heuristic only.
struct TrendThresholds {
  double max_ef1_over_n = 0.95;
  double min_ef1_plus_ef2 = 10.0;
  double max_lindeberg = 0.05;
  double lindeberg_epsilon = 0.1;
};

struct HeuristicClassification {
  bool ef1_fraction_ok = false;
  bool mass_large = false;
  bool lindeberg_small = false;
};

HeuristicClassification classify(const ConditionReport& report,
                                 const TrendThresholds& thresholds);

/// Two-column text table "index<TAB>probability", preceded by '#' metadata.
void write_model_table(std::ostream& out, const PopulationModel& model);

}  // namespace coverage
