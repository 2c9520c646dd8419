#pragma once

#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "bellhaar/detection_model.hpp"
#include "bellhaar/estimators.hpp"
#include "bellhaar/rotation.hpp"

namespace bellhaar {

/// Position of a value relative to the interval [-1, 0].
enum class BoundVerdict { kBelow, kAtLower, kInside, kAtUpper, kAbove };

std::string_view to_string(BoundVerdict v);

inline bool in_bound(BoundVerdict v)
{
  return v != BoundVerdict::kBelow && v != BoundVerdict::kAbove;
}

/// Classifies `value` against [-1, 0]; values within `tolerance` of an end
/// are reported as sitting on it.
BoundVerdict classify_bound(double value, double tolerance);

/// r2 s2 + r2 s1 + r1 s2 - r1 s1 - r2 - s2. No range checks.
double chsh_form(double r1, double r2, double s1, double s2);

struct AlgebraicBound
{
  double value{0.0};
  BoundVerdict verdict{BoundVerdict::kInside};
};

/// Boundary tolerance for exact-arithmetic checks.
inline constexpr double kAnalyticTolerance = 1e-12;

/// chsh_form on four numbers in [0, 1], classified with kAnalyticTolerance.
/// Throws std::invalid_argument when an input lies outside [0, 1].
AlgebraicBound check_algebraic_bound(double r1, double r2, double s1, double s2);

/// A probability with its standard error.
struct Estimate
{
  double value{0.0};
  double se{0.0};
  bool operator==(const Estimate&) const = default;
};

using SettingPair = std::pair<std::string, std::string>;

/// Thrown when a CHSH combination lacks one of its four setting pairs.
class MissingSettingPair : public std::runtime_error
{
public:
  explicit MissingSettingPair(SettingPair key);
  const SettingPair& key() const { return key_; }

private:
  SettingPair key_;
};

struct ChshLabels
{
  std::string a1;
  std::string a2;
  std::string b1;
  std::string b2;
};

struct ChshReport
{
  Estimate a2b2;
  Estimate a2b1;
  Estimate a1b2;
  Estimate a1b1;
  Estimate marginal_a2;
  Estimate marginal_b2;
  double s{0.0};
  double se_s{0.0};
  BoundVerdict verdict{BoundVerdict::kInside};

  /// S evaluated again from the six stored components.
  double recompute() const;

  /// Verdict tolerance: 4 se_S, or kAnalyticTolerance when that is smaller.
  double tolerance() const;

  bool operator==(const ChshReport&) const = default;
};

/// S = p(A2 B2) + p(A2 B1) + p(A1 B2) - p(A1 B1) - p(A2) - p(B2), with the
/// error taken as the root-sum-square of the six component errors.
ChshReport chsh_combination(const std::map<SettingPair, Estimate>& joints, const ChshLabels& labels,
                            const Estimate& marginal_a2, const Estimate& marginal_b2);

ChshReport chsh_combination(const std::map<SettingPair, JointStats>& joints, const ChshLabels& labels,
                            const Estimate& marginal_a2, const Estimate& marginal_b2);

/// The four detector orientations of a CHSH experiment.
struct ChshSettings
{
  Rotation a1;
  Rotation a2;
  Rotation b1;
  Rotation b2;
};

/// Hidden-variable-conditional CHSH values, one per sampled R_X.
struct LambdaBoundResult
{
  std::vector<double> values;
  std::size_t n_in_bound{0};
  double min{0.0};
  double max{0.0};
  double mean{0.0};
  /// Standard error of `mean` as a Monte Carlo estimate of S.
  double se_mean{0.0};

  bool all_in_bound() const { return n_in_bound == values.size(); }
};

/// For each hidden rotation evaluates the conditional combination with
/// p(a_i) = eval_model(model_a, relative_rotation(R_X, A_i)), likewise for
/// b_j, and joints as products. Throws std::invalid_argument if `hidden` is empty.
LambdaBoundResult check_lambda_bound(const DetectionModel& model_a, const DetectionModel& model_b,
                                     const ChshSettings& settings, std::span<const Rotation> hidden);

struct IndependenceReport
{
  /// p(A and B) - p(A) p(B); positive for positively correlated outcomes.
  double delta{0.0};
  double se_delta{0.0};
  /// Absent when se_delta is zero.
  std::optional<double> z_delta;
  /// Absent when wing A never fired.
  std::optional<Estimate> p_b_given_a;
  Estimate p_b;

  bool operator==(const IndependenceReport&) const = default;
};

/// Errors use the multinomial delta method over the four outcome cells of
/// the run, so the correlation between p_joint and the marginals is included.
IndependenceReport independence_report(const JointStats& stats);

}  // namespace bellhaar
