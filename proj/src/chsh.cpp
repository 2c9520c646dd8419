#include "bellhaar/chsh.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

namespace bellhaar {

std::string_view to_string(BoundVerdict v)
{
  switch (v) {
    case BoundVerdict::kBelow:
      return "below";
    case BoundVerdict::kAtLower:
      return "at_lower";
    case BoundVerdict::kInside:
      return "inside";
    case BoundVerdict::kAtUpper:
      return "at_upper";
    case BoundVerdict::kAbove:
      return "above";
  }
  return "unknown";
}

BoundVerdict classify_bound(double value, double tolerance)
{
  if (value < -1.0 - tolerance) {
    return BoundVerdict::kBelow;
  }
  if (value > tolerance) {
    return BoundVerdict::kAbove;
  }
  if (std::abs(value + 1.0) <= tolerance) {
    return BoundVerdict::kAtLower;
  }
  if (std::abs(value) <= tolerance) {
    return BoundVerdict::kAtUpper;
  }
  return BoundVerdict::kInside;
}

double chsh_form(double r1, double r2, double s1, double s2)
{
  return r2 * s2 + r2 * s1 + r1 * s2 - r1 * s1 - r2 - s2;
}

AlgebraicBound check_algebraic_bound(double r1, double r2, double s1, double s2)
{
  const char* names[] = {"r1", "r2", "s1", "s2"};
  const double values[] = {r1, r2, s1, s2};
  for (int i = 0; i < 4; ++i) {
    if (!(values[i] >= 0.0 && values[i] <= 1.0)) {
      throw std::invalid_argument(fmt::format("{} out of [0,1] (got {})", names[i], values[i]));
    }
  }
  const double t = chsh_form(r1, r2, s1, s2);
  return {t, classify_bound(t, kAnalyticTolerance)};
}

MissingSettingPair::MissingSettingPair(SettingPair key)
    : std::runtime_error(fmt::format("missing setting pair ({}, {})", key.first, key.second)),
      key_(std::move(key))
{
}

double ChshReport::recompute() const
{
  return a2b2.value + a2b1.value + a1b2.value - a1b1.value - marginal_a2.value - marginal_b2.value;
}

double ChshReport::tolerance() const
{
  return std::max(kAnalyticTolerance, 4.0 * se_s);
}

ChshReport chsh_combination(const std::map<SettingPair, Estimate>& joints, const ChshLabels& labels,
                            const Estimate& marginal_a2, const Estimate& marginal_b2)
{
  const auto get = [&](const std::string& a, const std::string& b) {
    SettingPair key{a, b};
    const auto it = joints.find(key);
    if (it == joints.end()) {
      throw MissingSettingPair(std::move(key));
    }
    return it->second;
  };
  ChshReport r;
  r.a2b2 = get(labels.a2, labels.b2);
  r.a2b1 = get(labels.a2, labels.b1);
  r.a1b2 = get(labels.a1, labels.b2);
  r.a1b1 = get(labels.a1, labels.b1);
  r.marginal_a2 = marginal_a2;
  r.marginal_b2 = marginal_b2;
  r.s = r.recompute();

  double var = 0.0;
  for (const Estimate* e : {&r.a2b2, &r.a2b1, &r.a1b2, &r.a1b1, &r.marginal_a2, &r.marginal_b2}) {
    var += e->se * e->se;
  }
  r.se_s = std::sqrt(var);
  r.verdict = classify_bound(r.s, r.tolerance());
  return r;
}

ChshReport chsh_combination(const std::map<SettingPair, JointStats>& joints, const ChshLabels& labels,
                            const Estimate& marginal_a2, const Estimate& marginal_b2)
{
  std::map<SettingPair, Estimate> estimates;
  for (const auto& [key, stats] : joints) {
    estimates.emplace(key, Estimate{stats.p_joint, stats.se_joint});
  }
  return chsh_combination(estimates, labels, marginal_a2, marginal_b2);
}

LambdaBoundResult check_lambda_bound(const DetectionModel& model_a, const DetectionModel& model_b,
                                     const ChshSettings& settings, std::span<const Rotation> hidden)
{
  if (hidden.empty()) {
    throw std::invalid_argument("check_lambda_bound needs at least one hidden rotation");
  }
  LambdaBoundResult out;
  out.values.reserve(hidden.size());
  out.min = std::numeric_limits<double>::infinity();
  out.max = -std::numeric_limits<double>::infinity();
  double sum = 0.0;
  double sum_sq = 0.0;
  for (const Rotation& x : hidden) {
    const double pa1 = eval_model(model_a, relative_rotation(x, settings.a1));
    const double pa2 = eval_model(model_a, relative_rotation(x, settings.a2));
    const double pb1 = eval_model(model_b, relative_rotation(x, settings.b1));
    const double pb2 = eval_model(model_b, relative_rotation(x, settings.b2));
    const double t = chsh_form(pa1, pa2, pb1, pb2);
    out.values.push_back(t);
    out.n_in_bound += in_bound(classify_bound(t, kAnalyticTolerance));
    out.min = std::min(out.min, t);
    out.max = std::max(out.max, t);
    sum += t;
    sum_sq += t * t;
  }
  const double n = static_cast<double>(hidden.size());
  out.mean = sum / n;
  if (hidden.size() > 1) {
    const double var = std::max(0.0, (sum_sq - n * out.mean * out.mean) / (n - 1.0));
    out.se_mean = std::sqrt(var / n);
  }
  return out;
}

IndependenceReport independence_report(const JointStats& stats)
{
  const double n = static_cast<double>(stats.n_trials);
  const double p11 = stats.p_joint;
  const double p10 = static_cast<double>(stats.n_plus_a - stats.n_plus_joint) / n;
  const double p01 = static_cast<double>(stats.n_plus_b - stats.n_plus_joint) / n;

  IndependenceReport r;
  r.delta = stats.p_joint - stats.p_a * stats.p_b;

  // delta = p11 - (p11 + p10)(p11 + p01); gradient over the free cells, the
  // (minus, minus) cell has zero gradient.
  const double g11 = 1.0 - stats.p_a - stats.p_b;
  const double g10 = -stats.p_b;
  const double g01 = -stats.p_a;
  const double second = g11 * g11 * p11 + g10 * g10 * p10 + g01 * g01 * p01;
  const double first = g11 * p11 + g10 * p10 + g01 * p01;
  r.se_delta = std::sqrt(std::max(0.0, second - first * first) / n);
  if (r.se_delta > 0.0) {
    r.z_delta = r.delta / r.se_delta;
  }
  if (stats.p_b_given_a && stats.se_b_given_a) {
    r.p_b_given_a = Estimate{*stats.p_b_given_a, *stats.se_b_given_a};
  }
  r.p_b = Estimate{stats.p_b, stats.se_b};
  return r;
}

}  // namespace bellhaar
