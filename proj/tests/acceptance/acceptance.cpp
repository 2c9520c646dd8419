// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/core.h>

#include "bellhaar/campaign.hpp"
#include "bellhaar/chsh.hpp"
#include "bellhaar/estimators.hpp"
#include "bellhaar/random.hpp"
#include "bellhaar/rotation.hpp"
#include "oracles.hpp"

using namespace bellhaar;
namespace fs = std::filesystem;

namespace {

constexpr double kPi = std::numbers::pi;

struct CriterionResult
{
  bool pass{false};
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0)
{
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::vector<std::pair<std::string, DetectionModel>> builtin_models()
{
  return {{"constant", DetectionModel::constant(0.3)},
          {"malus_angle", DetectionModel::malus_angle()},
          {"full_euler", DetectionModel::full_euler(0.5, 0.3, 0.2)},
          {"table_grid", DetectionModel{tabulate(16, 9, 16, [](const EulerAngles& e) {
             return 0.5 + 0.3 * std::cos(e.alpha) * std::sin(e.beta) + 0.15 * std::cos(e.beta) +
                    0.05 * std::sin(e.gamma) * std::sin(e.beta);
           })}}};
}

const QuadratureGrid& full_grid()
{
  static const QuadratureGrid g = build_grid(64, 32, 64);
  return g;
}

CriterionResult algebraic_bound()
{
  const auto t0 = Clock::now();
  double lo = 1.0, hi = -2.0;
  for (int mask = 0; mask < 16; ++mask) {
    const double v = check_algebraic_bound(mask & 1, (mask >> 1) & 1, (mask >> 2) & 1, (mask >> 3) & 1).value;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  Rng rng(1);
  std::size_t bad = 0;
  for (int i = 0; i < 1000000; ++i) {
    const double v = check_algebraic_bound(rng.uniform(), rng.uniform(), rng.uniform(), rng.uniform()).value;
    if (v < -1.0 - kAnalyticTolerance || v > kAnalyticTolerance) {
      ++bad;
    }
  }
  const double t = seconds_since(t0);
  return {lo == -1.0 && hi == 0.0 && bad == 0 && t < 1.0,
          fmt::format("corner min={} max={}, {} of 1e6 random points out of bound, {:.2f} s", lo, hi, bad, t)};
}

CriterionResult haar_sampler()
{
  const auto t0 = Clock::now();
  const std::size_t n = 1000000;
  Rng rng(2);
  std::vector<double> angles(n);
  for (auto& a : angles) {
    a = rotation_angle(haar_sample(rng));
  }
  std::sort(angles.begin(), angles.end());
  double d = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double f = oracle::haar_angle_cdf(angles[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  const double critical = 1.63 / std::sqrt(static_cast<double>(n));
  const double t = seconds_since(t0);
  return {d < critical && t < 5.0, fmt::format("KS D={:.3e} (critical {:.3e}), {:.2f} s", d, critical, t)};
}

CriterionResult composition_identity()
{
  Rng rng(3);
  double worst = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const Rotation rx = haar_sample(rng);
    const Rotation ra = haar_sample(rng);
    const Rotation rb = haar_sample(rng);
    const Rotation r_xa = relative_rotation(rx, ra);
    const Rotation r_xb = relative_rotation(rx, rb);
    const Rotation r_ab = relative_rotation(ra, rb);
    worst = std::max(worst, geodesic_distance(compose(r_xa, r_ab), r_xb));
  }
  return {worst <= 1e-12, fmt::format("max geodesic residual {:.3e} over 1e5 triples", worst)};
}

CriterionResult estimator_cross_validation()
{
  const auto t0 = Clock::now();
  const auto models = builtin_models();
  Rng rng(4);
  std::vector<std::pair<Rotation, Rotation>> settings;  // (R_A, r_ab)
  for (int i = 0; i < 20; ++i) {
    settings.emplace_back(haar_sample(rng), haar_sample(rng));
  }
  std::size_t comparisons = 0, retries = 0, failures = 0;
  double worst_z = 0.0;
  std::uint64_t seed = 400000;
  for (const auto& [name_a, ma] : models) {
    for (const auto& [name_b, mb] : models) {
      for (const auto& [ra, r_ab] : settings) {
        const DetectorSetting a{"A", ra};
        const DetectorSetting b{"B", compose(ra, r_ab)};
        const double quad = quadrature_joint(ma, mb, r_ab, full_grid());
        auto s = mc_run(ma, mb, a, b, 1000000, seed++);
        const auto z = [&] { return s.se_joint > 0 ? std::abs(s.p_joint - quad) / s.se_joint : 0.0; };
        if (z() > 3.0) {
          ++retries;
          s = mc_run(ma, mb, a, b, 1000000, seed++);
        }
        ++comparisons;
        worst_z = std::max(worst_z, z());
        if (z() > 3.0) {
          ++failures;
          fmt::print("    {} x {}: mc {:.6f} +- {:.1e}, quadrature {:.6f}\n", name_a, name_b, s.p_joint,
                     s.se_joint, quad);
        }
      }
    }
  }
  const double t = seconds_since(t0);
  return {failures == 0 && t < 60.0,
          fmt::format("{} comparisons, {} retried, {} beyond 3 se (worst z {:.2f}), {:.1f} s", comparisons, retries,
                      failures, worst_z, t)};
}

CriterionResult oracle_values()
{
  const double marginal = oracle::haar_angle_expectation([](double t) { return std::pow(std::cos(t / 2), 2); });
  const double joint = oracle::haar_angle_expectation([](double t) { return std::pow(std::cos(t / 2), 4); });
  const double delta = joint - marginal * marginal;

  const auto m = DetectionModel::malus_angle();
  const double q_marginal = quadrature_marginal(m, full_grid());
  const double q_joint = quadrature_joint(m, m, Rotation{}, full_grid());
  const double q_delta = q_joint - q_marginal * q_marginal;
  const auto s = mc_run(m, m, {"A", Rotation{}}, {"B", Rotation{}}, 1000000, 5);
  const auto ind = independence_report(s);

  const bool oracle_ok = std::abs(marginal - 0.25) < 1e-12 && std::abs(joint - 0.125) < 1e-12 &&
                         std::abs(delta - 0.0625) < 1e-12;
  const bool quad_ok = std::abs(q_marginal - marginal) <= 1e-6 && std::abs(q_joint - joint) <= 1e-6 &&
                       std::abs(q_delta - delta) <= 1e-6;
  const bool mc_ok = std::abs(s.p_a - marginal) <= 4 * s.se_a && std::abs(s.p_b - marginal) <= 4 * s.se_b &&
                     std::abs(s.p_joint - joint) <= 4 * s.se_joint && std::abs(ind.delta - delta) <= 4 * ind.se_delta;
  return {oracle_ok && quad_ok && mc_ok,
          fmt::format("oracle {:.12f}/{:.12f}/{:.12f}; quadrature {:.3e}/{:.3e}/{:.3e} off; "
                      "mc z {:.2f}/{:.2f}/{:.2f}",
                      marginal, joint, delta, std::abs(q_marginal - marginal), std::abs(q_joint - joint),
                      std::abs(q_delta - delta), std::abs(s.p_a - marginal) / s.se_a,
                      std::abs(s.p_joint - joint) / s.se_joint, std::abs(ind.delta - delta) / ind.se_delta)};
}

CriterionResult statistical_dependence()
{
  const auto m = DetectionModel::malus_angle();
  const auto ind = independence_report(mc_run(m, m, {"A", Rotation{}}, {"B", Rotation{}}, 1000000, 6));
  const double z = ind.z_delta.value_or(0.0);
  return {z > 4.0, fmt::format("delta={:.5f} se={:.2e} z={:.1f}", ind.delta, ind.se_delta, z)};
}

ChshReport mc_chsh(const DetectionModel& ma, const DetectionModel& mb, const ChshSettings& s, std::uint64_t n,
                   std::uint64_t seed)
{
  const DetectorSetting a1{"A1", s.a1}, a2{"A2", s.a2}, b1{"B1", s.b1}, b2{"B2", s.b2};
  std::map<SettingPair, JointStats> joints;
  std::uint64_t k = 0;
  for (const auto* a : {&a1, &a2}) {
    for (const auto* b : {&b1, &b2}) {
      joints.emplace(SettingPair{a->label, b->label}, mc_run(ma, mb, *a, *b, n, derive_seed(seed, k++)));
    }
  }
  const auto pa2 = mc_marginal(ma, a2, n, derive_seed(seed, k++));
  const auto pb2 = mc_marginal(mb, b2, n, derive_seed(seed, k++));
  return chsh_combination(joints, {"A1", "A2", "B1", "B2"}, {pa2.p, pa2.se}, {pb2.p, pb2.se});
}

ChshReport quad_chsh(const DetectionModel& ma, const DetectionModel& mb, const ChshSettings& s)
{
  const auto& g = full_grid();
  const auto q = [&](const Rotation& a, const Rotation& b) {
    return Estimate{quadrature_joint(ma, mb, relative_rotation(a, b), g), 0.0};
  };
  const std::map<SettingPair, Estimate> joints{{{"A1", "B1"}, q(s.a1, s.b1)},
                                               {{"A1", "B2"}, q(s.a1, s.b2)},
                                               {{"A2", "B1"}, q(s.a2, s.b1)},
                                               {{"A2", "B2"}, q(s.a2, s.b2)}};
  return chsh_combination(joints, {"A1", "A2", "B1", "B2"}, {quadrature_marginal(ma, s.a2, g), 0.0},
                          {quadrature_marginal(mb, s.b2, g), 0.0});
}

CriterionResult chsh_consistency()
{
  const auto t0 = Clock::now();
  // Part 1: per-lambda bound and its average against the integrated S.
  const ChshSettings example{Rotation{}, Rotation::about_z(kPi / 2), Rotation::about_z(kPi / 4),
                             Rotation::about_z(3 * kPi / 4)};
  const auto malus = DetectionModel::malus_angle();
  Rng rng(7);
  std::vector<Rotation> hidden(100000);
  for (auto& h : hidden) {
    h = haar_sample(rng);
  }
  const auto lb = check_lambda_bound(malus, malus, example, hidden);
  const auto mc = mc_chsh(malus, malus, example, 1000000, 70);
  const double z_mean = std::abs(lb.mean - mc.s) / std::hypot(lb.se_mean, mc.se_s);
  bool ok = lb.all_in_bound() && z_mean <= 4.0;
  std::string detail = fmt::format("lambda: {}/{} in bound, mean {:.5f} vs mc S {:.5f} (z {:.2f})", lb.n_in_bound,
                                   lb.values.size(), lb.mean, mc.s, z_mean);

  // Part 2: every model pair over a 5x5 grid of (A2, B2) tilts, with A1 and
  // B1 fixed. Quadrature S carries no sampling error; Monte Carlo S uses a
  // reduced n per component so the sweep stays affordable.
  const auto models = builtin_models();
  const double tilts[] = {0.0, 0.6, 1.3, 2.1, 2.9};
  const Rotation a1 = Rotation::about_x(0.3);
  const Rotation b1 = compose(a1, Rotation::about_z(kPi / 4));
  std::size_t cases = 0, outside = 0;
  double s_min = 1.0, s_max = -2.0;
  std::uint64_t seed = 700000;
  for (const auto& [name_a, ma] : models) {
    for (const auto& [name_b, mb] : models) {
      for (double ta : tilts) {
        for (double tb : tilts) {
          const ChshSettings s{a1, compose(a1, Rotation::from_axis_angle({1.0, 1.0, 0.0}, ta)), b1,
                               compose(b1, Rotation::from_axis_angle({0.0, 1.0, 1.0}, tb))};
          for (const auto& rep : {quad_chsh(ma, mb, s), mc_chsh(ma, mb, s, 20000, seed++)}) {
            ++cases;
            s_min = std::min(s_min, rep.s);
            s_max = std::max(s_max, rep.s);
            if (!in_bound(rep.verdict)) {
              ++outside;
              fmt::print("    {} x {} tilts ({}, {}): S={:.6f} se={:.1e}\n", name_a, name_b, ta, tb, rep.s,
                         rep.se_s);
            }
          }
        }
      }
    }
  }
  ok = ok && outside == 0;
  detail += fmt::format("; grid: {} of {} S values outside [-1 - 4se, 4se], range [{:.4f}, {:.4f}], {:.1f} s",
                        outside, cases, s_min, s_max, seconds_since(t0));
  return {ok, detail};
}

std::string slurp(const fs::path& p)
{
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

CriterionResult determinism()
{
  const auto cfg = load_config(fs::path(BELLHAAR_CONFIG_DIR) / "chsh_malus.json");
  const fs::path base = fs::temp_directory_path() / "bellhaar_acceptance_determinism";
  fs::remove_all(base);
  const auto one = run_campaign(cfg, {{1}});
  const auto four = run_campaign(cfg, {{4}});
  emit_outputs(one, base / "one", false);
  emit_outputs(four, base / "four", false);
  bool same = true;
  std::string detail;
  for (const char* f : {"joints.csv", "chsh.csv"}) {
    const auto a = slurp(base / "one" / f);
    const auto b = slurp(base / "four" / f);
    const bool eq = !a.empty() && a == b;
    same = same && eq;
    detail += fmt::format("{} {} ({} bytes); ", f, eq ? "identical" : "DIFFERS", a.size());
  }
  fs::remove_all(base);
  detail += fmt::format("1 vs 4 workers, n={}", cfg.trials);
  return {same, detail};
}

}  // namespace

int main(int argc, char** argv)
{
  const std::vector<std::pair<std::string, std::function<CriterionResult()>>> criteria{
      {"algebraic bound on [0,1]^4", algebraic_bound},
      {"Haar sampler angle distribution", haar_sampler},
      {"relative rotation composition identity", composition_identity},
      {"Monte Carlo vs quadrature joint", estimator_cross_validation},
      {"oracle values", oracle_values},
      {"statistical dependence under locality", statistical_dependence},
      {"per-lambda and integrated CHSH", chsh_consistency},
      {"determinism across worker counts", determinism},
  };
  // Optional arguments pick criteria by number, e.g. `bellhaar_acceptance 4 7`.
  std::vector<bool> selected(criteria.size(), argc == 1);
  for (int a = 1; a < argc; ++a) {
    const int k = std::atoi(argv[a]);
    if (k < 1 || k > static_cast<int>(criteria.size())) {
      fmt::print(stderr, "unknown criterion '{}'\n", argv[a]);
      return 2;
    }
    selected[k - 1] = true;
  }
  int failed = 0;
  std::size_t ran = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (!selected[i]) {
      continue;
    }
    ++ran;
    CriterionResult o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, fmt::format("exception: {}", e.what())};
    }
    fmt::print("{} [{}] {}: {}\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail);
    std::fflush(stdout);
    failed += o.pass ? 0 : 1;
  }
  fmt::print("{} of {} criteria passed\n", ran - failed, ran);
  return failed == 0 ? 0 : 1;
}
