#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "bellhaar/detection_model.hpp"
#include "bellhaar/rotation.hpp"

namespace bellhaar {

/// A named detector orientation (A1, A2, B1, ...).
struct DetectorSetting
{
  std::string label;
  Rotation orientation;
};

/// Outcome counts of one Monte Carlo run and the estimates derived from them.
struct JointStats
{
  std::uint64_t n_trials{0};
  std::uint64_t n_plus_a{0};
  std::uint64_t n_plus_b{0};
  std::uint64_t n_plus_joint{0};

  double p_a{0.0};
  double p_b{0.0};
  double p_joint{0.0};
  double se_a{0.0};
  double se_b{0.0};
  double se_joint{0.0};

  /// Absent when wing A never fired.
  std::optional<double> p_b_given_a;
  std::optional<double> se_b_given_a;

  /// Binomial estimates and errors from raw counts. Throws on n_trials == 0
  /// or inconsistent counts.
  static JointStats from_counts(std::uint64_t n_trials, std::uint64_t n_plus_a,
                                std::uint64_t n_plus_b, std::uint64_t n_plus_joint);

  bool operator==(const JointStats&) const = default;
};

/// Single-wing estimate.
struct MarginalEstimate
{
  std::uint64_t n_trials{0};
  std::uint64_t n_plus{0};
  double p{0.0};
  double se{0.0};
};

/// Product rule for the normalized Haar measure in (alpha, u = cos beta, gamma).
///
/// Alpha and gamma use the periodic rectangle rule on [0, 2pi); u uses
/// Gauss-Legendre nodes on [-1, 1], which makes the sin(beta) weight flat.
/// Node rotations are precomputed in (alpha, u, gamma) order.
struct QuadratureGrid
{
  std::size_t n_alpha{0};
  std::size_t n_u{0};
  std::size_t n_gamma{0};
  std::vector<double> alpha_nodes;
  std::vector<double> u_nodes;
  std::vector<double> u_weights;
  std::vector<double> gamma_nodes;
  std::vector<Rotation> rotations;
  std::vector<double> weights;

  std::size_t size() const { return rotations.size(); }
};

/// Throws std::invalid_argument when any size is below 2.
QuadratureGrid build_grid(std::size_t n_alpha, std::size_t n_u, std::size_t n_gamma);

/// Gauss-Legendre nodes (ascending) and weights on [-1, 1]; weights sum to 2.
void gauss_legendre(std::size_t n, std::vector<double>& nodes, std::vector<double>& weights);

struct McOptions
{
  /// 0 selects std::thread::hardware_concurrency().
  unsigned workers{0};
};

/// Trials per independently seeded block. Results depend on the seed and n
/// only, never on the worker count.
inline constexpr std::uint64_t kTrialsPerBlock = 1U << 16;

/// Event-by-event simulation of the two-wing experiment. Each trial draws a
/// Haar hidden rotation R_X shared by both particles; wing A sees only
/// relative_rotation(R_X, R_A) and wing B only relative_rotation(R_X, R_B),
/// and each samples its own outcome from its own random stream.
/// Throws std::invalid_argument for n == 0.
JointStats mc_run(const DetectionModel& model_a, const DetectionModel& model_b,
                  const DetectorSetting& setting_a, const DetectorSetting& setting_b,
                  std::uint64_t n, std::uint64_t seed, const McOptions& options = {});

MarginalEstimate mc_marginal(const DetectionModel& model, const DetectorSetting& setting,
                             std::uint64_t n, std::uint64_t seed, const McOptions& options = {});

/// Haar average of the model.
double quadrature_marginal(const DetectionModel& model, const QuadratureGrid& grid);

/// Haar average over hidden rotations R_X of p(relative_rotation(R_X, orientation)).
double quadrature_marginal(const DetectionModel& model, const Rotation& orientation,
                           const QuadratureGrid& grid);

/// Integral over R_XA of p_a(R_XA) * p_b(r_ab o R_XA), the joint plus-plus
/// probability for detectors related by r_ab = relative_rotation(R_A, R_B).
double quadrature_joint(const DetectionModel& model_a, const DetectionModel& model_b,
                        const Rotation& r_ab, const QuadratureGrid& grid);

}  // namespace bellhaar
