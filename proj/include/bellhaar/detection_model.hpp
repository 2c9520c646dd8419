#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "bellhaar/rotation.hpp"

namespace bellhaar {

class Rng;

/// p = c for every orientation.
struct ConstantModel
{
  double c{0.5};
  bool operator==(const ConstantModel&) const = default;
};

/// p = cos^2(theta / 2), theta the total rotation angle. A class function.
struct MalusAngleModel
{
  bool operator==(const MalusAngleModel&) const = default;
};

/// p = (1 + a cos(alpha) sin(beta) + b cos(beta) + c cos(gamma) sin(beta)) / 2
/// on the ZYZ triple; depends on all three angles. Needs |a| + |b| + |c| <= 1.
struct FullEulerModel
{
  double a{0.0};
  double b{0.0};
  double c{0.0};
  bool operator==(const FullEulerModel&) const = default;
};

/// Tabulated p over a (alpha, beta, gamma) grid, interpolated multilinearly.
///
/// Nodes sit at alpha_i = 2 pi i / n_alpha, beta_j = pi j / (n_beta - 1),
/// gamma_k = 2 pi k / n_gamma. Alpha and gamma wrap periodically; beta is
/// clamped to its end nodes. `values` is laid out as [(i * n_beta + j) * n_gamma + k].
struct TableGridModel
{
  std::size_t n_alpha{0};
  std::size_t n_beta{0};
  std::size_t n_gamma{0};
  std::vector<double> values;

  double at(std::size_t i, std::size_t j, std::size_t k) const
  {
    return values[(i * n_beta + j) * n_gamma + k];
  }
  bool operator==(const TableGridModel&) const = default;
};

using ModelSpec = std::variant<ConstantModel, MalusAngleModel, FullEulerModel, TableGridModel>;

/// First violated constraint of `spec`, or nullopt when it is valid.
std::optional<std::string> validate_model(const ModelSpec& spec);

enum class Outcome { kPlus, kMinus };

/// Local detection law: the probability of a plus outcome as a function of
/// the particle-to-detector relative rotation only. Immutable once built.
class DetectionModel
{
public:
  /// Throws std::invalid_argument carrying the validate_model message.
  explicit DetectionModel(ModelSpec spec);

  static DetectionModel constant(double c) { return DetectionModel{ConstantModel{c}}; }
  static DetectionModel malus_angle() { return DetectionModel{MalusAngleModel{}}; }
  static DetectionModel full_euler(double a, double b, double c)
  {
    return DetectionModel{FullEulerModel{a, b, c}};
  }

  const ModelSpec& spec() const { return spec_; }

  /// Short kind tag: "constant", "malus_angle", "full_euler" or "table_grid".
  std::string kind() const;

  /// True when the probability depends on the rotation angle alone.
  bool is_class_function() const;

  bool operator==(const DetectionModel&) const = default;

private:
  ModelSpec spec_;
};

/// Probability of a plus outcome, always in [0, 1].
double eval_model(const DetectionModel& model, const Rotation& relative);

/// Bernoulli draw with success probability eval_model(model, relative).
Outcome sample_outcome(const DetectionModel& model, const Rotation& relative, Rng& rng);

/// Builds a table by sampling `fn` at every grid node.
template <typename Fn>
TableGridModel tabulate(std::size_t n_alpha, std::size_t n_beta, std::size_t n_gamma, Fn&& fn);

/// Reads "alpha_index,beta_index,gamma_index,value" rows (header required).
/// Every cell of the n_alpha x n_beta x n_gamma grid must appear exactly once.
/// Throws std::runtime_error describing the first bad row.
TableGridModel load_table_csv(const std::filesystem::path& path, std::size_t n_alpha,
                              std::size_t n_beta, std::size_t n_gamma);

void write_table_csv(const TableGridModel& table, const std::filesystem::path& path);

template <typename Fn>
TableGridModel tabulate(std::size_t n_alpha, std::size_t n_beta, std::size_t n_gamma, Fn&& fn)
{
  constexpr double kPi = 3.14159265358979323846;
  TableGridModel t{n_alpha, n_beta, n_gamma, {}};
  t.values.reserve(n_alpha * n_beta * n_gamma);
  for (std::size_t i = 0; i < n_alpha; ++i) {
    for (std::size_t j = 0; j < n_beta; ++j) {
      for (std::size_t k = 0; k < n_gamma; ++k) {
        const double beta = n_beta > 1 ? kPi * static_cast<double>(j) / static_cast<double>(n_beta - 1) : 0.0;
        t.values.push_back(fn(EulerAngles{2.0 * kPi * static_cast<double>(i) / static_cast<double>(n_alpha),
                                          beta,
                                          2.0 * kPi * static_cast<double>(k) / static_cast<double>(n_gamma)}));
      }
    }
  }
  return t;
}

}  // namespace bellhaar
