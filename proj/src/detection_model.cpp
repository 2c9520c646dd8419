#include "bellhaar/detection_model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>

#include "bellhaar/random.hpp"

namespace bellhaar {

namespace {

template <class... Ts>
struct Overloaded : Ts...
{
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

bool is_probability(double p)
{
  return std::isfinite(p) && p >= 0.0 && p <= 1.0;
}

double interpolate(const TableGridModel& t, const EulerAngles& e)
{
  constexpr double kTwoPi = 2.0 * std::numbers::pi;

  // alpha and gamma lie in [0, 2pi), so the cell index needs at most one wrap.
  const auto periodic = [](double angle, std::size_t n, std::size_t& lo, std::size_t& hi) {
    const double pos = angle / kTwoPi * static_cast<double>(n);
    lo = static_cast<std::size_t>(pos);
    const double frac = pos - static_cast<double>(lo);
    if (lo >= n) {
      lo -= n;
    }
    hi = lo + 1 == n ? 0 : lo + 1;
    return frac;
  };
  std::size_t i0 = 0, i1 = 0, k0 = 0, k1 = 0;
  const double fa = periodic(e.alpha, t.n_alpha, i0, i1);
  const double fg = periodic(e.gamma, t.n_gamma, k0, k1);

  const double tb = std::clamp(e.beta / std::numbers::pi, 0.0, 1.0) * static_cast<double>(t.n_beta - 1);
  const std::size_t j0 = std::min(static_cast<std::size_t>(tb), t.n_beta - 2);
  const std::size_t j1 = j0 + 1;
  const double fb = tb - static_cast<double>(j0);

  const auto lerp_gamma = [&](std::size_t i, std::size_t j) {
    return (1.0 - fg) * t.at(i, j, k0) + fg * t.at(i, j, k1);
  };
  const auto lerp_beta = [&](std::size_t i) {
    return (1.0 - fb) * lerp_gamma(i, j0) + fb * lerp_gamma(i, j1);
  };
  return (1.0 - fa) * lerp_beta(i0) + fa * lerp_beta(i1);
}

}  // namespace

std::optional<std::string> validate_model(const ModelSpec& spec)
{
  return std::visit(
      Overloaded{
          [](const ConstantModel& m) -> std::optional<std::string> {
            if (!is_probability(m.c)) {
              return fmt::format("c out of [0,1] (got {})", m.c);
            }
            return std::nullopt;
          },
          [](const MalusAngleModel&) -> std::optional<std::string> { return std::nullopt; },
          [](const FullEulerModel& m) -> std::optional<std::string> {
            if (!std::isfinite(m.a) || !std::isfinite(m.b) || !std::isfinite(m.c)) {
              return std::string{"full_euler coefficients must be finite"};
            }
            const double sum = std::abs(m.a) + std::abs(m.b) + std::abs(m.c);
            // Tolerance admits decimal inputs such as 0.5 + 0.3 + 0.2.
            if (sum > 1.0 + 1e-12) {
              return fmt::format("|a|+|b|+|c| exceeds 1 (got {})", sum);
            }
            return std::nullopt;
          },
          [](const TableGridModel& m) -> std::optional<std::string> {
            if (m.n_alpha < 1 || m.n_gamma < 1) {
              return std::string{"table_grid needs at least one alpha and one gamma node"};
            }
            if (m.n_beta < 2) {
              return std::string{"table_grid needs at least two beta nodes"};
            }
            const std::size_t expected = m.n_alpha * m.n_beta * m.n_gamma;
            if (m.values.size() != expected) {
              return fmt::format("table_grid has {} values, expected {}", m.values.size(), expected);
            }
            for (std::size_t idx = 0; idx < m.values.size(); ++idx) {
              if (!is_probability(m.values[idx])) {
                const std::size_t k = idx % m.n_gamma;
                const std::size_t j = (idx / m.n_gamma) % m.n_beta;
                const std::size_t i = idx / (m.n_gamma * m.n_beta);
                return fmt::format("table_grid value at ({}, {}, {}) out of [0,1] (got {})", i, j, k,
                                   m.values[idx]);
              }
            }
            return std::nullopt;
          },
      },
      spec);
}

DetectionModel::DetectionModel(ModelSpec spec) : spec_(std::move(spec))
{
  if (auto violation = validate_model(spec_)) {
    throw std::invalid_argument(*violation);
  }
}

std::string DetectionModel::kind() const
{
  return std::visit(Overloaded{
                        [](const ConstantModel&) { return std::string{"constant"}; },
                        [](const MalusAngleModel&) { return std::string{"malus_angle"}; },
                        [](const FullEulerModel&) { return std::string{"full_euler"}; },
                        [](const TableGridModel&) { return std::string{"table_grid"}; },
                    },
                    spec_);
}

bool DetectionModel::is_class_function() const
{
  if (std::holds_alternative<ConstantModel>(spec_) || std::holds_alternative<MalusAngleModel>(spec_)) {
    return true;
  }
  if (const auto* m = std::get_if<FullEulerModel>(&spec_)) {
    return m->a == 0.0 && m->b == 0.0 && m->c == 0.0;
  }
  return false;
}

double eval_model(const DetectionModel& model, const Rotation& relative)
{
  return std::visit(
      Overloaded{
          [](const ConstantModel& m) { return m.c; },
          [&](const MalusAngleModel&) {
            // cos^2(theta/2) = w^2 for a unit quaternion.
            return std::clamp(relative.w() * relative.w(), 0.0, 1.0);
          },
          [&](const FullEulerModel& m) {
            // cos(a) sin(b), cos(b) and -cos(g) sin(b) are the ZYZ matrix
            // entries R02, R22 and R20, which avoids the atan2 branch cuts.
            const double x = relative.x(), y = relative.y(), z = relative.z(), w = relative.w();
            const double cos_a_sin_b = 2.0 * (x * z + w * y);
            const double cos_b = 1.0 - 2.0 * (x * x + y * y);
            const double cos_g_sin_b = -2.0 * (x * z - w * y);
            const double p = 0.5 * (1.0 + m.a * cos_a_sin_b + m.b * cos_b + m.c * cos_g_sin_b);
            return std::clamp(p, 0.0, 1.0);
          },
          [&](const TableGridModel& m) { return interpolate(m, to_euler(relative)); },
      },
      model.spec());
}

Outcome sample_outcome(const DetectionModel& model, const Rotation& relative, Rng& rng)
{
  return rng.uniform() < eval_model(model, relative) ? Outcome::kPlus : Outcome::kMinus;
}

TableGridModel load_table_csv(const std::filesystem::path& path, std::size_t n_alpha,
                              std::size_t n_beta, std::size_t n_gamma)
{
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error(fmt::format("cannot open table csv '{}'", path.string()));
  }
  TableGridModel t{n_alpha, n_beta, n_gamma, std::vector<double>(n_alpha * n_beta * n_gamma, 0.0)};
  std::vector<bool> seen(t.values.size(), false);

  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) {
    throw std::runtime_error(fmt::format("{}: empty table csv", path.string()));
  }
  ++line_no;
  if (!line.empty() && line.back() == '\r') {
    line.pop_back();
  }
  if (line != "alpha_index,beta_index,gamma_index,value") {
    throw std::runtime_error(fmt::format("{}:1: unexpected header '{}'", path.string(), line));
  }
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') {
      line.pop_back();
    }
    if (line.empty()) {
      continue;
    }
    std::istringstream row(line);
    std::string cell[4];
    for (int c = 0; c < 4; ++c) {
      if (!std::getline(row, cell[c], ',')) {
        throw std::runtime_error(fmt::format("{}:{}: expected 4 columns", path.string(), line_no));
      }
    }
    std::size_t i = 0, j = 0, k = 0;
    double value = 0.0;
    try {
      i = std::stoul(cell[0]);
      j = std::stoul(cell[1]);
      k = std::stoul(cell[2]);
      value = std::stod(cell[3]);
    } catch (const std::exception&) {
      throw std::runtime_error(fmt::format("{}:{}: malformed number", path.string(), line_no));
    }
    if (i >= n_alpha || j >= n_beta || k >= n_gamma) {
      throw std::runtime_error(fmt::format("{}:{}: index ({}, {}, {}) outside grid", path.string(),
                                           line_no, i, j, k));
    }
    const std::size_t idx = (i * n_beta + j) * n_gamma + k;
    if (seen[idx]) {
      throw std::runtime_error(
          fmt::format("{}:{}: duplicate cell ({}, {}, {})", path.string(), line_no, i, j, k));
    }
    seen[idx] = true;
    t.values[idx] = value;
  }
  const auto missing = std::find(seen.begin(), seen.end(), false);
  if (missing != seen.end()) {
    const std::size_t idx = static_cast<std::size_t>(missing - seen.begin());
    throw std::runtime_error(fmt::format("{}: missing cell ({}, {}, {})", path.string(),
                                         idx / (n_gamma * n_beta), (idx / n_gamma) % n_beta,
                                         idx % n_gamma));
  }
  return t;
}

void write_table_csv(const TableGridModel& table, const std::filesystem::path& path)
{
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error(fmt::format("cannot write table csv '{}'", path.string()));
  }
  out << "alpha_index,beta_index,gamma_index,value\n";
  for (std::size_t i = 0; i < table.n_alpha; ++i) {
    for (std::size_t j = 0; j < table.n_beta; ++j) {
      for (std::size_t k = 0; k < table.n_gamma; ++k) {
        out << fmt::format("{},{},{},{:.17g}\n", i, j, k, table.at(i, j, k));
      }
    }
  }
}

}  // namespace bellhaar
