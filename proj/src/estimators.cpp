#include "bellhaar/estimators.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <thread>

#include "bellhaar/random.hpp"

namespace bellhaar {

namespace {

/// One detector station. It sees the shared hidden rotation and nothing about
/// the other station: no setting, no model, no outcome.
class Wing
{
public:
  Wing(const DetectionModel& model, const Rotation& orientation)
      : model_(model), orientation_(orientation)
  {
  }

  bool fires(const Rotation& hidden, Rng& rng) const
  {
    return sample_outcome(model_, relative_rotation(hidden, orientation_), rng) == Outcome::kPlus;
  }

private:
  const DetectionModel& model_;
  Rotation orientation_;
};

struct BlockCounts
{
  std::uint64_t trials{0};
  std::uint64_t plus_a{0};
  std::uint64_t plus_b{0};
  std::uint64_t plus_joint{0};
};

unsigned resolve_workers(const McOptions& options, std::size_t jobs)
{
  unsigned w = options.workers;
  if (w == 0) {
    w = std::max(1U, std::thread::hardware_concurrency());
  }
  return static_cast<unsigned>(std::min<std::size_t>(w, std::max<std::size_t>(jobs, 1)));
}

/// Runs job(index) for index in [0, jobs) on up to `workers` threads.
template <typename Job>
void parallel_for(std::size_t jobs, unsigned workers, Job&& job)
{
  if (workers <= 1) {
    for (std::size_t i = 0; i < jobs; ++i) {
      job(i);
    }
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (unsigned t = 0; t < workers; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next.fetch_add(1); i < jobs; i = next.fetch_add(1)) {
        job(i);
      }
    });
  }
}

// Three streams per block: hidden variable, wing A, wing B.
constexpr std::uint64_t kStreamsPerBlock = 3;

std::uint64_t block_count(std::uint64_t n)
{
  return (n + kTrialsPerBlock - 1) / kTrialsPerBlock;
}

std::uint64_t block_trials(std::uint64_t n, std::uint64_t block)
{
  return std::min(kTrialsPerBlock, n - block * kTrialsPerBlock);
}

double binomial_se(double p, double n)
{
  return std::sqrt(std::max(0.0, p * (1.0 - p)) / n);
}

}  // namespace

JointStats JointStats::from_counts(std::uint64_t n_trials, std::uint64_t n_plus_a,
                                   std::uint64_t n_plus_b, std::uint64_t n_plus_joint)
{
  if (n_trials == 0) {
    throw std::invalid_argument("JointStats needs at least one trial");
  }
  if (n_plus_a > n_trials || n_plus_b > n_trials || n_plus_joint > std::min(n_plus_a, n_plus_b)) {
    throw std::invalid_argument("inconsistent outcome counts");
  }
  JointStats s;
  s.n_trials = n_trials;
  s.n_plus_a = n_plus_a;
  s.n_plus_b = n_plus_b;
  s.n_plus_joint = n_plus_joint;

  const double n = static_cast<double>(n_trials);
  s.p_a = static_cast<double>(n_plus_a) / n;
  s.p_b = static_cast<double>(n_plus_b) / n;
  s.p_joint = static_cast<double>(n_plus_joint) / n;
  s.se_a = binomial_se(s.p_a, n);
  s.se_b = binomial_se(s.p_b, n);
  s.se_joint = binomial_se(s.p_joint, n);

  if (n_plus_a > 0) {
    const double cond = static_cast<double>(n_plus_joint) / static_cast<double>(n_plus_a);
    s.p_b_given_a = cond;
    // Delta method on p_joint / p_a; reduces to the binomial error over n_plus_a trials.
    s.se_b_given_a = binomial_se(cond, static_cast<double>(n_plus_a));
  }
  return s;
}

JointStats mc_run(const DetectionModel& model_a, const DetectionModel& model_b,
                  const DetectorSetting& setting_a, const DetectorSetting& setting_b,
                  std::uint64_t n, std::uint64_t seed, const McOptions& options)
{
  if (n == 0) {
    throw std::invalid_argument("mc_run needs n >= 1");
  }
  const Wing wing_a(model_a, setting_a.orientation);
  const Wing wing_b(model_b, setting_b.orientation);

  const std::uint64_t blocks = block_count(n);
  std::vector<BlockCounts> counts(blocks);
  parallel_for(blocks, resolve_workers(options, blocks), [&](std::size_t block) {
    Rng hidden_rng(seed, kStreamsPerBlock * block);
    Rng rng_a(seed, kStreamsPerBlock * block + 1);
    Rng rng_b(seed, kStreamsPerBlock * block + 2);
    BlockCounts c;
    c.trials = block_trials(n, block);
    for (std::uint64_t t = 0; t < c.trials; ++t) {
      const Rotation hidden = haar_sample(hidden_rng);
      const bool a = wing_a.fires(hidden, rng_a);
      const bool b = wing_b.fires(hidden, rng_b);
      c.plus_a += a;
      c.plus_b += b;
      c.plus_joint += a && b;
    }
    counts[block] = c;
  });

  BlockCounts total;
  for (const auto& c : counts) {
    total.trials += c.trials;
    total.plus_a += c.plus_a;
    total.plus_b += c.plus_b;
    total.plus_joint += c.plus_joint;
  }
  return JointStats::from_counts(total.trials, total.plus_a, total.plus_b, total.plus_joint);
}

MarginalEstimate mc_marginal(const DetectionModel& model, const DetectorSetting& setting,
                             std::uint64_t n, std::uint64_t seed, const McOptions& options)
{
  if (n == 0) {
    throw std::invalid_argument("mc_marginal needs n >= 1");
  }
  const Wing wing(model, setting.orientation);
  const std::uint64_t blocks = block_count(n);
  std::vector<std::uint64_t> plus(blocks, 0);
  parallel_for(blocks, resolve_workers(options, blocks), [&](std::size_t block) {
    Rng hidden_rng(seed, kStreamsPerBlock * block);
    Rng rng(seed, kStreamsPerBlock * block + 1);
    const std::uint64_t trials = block_trials(n, block);
    std::uint64_t p = 0;
    for (std::uint64_t t = 0; t < trials; ++t) {
      p += wing.fires(haar_sample(hidden_rng), rng);
    }
    plus[block] = p;
  });
  MarginalEstimate m;
  m.n_trials = n;
  for (auto p : plus) {
    m.n_plus += p;
  }
  m.p = static_cast<double>(m.n_plus) / static_cast<double>(n);
  m.se = binomial_se(m.p, static_cast<double>(n));
  return m;
}

void gauss_legendre(std::size_t n, std::vector<double>& nodes, std::vector<double>& weights)
{
  nodes.assign(n, 0.0);
  weights.assign(n, 0.0);
  const std::size_t half = (n + 1) / 2;
  for (std::size_t i = 0; i < half; ++i) {
    // Tricomi initial guess, then Newton on P_n.
    double x = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) /
                        (static_cast<double>(n) + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0;
      double p1 = x;
      for (std::size_t k = 2; k <= n; ++k) {
        const double kk = static_cast<double>(k);
        const double p2 = ((2.0 * kk - 1.0) * x * p1 - (kk - 1.0) * p0) / kk;
        p0 = p1;
        p1 = p2;
      }
      dp = static_cast<double>(n) * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) {
        break;
      }
    }
    // Recompute the derivative at the converged root.
    double p0 = 1.0;
    double p1 = x;
    for (std::size_t k = 2; k <= n; ++k) {
      const double kk = static_cast<double>(k);
      const double p2 = ((2.0 * kk - 1.0) * x * p1 - (kk - 1.0) * p0) / kk;
      p0 = p1;
      p1 = p2;
    }
    dp = static_cast<double>(n) * (x * p1 - p0) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    nodes[i] = -x;
    nodes[n - 1 - i] = x;
    weights[i] = w;
    weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) {
    nodes[n / 2] = 0.0;
  }
}

QuadratureGrid build_grid(std::size_t n_alpha, std::size_t n_u, std::size_t n_gamma)
{
  if (n_alpha < 2 || n_u < 2 || n_gamma < 2) {
    throw std::invalid_argument("quadrature grid sizes must all be >= 2");
  }
  constexpr double kTwoPi = 2.0 * std::numbers::pi;

  QuadratureGrid g;
  g.n_alpha = n_alpha;
  g.n_u = n_u;
  g.n_gamma = n_gamma;
  for (std::size_t i = 0; i < n_alpha; ++i) {
    g.alpha_nodes.push_back(kTwoPi * static_cast<double>(i) / static_cast<double>(n_alpha));
  }
  for (std::size_t k = 0; k < n_gamma; ++k) {
    g.gamma_nodes.push_back(kTwoPi * static_cast<double>(k) / static_cast<double>(n_gamma));
  }
  gauss_legendre(n_u, g.u_nodes, g.u_weights);
  for (double& w : g.u_weights) {
    w *= 0.5;
  }

  const double w_alpha = 1.0 / static_cast<double>(n_alpha);
  const double w_gamma = 1.0 / static_cast<double>(n_gamma);
  g.rotations.reserve(n_alpha * n_u * n_gamma);
  g.weights.reserve(n_alpha * n_u * n_gamma);
  for (std::size_t i = 0; i < n_alpha; ++i) {
    for (std::size_t j = 0; j < n_u; ++j) {
      const double beta = std::acos(std::clamp(g.u_nodes[j], -1.0, 1.0));
      for (std::size_t k = 0; k < n_gamma; ++k) {
        g.rotations.push_back(from_euler(EulerAngles{g.alpha_nodes[i], beta, g.gamma_nodes[k]}));
        g.weights.push_back(w_alpha * g.u_weights[j] * w_gamma);
      }
    }
  }
  return g;
}

namespace {

/// Sums weight * integrand(node) slab by slab (one slab per alpha node) and
/// adds the slab totals in index order, so the result is independent of threading.
template <typename Integrand>
double integrate(const QuadratureGrid& grid, Integrand&& integrand)
{
  const std::size_t slab = grid.n_u * grid.n_gamma;
  std::vector<double> partial(grid.n_alpha, 0.0);
  parallel_for(grid.n_alpha, resolve_workers({}, grid.n_alpha), [&](std::size_t i) {
    double s = 0.0;
    for (std::size_t idx = i * slab; idx < (i + 1) * slab; ++idx) {
      s += grid.weights[idx] * integrand(grid.rotations[idx]);
    }
    partial[i] = s;
  });
  double total = 0.0;
  for (double p : partial) {
    total += p;
  }
  return total;
}

}  // namespace

double quadrature_marginal(const DetectionModel& model, const QuadratureGrid& grid)
{
  // Constant integrand: exact, independent of the weight rounding.
  if (const auto* c = std::get_if<ConstantModel>(&model.spec())) {
    return c->c;
  }
  return integrate(grid, [&](const Rotation& r) { return eval_model(model, r); });
}

double quadrature_marginal(const DetectionModel& model, const Rotation& orientation,
                           const QuadratureGrid& grid)
{
  if (const auto* c = std::get_if<ConstantModel>(&model.spec())) {
    return c->c;
  }
  // Nodes stand for the hidden rotation R_X here.
  return integrate(grid, [&](const Rotation& hidden) {
    return eval_model(model, relative_rotation(hidden, orientation));
  });
}

double quadrature_joint(const DetectionModel& model_a, const DetectionModel& model_b,
                        const Rotation& r_ab, const QuadratureGrid& grid)
{
  const auto* ca = std::get_if<ConstantModel>(&model_a.spec());
  const auto* cb = std::get_if<ConstantModel>(&model_b.spec());
  if (ca != nullptr && cb != nullptr) {
    // The integrand itself is the constant c_a * c_b.
    return ca->c * cb->c;
  }
  // Nodes stand for R_XA; wing B sees R_XB = r_ab o R_XA.
  return integrate(grid, [&](const Rotation& r_xa) {
    return eval_model(model_a, r_xa) * eval_model(model_b, compose(r_xa, r_ab));
  });
}

}  // namespace bellhaar
