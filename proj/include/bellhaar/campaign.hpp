#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "bellhaar/chsh.hpp"
#include "bellhaar/detection_model.hpp"
#include "bellhaar/estimators.hpp"
#include "bellhaar/rotation.hpp"

namespace bellhaar {

inline constexpr std::string_view kSoftwareVersion = "0.1.0";

using Json = nlohmann::ordered_json;

enum class Analysis { kJointTable, kChsh, kIndependence, kLambdaBound };

std::string_view to_string(Analysis a);

struct GridSize
{
  std::size_t n_alpha{64};
  std::size_t n_u{32};
  std::size_t n_gamma{64};
  bool operator==(const GridSize&) const = default;
};

/// A detection model as declared in a config. `table_csv` remembers where a
/// table_grid was loaded from so the config serializes back unchanged.
struct ModelConfig
{
  DetectionModel model{MalusAngleModel{}};
  std::optional<std::string> table_csv;
  bool operator==(const ModelConfig&) const = default;
};

struct SettingConfig
{
  std::string label;
  EulerAngles euler;

  DetectorSetting setting() const { return {label, from_euler(euler)}; }
  bool operator==(const SettingConfig& o) const
  {
    return label == o.label && euler.alpha == o.euler.alpha && euler.beta == o.euler.beta &&
           euler.gamma == o.euler.gamma;
  }
};

struct CampaignConfig
{
  std::string name;
  std::uint64_t seed{0};
  std::uint64_t trials{1'000'000};
  GridSize grid;
  ModelConfig model_a;
  ModelConfig model_b;
  std::vector<SettingConfig> settings_a;
  std::vector<SettingConfig> settings_b;
  std::vector<Analysis> analyses{Analysis::kJointTable};
  std::uint64_t lambda_samples{100'000};

  bool has(Analysis a) const;
  bool operator==(const CampaignConfig&) const = default;
};

/// Carries every violation found in a config, not just the first.
class ConfigError : public std::runtime_error
{
public:
  explicit ConfigError(std::vector<std::string> violations);
  const std::vector<std::string>& violations() const { return violations_; }

private:
  std::vector<std::string> violations_;
};

/// Parses and validates a JSON campaign document. Relative table_grid csv
/// paths resolve against `base_dir`. Throws ConfigError.
CampaignConfig parse_config(std::string_view text, const std::filesystem::path& base_dir = {});

CampaignConfig load_config(const std::filesystem::path& path);

/// Canonical JSON form; parse_config(config_to_json(c).dump()) == c.
Json config_to_json(const CampaignConfig& cfg);

/// FNV-1a 64 of the canonical config JSON, as 16 hex digits.
std::string config_hash(const CampaignConfig& cfg);

struct PairResult
{
  std::string a_label;
  std::string b_label;
  JointStats mc;
  double quad_joint{0.0};
  /// Present when the joint-table or independence analysis was requested.
  std::optional<IndependenceReport> independence;

  bool operator==(const PairResult&) const = default;
};

struct LambdaBoundSummary
{
  std::uint64_t samples{0};
  std::uint64_t in_bound{0};
  double min{0.0};
  double max{0.0};
  double mean{0.0};
  double se_mean{0.0};

  bool operator==(const LambdaBoundSummary&) const = default;
};

struct SweepPoint
{
  double angle{0.0};
  JointStats mc;
  double quad_joint{0.0};
  IndependenceReport independence;

  bool operator==(const SweepPoint&) const = default;
};

struct RunRecord
{
  CampaignConfig config;
  std::string config_hash;
  std::string software_version{kSoftwareVersion};
  double wall_time_s{0.0};

  std::vector<PairResult> pairs;
  /// Haar marginals by quadrature, one per setting, in config order.
  std::vector<double> quad_marginals_a;
  std::vector<double> quad_marginals_b;

  std::optional<ChshReport> chsh_mc;
  std::optional<ChshReport> chsh_quadrature;
  std::optional<LambdaBoundSummary> lambda_bound;

  std::string sweep_axis;
  std::vector<SweepPoint> sweep;

  bool operator==(const RunRecord&) const = default;
};

struct RunOptions
{
  McOptions mc;
};

/// Runs mc_run and quadrature_joint for every (A_i, B_j) pair, then the
/// requested analyses. Deterministic given the config.
RunRecord run_campaign(const CampaignConfig& cfg, const RunOptions& options = {});

/// Rotates wing B away from the first A setting about `axis` ('x', 'y' or
/// 'z') through `points` evenly spaced angles in [0, pi].
RunRecord run_sweep(const CampaignConfig& cfg, char axis, std::size_t points,
                    const RunOptions& options = {});

Json record_to_json(const RunRecord& rec);

/// Inverse of record_to_json. `base_dir` resolves table_grid csv paths in
/// the embedded config.
RunRecord record_from_json(const Json& j, const std::filesystem::path& base_dir = {});

/// Writes results.json plus joints.csv / chsh.csv / sweep.csv as applicable
/// and returns the written paths. Refuses to replace existing files unless
/// `overwrite` is set.
std::vector<std::filesystem::path> emit_outputs(const RunRecord& rec,
                                                const std::filesystem::path& out_dir,
                                                bool overwrite);

/// CSV bodies, exposed for golden tests.
std::string joints_csv(const RunRecord& rec);
std::string chsh_csv(const RunRecord& rec);
std::string sweep_csv(const RunRecord& rec);

}  // namespace bellhaar
