#include "bellhaar/campaign.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "bellhaar/random.hpp"

namespace bellhaar {

namespace {

// Sub-seed tags. Pair runs use their row-major pair index.
constexpr std::uint64_t kMarginalA2Tag = 0x1'0000'0000ULL;
constexpr std::uint64_t kMarginalB2Tag = 0x1'0000'0001ULL;
constexpr std::uint64_t kLambdaTag = 0x1'0000'0002ULL;
constexpr std::uint64_t kSweepTagBase = 0x2'0000'0000ULL;

constexpr std::pair<Analysis, std::string_view> kAnalysisNames[] = {
    {Analysis::kJointTable, "joint-table"},
    {Analysis::kChsh, "chsh"},
    {Analysis::kIndependence, "independence"},
    {Analysis::kLambdaBound, "lambda-bound"},
};

/// Accumulates violations while walking a config document.
class Validator
{
public:
  void fail(std::string msg) { errors_.push_back(std::move(msg)); }
  bool ok() const { return errors_.empty(); }
  std::vector<std::string> take() { return std::move(errors_); }

  void reject_unknown(const Json& obj, std::string_view where,
                      std::initializer_list<std::string_view> allowed)
  {
    for (const auto& [key, value] : obj.items()) {
      if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
        fail(fmt::format("{}: unknown key '{}'", where, key));
      }
    }
  }

  std::optional<std::uint64_t> count(const Json& v, std::string_view where, std::uint64_t min)
  {
    if (!v.is_number_integer() || (!v.is_number_unsigned() && v.get<std::int64_t>() < 0)) {
      fail(fmt::format("{}: expected a non-negative integer", where));
      return std::nullopt;
    }
    const auto n = v.get<std::uint64_t>();
    if (n < min) {
      fail(fmt::format("{}: must be >= {} (got {})", where, min, n));
      return std::nullopt;
    }
    return n;
  }

  std::optional<double> number(const Json& v, std::string_view where)
  {
    if (!v.is_number()) {
      fail(fmt::format("{}: expected a number", where));
      return std::nullopt;
    }
    return v.get<double>();
  }

private:
  std::vector<std::string> errors_;
};

bool label_is_plain(const std::string& label)
{
  return !label.empty() &&
         label.find_first_of(",\"\r\n") == std::string::npos;
}

std::optional<ModelConfig> parse_model(const Json& j, const std::string& where,
                                       const std::filesystem::path& base_dir, Validator& v)
{
  if (!j.is_object()) {
    v.fail(fmt::format("{}: expected an object", where));
    return std::nullopt;
  }
  if (!j.contains("kind") || !j["kind"].is_string()) {
    v.fail(fmt::format("{}: missing string 'kind'", where));
    return std::nullopt;
  }
  const auto kind = j["kind"].get<std::string>();
  Validator local;
  ModelConfig out;
  std::optional<ModelSpec> spec;

  if (kind == "constant") {
    local.reject_unknown(j, where, {"kind", "c"});
    if (!j.contains("c")) {
      local.fail(fmt::format("{}: constant model needs 'c'", where));
    } else if (auto c = local.number(j["c"], where + ".c")) {
      spec = ConstantModel{*c};
    }
  } else if (kind == "malus_angle") {
    local.reject_unknown(j, where, {"kind"});
    spec = MalusAngleModel{};
  } else if (kind == "full_euler") {
    local.reject_unknown(j, where, {"kind", "a", "b", "c"});
    FullEulerModel m;
    bool good = true;
    for (auto [key, dst] : {std::pair{"a", &m.a}, std::pair{"b", &m.b}, std::pair{"c", &m.c}}) {
      if (j.contains(key)) {
        if (auto x = local.number(j[key], where + "." + key)) {
          *dst = *x;
        } else {
          good = false;
        }
      }
    }
    if (good) {
      spec = m;
    }
  } else if (kind == "table_grid") {
    local.reject_unknown(j, where, {"kind", "shape", "csv", "values"});
    std::optional<std::array<std::size_t, 3>> shape;
    if (!j.contains("shape") || !j["shape"].is_array() || j["shape"].size() != 3) {
      local.fail(fmt::format("{}: table_grid needs 'shape' [n_alpha, n_beta, n_gamma]", where));
    } else {
      std::array<std::size_t, 3> s{};
      bool good = true;
      for (std::size_t i = 0; i < 3; ++i) {
        if (auto n = local.count(j["shape"][i], fmt::format("{}.shape[{}]", where, i), 1)) {
          s[i] = *n;
        } else {
          good = false;
        }
      }
      if (good) {
        shape = s;
      }
    }
    const bool has_csv = j.contains("csv");
    const bool has_values = j.contains("values");
    if (has_csv == has_values) {
      local.fail(fmt::format("{}: table_grid needs exactly one of 'csv' or 'values'", where));
    } else if (shape) {
      if (has_csv) {
        if (!j["csv"].is_string()) {
          local.fail(fmt::format("{}.csv: expected a path string", where));
        } else {
          const auto rel = j["csv"].get<std::string>();
          try {
            spec = load_table_csv(base_dir / rel, (*shape)[0], (*shape)[1], (*shape)[2]);
            out.table_csv = rel;
          } catch (const std::exception& e) {
            local.fail(fmt::format("{}.csv: {}", where, e.what()));
          }
        }
      } else {
        if (!j["values"].is_array() || !std::all_of(j["values"].begin(), j["values"].end(),
                                                     [](const Json& x) { return x.is_number(); })) {
          local.fail(fmt::format("{}.values: expected an array of numbers", where));
        } else {
          spec = TableGridModel{(*shape)[0], (*shape)[1], (*shape)[2],
                                j["values"].get<std::vector<double>>()};
        }
      }
    }
  } else {
    local.fail(fmt::format("{}: unknown model kind '{}'", where, kind));
  }

  if (spec) {
    if (auto violation = validate_model(*spec)) {
      local.fail(fmt::format("{}: {}", where, *violation));
      spec.reset();
    }
  }
  const bool good = local.ok();
  for (auto& e : local.take()) {
    v.fail(std::move(e));
  }
  if (!good || !spec) {
    return std::nullopt;
  }
  out.model = DetectionModel{std::move(*spec)};
  return out;
}

std::vector<SettingConfig> parse_settings(const Json& j, const std::string& where, Validator& v)
{
  std::vector<SettingConfig> out;
  if (!j.is_array()) {
    v.fail(fmt::format("{}: expected an array of settings", where));
    return out;
  }
  for (std::size_t i = 0; i < j.size(); ++i) {
    const auto& s = j[i];
    const std::string at = fmt::format("{}[{}]", where, i);
    if (!s.is_object()) {
      v.fail(fmt::format("{}: expected an object", at));
      continue;
    }
    v.reject_unknown(s, at, {"label", "euler"});
    SettingConfig sc;
    bool good = true;
    if (!s.contains("label") || !s["label"].is_string()) {
      v.fail(fmt::format("{}: missing string 'label'", at));
      good = false;
    } else {
      sc.label = s["label"].get<std::string>();
      if (!label_is_plain(sc.label)) {
        v.fail(fmt::format("{}: label must be non-empty without commas, quotes or newlines", at));
        good = false;
      }
    }
    if (!s.contains("euler") || !s["euler"].is_array() || s["euler"].size() != 3) {
      v.fail(fmt::format("{}: 'euler' must be [alpha, beta, gamma] in radians", at));
      good = false;
    } else {
      const char* names[] = {"alpha", "beta", "gamma"};
      double vals[3] = {0.0, 0.0, 0.0};
      for (int k = 0; k < 3; ++k) {
        if (auto x = v.number(s["euler"][k], fmt::format("{}.euler[{}]", at, k))) {
          vals[k] = *x;
        } else {
          good = false;
        }
      }
      const std::string who = sc.label.empty() ? at : fmt::format("{} ({})", at, sc.label);
      if (!(vals[0] >= 0.0 && vals[0] < 2.0 * std::numbers::pi)) {
        v.fail(fmt::format("{}: {} out of [0, 2π) (got {})", who, names[0], vals[0]));
        good = false;
      }
      if (!(vals[1] >= 0.0 && vals[1] <= std::numbers::pi)) {
        v.fail(fmt::format("{}: {} out of [0, π] (got {})", who, names[1], vals[1]));
        good = false;
      }
      if (!(vals[2] >= 0.0 && vals[2] < 2.0 * std::numbers::pi)) {
        v.fail(fmt::format("{}: {} out of [0, 2π) (got {})", who, names[2], vals[2]));
        good = false;
      }
      sc.euler = EulerAngles{vals[0], vals[1], vals[2]};
    }
    if (good) {
      out.push_back(std::move(sc));
    }
  }
  if (j.empty()) {
    v.fail(fmt::format("{}: at least one setting required", where));
  }
  return out;
}

Json model_to_json(const ModelConfig& mc)
{
  return std::visit(
      [&](const auto& m) -> Json {
        using T = std::decay_t<decltype(m)>;
        Json j;
        if constexpr (std::is_same_v<T, ConstantModel>) {
          j["kind"] = "constant";
          j["c"] = m.c;
        } else if constexpr (std::is_same_v<T, MalusAngleModel>) {
          j["kind"] = "malus_angle";
        } else if constexpr (std::is_same_v<T, FullEulerModel>) {
          j["kind"] = "full_euler";
          j["a"] = m.a;
          j["b"] = m.b;
          j["c"] = m.c;
        } else {
          j["kind"] = "table_grid";
          j["shape"] = Json::array({m.n_alpha, m.n_beta, m.n_gamma});
          if (mc.table_csv) {
            j["csv"] = *mc.table_csv;
          } else {
            j["values"] = m.values;
          }
        }
        return j;
      },
      mc.model.spec());
}

Json settings_to_json(const std::vector<SettingConfig>& settings)
{
  Json arr = Json::array();
  for (const auto& s : settings) {
    Json j;
    j["label"] = s.label;
    j["euler"] = Json::array({s.euler.alpha, s.euler.beta, s.euler.gamma});
    arr.push_back(std::move(j));
  }
  return arr;
}

std::string num(double x)
{
  return fmt::format("{:.17g}", x);
}

std::string opt_num(const std::optional<double>& x)
{
  return x ? num(*x) : std::string{};
}

Json estimate_to_json(const Estimate& e)
{
  return Json{{"value", e.value}, {"se", e.se}};
}

Estimate estimate_from_json(const Json& j)
{
  return {j.at("value").get<double>(), j.at("se").get<double>()};
}

Json opt_to_json(const std::optional<double>& x)
{
  return x ? Json(*x) : Json(nullptr);
}

std::optional<double> opt_from_json(const Json& j)
{
  if (j.is_null()) {
    return std::nullopt;
  }
  return j.get<double>();
}

Json stats_to_json(const JointStats& s)
{
  Json j;
  j["n_trials"] = s.n_trials;
  j["n_plus_a"] = s.n_plus_a;
  j["n_plus_b"] = s.n_plus_b;
  j["n_plus_joint"] = s.n_plus_joint;
  j["p_a"] = s.p_a;
  j["se_a"] = s.se_a;
  j["p_b"] = s.p_b;
  j["se_b"] = s.se_b;
  j["p_joint"] = s.p_joint;
  j["se_joint"] = s.se_joint;
  j["p_b_given_a"] = opt_to_json(s.p_b_given_a);
  j["se_b_given_a"] = opt_to_json(s.se_b_given_a);
  return j;
}

JointStats stats_from_json(const Json& j)
{
  JointStats s;
  s.n_trials = j.at("n_trials").get<std::uint64_t>();
  s.n_plus_a = j.at("n_plus_a").get<std::uint64_t>();
  s.n_plus_b = j.at("n_plus_b").get<std::uint64_t>();
  s.n_plus_joint = j.at("n_plus_joint").get<std::uint64_t>();
  s.p_a = j.at("p_a").get<double>();
  s.se_a = j.at("se_a").get<double>();
  s.p_b = j.at("p_b").get<double>();
  s.se_b = j.at("se_b").get<double>();
  s.p_joint = j.at("p_joint").get<double>();
  s.se_joint = j.at("se_joint").get<double>();
  s.p_b_given_a = opt_from_json(j.at("p_b_given_a"));
  s.se_b_given_a = opt_from_json(j.at("se_b_given_a"));
  return s;
}

Json independence_to_json(const IndependenceReport& r)
{
  Json j;
  j["delta"] = r.delta;
  j["se_delta"] = r.se_delta;
  j["z_delta"] = opt_to_json(r.z_delta);
  j["p_b_given_a"] = r.p_b_given_a ? estimate_to_json(*r.p_b_given_a) : Json(nullptr);
  j["p_b"] = estimate_to_json(r.p_b);
  return j;
}

IndependenceReport independence_from_json(const Json& j)
{
  IndependenceReport r;
  r.delta = j.at("delta").get<double>();
  r.se_delta = j.at("se_delta").get<double>();
  r.z_delta = opt_from_json(j.at("z_delta"));
  if (!j.at("p_b_given_a").is_null()) {
    r.p_b_given_a = estimate_from_json(j.at("p_b_given_a"));
  }
  r.p_b = estimate_from_json(j.at("p_b"));
  return r;
}

Json chsh_to_json(const ChshReport& r)
{
  Json j;
  j["p_a2b2"] = estimate_to_json(r.a2b2);
  j["p_a2b1"] = estimate_to_json(r.a2b1);
  j["p_a1b2"] = estimate_to_json(r.a1b2);
  j["p_a1b1"] = estimate_to_json(r.a1b1);
  j["p_a2"] = estimate_to_json(r.marginal_a2);
  j["p_b2"] = estimate_to_json(r.marginal_b2);
  j["S"] = r.s;
  j["se_S"] = r.se_s;
  j["verdict"] = std::string{to_string(r.verdict)};
  return j;
}

BoundVerdict verdict_from_string(const std::string& s)
{
  for (auto v : {BoundVerdict::kBelow, BoundVerdict::kAtLower, BoundVerdict::kInside,
                 BoundVerdict::kAtUpper, BoundVerdict::kAbove}) {
    if (to_string(v) == s) {
      return v;
    }
  }
  throw std::runtime_error(fmt::format("unknown bound verdict '{}'", s));
}

ChshReport chsh_from_json(const Json& j)
{
  ChshReport r;
  r.a2b2 = estimate_from_json(j.at("p_a2b2"));
  r.a2b1 = estimate_from_json(j.at("p_a2b1"));
  r.a1b2 = estimate_from_json(j.at("p_a1b2"));
  r.a1b1 = estimate_from_json(j.at("p_a1b1"));
  r.marginal_a2 = estimate_from_json(j.at("p_a2"));
  r.marginal_b2 = estimate_from_json(j.at("p_b2"));
  r.s = j.at("S").get<double>();
  r.se_s = j.at("se_S").get<double>();
  r.verdict = verdict_from_string(j.at("verdict").get<std::string>());
  return r;
}

void write_text(const std::filesystem::path& path, const std::string& body)
{
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw std::runtime_error(fmt::format("cannot write '{}'", path.string()));
  }
  out << body;
  if (!out) {
    throw std::runtime_error(fmt::format("write failed for '{}'", path.string()));
  }
}

std::uint64_t fnv1a(std::string_view s)
{
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

Rotation axis_rotation(char axis, double angle)
{
  switch (axis) {
    case 'x':
      return Rotation::about_x(angle);
    case 'y':
      return Rotation::about_y(angle);
    case 'z':
      return Rotation::about_z(angle);
    default:
      throw std::invalid_argument(fmt::format("sweep axis must be x, y or z (got '{}')", axis));
  }
}

double elapsed_since(std::chrono::steady_clock::time_point start)
{
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

std::string_view to_string(Analysis a)
{
  for (const auto& [value, name] : kAnalysisNames) {
    if (value == a) {
      return name;
    }
  }
  return "unknown";
}

bool CampaignConfig::has(Analysis a) const
{
  return std::find(analyses.begin(), analyses.end(), a) != analyses.end();
}

ConfigError::ConfigError(std::vector<std::string> violations)
    : std::runtime_error([&] {
        std::string msg = "invalid campaign config:";
        for (const auto& v : violations) {
          msg += "\n  - " + v;
        }
        return msg;
      }()),
      violations_(std::move(violations))
{
}

CampaignConfig parse_config(std::string_view text, const std::filesystem::path& base_dir)
{
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ConfigError({fmt::format("malformed JSON: {}", e.what())});
  }
  Validator v;
  if (!j.is_object()) {
    throw ConfigError({"top level must be a JSON object"});
  }
  v.reject_unknown(j, "config",
                   {"name", "seed", "trials", "grid", "model_a", "model_b", "settings_a",
                    "settings_b", "analyses", "lambda_samples"});

  CampaignConfig cfg;
  if (!j.contains("name") || !j["name"].is_string() || j["name"].get<std::string>().empty()) {
    v.fail("name: required non-empty string");
  } else {
    cfg.name = j["name"].get<std::string>();
  }
  if (!j.contains("seed")) {
    v.fail("seed: required (no default, runs must be reproducible)");
  } else if (auto s = v.count(j["seed"], "seed", 0)) {
    cfg.seed = *s;
  }
  if (j.contains("trials")) {
    if (auto n = v.count(j["trials"], "trials", 1)) {
      cfg.trials = *n;
    }
  }
  if (j.contains("lambda_samples")) {
    if (auto n = v.count(j["lambda_samples"], "lambda_samples", 1)) {
      cfg.lambda_samples = *n;
    }
  }
  if (j.contains("grid")) {
    const auto& g = j["grid"];
    if (!g.is_array() || g.size() != 3) {
      v.fail("grid: expected [n_alpha, n_u, n_gamma]");
    } else {
      std::size_t* dst[] = {&cfg.grid.n_alpha, &cfg.grid.n_u, &cfg.grid.n_gamma};
      for (std::size_t i = 0; i < 3; ++i) {
        if (auto n = v.count(g[i], fmt::format("grid[{}]", i), 2)) {
          *dst[i] = *n;
        }
      }
    }
  }
  for (auto [key, dst] : {std::pair{"model_a", &cfg.model_a}, std::pair{"model_b", &cfg.model_b}}) {
    if (!j.contains(key)) {
      v.fail(fmt::format("{}: required", key));
    } else if (auto m = parse_model(j[key], key, base_dir, v)) {
      *dst = std::move(*m);
    }
  }
  for (auto [key, dst] :
       {std::pair{"settings_a", &cfg.settings_a}, std::pair{"settings_b", &cfg.settings_b}}) {
    if (!j.contains(key)) {
      v.fail(fmt::format("{}: required", key));
    } else {
      *dst = parse_settings(j[key], key, v);
    }
  }
  std::set<std::string> seen;
  for (const auto* list : {&cfg.settings_a, &cfg.settings_b}) {
    for (const auto& s : *list) {
      if (!seen.insert(s.label).second) {
        v.fail(fmt::format("duplicate setting label '{}'", s.label));
      }
    }
  }
  if (j.contains("analyses")) {
    cfg.analyses.clear();
    if (!j["analyses"].is_array()) {
      v.fail("analyses: expected an array of names");
    } else {
      for (const auto& a : j["analyses"]) {
        const auto it = std::find_if(std::begin(kAnalysisNames), std::end(kAnalysisNames),
                                     [&](const auto& p) { return a.is_string() && a.get<std::string>() == p.second; });
        if (it == std::end(kAnalysisNames)) {
          v.fail(fmt::format("analyses: unknown analysis {}", a.dump()));
        } else if (!cfg.has(it->first)) {
          cfg.analyses.push_back(it->first);
        } else {
          v.fail(fmt::format("analyses: '{}' listed twice", it->second));
        }
      }
    }
  }
  for (Analysis a : {Analysis::kChsh, Analysis::kLambdaBound}) {
    if (cfg.has(a) && j.contains("settings_a") && j.contains("settings_b") &&
        (j["settings_a"].size() != 2 || j["settings_b"].size() != 2)) {
      v.fail(fmt::format("analysis '{}' requires exactly two settings per wing (got {} and {})",
                         to_string(a), j["settings_a"].size(), j["settings_b"].size()));
    }
  }

  if (!v.ok()) {
    throw ConfigError(v.take());
  }
  return cfg;
}

CampaignConfig load_config(const std::filesystem::path& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ConfigError({fmt::format("cannot open config '{}'", path.string())});
  }
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path.parent_path());
}

Json config_to_json(const CampaignConfig& cfg)
{
  Json j;
  j["name"] = cfg.name;
  j["seed"] = cfg.seed;
  j["trials"] = cfg.trials;
  j["grid"] = Json::array({cfg.grid.n_alpha, cfg.grid.n_u, cfg.grid.n_gamma});
  j["model_a"] = model_to_json(cfg.model_a);
  j["model_b"] = model_to_json(cfg.model_b);
  j["settings_a"] = settings_to_json(cfg.settings_a);
  j["settings_b"] = settings_to_json(cfg.settings_b);
  Json analyses = Json::array();
  for (Analysis a : cfg.analyses) {
    analyses.push_back(std::string{to_string(a)});
  }
  j["analyses"] = std::move(analyses);
  j["lambda_samples"] = cfg.lambda_samples;
  return j;
}

std::string config_hash(const CampaignConfig& cfg)
{
  return fmt::format("{:016x}", fnv1a(config_to_json(cfg).dump()));
}

RunRecord run_campaign(const CampaignConfig& cfg, const RunOptions& options)
{
  const auto start = std::chrono::steady_clock::now();
  RunRecord rec;
  rec.config = cfg;
  rec.config_hash = config_hash(cfg);

  const QuadratureGrid grid = build_grid(cfg.grid.n_alpha, cfg.grid.n_u, cfg.grid.n_gamma);
  const DetectionModel& model_a = cfg.model_a.model;
  const DetectionModel& model_b = cfg.model_b.model;

  std::vector<DetectorSetting> as;
  std::vector<DetectorSetting> bs;
  for (const auto& s : cfg.settings_a) {
    as.push_back(s.setting());
  }
  for (const auto& s : cfg.settings_b) {
    bs.push_back(s.setting());
  }

  const bool want_independence = cfg.has(Analysis::kJointTable) || cfg.has(Analysis::kIndependence);
  for (std::size_t i = 0; i < as.size(); ++i) {
    for (std::size_t k = 0; k < bs.size(); ++k) {
      PairResult pr;
      pr.a_label = as[i].label;
      pr.b_label = bs[k].label;
      try {
        pr.mc = mc_run(model_a, model_b, as[i], bs[k], cfg.trials, derive_seed(cfg.seed, i * bs.size() + k),
                       options.mc);
        pr.quad_joint = quadrature_joint(model_a, model_b,
                                         relative_rotation(as[i].orientation, bs[k].orientation), grid);
      } catch (const std::exception& e) {
        throw std::runtime_error(
            fmt::format("campaign '{}', pair ({}, {}): {}", cfg.name, pr.a_label, pr.b_label, e.what()));
      }
      if (want_independence) {
        pr.independence = independence_report(pr.mc);
      }
      rec.pairs.push_back(std::move(pr));
    }
  }
  for (const auto& s : as) {
    rec.quad_marginals_a.push_back(quadrature_marginal(model_a, s.orientation, grid));
  }
  for (const auto& s : bs) {
    rec.quad_marginals_b.push_back(quadrature_marginal(model_b, s.orientation, grid));
  }

  if (cfg.has(Analysis::kChsh)) {
    const ChshLabels labels{as[0].label, as[1].label, bs[0].label, bs[1].label};
    std::map<SettingPair, JointStats> mc_joints;
    std::map<SettingPair, Estimate> quad_joints;
    for (const auto& p : rec.pairs) {
      mc_joints.emplace(SettingPair{p.a_label, p.b_label}, p.mc);
      quad_joints.emplace(SettingPair{p.a_label, p.b_label}, Estimate{p.quad_joint, 0.0});
    }
    // Marginals come from their own runs so all six components are independent.
    const auto ma2 = mc_marginal(model_a, as[1], cfg.trials, derive_seed(cfg.seed, kMarginalA2Tag), options.mc);
    const auto mb2 = mc_marginal(model_b, bs[1], cfg.trials, derive_seed(cfg.seed, kMarginalB2Tag), options.mc);
    rec.chsh_mc = chsh_combination(mc_joints, labels, Estimate{ma2.p, ma2.se}, Estimate{mb2.p, mb2.se});
    rec.chsh_quadrature = chsh_combination(quad_joints, labels, Estimate{rec.quad_marginals_a[1], 0.0},
                                           Estimate{rec.quad_marginals_b[1], 0.0});
  }

  if (cfg.has(Analysis::kLambdaBound)) {
    Rng rng(derive_seed(cfg.seed, kLambdaTag));
    std::vector<Rotation> hidden;
    hidden.reserve(cfg.lambda_samples);
    for (std::uint64_t t = 0; t < cfg.lambda_samples; ++t) {
      hidden.push_back(haar_sample(rng));
    }
    const ChshSettings settings{as[0].orientation, as[1].orientation, bs[0].orientation, bs[1].orientation};
    const auto lb = check_lambda_bound(model_a, model_b, settings, hidden);
    rec.lambda_bound = LambdaBoundSummary{cfg.lambda_samples, lb.n_in_bound, lb.min, lb.max, lb.mean, lb.se_mean};
  }

  rec.wall_time_s = elapsed_since(start);
  return rec;
}

RunRecord run_sweep(const CampaignConfig& cfg, char axis, std::size_t points, const RunOptions& options)
{
  if (points < 2) {
    throw std::invalid_argument("sweep needs at least two points");
  }
  const auto start = std::chrono::steady_clock::now();
  RunRecord rec;
  rec.config = cfg;
  rec.config_hash = config_hash(cfg);
  rec.sweep_axis = std::string(1, axis);

  const QuadratureGrid grid = build_grid(cfg.grid.n_alpha, cfg.grid.n_u, cfg.grid.n_gamma);
  const DetectorSetting a = cfg.settings_a.front().setting();
  for (std::size_t k = 0; k < points; ++k) {
    const double angle = std::numbers::pi * static_cast<double>(k) / static_cast<double>(points - 1);
    const Rotation r_ab = axis_rotation(axis, angle);
    const DetectorSetting b{fmt::format("sweep{}", k), compose(a.orientation, r_ab)};
    SweepPoint pt;
    pt.angle = angle;
    pt.mc = mc_run(cfg.model_a.model, cfg.model_b.model, a, b, cfg.trials,
                   derive_seed(cfg.seed, kSweepTagBase + k), options.mc);
    pt.quad_joint = quadrature_joint(cfg.model_a.model, cfg.model_b.model, r_ab, grid);
    pt.independence = independence_report(pt.mc);
    rec.sweep.push_back(std::move(pt));
  }
  rec.wall_time_s = elapsed_since(start);
  return rec;
}

Json record_to_json(const RunRecord& rec)
{
  Json j;
  j["software_version"] = rec.software_version;
  j["config_hash"] = rec.config_hash;
  j["wall_time_s"] = rec.wall_time_s;
  j["config"] = config_to_json(rec.config);
  j["quadrature_marginals"] = Json{{"a", rec.quad_marginals_a}, {"b", rec.quad_marginals_b}};
  Json pairs = Json::array();
  for (const auto& p : rec.pairs) {
    Json pj;
    pj["a_label"] = p.a_label;
    pj["b_label"] = p.b_label;
    pj["monte_carlo"] = stats_to_json(p.mc);
    pj["quad_joint"] = p.quad_joint;
    pj["independence"] = p.independence ? independence_to_json(*p.independence) : Json(nullptr);
    pairs.push_back(std::move(pj));
  }
  j["pairs"] = std::move(pairs);
  j["chsh"] = Json{{"monte_carlo", rec.chsh_mc ? chsh_to_json(*rec.chsh_mc) : Json(nullptr)},
                   {"quadrature", rec.chsh_quadrature ? chsh_to_json(*rec.chsh_quadrature) : Json(nullptr)}};
  if (rec.lambda_bound) {
    const auto& lb = *rec.lambda_bound;
    j["lambda_bound"] = Json{{"samples", lb.samples}, {"in_bound", lb.in_bound}, {"min", lb.min},
                             {"max", lb.max},         {"mean", lb.mean},         {"se_mean", lb.se_mean}};
  } else {
    j["lambda_bound"] = nullptr;
  }
  Json sweep = Json::array();
  for (const auto& pt : rec.sweep) {
    sweep.push_back(Json{{"angle", pt.angle},
                         {"monte_carlo", stats_to_json(pt.mc)},
                         {"quad_joint", pt.quad_joint},
                         {"independence", independence_to_json(pt.independence)}});
  }
  j["sweep"] = Json{{"axis", rec.sweep_axis}, {"points", std::move(sweep)}};
  return j;
}

RunRecord record_from_json(const Json& j, const std::filesystem::path& base_dir)
{
  RunRecord rec;
  rec.software_version = j.at("software_version").get<std::string>();
  rec.config_hash = j.at("config_hash").get<std::string>();
  rec.wall_time_s = j.at("wall_time_s").get<double>();
  rec.config = parse_config(j.at("config").dump(), base_dir);
  rec.quad_marginals_a = j.at("quadrature_marginals").at("a").get<std::vector<double>>();
  rec.quad_marginals_b = j.at("quadrature_marginals").at("b").get<std::vector<double>>();
  for (const auto& pj : j.at("pairs")) {
    PairResult p;
    p.a_label = pj.at("a_label").get<std::string>();
    p.b_label = pj.at("b_label").get<std::string>();
    p.mc = stats_from_json(pj.at("monte_carlo"));
    p.quad_joint = pj.at("quad_joint").get<double>();
    if (!pj.at("independence").is_null()) {
      p.independence = independence_from_json(pj.at("independence"));
    }
    rec.pairs.push_back(std::move(p));
  }
  const auto& chsh = j.at("chsh");
  if (!chsh.at("monte_carlo").is_null()) {
    rec.chsh_mc = chsh_from_json(chsh.at("monte_carlo"));
  }
  if (!chsh.at("quadrature").is_null()) {
    rec.chsh_quadrature = chsh_from_json(chsh.at("quadrature"));
  }
  if (const auto& lb = j.at("lambda_bound"); !lb.is_null()) {
    rec.lambda_bound = LambdaBoundSummary{lb.at("samples").get<std::uint64_t>(),
                                          lb.at("in_bound").get<std::uint64_t>(),
                                          lb.at("min").get<double>(),
                                          lb.at("max").get<double>(),
                                          lb.at("mean").get<double>(),
                                          lb.at("se_mean").get<double>()};
  }
  rec.sweep_axis = j.at("sweep").at("axis").get<std::string>();
  for (const auto& pj : j.at("sweep").at("points")) {
    SweepPoint pt;
    pt.angle = pj.at("angle").get<double>();
    pt.mc = stats_from_json(pj.at("monte_carlo"));
    pt.quad_joint = pj.at("quad_joint").get<double>();
    pt.independence = independence_from_json(pj.at("independence"));
    rec.sweep.push_back(std::move(pt));
  }
  if (config_hash(rec.config) != rec.config_hash) {
    throw std::runtime_error("results.json config hash does not match its embedded config");
  }
  return rec;
}

std::string joints_csv(const RunRecord& rec)
{
  std::string out = "a_label,b_label,p_a,se_a,p_b,se_b,p_joint,se_joint,quad_joint,delta,z_delta\n";
  for (const auto& p : rec.pairs) {
    const IndependenceReport ind = p.independence ? *p.independence : independence_report(p.mc);
    out += fmt::format("{},{},{},{},{},{},{},{},{},{},{}\n", p.a_label, p.b_label, num(p.mc.p_a),
                       num(p.mc.se_a), num(p.mc.p_b), num(p.mc.se_b), num(p.mc.p_joint),
                       num(p.mc.se_joint), num(p.quad_joint), num(ind.delta), opt_num(ind.z_delta));
  }
  return out;
}

std::string chsh_csv(const RunRecord& rec)
{
  std::string out =
      "estimator,p_a2b2,se_a2b2,p_a2b1,se_a2b1,p_a1b2,se_a1b2,p_a1b1,se_a1b1,p_a2,se_a2,p_b2,se_b2,S,se_S,verdict\n";
  const auto row = [&](std::string_view name, const ChshReport& r) {
    out += fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n", name, num(r.a2b2.value),
                       num(r.a2b2.se), num(r.a2b1.value), num(r.a2b1.se), num(r.a1b2.value),
                       num(r.a1b2.se), num(r.a1b1.value), num(r.a1b1.se), num(r.marginal_a2.value),
                       num(r.marginal_a2.se), num(r.marginal_b2.value), num(r.marginal_b2.se), num(r.s),
                       num(r.se_s), to_string(r.verdict));
  };
  if (rec.chsh_mc) {
    row("monte_carlo", *rec.chsh_mc);
  }
  if (rec.chsh_quadrature) {
    row("quadrature", *rec.chsh_quadrature);
  }
  return out;
}

std::string sweep_csv(const RunRecord& rec)
{
  std::string out = "axis,angle,p_a,se_a,p_b,se_b,p_joint,se_joint,quad_joint,delta,z_delta\n";
  for (const auto& pt : rec.sweep) {
    out += fmt::format("{},{},{},{},{},{},{},{},{},{},{}\n", rec.sweep_axis, num(pt.angle), num(pt.mc.p_a),
                       num(pt.mc.se_a), num(pt.mc.p_b), num(pt.mc.se_b), num(pt.mc.p_joint),
                       num(pt.mc.se_joint), num(pt.quad_joint), num(pt.independence.delta),
                       opt_num(pt.independence.z_delta));
  }
  return out;
}

std::vector<std::filesystem::path> emit_outputs(const RunRecord& rec, const std::filesystem::path& out_dir,
                                                bool overwrite)
{
  std::vector<std::pair<std::filesystem::path, std::string>> files;
  files.emplace_back(out_dir / "results.json", record_to_json(rec).dump(2) + "\n");
  if (rec.config.has(Analysis::kJointTable) && !rec.pairs.empty()) {
    files.emplace_back(out_dir / "joints.csv", joints_csv(rec));
  }
  if (rec.chsh_mc || rec.chsh_quadrature) {
    files.emplace_back(out_dir / "chsh.csv", chsh_csv(rec));
  }
  if (!rec.sweep.empty()) {
    files.emplace_back(out_dir / "sweep.csv", sweep_csv(rec));
  }

  if (!overwrite) {
    for (const auto& [path, body] : files) {
      if (std::filesystem::exists(path)) {
        throw std::runtime_error(
            fmt::format("'{}' already exists (pass --overwrite to replace it)", path.string()));
      }
    }
  }
  std::filesystem::create_directories(out_dir);
  std::vector<std::filesystem::path> manifest;
  for (const auto& [path, body] : files) {
    write_text(path, body);
    manifest.push_back(path);
  }
  return manifest;
}

}  // namespace bellhaar
