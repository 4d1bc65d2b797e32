#include "fatswarm/config.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "fatswarm/error.hpp"

namespace fatswarm {

using Json = nlohmann::ordered_json;

namespace {

Json number_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

double number_or_inf(const Json& j) { return j.is_null() ? SwarmConfig::unbounded : j.get<double>(); }

Json weights_json(const SignalWeights& w) {
  return Json{{"w_close", w.w_close},
              {"w_safety", w.w_safety},
              {"w_neighbors", w.w_neighbors},
              {"w_visible", w.w_visible},
              {"w_nclose", w.w_nclose}};
}

SignalWeights weights_from(const Json& j) {
  SignalWeights w;
  w.w_close = j.at("w_close").get<double>();
  w.w_safety = j.at("w_safety").get<double>();
  w.w_neighbors = j.at("w_neighbors").get<double>();
  w.w_visible = j.at("w_visible").get<double>();
  w.w_nclose = j.at("w_nclose").get<double>();
  return w;
}

Json to_json(const ExperimentConfig& c) {
  Json j;
  j["id"] = c.id;
  j["world"] = {{"x_w", c.swarm.x_w}, {"y_w", c.swarm.y_w}, {"dt", c.swarm.dt}};
  j["swarm"] = {{"n", c.swarm.n},
                {"r_bot", c.swarm.r_bot},
                {"r_scan", number_or_null(c.swarm.r_scan)},
                {"delta_s", c.swarm.delta_s},
                {"v_min", c.swarm.v_min},
                {"v_max", c.swarm.v_max}};
  j["reward"] = {{"mode", to_string(c.mode)},
                 {"goal_radius", c.goal.rho_g ? Json(*c.goal.rho_g) : Json(nullptr)}};
  j["init"] = {{"kind", to_string(c.init.kind)}, {"epsilon", c.init.epsilon}};
  j["ppo"] = {{"gamma", c.ppo.gamma},
              {"lambda", c.ppo.lambda},
              {"eps_c_start", c.ppo.eps_c_start},
              {"eps_c_end", c.ppo.eps_c_end},
              {"alpha", c.ppo.alpha},
              {"beta", c.ppo.beta},
              {"epochs", c.ppo.epochs},
              {"horizon", c.ppo.horizon},
              {"episodes_per_batch", c.ppo.episodes_per_batch},
              {"update_epochs", c.ppo.update_epochs},
              {"minibatches", c.ppo.minibatches},
              {"discounted_rewards_to_go", c.ppo.discounted_rewards_to_go},
              {"workers", c.ppo.workers}};
  j["network"] = {{"hidden", c.ppo.hidden},
                  {"initial_std", c.ppo.initial_std},
                  {"policy_output_scale", c.ppo.policy_output_scale}};
  const DiscoveryConfig& d = c.discovery;
  j["discovery"] = {{"schedule", d.schedule.values},
                    {"horizons", d.horizons},
                    {"sigma_size", d.sigma_size},
                    {"max_chain", d.max_chain},
                    {"min_chain", d.min_chain},
                    {"eval_episodes", d.eval_episodes},
                    {"eps_conv", d.convergence.eps_conv},
                    {"k_consecutive", d.convergence.k_consecutive},
                    {"aux_weights", d.aux_weights ? weights_json(*d.aux_weights) : Json(nullptr)}};
  j["bench"] = {{"episodes", c.bench_episodes}};
  return j;
}

ExperimentConfig from_full_json(const Json& j) {
  ExperimentConfig c;
  c.id = j.at("id").get<std::string>();
  const Json& world = j.at("world");
  c.swarm.x_w = world.at("x_w").get<double>();
  c.swarm.y_w = world.at("y_w").get<double>();
  c.swarm.dt = world.at("dt").get<double>();
  const Json& swarm = j.at("swarm");
  c.swarm.n = swarm.at("n").get<std::size_t>();
  c.swarm.r_bot = swarm.at("r_bot").get<double>();
  c.swarm.r_scan = number_or_inf(swarm.at("r_scan"));
  c.swarm.delta_s = swarm.at("delta_s").get<double>();
  c.swarm.v_min = swarm.at("v_min").get<double>();
  c.swarm.v_max = swarm.at("v_max").get<double>();
  const Json& reward = j.at("reward");
  c.mode = parse_reward_mode(reward.at("mode").get<std::string>());
  if (!reward.at("goal_radius").is_null()) c.goal.rho_g = reward.at("goal_radius").get<double>();
  const Json& init = j.at("init");
  c.init.kind = parse_initial_kind(init.at("kind").get<std::string>());
  c.init.epsilon = init.at("epsilon").get<double>();
  const Json& ppo = j.at("ppo");
  c.ppo.gamma = ppo.at("gamma").get<double>();
  c.ppo.lambda = ppo.at("lambda").get<double>();
  c.ppo.eps_c_start = ppo.at("eps_c_start").get<double>();
  c.ppo.eps_c_end = ppo.at("eps_c_end").get<double>();
  c.ppo.alpha = ppo.at("alpha").get<double>();
  c.ppo.beta = ppo.at("beta").get<double>();
  c.ppo.epochs = ppo.at("epochs").get<std::size_t>();
  c.ppo.horizon = ppo.at("horizon").get<std::size_t>();
  c.ppo.episodes_per_batch = ppo.at("episodes_per_batch").get<std::size_t>();
  c.ppo.update_epochs = ppo.at("update_epochs").get<std::size_t>();
  c.ppo.minibatches = ppo.at("minibatches").get<std::size_t>();
  c.ppo.discounted_rewards_to_go = ppo.at("discounted_rewards_to_go").get<bool>();
  c.ppo.workers = ppo.at("workers").get<std::size_t>();
  const Json& net = j.at("network");
  c.ppo.hidden = net.at("hidden").get<std::vector<std::size_t>>();
  c.ppo.initial_std = net.at("initial_std").get<double>();
  c.ppo.policy_output_scale = net.at("policy_output_scale").get<double>();
  const Json& d = j.at("discovery");
  c.discovery.schedule.values = d.at("schedule").get<std::vector<double>>();
  c.discovery.horizons = d.at("horizons").get<std::vector<std::size_t>>();
  c.discovery.sigma_size = d.at("sigma_size").get<std::size_t>();
  c.discovery.max_chain = d.at("max_chain").get<std::size_t>();
  c.discovery.min_chain = d.at("min_chain").get<std::size_t>();
  c.discovery.eval_episodes = d.at("eval_episodes").get<std::size_t>();
  c.discovery.convergence.eps_conv = d.at("eps_conv").get<double>();
  c.discovery.convergence.k_consecutive = d.at("k_consecutive").get<std::size_t>();
  if (!d.at("aux_weights").is_null()) c.discovery.aux_weights = weights_from(d.at("aux_weights"));
  c.bench_episodes = j.at("bench").at("episodes").get<std::size_t>();
  return c;
}

// Overlays `user` onto `base`, rejecting keys that `base` does not have.
void merge_known(Json& base, const Json& user, const std::string& where) {
  if (!user.is_object()) throw Error(ErrorCode::ConfigParse, "config: " + where + " must be an object");
  for (const auto& [key, value] : user.items()) {
    const std::string path = where.empty() ? key : where + "." + key;
    if (!base.contains(key)) throw Error(ErrorCode::ConfigParse, "config: unknown key '" + path + "'");
    Json& slot = base[key];
    // aux_weights may go from null to an object, so only recurse into sections.
    if (slot.is_object() && where.empty())
      merge_known(slot, value, path);
    else
      slot = value;
  }
}

ExperimentConfig checked(const Json& merged) {
  ExperimentConfig c;
  try {
    c = from_full_json(merged);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ConfigParse, std::string("config: ") + e.what());
  } catch (const Error& e) {
    throw Error(ErrorCode::ConfigParse, std::string("config: ") + e.what());
  }
  try {
    c.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::ConfigParse, std::string("config: ") + e.what());
  }
  return c;
}

std::string upper(std::string s) {
  for (char& ch : s) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
  return s;
}

}  // namespace

EnvSpec ExperimentConfig::env() const {
  EnvSpec e = EnvSpec::make(swarm, mode);
  e.goal = goal;
  return e;
}

void ExperimentConfig::validate() const {
  swarm.validate();
  if (swarm.n < 2) throw Error(ErrorCode::InvalidArgument, "swarm.n must be at least 2");
  if (!(init.epsilon >= 0.0)) throw Error(ErrorCode::InvalidArgument, "init.epsilon must be >= 0");
  if (goal.rho_g && !(*goal.rho_g > 0.0)) throw Error(ErrorCode::InvalidArgument, "reward.goal_radius must be positive");
  ppo.validate();
  discovery.validate();
}

const std::vector<std::string>& preset_ids() {
  static const std::vector<std::string> ids{"A", "B", "C", "D", "E", "F"};
  return ids;
}

ExperimentConfig preset(std::string_view id) {
  struct Row {
    const char* id;
    std::size_t n;
    RewardMode mode;
    InitialKind kind;
  };
  static constexpr Row rows[] = {
      {"A", 6, RewardMode::PredefinedPoint, InitialKind::Packed},
      {"B", 8, RewardMode::PredefinedPoint, InitialKind::Scattered},
      {"C", 10, RewardMode::PredefinedPoint, InitialKind::Distributed},
      {"D", 6, RewardMode::UndefinedPoint, InitialKind::Packed},
      {"E", 8, RewardMode::UndefinedPoint, InitialKind::Scattered},
      {"F", 10, RewardMode::UndefinedPoint, InitialKind::Distributed},
  };
  for (const Row& r : rows) {
    if (id != r.id) continue;
    ExperimentConfig c;
    c.id = r.id;
    c.swarm.n = r.n;
    c.mode = r.mode;
    c.init.kind = r.kind;
    c.init.epsilon = 2.0 * c.swarm.r_bot;
    if (r.mode == RewardMode::UndefinedPoint) c.swarm.r_scan = SwarmConfig::unbounded;
    return c;
  }
  throw Error(ErrorCode::UnknownExperiment, "unknown experiment '" + std::string(id) + "' (expected one of A-F)");
}

std::string config_to_json(const ExperimentConfig& cfg) { return to_json(cfg).dump(2) + "\n"; }

ExperimentConfig config_from_json(std::string_view text) {
  Json user;
  try {
    user = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::ConfigParse, std::string("config: ") + e.what());
  }
  Json merged = to_json(ExperimentConfig{});
  merge_known(merged, user, "");
  return checked(merged);
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ConfigParse, "config: cannot open '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return config_from_json(ss.str());
}

void save_config(const ExperimentConfig& cfg, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write '" + path.string() + "'");
  out << config_to_json(cfg);
  if (!out) throw Error(ErrorCode::IoFailure, "write failed for '" + path.string() + "'");
}

void set_config_value(ExperimentConfig& cfg, std::string_view key, std::string_view value) {
  Json merged = to_json(cfg);
  Json parsed = Json::parse(value, nullptr, false);
  if (parsed.is_discarded()) parsed = std::string(value);

  const auto dot = key.find('.');
  Json patch;
  if (dot == std::string_view::npos) {
    patch[std::string(key)] = parsed;
  } else {
    patch[std::string(key.substr(0, dot))][std::string(key.substr(dot + 1))] = parsed;
  }
  merge_known(merged, patch, "");
  cfg = checked(merged);
}

std::vector<std::string> apply_env_overrides(ExperimentConfig& cfg, const EnvLookup& lookup) {
  const EnvLookup get = lookup ? lookup : EnvLookup([](const char* name) { return std::getenv(name); });
  std::vector<std::string> applied;
  const Json current = to_json(cfg);
  for (const auto& [section, body] : current.items()) {
    if (!body.is_object()) continue;
    for (const auto& [key, unused] : body.items()) {
      const std::string var = "FATSWARM_" + upper(section) + "_" + upper(key);
      if (const char* v = get(var.c_str())) {
        set_config_value(cfg, section + "." + key, v);
        applied.push_back(var);
      }
    }
  }
  return applied;
}

RewardMode parse_reward_mode(std::string_view s) {
  if (s == "predefined_point") return RewardMode::PredefinedPoint;
  if (s == "undefined_point") return RewardMode::UndefinedPoint;
  throw Error(ErrorCode::ConfigParse, "unknown reward mode '" + std::string(s) + "'");
}

InitialKind parse_initial_kind(std::string_view s) {
  if (s == "scattered") return InitialKind::Scattered;
  if (s == "distributed") return InitialKind::Distributed;
  if (s == "packed") return InitialKind::Packed;
  throw Error(ErrorCode::ConfigParse, "unknown initial kind '" + std::string(s) + "'");
}

}  // namespace fatswarm
