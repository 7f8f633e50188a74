#include "zscore/run_config.hpp"

#include <fstream>
#include <sstream>

#include "config_json.hpp"
#include "zscore/error.hpp"

namespace zscore {

namespace json_io {

using nlohmann::json;

namespace {

template <class T>
void read(const json& j, const char* key, T& out) {
  auto it = j.find(key);
  if (it == j.end()) return;
  try {
    out = it->get<T>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Config, std::string("config key '") + key + "': " + e.what());
  }
}

void require_object(const json& j, const char* what) {
  if (!j.is_object()) throw Error(ErrorCode::Config, std::string(what) + " must be a JSON object");
}

void check_keys(const json& j, std::initializer_list<const char*> allowed, const char* what) {
  for (const auto& item : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || item.key() == a;
    if (!ok) throw Error(ErrorCode::Config, std::string("unknown key '") + item.key() + "' in " + what);
  }
}

json caps_json(const CapTable& caps, const std::array<std::string_view, 7>& names) {
  json j = json::object();
  for (std::size_t i = 0; i < names.size(); ++i) j[std::string(names[i])] = caps[i];
  return j;
}

void merge_caps(CapTable& caps, const std::array<std::string_view, 7>& names, const json& j,
                const char* what) {
  require_object(j, what);
  for (const auto& item : j.items()) {
    std::size_t i = 0;
    while (i < names.size() && names[i] != item.key()) ++i;
    if (i == names.size()) throw Error(ErrorCode::Config, "unknown sub-category '" + item.key() + "' in " + what);
    if (!item.value().is_number()) throw Error(ErrorCode::Config, std::string(what) + " values must be numbers");
    caps[i] = item.value().get<double>();
  }
}

}  // namespace

json to_json(const BlueprintConfig& cfg) {
  json refs = {
      {"lp_volume_ref_usd", cfg.refs.lp_volume_ref_usd},
      {"holding_ref_days", cfg.refs.holding_ref_days},
      {"freq_decay_per_month", cfg.refs.freq_decay_per_month},
      {"age_ref_days", cfg.refs.age_ref_days},
      {"cv_clamp", cfg.refs.cv_clamp},
      {"tvl_ref_usd", cfg.refs.tvl_ref_usd},
      {"swap_volume_ref_usd", cfg.refs.swap_volume_ref_usd},
      {"count_ref", cfg.refs.count_ref},
      {"diversity_ref_tokens", cfg.refs.diversity_ref_tokens},
      {"hops_ref", cfg.refs.hops_ref},
  };
  json tiers = json::object();
  for (const auto& [tier, score] : cfg.refs.fee_tier_score) tiers[std::to_string(tier)] = score;
  refs["fee_tier_score"] = tiers;
  return {{"lp_caps", caps_json(cfg.lp_caps, kLpSubCategories)},
          {"swap_caps", caps_json(cfg.swap_caps, kSwapSubCategories)},
          {"refs", refs}};
}

void merge(BlueprintConfig& cfg, const json& j) {
  require_object(j, "blueprint");
  check_keys(j, {"lp_caps", "swap_caps", "refs"}, "blueprint");
  if (j.contains("lp_caps")) merge_caps(cfg.lp_caps, kLpSubCategories, j["lp_caps"], "lp_caps");
  if (j.contains("swap_caps")) merge_caps(cfg.swap_caps, kSwapSubCategories, j["swap_caps"], "swap_caps");
  if (!j.contains("refs")) return;
  const json& r = j["refs"];
  require_object(r, "refs");
  check_keys(r,
             {"lp_volume_ref_usd", "holding_ref_days", "freq_decay_per_month", "age_ref_days", "cv_clamp",
              "tvl_ref_usd", "swap_volume_ref_usd", "count_ref", "diversity_ref_tokens", "hops_ref",
              "fee_tier_score"},
             "refs");
  read(r, "lp_volume_ref_usd", cfg.refs.lp_volume_ref_usd);
  read(r, "holding_ref_days", cfg.refs.holding_ref_days);
  read(r, "freq_decay_per_month", cfg.refs.freq_decay_per_month);
  read(r, "age_ref_days", cfg.refs.age_ref_days);
  read(r, "cv_clamp", cfg.refs.cv_clamp);
  read(r, "tvl_ref_usd", cfg.refs.tvl_ref_usd);
  read(r, "swap_volume_ref_usd", cfg.refs.swap_volume_ref_usd);
  read(r, "count_ref", cfg.refs.count_ref);
  read(r, "diversity_ref_tokens", cfg.refs.diversity_ref_tokens);
  read(r, "hops_ref", cfg.refs.hops_ref);
  if (r.contains("fee_tier_score")) {
    require_object(r["fee_tier_score"], "fee_tier_score");
    for (const auto& item : r["fee_tier_score"].items()) {
      int tier = 0;
      try {
        tier = std::stoi(item.key());
      } catch (const std::exception&) {
        throw Error(ErrorCode::Config, "fee_tier_score key '" + item.key() + "' is not an integer");
      }
      if (!item.value().is_number()) throw Error(ErrorCode::Config, "fee_tier_score values must be numbers");
      cfg.refs.fee_tier_score[tier] = item.value().get<double>();
    }
  }
}

json to_json(const ModelConfig& cfg) {
  json blocks = json::array();
  for (const auto& [in, out] : cfg.block_dims) blocks.push_back({in, out});
  return {{"input_dim", cfg.input_dim},   {"block_dims", blocks},
          {"head_dims", cfg.head_dims},   {"dropout_p", cfg.dropout_p},
          {"ln_epsilon", cfg.ln_epsilon}, {"seed", cfg.seed}};
}

void merge(ModelConfig& cfg, const json& j) {
  require_object(j, "model");
  check_keys(j, {"input_dim", "block_dims", "head_dims", "dropout_p", "ln_epsilon", "seed"}, "model");
  read(j, "input_dim", cfg.input_dim);
  read(j, "block_dims", cfg.block_dims);
  read(j, "head_dims", cfg.head_dims);
  read(j, "dropout_p", cfg.dropout_p);
  read(j, "ln_epsilon", cfg.ln_epsilon);
  read(j, "seed", cfg.seed);
}

json to_json(const TrainConfig& cfg) {
  return {{"lr", cfg.lr},
          {"weight_decay", cfg.weight_decay},
          {"max_epochs", cfg.max_epochs},
          {"batch_size", cfg.batch_size},
          {"plateau_factor", cfg.plateau_factor},
          {"plateau_patience", cfg.plateau_patience},
          {"min_lr", cfg.min_lr},
          {"early_stop_patience", cfg.early_stop_patience},
          {"min_improvement", cfg.min_improvement},
          {"target_scale", cfg.target_scale},
          {"loss", cfg.loss},
          {"seed", cfg.seed}};
}

void merge(TrainConfig& cfg, const json& j) {
  require_object(j, "train");
  check_keys(j,
             {"lr", "weight_decay", "max_epochs", "batch_size", "plateau_factor", "plateau_patience", "min_lr",
              "early_stop_patience", "min_improvement", "target_scale", "loss", "seed"},
             "train");
  read(j, "lr", cfg.lr);
  read(j, "weight_decay", cfg.weight_decay);
  read(j, "max_epochs", cfg.max_epochs);
  read(j, "batch_size", cfg.batch_size);
  read(j, "plateau_factor", cfg.plateau_factor);
  read(j, "plateau_patience", cfg.plateau_patience);
  read(j, "min_lr", cfg.min_lr);
  read(j, "early_stop_patience", cfg.early_stop_patience);
  read(j, "min_improvement", cfg.min_improvement);
  read(j, "target_scale", cfg.target_scale);
  read(j, "loss", cfg.loss);
  read(j, "seed", cfg.seed);
}

}  // namespace json_io

void RunConfig::validate() const {
  if (!(sigma >= 0.0)) throw Error(ErrorCode::Config, "sigma must be >= 0");
  if (!(val_fraction > 0.0 && val_fraction < 1.0)) {
    throw Error(ErrorCode::Config, "val_fraction must lie strictly between 0 and 1");
  }
  if (observation_end < 0) throw Error(ErrorCode::Config, "observation_end must be >= 0");
  blueprint.validate();
  ModelConfig m = model;
  if (m.input_dim == 0) m.input_dim = 1;
  m.validate();
  train.validate();
}

RunConfig apply_config_json(RunConfig cfg, const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::Config, std::string("config is not valid JSON: ") + e.what());
  }
  json_io::require_object(j, "config");
  json_io::check_keys(j, {"role", "seed", "sigma", "val_fraction", "observation_end", "blueprint", "model", "train"},
                      "config");
  if (j.contains("role")) {
    if (!j["role"].is_string()) throw Error(ErrorCode::Config, "role must be a string");
    auto role = parse_role(j["role"].get<std::string>());
    if (!role) throw Error(ErrorCode::Config, "role must be 'lp' or 'swap'");
    cfg.role = *role;
  }
  if (j.contains("seed")) {
    json_io::read(j, "seed", cfg.seed);
    cfg.model.seed = cfg.seed;
    cfg.train.seed = cfg.seed;
  }
  json_io::read(j, "sigma", cfg.sigma);
  json_io::read(j, "val_fraction", cfg.val_fraction);
  json_io::read(j, "observation_end", cfg.observation_end);
  if (j.contains("blueprint")) json_io::merge(cfg.blueprint, j["blueprint"]);
  if (j.contains("model")) json_io::merge(cfg.model, j["model"]);
  if (j.contains("train")) json_io::merge(cfg.train, j["train"]);
  return cfg;
}

RunConfig load_run_config(const std::string& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return apply_config_json(std::move(base), ss.str());
}

std::string dump_run_config(const RunConfig& cfg) {
  nlohmann::json j = {{"role", std::string(to_string(cfg.role))},
                      {"seed", cfg.seed},
                      {"sigma", cfg.sigma},
                      {"val_fraction", cfg.val_fraction},
                      {"observation_end", cfg.observation_end},
                      {"blueprint", json_io::to_json(cfg.blueprint)},
                      {"model", json_io::to_json(cfg.model)},
                      {"train", json_io::to_json(cfg.train)}};
  return j.dump(2);
}

}  // namespace zscore
