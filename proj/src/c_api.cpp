#include "zscore/zscore.h"

#include <cstdlib>
#include <cstring>
#include <fstream>
#include <new>
#include <sstream>
#include <string>

#include "zscore/cohort_synth.hpp"
#include "zscore/error.hpp"
#include "zscore/pipeline.hpp"

struct zs_config {
  zscore::RunConfig run;
  unsigned threads = 0;
};
struct zs_events {
  zscore::EventLog log;
};
struct zs_features {
  zscore::FeatureSet set;
  std::vector<std::string> dropped;
};
struct zs_scores {
  zscore::Role role;
  zscore::ScoreMap map;
};
struct zs_dataset {
  zscore::LabeledDataset data;
};
struct zs_model {
  zscore::Checkpoint checkpoint;
  zscore::TrainingHistory history;
};
struct zs_predictions {
  zscore::PredictionMap map;
};
struct zs_report {
  zscore::EvalReport report;
};

namespace {

thread_local std::string g_last_error;

zs_status to_status(zscore::ErrorCode code) {
  return static_cast<zs_status>(static_cast<int>(code));
}

template <class Fn>
zs_status guard(Fn&& fn) {
  try {
    g_last_error.clear();
    fn();
    return ZS_OK;
  } catch (const zscore::Error& e) {
    g_last_error = e.what();
    return to_status(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return ZS_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return ZS_INTERNAL;
  }
}

void require(bool ok, const char* what) {
  if (!ok) throw zscore::Error(zscore::ErrorCode::InvalidArgument, what);
}

zscore::Role to_role(zs_role role) {
  if (role == ZS_ROLE_LP) return zscore::Role::Lp;
  if (role == ZS_ROLE_SWAP) return zscore::Role::Swap;
  throw zscore::Error(zscore::ErrorCode::InvalidArgument, "unknown role");
}

zs_role from_role(zscore::Role role) { return role == zscore::Role::Lp ? ZS_ROLE_LP : ZS_ROLE_SWAP; }

std::string read_text(const char* path) {
  auto in = zscore::open_input(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<zscore::ArchetypeSpec> load_mix(const char* mix_path) {
  if (mix_path == nullptr || *mix_path == '\0') return zscore::default_mix();
  return zscore::parse_mix_json(read_text(mix_path));
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

zscore::TrainOptions train_options(const zs_config* cfg, zs_epoch_callback on_epoch, void* user) {
  zscore::TrainOptions opts;
  opts.threads = cfg->threads;
  if (on_epoch != nullptr) {
    opts.on_epoch = [on_epoch, user](const zscore::EpochRecord& r) {
      const zs_epoch e{r.epoch, r.train_mse, r.val_mse, r.lr};
      on_epoch(&e, user);
    };
  }
  return opts;
}

}  // namespace

extern "C" {

const char* zs_last_error(void) { return g_last_error.c_str(); }

const char* zs_status_name(zs_status status) {
  if (status == ZS_OK) return "Ok";
  if (status == ZS_INTERNAL) return "Internal";
  return zscore::error_code_name(static_cast<zscore::ErrorCode>(status));
}

const char* zs_version(void) { return "1.0.0"; }

void zs_string_free(char* s) { std::free(s); }

zs_status zs_config_new(zs_config** out) {
  return guard([&] {
    require(out != nullptr, "out is null");
    *out = new zs_config();
  });
}

void zs_config_free(zs_config* cfg) { delete cfg; }

zs_status zs_config_apply_file(zs_config* cfg, const char* path) {
  return guard([&] {
    require(cfg && path, "null argument");
    cfg->run = zscore::load_run_config(path, cfg->run);
  });
}

zs_status zs_config_apply_json(zs_config* cfg, const char* json) {
  return guard([&] {
    require(cfg && json, "null argument");
    cfg->run = zscore::apply_config_json(cfg->run, json);
  });
}

zs_status zs_config_set_role(zs_config* cfg, zs_role role) {
  return guard([&] {
    require(cfg, "null config");
    cfg->run.role = to_role(role);
  });
}

zs_status zs_config_get_role(const zs_config* cfg, zs_role* out) {
  return guard([&] {
    require(cfg && out, "null argument");
    *out = from_role(cfg->run.role);
  });
}

zs_status zs_config_set_seed(zs_config* cfg, uint64_t seed) {
  return guard([&] {
    require(cfg, "null config");
    cfg->run.seed = seed;
    cfg->run.model.seed = seed;
    cfg->run.train.seed = seed;
  });
}

zs_status zs_config_get_seed(const zs_config* cfg, uint64_t* out) {
  return guard([&] {
    require(cfg && out, "null argument");
    *out = cfg->run.seed;
  });
}

zs_status zs_config_set_threads(zs_config* cfg, unsigned threads) {
  return guard([&] {
    require(cfg, "null config");
    cfg->threads = threads;
  });
}

zs_status zs_config_validate(const zs_config* cfg) {
  return guard([&] {
    require(cfg, "null config");
    cfg->run.validate();
  });
}

zs_status zs_config_dump(const zs_config* cfg, char** out_json) {
  return guard([&] {
    require(cfg && out_json, "null argument");
    *out_json = dup_string(zscore::dump_run_config(cfg->run));
  });
}

zs_status zs_events_read(const char* path, zs_events** out) {
  return guard([&] {
    require(path && out, "null argument");
    *out = new zs_events{zscore::parse_events_file(path)};
  });
}

zs_status zs_events_write(const zs_events* events, const char* path) {
  return guard([&] {
    require(events && path, "null argument");
    auto f = zscore::open_output(path);
    zscore::write_events(events->log, f);
    if (!f.flush()) throw zscore::Error(zscore::ErrorCode::Io, std::string("write failed: ") + path);
  });
}

void zs_events_free(zs_events* events) { delete events; }

size_t zs_events_count(const zs_events* events) { return events ? events->log.size() : 0; }

int64_t zs_events_max_ts(const zs_events* events) { return events ? events->log.max_ts() : 0; }

zs_status zs_events_validate(const zs_events* events, size_t* out_violations) {
  return guard([&] {
    require(events && out_violations, "null argument");
    const auto v = zscore::validate_log(events->log);
    *out_violations = v.size();
    if (!v.empty()) {
      g_last_error = "event " + std::to_string(v.front().event_index) + ": " + v.front().detail;
    }
  });
}

zs_status zs_cohort_generate(size_t n_wallets, const char* mix_path, uint64_t seed, int span_days,
                             zs_events** out) {
  return guard([&] {
    require(out != nullptr, "out is null");
    auto log = zscore::generate_cohort(n_wallets, load_mix(mix_path), zscore::default_pool_universe(), seed,
                                       span_days);
    *out = new zs_events{std::move(log)};
  });
}

zs_status zs_cohort_write_manifest(size_t n_wallets, const char* mix_path, uint64_t seed, int span_days,
                                   const char* path) {
  return guard([&] {
    require(path != nullptr, "path is null");
    const auto mix = load_mix(mix_path);
    const auto pools = zscore::default_pool_universe();
    zscore::validate_mix(mix, pools.size());
    auto f = zscore::open_output(path);
    f << zscore::cohort_manifest_json(n_wallets, mix, pools, seed, span_days) << '\n';
  });
}

zs_status zs_features_extract(const zs_events* events, const zs_config* cfg, int64_t observation_end,
                              zs_features** out) {
  return guard([&] {
    require(events && cfg && out, "null argument");
    const std::int64_t end = observation_end != 0 ? observation_end : cfg->run.observation_end;
    *out = new zs_features{zscore::extract_features(events->log, cfg->run.role, end, cfg->run.blueprint), {}};
  });
}

zs_status zs_features_filter_dusk(const zs_features* features, zs_features** out_kept, size_t* out_dropped) {
  return guard([&] {
    require(features && out_kept, "null argument");
    auto split = zscore::filter_dusk(features->set);
    if (out_dropped) *out_dropped = split.dropped.size();
    *out_kept = new zs_features{std::move(split.kept), std::move(split.dropped)};
  });
}

zs_status zs_features_read(const char* path, zs_role role, zs_features** out) {
  return guard([&] {
    require(path && out, "null argument");
    auto in = zscore::open_input(path);
    *out = new zs_features{zscore::read_features_csv(in, to_role(role)), {}};
  });
}

zs_status zs_features_write(const zs_features* features, const char* path) {
  return guard([&] {
    require(features && path, "null argument");
    auto f = zscore::open_output(path);
    zscore::write_features_csv(features->set, f);
  });
}

zs_status zs_features_write_dropped(const zs_features* kept, const char* path) {
  return guard([&] {
    require(kept && path, "null argument");
    auto f = zscore::open_output(path);
    zscore::write_wallet_list(kept->dropped, f);
  });
}

zs_status zs_features_select_predicted(const zs_features* features, const zs_predictions* predictions,
                                       zs_features** out) {
  return guard([&] {
    require(features && predictions && out, "null argument");
    std::vector<std::string> wallets;
    for (const auto& [w, p] : predictions->map) wallets.push_back(w);
    *out = new zs_features{zscore::select_wallets(features->set, wallets), {}};
  });
}

void zs_features_free(zs_features* features) { delete features; }

size_t zs_features_count(const zs_features* features) { return features ? zscore::wallet_count(features->set) : 0; }

zs_role zs_features_role(const zs_features* features) {
  return features ? from_role(zscore::role_of(features->set)) : ZS_ROLE_LP;
}

zs_status zs_scores_compute(const zs_features* features, const zs_config* cfg, zs_scores** out) {
  return guard([&] {
    require(features && cfg && out, "null argument");
    *out = new zs_scores{zscore::role_of(features->set), zscore::score_features(features->set, cfg->run.blueprint)};
  });
}

zs_status zs_scores_read(const char* path, zs_role role, zs_scores** out) {
  return guard([&] {
    require(path && out, "null argument");
    auto in = zscore::open_input(path);
    const auto r = to_role(role);
    *out = new zs_scores{r, zscore::read_scores_csv(in, r)};
  });
}

zs_status zs_scores_write(const zs_scores* scores, const char* path) {
  return guard([&] {
    require(scores && path, "null argument");
    auto f = zscore::open_output(path);
    zscore::write_scores_csv(scores->map, scores->role, f);
  });
}

void zs_scores_free(zs_scores* scores) { delete scores; }

size_t zs_scores_count(const zs_scores* scores) { return scores ? scores->map.size() : 0; }

zs_status zs_scores_total(const zs_scores* scores, const char* wallet, double* out) {
  return guard([&] {
    require(scores && wallet && out, "null argument");
    auto it = scores->map.find(wallet);
    if (it == scores->map.end()) {
      throw zscore::Error(zscore::ErrorCode::MissingScore, std::string("no score for wallet ") + wallet);
    }
    *out = it->second.total;
  });
}

zs_status zs_dataset_build(const zs_features* features, const zs_scores* scores, const zs_config* cfg,
                           zs_dataset** out) {
  return guard([&] {
    require(features && scores && cfg && out, "null argument");
    cfg->run.validate();
    *out = new zs_dataset{zscore::build_labeled_dataset(features->set, scores->map, cfg->run)};
  });
}

zs_status zs_dataset_write(const zs_dataset* dataset, const char* path) {
  return guard([&] {
    require(dataset && path, "null argument");
    auto f = zscore::open_output(path);
    zscore::write_dataset_csv(dataset->data, f);
  });
}

zs_status zs_dataset_val_features(const zs_dataset* dataset, const zs_features* features, zs_features** out) {
  return guard([&] {
    require(dataset && features && out, "null argument");
    std::vector<std::string> val;
    for (const auto& [w, s] : dataset->data.split) {
      if (s == zscore::Split::Val) val.push_back(w);
    }
    *out = new zs_features{zscore::select_wallets(features->set, val), {}};
  });
}

void zs_dataset_free(zs_dataset* dataset) { delete dataset; }

zs_status zs_model_train(const zs_dataset* dataset, const zs_config* cfg, zs_epoch_callback on_epoch, void* user,
                         zs_model** out) {
  return guard([&] {
    require(dataset && cfg && out, "null argument");
    cfg->run.validate();
    auto result = zscore::train(dataset->data, cfg->run.model, cfg->run.train, train_options(cfg, on_epoch, user));
    auto ckpt = zscore::make_checkpoint(result, cfg->run.train, dataset->data.role);
    *out = new zs_model{std::move(ckpt), std::move(result.history)};
  });
}

zs_status zs_model_save(const zs_model* model, const char* manifest_path) {
  return guard([&] {
    require(model && manifest_path, "null argument");
    zscore::save_checkpoint(model->checkpoint, manifest_path);
  });
}

zs_status zs_model_load(const char* manifest_path, zs_model** out) {
  return guard([&] {
    require(manifest_path && out, "null argument");
    *out = new zs_model{zscore::load_checkpoint(manifest_path), {}};
  });
}

zs_status zs_model_write_history(const zs_model* model, const char* path) {
  return guard([&] {
    require(model && path, "null argument");
    auto f = zscore::open_output(path);
    zscore::write_history_csv(model->history, f);
  });
}

zs_status zs_model_predict(const zs_model* model, const zs_features* features, zs_predictions** out) {
  return guard([&] {
    require(model && features && out, "null argument");
    *out = new zs_predictions{zscore::predict_features(model->checkpoint, features->set)};
  });
}

double zs_model_val_mse(const zs_model* model) { return model ? model->checkpoint.val_mse : 0.0; }

zs_role zs_model_role(const zs_model* model) { return model ? from_role(model->checkpoint.role) : ZS_ROLE_LP; }

void zs_model_free(zs_model* model) { delete model; }

zs_status zs_predictions_read(const char* path, zs_predictions** out) {
  return guard([&] {
    require(path && out, "null argument");
    auto in = zscore::open_input(path);
    *out = new zs_predictions{zscore::read_predictions_csv(in)};
  });
}

zs_status zs_predictions_write(const zs_predictions* predictions, const char* path) {
  return guard([&] {
    require(predictions && path, "null argument");
    auto f = zscore::open_output(path);
    zscore::write_predictions_csv(predictions->map, f);
  });
}

size_t zs_predictions_count(const zs_predictions* predictions) { return predictions ? predictions->map.size() : 0; }

void zs_predictions_free(zs_predictions* predictions) { delete predictions; }

zs_status zs_report_build(const zs_features* features, const zs_predictions* predictions, const zs_scores* targets,
                          double tolerance, zs_report** out) {
  return guard([&] {
    require(features && predictions && targets && out, "null argument");
    *out = new zs_report{zscore::evaluate_predictions(features->set, predictions->map, targets->map, tolerance)};
  });
}

zs_status zs_report_emit(const zs_report* report, const char* dir) {
  return guard([&] {
    require(report && dir, "null argument");
    zscore::emit_report(report->report, dir);
  });
}

double zs_report_tol_accuracy(const zs_report* report) { return report ? report->report.tol_accuracy : 0.0; }

size_t zs_report_wallets(const zs_report* report) { return report ? report->report.n_wallets : 0; }

void zs_report_free(zs_report* report) { delete report; }

zs_status zs_pipeline_run(const zs_events* events, const zs_config* cfg, const char* out_dir,
                          zs_epoch_callback on_epoch, void* user, zs_report** out_report) {
  return guard([&] {
    require(events && cfg && out_dir, "null argument");
    auto result = zscore::run_pipeline(events->log, cfg->run, out_dir, train_options(cfg, on_epoch, user));
    if (out_report) *out_report = new zs_report{std::move(result.report)};
  });
}

}  // extern "C"
