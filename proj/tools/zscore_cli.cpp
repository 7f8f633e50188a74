// zscore command-line front end. Talks to the library only through zscore.h.
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "zscore/zscore.h"

namespace {

namespace fs = std::filesystem;

constexpr int kExitOk = 0;
constexpr int kExitPipeline = 1;
constexpr int kExitUsage = 2;

// Raised for failures of a library call; carries the exit code to use.
struct Failure {
  int exit_code;
};

template <class T, void (*Free)(T*)>
struct Deleter {
  void operator()(T* p) const { Free(p); }
};
template <class T, void (*Free)(T*)>
using Handle = std::unique_ptr<T, Deleter<T, Free>>;

using ConfigPtr = Handle<zs_config, zs_config_free>;
using EventsPtr = Handle<zs_events, zs_events_free>;
using FeaturesPtr = Handle<zs_features, zs_features_free>;
using ScoresPtr = Handle<zs_scores, zs_scores_free>;
using DatasetPtr = Handle<zs_dataset, zs_dataset_free>;
using ModelPtr = Handle<zs_model, zs_model_free>;
using PredictionsPtr = Handle<zs_predictions, zs_predictions_free>;
using ReportPtr = Handle<zs_report, zs_report_free>;

void check(zs_status status, const char* stage) {
  if (status == ZS_OK) return;
  std::fprintf(stderr, "error: %s: %s (%s)\n", stage, zs_last_error(), zs_status_name(status));
  throw Failure{kExitPipeline};
}

void usage_error(const std::string& message) {
  std::fprintf(stderr, "usage error: %s\n", message.c_str());
  throw Failure{kExitUsage};
}

void print_epoch(const zs_epoch* e, void*) {
  std::printf("%d,%.9g,%.9g,%.9g\n", e->epoch, e->train_mse, e->val_mse, e->lr);
  std::fflush(stdout);
}

struct Common {
  std::string role;
  std::optional<std::uint64_t> seed;
  std::string config;
  std::string out_dir = ".";
  unsigned threads = 0;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--role", c.role, "Wallet role: lp or swap")->check(CLI::IsMember({"lp", "swap"}));
  cmd->add_option("--seed", c.seed, "Run seed (overrides the config file)");
  cmd->add_option("--config", c.config, "JSON config file (default: $ZSCORE_CONFIG)");
  cmd->add_option("--out-dir", c.out_dir, "Output directory")->capture_default_str();
  cmd->add_option("--threads", c.threads, "Training worker threads (0 = all cores)");
}

std::string out_path(const Common& c, const char* name) { return (fs::path(c.out_dir) / name).string(); }

// Defaults, then the config file, then flags. Config problems are usage errors.
ConfigPtr make_config(const Common& c) {
  zs_config* raw = nullptr;
  check(zs_config_new(&raw), "config");
  ConfigPtr cfg(raw);
  std::string path = c.config;
  if (path.empty()) {
    if (const char* env = std::getenv("ZSCORE_CONFIG"); env != nullptr) path = env;
  }
  auto usage_on_failure = [](zs_status s) {
    if (s != ZS_OK) usage_error(std::string("invalid configuration: ") + zs_last_error());
  };
  if (!path.empty()) usage_on_failure(zs_config_apply_file(cfg.get(), path.c_str()));
  if (!c.role.empty()) usage_on_failure(zs_config_set_role(cfg.get(), c.role == "lp" ? ZS_ROLE_LP : ZS_ROLE_SWAP));
  if (c.seed) usage_on_failure(zs_config_set_seed(cfg.get(), *c.seed));
  usage_on_failure(zs_config_set_threads(cfg.get(), c.threads));
  usage_on_failure(zs_config_validate(cfg.get()));
  return cfg;
}

zs_role config_role(const zs_config* cfg) {
  zs_role role = ZS_ROLE_LP;
  check(zs_config_get_role(cfg, &role), "config");
  return role;
}

std::uint64_t config_seed(const zs_config* cfg) {
  std::uint64_t seed = 0;
  check(zs_config_get_seed(cfg, &seed), "config");
  return seed;
}

std::string manifest_path_for(const std::string& events_path) {
  fs::path p(events_path);
  p.replace_extension(".manifest.json");
  return p.string();
}

EventsPtr read_events(const std::string& path) {
  zs_events* raw = nullptr;
  check(zs_events_read(path.c_str(), &raw), "ingest");
  return EventsPtr(raw);
}

FeaturesPtr read_features(const std::string& path, zs_role role) {
  zs_features* raw = nullptr;
  check(zs_features_read(path.c_str(), role, &raw), "features");
  return FeaturesPtr(raw);
}

ScoresPtr read_scores(const std::string& path, zs_role role) {
  zs_scores* raw = nullptr;
  check(zs_scores_read(path.c_str(), role, &raw), "scores");
  return ScoresPtr(raw);
}

void write_config_snapshot(const zs_config* cfg, const std::string& path) {
  char* text = nullptr;
  check(zs_config_dump(cfg, &text), "config");
  std::unique_ptr<char, void (*)(char*)> owned(text, zs_string_free);
  std::error_code ec;
  if (fs::path(path).has_parent_path()) fs::create_directories(fs::path(path).parent_path(), ec);
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (f == nullptr) {
    std::fprintf(stderr, "error: config: cannot write %s\n", path.c_str());
    throw Failure{kExitPipeline};
  }
  std::fprintf(f, "%s\n", owned.get());
  std::fclose(f);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"zscore: behavioural wallet scoring for AMM liquidity providers and swappers"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(zs_version()));

  // synth
  Common synth_c;
  std::optional<std::size_t> synth_n;
  std::string synth_mix, synth_out;
  int synth_span = 1200;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic wallet cohort as event JSONL");
  add_common(synth, synth_c);
  synth->add_option("--n", synth_n, "Number of wallets")->required()->check(CLI::PositiveNumber);
  synth->add_option("--mix", synth_mix, "Archetype mix JSON (default mix if omitted)")->check(CLI::ExistingFile);
  synth->add_option("--span-days", synth_span, "Cohort time span in days")->capture_default_str();
  synth->add_option("--out", synth_out, "Output JSONL (default: <out-dir>/events.jsonl)");

  // ingest
  Common ingest_c;
  std::string ingest_events;
  auto* ingest = app.add_subcommand("ingest", "Validate an event log and write it in canonical order");
  add_common(ingest, ingest_c);
  ingest->add_option("--events", ingest_events, "Event JSONL")->required()->check(CLI::ExistingFile);

  // featurize
  Common feat_c;
  std::string feat_events;
  std::int64_t feat_end = 0;
  auto* featurize = app.add_subcommand("featurize", "Extract per-wallet features and drop dusk wallets");
  add_common(featurize, feat_c);
  featurize->add_option("--events", feat_events, "Event JSONL")->required()->check(CLI::ExistingFile);
  featurize->add_option("--observation-end", feat_end, "Observation end (unix seconds; 0 = last event)");

  // score
  Common score_c;
  std::string score_features;
  auto* score = app.add_subcommand("score", "Compute blueprint scores from a feature CSV");
  add_common(score, score_c);
  score->add_option("--features", score_features, "Feature CSV")->required()->check(CLI::ExistingFile);

  // train
  Common train_c;
  std::string train_features, train_scores;
  auto* train = app.add_subcommand("train", "Build noisy labels, split wallets and train the regressor");
  add_common(train, train_c);
  train->add_option("--features", train_features, "Feature CSV")->required()->check(CLI::ExistingFile);
  train->add_option("--scores", train_scores, "Blueprint score CSV")->required()->check(CLI::ExistingFile);

  // predict
  Common predict_c;
  std::string predict_model, predict_features;
  auto* predict = app.add_subcommand("predict", "Score wallets with a trained checkpoint");
  add_common(predict, predict_c);
  predict->add_option("--model", predict_model, "Checkpoint manifest (model.json)")->required()->check(CLI::ExistingFile);
  predict->add_option("--features", predict_features, "Feature CSV")->required()->check(CLI::ExistingFile);

  // evaluate
  Common eval_c;
  std::string eval_features, eval_predictions, eval_scores;
  double eval_tol = 50.0;
  auto* evaluate = app.add_subcommand("evaluate", "Compare predictions with blueprint scores");
  add_common(evaluate, eval_c);
  evaluate->add_option("--features", eval_features, "Feature CSV")->required()->check(CLI::ExistingFile);
  evaluate->add_option("--predictions", eval_predictions, "Prediction CSV")->required()->check(CLI::ExistingFile);
  evaluate->add_option("--scores", eval_scores, "Blueprint score CSV")->required()->check(CLI::ExistingFile);
  evaluate->add_option("--tolerance", eval_tol, "Accuracy tolerance in score points")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);

  // pipeline
  Common pipe_c;
  std::string pipe_events;
  auto* pipeline = app.add_subcommand("pipeline", "Run every stage end to end");
  add_common(pipeline, pipe_c);
  pipeline->add_option("--events", pipe_events, "Event JSONL")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (synth->parsed()) {
      auto cfg = make_config(synth_c);
      const std::uint64_t seed = config_seed(cfg.get());
      const std::string out = synth_out.empty() ? out_path(synth_c, "events.jsonl") : synth_out;
      const char* mix = synth_mix.empty() ? nullptr : synth_mix.c_str();
      zs_events* raw = nullptr;
      const zs_status s = zs_cohort_generate(*synth_n, mix, seed, synth_span, &raw);
      if (s == ZS_INVALID_ARGUMENT) usage_error(zs_last_error());
      check(s, "synth");
      EventsPtr events(raw);
      check(zs_events_write(events.get(), out.c_str()), "synth");
      check(zs_cohort_write_manifest(*synth_n, mix, seed, synth_span, manifest_path_for(out).c_str()), "synth");
      std::fprintf(stderr, "wrote %zu events to %s\n", zs_events_count(events.get()), out.c_str());
    } else if (ingest->parsed()) {
      auto cfg = make_config(ingest_c);
      auto events = read_events(ingest_events);
      std::size_t violations = 0;
      check(zs_events_validate(events.get(), &violations), "ingest");
      if (violations != 0) {
        std::fprintf(stderr, "error: ingest: %zu invalid events; first: %s\n", violations, zs_last_error());
        return kExitPipeline;
      }
      check(zs_events_write(events.get(), out_path(ingest_c, "events.jsonl").c_str()), "ingest");
      std::fprintf(stderr, "ingested %zu events\n", zs_events_count(events.get()));
    } else if (featurize->parsed()) {
      auto cfg = make_config(feat_c);
      auto events = read_events(feat_events);
      zs_features* all_raw = nullptr;
      check(zs_features_extract(events.get(), cfg.get(), feat_end, &all_raw), "featurize");
      FeaturesPtr all(all_raw);
      zs_features* kept_raw = nullptr;
      std::size_t dropped = 0;
      check(zs_features_filter_dusk(all.get(), &kept_raw, &dropped), "dusk-filter");
      FeaturesPtr kept(kept_raw);
      check(zs_features_write(kept.get(), out_path(feat_c, "features.csv").c_str()), "featurize");
      check(zs_features_write_dropped(kept.get(), out_path(feat_c, "dusk_wallets.csv").c_str()), "featurize");
      std::fprintf(stderr, "%zu wallets kept, %zu dusk wallets dropped\n", zs_features_count(kept.get()), dropped);
    } else if (score->parsed()) {
      auto cfg = make_config(score_c);
      auto features = read_features(score_features, config_role(cfg.get()));
      zs_scores* raw = nullptr;
      check(zs_scores_compute(features.get(), cfg.get(), &raw), "blueprint");
      ScoresPtr scores(raw);
      check(zs_scores_write(scores.get(), out_path(score_c, "scores.csv").c_str()), "blueprint");
    } else if (train->parsed()) {
      auto cfg = make_config(train_c);
      const zs_role role = config_role(cfg.get());
      auto features = read_features(train_features, role);
      auto scores = read_scores(train_scores, role);
      zs_dataset* ds_raw = nullptr;
      check(zs_dataset_build(features.get(), scores.get(), cfg.get(), &ds_raw), "labels");
      DatasetPtr dataset(ds_raw);
      check(zs_dataset_write(dataset.get(), out_path(train_c, "labels.csv").c_str()), "labels");
      std::printf("epoch,train_mse,val_mse,lr\n");
      zs_model* m_raw = nullptr;
      check(zs_model_train(dataset.get(), cfg.get(), print_epoch, nullptr, &m_raw), "train");
      ModelPtr model(m_raw);
      check(zs_model_write_history(model.get(), out_path(train_c, "history.csv").c_str()), "train");
      check(zs_model_save(model.get(), out_path(train_c, "model.json").c_str()), "checkpoint");
      write_config_snapshot(cfg.get(), out_path(train_c, "config.json"));
    } else if (predict->parsed()) {
      auto cfg = make_config(predict_c);
      zs_model* m_raw = nullptr;
      check(zs_model_load(predict_model.c_str(), &m_raw), "checkpoint");
      ModelPtr model(m_raw);
      // An explicit --role must agree with the checkpoint; otherwise the model decides.
      const zs_role role = predict_c.role.empty() ? zs_model_role(model.get()) : config_role(cfg.get());
      auto features = read_features(predict_features, role);
      zs_predictions* p_raw = nullptr;
      check(zs_model_predict(model.get(), features.get(), &p_raw), "predict");
      PredictionsPtr preds(p_raw);
      check(zs_predictions_write(preds.get(), out_path(predict_c, "predictions.csv").c_str()), "predict");
    } else if (evaluate->parsed()) {
      auto cfg = make_config(eval_c);
      const zs_role role = config_role(cfg.get());
      auto features = read_features(eval_features, role);
      auto scores = read_scores(eval_scores, role);
      zs_predictions* p_raw = nullptr;
      check(zs_predictions_read(eval_predictions.c_str(), &p_raw), "predictions");
      PredictionsPtr preds(p_raw);
      zs_features* sel_raw = nullptr;
      check(zs_features_select_predicted(features.get(), preds.get(), &sel_raw), "evaluate");
      FeaturesPtr selected(sel_raw);
      zs_report* r_raw = nullptr;
      check(zs_report_build(selected.get(), preds.get(), scores.get(), eval_tol, &r_raw), "evaluate");
      ReportPtr report(r_raw);
      check(zs_report_emit(report.get(), eval_c.out_dir.c_str()), "evaluate");
      std::printf("wallets=%zu tol_accuracy=%.6f\n", zs_report_wallets(report.get()),
                  zs_report_tol_accuracy(report.get()));
    } else if (pipeline->parsed()) {
      auto cfg = make_config(pipe_c);
      auto events = read_events(pipe_events);
      std::printf("epoch,train_mse,val_mse,lr\n");
      zs_report* r_raw = nullptr;
      check(zs_pipeline_run(events.get(), cfg.get(), pipe_c.out_dir.c_str(), print_epoch, nullptr, &r_raw),
            "pipeline");
      ReportPtr report(r_raw);
      std::printf("wallets=%zu tol_accuracy=%.6f\n", zs_report_wallets(report.get()),
                  zs_report_tol_accuracy(report.get()));
    }
  } catch (const Failure& f) {
    return f.exit_code;
  }
  return kExitOk;
}
