#include "zscore/pipeline.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "csv.hpp"
#include "zscore/error.hpp"

namespace zscore {

namespace fs = std::filesystem;

namespace {

template <class F>
std::map<std::string, F> pick(const std::map<std::string, F>& all, const std::vector<std::string>& wallets) {
  std::map<std::string, F> out;
  for (const auto& w : wallets) {
    if (auto it = all.find(w); it != all.end()) out.emplace(it->first, it->second);
  }
  return out;
}

template <class Fn>
auto stage(const char* name, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const Error& e) {
    throw Error(e.code(), std::string(name) + ": " + e.what());
  }
}

std::string fmt_exact(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

Role role_of(const FeatureSet& features) noexcept {
  return std::holds_alternative<LpFeatureMap>(features) ? Role::Lp : Role::Swap;
}

std::size_t wallet_count(const FeatureSet& features) noexcept {
  return std::visit([](const auto& m) { return m.size(); }, features);
}

std::vector<std::string> wallets_of(const FeatureSet& features) {
  return std::visit(
      [](const auto& m) {
        std::vector<std::string> out;
        out.reserve(m.size());
        for (const auto& [w, f] : m) out.push_back(w);
        return out;
      },
      features);
}

FeatureSet extract_features(const EventLog& log, Role role, std::int64_t observation_end,
                            const BlueprintConfig& cfg) {
  const std::int64_t end = observation_end == 0 ? log.max_ts() : observation_end;
  if (role == Role::Lp) return extract_lp_features(log, end, cfg);
  return extract_swap_features(log, end, cfg);
}

DuskSplit filter_dusk(const FeatureSet& features) {
  return std::visit(
      [](const auto& m) {
        auto r = filter_dusk(m);
        return DuskSplit{FeatureSet(std::move(r.kept)), std::move(r.dropped)};
      },
      features);
}

FeatureSet select_wallets(const FeatureSet& features, const std::vector<std::string>& wallets) {
  return std::visit([&](const auto& m) { return FeatureSet(pick(m, wallets)); }, features);
}

void write_features_csv(const FeatureSet& features, std::ostream& out) {
  std::visit([&](const auto& m) { write_features_csv(m, out); }, features);
}

FeatureSet read_features_csv(std::istream& in, Role role) {
  if (role == Role::Lp) return read_lp_features_csv(in);
  return read_swap_features_csv(in);
}

ScoreMap score_features(const FeatureSet& features, const BlueprintConfig& cfg) {
  return std::visit([&](const auto& m) { return score_all(m, cfg); }, features);
}

LabeledDataset build_labeled_dataset(const FeatureSet& features, const ScoreMap& scores, const RunConfig& cfg) {
  ScoreMap relevant;
  for (const auto& w : wallets_of(features)) {
    auto it = scores.find(w);
    if (it == scores.end()) throw Error(ErrorCode::MissingScore, "no blueprint score for wallet " + w);
    relevant.emplace(w, it->second);
  }
  const LabelMap labels = make_labels(relevant, cfg.sigma, cfg.seed);
  const SplitMap split = split_wallets(wallets_of(features), cfg.val_fraction, cfg.seed);
  return std::visit([&](const auto& m) { return build_dataset(m, labels, split, cfg.seed); }, features);
}

Checkpoint make_checkpoint(const TrainResult& result, const TrainConfig& train_config, Role role) {
  Checkpoint ckpt{result.params, train_config, role, model_input_names(role), result.history.best_val_mse,
                  result.history.best_epoch};
  return ckpt;
}

PredictionMap predict_features(const Checkpoint& checkpoint, const FeatureSet& features) {
  const Role role = role_of(features);
  if (checkpoint.role != role) {
    throw Error(ErrorCode::ShapeMismatch, "checkpoint was trained for role " +
                                              std::string(to_string(checkpoint.role)) + ", features are " +
                                              std::string(to_string(role)));
  }
  const auto wallets = wallets_of(features);
  PredictionMap out;
  if (wallets.empty()) return out;
  const std::size_t dim = model_input_names(role).size();
  Matrix raw(static_cast<Eigen::Index>(wallets.size()), static_cast<Eigen::Index>(dim));
  std::visit(
      [&](const auto& m) {
        Eigen::Index r = 0;
        for (const auto& [w, f] : m) {
          const auto x = model_inputs(f);
          for (std::size_t c = 0; c < dim; ++c) raw(r, static_cast<Eigen::Index>(c)) = x[c];
          ++r;
        }
      },
      features);
  const ColVector preds = predict(checkpoint.params, raw);
  for (std::size_t i = 0; i < wallets.size(); ++i) out.emplace(wallets[i], preds(static_cast<Eigen::Index>(i)));
  return out;
}

EvalReport evaluate_predictions(const FeatureSet& features, const PredictionMap& predictions,
                                const ScoreMap& targets, double tol) {
  std::map<std::string, double> target_totals;
  for (const auto& w : wallets_of(features)) {
    auto it = targets.find(w);
    if (it == targets.end()) throw Error(ErrorCode::MissingScore, "no blueprint score for wallet " + w);
    target_totals.emplace(w, it->second.total);
  }
  return std::visit([&](const auto& m) { return build_report(m, predictions, target_totals, tol); }, features);
}

void write_predictions_csv(const PredictionMap& predictions, std::ostream& out) {
  csv::write_row(out, {"wallet", "prediction"});
  for (const auto& [w, p] : predictions) csv::write_row(out, {w, fmt_exact(p)});
}

PredictionMap read_predictions_csv(std::istream& in) {
  const auto table = csv::read_table(in);
  if (table.header != std::vector<std::string>{"wallet", "prediction"}) {
    throw Error(ErrorCode::MalformedRecord, "prediction CSV header must be wallet,prediction");
  }
  PredictionMap out;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& cells = table.rows[r];
    const std::string where = "line " + std::to_string(r + 2) + ": ";
    if (cells.size() != 2) throw Error(ErrorCode::MalformedRecord, where + "wrong column count");
    double v = 0.0;
    try {
      std::size_t used = 0;
      v = std::stod(cells[1], &used);
      if (used != cells[1].size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw Error(ErrorCode::MalformedRecord, where + "prediction is not a number");
    }
    if (!out.emplace(cells[0], v).second) throw Error(ErrorCode::DuplicateEvent, where + "duplicate wallet " + cells[0]);
  }
  return out;
}

void write_history_csv(const TrainingHistory& history, std::ostream& out) {
  csv::write_row(out, {"epoch", "train_mse", "val_mse", "lr"});
  for (const auto& e : history.epochs) {
    csv::write_row(out, {std::to_string(e.epoch), fmt_exact(e.train_mse), fmt_exact(e.val_mse), fmt_exact(e.lr)});
  }
}

void write_wallet_list(const std::vector<std::string>& wallets, std::ostream& out) {
  csv::write_row(out, {"wallet"});
  for (const auto& w : wallets) csv::write_row(out, {w});
}

std::ofstream open_output(const std::string& path) {
  const fs::path p(path);
  std::error_code ec;
  if (p.has_parent_path()) fs::create_directories(p.parent_path(), ec);
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot open " + path + " for writing");
  return out;
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path);
  return in;
}

PipelineResult run_pipeline(const EventLog& log, const RunConfig& cfg, const std::string& out_dir,
                            const TrainOptions& options) {
  stage("config", [&] { cfg.validate(); });
  const fs::path dir(out_dir);
  auto path = [&](const char* name) { return (dir / name).string(); };
  PipelineResult result;

  stage("ingest", [&] {
    if (log.empty()) throw Error(ErrorCode::EmptyInput, "event log is empty");
    const auto violations = validate_log(log);
    if (!violations.empty()) {
      throw Error(ErrorCode::MalformedRecord, std::to_string(violations.size()) +
                                                  " invalid events, first at index " +
                                                  std::to_string(violations.front().event_index) + ": " +
                                                  violations.front().detail);
    }
  });

  const FeatureSet all = stage("featurize", [&] {
    auto f = extract_features(log, cfg.role, cfg.observation_end, cfg.blueprint);
    if (wallet_count(f) == 0) {
      throw Error(ErrorCode::EmptyInput, "no " + std::string(to_string(cfg.role)) + " wallets in the event log");
    }
    return f;
  });

  const DuskSplit filtered = stage("dusk-filter", [&] {
    auto split = filter_dusk(all);
    auto out = open_output(path("features.csv"));
    write_features_csv(split.kept, out);
    auto dusk = open_output(path("dusk_wallets.csv"));
    write_wallet_list(split.dropped, dusk);
    return split;
  });
  result.wallets_kept = wallet_count(filtered.kept);
  result.wallets_dropped = filtered.dropped.size();

  const ScoreMap scores = stage("blueprint", [&] {
    auto s = score_features(filtered.kept, cfg.blueprint);
    auto out = open_output(path("scores.csv"));
    write_scores_csv(s, cfg.role, out);
    return s;
  });

  const LabeledDataset dataset = stage("labels", [&] {
    auto ds = build_labeled_dataset(filtered.kept, scores, cfg);
    auto out = open_output(path("labels.csv"));
    write_dataset_csv(ds, out);
    return ds;
  });

  const TrainResult trained = stage("train", [&] {
    auto r = train(dataset, cfg.model, cfg.train, options);
    auto hist = open_output(path("history.csv"));
    write_history_csv(r.history, hist);
    return r;
  });
  result.history = trained.history;
  const Checkpoint ckpt = make_checkpoint(trained, cfg.train, cfg.role);
  stage("checkpoint", [&] { save_checkpoint(ckpt, path("model.json")); });

  std::vector<std::string> val_wallets;
  for (const auto& [w, s] : dataset.split) {
    if (s == Split::Val) val_wallets.push_back(w);
  }
  const FeatureSet val = select_wallets(filtered.kept, val_wallets);
  const PredictionMap preds = stage("predict", [&] {
    auto p = predict_features(ckpt, val);
    auto out = open_output(path("predictions.csv"));
    write_predictions_csv(p, out);
    return p;
  });

  result.report = stage("evaluate", [&] {
    auto report = evaluate_predictions(val, preds, scores);
    emit_report(report, out_dir);
    return report;
  });
  stage("config", [&] {
    auto out = open_output(path("config.json"));
    out << dump_run_config(cfg) << '\n';
  });
  return result;
}

}  // namespace zscore
