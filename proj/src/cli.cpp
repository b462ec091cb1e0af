#include "lguided/cli.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "lguided/checkpoint.hpp"
#include "lguided/dataset.hpp"
#include "lguided/error.hpp"
#include "lguided/model.hpp"
#include "lguided/trainer.hpp"

namespace lguided {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

struct CliConfig {
  std::string data_dir;
  std::string out_dir;
  std::string checkpoint;
  std::string pretrained;
  std::string precomputed_path;
  std::string contextual = "bilstm";
  std::string pool = "mean";
  std::string preset;
  std::string split = "test";
  std::vector<std::string> doc_ids;
  std::vector<std::size_t> t_values;
  std::size_t repeats = 1;
  bool wall_clock = false;
  HyperParams hp;
};

// Shared train-style flags. Defaults mirror the reference configuration:
// batch 25, lr 0.001, t 5, embeddings 300, hidden 150.
void add_model_flags(CLI::App* cmd, CliConfig& cfg) {
  cmd->set_help_flag("--help", "print help");
  cmd->add_option("--seed", cfg.hp.seed, "random seed")->capture_default_str();
  cmd->add_option("--epochs", cfg.hp.epochs, "training epochs")->capture_default_str();
  cmd->add_option("--batch-size", cfg.hp.batch_size, "mini-batch size")
      ->capture_default_str();
  cmd->add_option("--lr", cfg.hp.learning_rate, "learning rate")
      ->capture_default_str();
  cmd->add_option("--t", cfg.hp.protos, "embeddings per label")
      ->capture_default_str();
  cmd->add_option("--m-p", cfg.hp.embed_dim, "pretrained embedding size")
      ->capture_default_str();
  cmd->add_option("--h", cfg.hp.hidden, "LSTM hidden size per direction")
      ->capture_default_str();
  cmd->add_option("--m-l", cfg.hp.label_dim,
                  "label embedding dimension (must equal 2*h)");
  cmd->add_option("--max-len", cfg.hp.max_len, "max document length")
      ->capture_default_str();
  cmd->add_option("--min-count", cfg.hp.min_count, "vocabulary frequency floor")
      ->capture_default_str();
  cmd->add_option("--pretrained", cfg.pretrained, "GloVe-style vector file");
  cmd->add_flag("--freeze-embeddings", cfg.hp.freeze_embeddings,
                "do not update the embedding table");
  cmd->add_flag("--no-label-layer", cfg.hp.no_label_layer,
                "ablation: pooled encoder output, no label-guided layer");
  cmd->add_option("--pool", cfg.pool, "ablation pooling: mean, max or last")
      ->check(CLI::IsMember({"mean", "max", "last"}));
  cmd->add_option("--contextual", cfg.contextual, "encoder: bilstm or precomputed")
      ->check(CLI::IsMember({"bilstm", "precomputed"}));
  cmd->add_option("--precomputed", cfg.precomputed_path,
                  "precomputed contextual-embedding container");
  cmd->add_option("--layers", cfg.hp.layer_count,
                  "encoder layers consumed (precomputed mode)");
  cmd->add_option("--preset", cfg.preset, "desk: CI-scale dims (m_p 50, h 25)")
      ->check(CLI::IsMember({"desk"}));
  cmd->add_option("--clip-norm", cfg.hp.clip_norm,
                  "global gradient-norm clip, 0 disables")
      ->capture_default_str();
  cmd->add_option("--workers", cfg.hp.workers, "gradient workers per batch")
      ->capture_default_str();
  cmd->add_flag("--wall-clock", cfg.wall_clock,
                "report real seconds in logs (off keeps artifacts reproducible)");
}

// Flag interplay that has to fail before any compute.
void resolve_config(CLI::App* cmd, CliConfig& cfg) {
  if (cfg.hp.no_label_layer && cmd->count("--t") > 0) {
    throw UsageError("--no-label-layer removes the label-guided layer; "
                     "--t has no effect and the combination is rejected");
  }
  if (cfg.preset == "desk") {
    if (cmd->count("--m-p") == 0) cfg.hp.embed_dim = 50;
    if (cmd->count("--h") == 0) cfg.hp.hidden = 25;
  }
  if (cmd->count("--m-l") == 0) cfg.hp.label_dim = 2 * cfg.hp.hidden;
  cfg.hp.contextual = cfg.contextual == "precomputed" ? ContextualKind::kPrecomputed
                                                      : ContextualKind::kBiLstm;
  if (cfg.hp.contextual == ContextualKind::kPrecomputed &&
      cfg.precomputed_path.empty()) {
    throw UsageError("--contextual precomputed requires --precomputed FILE");
  }
  if (cfg.pool == "max") {
    cfg.hp.pool = PoolMode::kMax;
  } else if (cfg.pool == "last") {
    cfg.hp.pool = PoolMode::kLast;
  } else {
    cfg.hp.pool = PoolMode::kMean;
  }
  cfg.hp.validate();
}

json metrics_to_json(const Metrics& m, const std::vector<std::string>& labels) {
  json per_class = json::array();
  for (std::size_t i = 0; i < labels.size(); ++i) {
    per_class.push_back({{"label", labels[i]},
                         {"precision", m.precision[i]},
                         {"recall", m.recall[i]}});
  }
  return json{{"accuracy", m.accuracy},
              {"correct", m.correct},
              {"total", m.total},
              {"loss_mean", m.loss_mean},
              {"per_class", per_class}};
}

std::function<double()> make_clock(bool wall_clock) {
  if (!wall_clock) return {};
  return [] {
    return std::chrono::duration<double>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
  };
}

std::string metrics_log_text(const std::vector<EpochLog>& epochs) {
  std::string text;
  for (const auto& e : epochs) {
    json line{{"epoch", e.epoch},
              {"train_loss", e.train_loss},
              {"val_accuracy", e.val_accuracy},
              {"seconds", e.seconds}};
    text += line.dump();
    text += '\n';
  }
  return text;
}

struct TrainedRun {
  Model model;
  TrainResult result;
  Metrics test;
  bool has_test = false;
};

TrainedRun run_training(const CliConfig& cfg, const Dataset& data,
                        const PrecomputedStore* store, std::uint64_t seed,
                        std::ostream& err) {
  HyperParams hp = cfg.hp;
  hp.seed = seed;

  std::vector<std::vector<std::string>> corpus;
  corpus.reserve(data.train.size());
  for (const auto& doc : data.train) corpus.push_back(doc.tokens);
  const Vocabulary vocab = build_vocabulary(corpus, hp.min_count);

  SeededRng rng(seed);
  LoadReport report;
  TrainedRun run{build_model(hp, vocab, data.labels, rng, cfg.pretrained, &report),
                 {}, {}, false};
  if (!cfg.pretrained.empty()) {
    err << "pretrained vectors: matched " << report.matched << "/"
        << report.vocab_size << " vocabulary tokens\n";
  }

  TrainOptions opts;
  opts.store = store;
  opts.clock = make_clock(cfg.wall_clock);
  opts.progress = &err;
  run.result = train(run.model, data, opts);

  if (!data.test.empty()) {
    run.test = evaluate(run.model, data.test, store);
    run.has_test = true;
  }
  return run;
}

json run_summary(const TrainedRun& run, const std::string& checkpoint_path) {
  json j{{"checkpoint", checkpoint_path},
         {"epochs", run.result.epochs.size()},
         {"best_epoch", run.result.best_epoch},
         {"best_val_accuracy", run.result.best_val_accuracy}};
  if (run.has_test) j["test_accuracy"] = run.test.accuracy;
  return j;
}

int cmd_train(CLI::App* cmd, CliConfig& cfg, std::ostream& out, std::ostream& err) {
  resolve_config(cmd, cfg);
  const Dataset data = load_dataset(cfg.data_dir, cfg.hp.max_len);
  PrecomputedStore store;
  const PrecomputedStore* store_ptr = nullptr;
  if (cfg.hp.contextual == ContextualKind::kPrecomputed) {
    store = load_precomputed(cfg.precomputed_path);
    store_ptr = &store;
  }

  if (cfg.repeats <= 1) {
    TrainedRun run = run_training(cfg, data, store_ptr, cfg.hp.seed, err);
    const std::string ckpt = (fs::path(cfg.out_dir) / "checkpoint.lgdl").string();
    save_checkpoint(run.model, ckpt);
    write_file_atomic((fs::path(cfg.out_dir) / "metrics.ndjson").string(),
                      metrics_log_text(run.result.epochs));
    out << run_summary(run, ckpt).dump() << "\n";
    return 0;
  }

  // Repeated runs with consecutive seeds; reports the mean accuracy.
  json runs = json::array();
  double acc_sum = 0.0;
  for (std::size_t r = 0; r < cfg.repeats; ++r) {
    const std::uint64_t seed = cfg.hp.seed + r;
    TrainedRun run = run_training(cfg, data, store_ptr, seed, err);
    const fs::path run_dir = fs::path(cfg.out_dir) / ("run" + std::to_string(r));
    const std::string ckpt = (run_dir / "checkpoint.lgdl").string();
    save_checkpoint(run.model, ckpt);
    write_file_atomic((run_dir / "metrics.ndjson").string(),
                      metrics_log_text(run.result.epochs));
    json summary = run_summary(run, ckpt);
    summary["seed"] = seed;
    runs.push_back(summary);
    acc_sum += run.has_test ? run.test.accuracy : run.result.best_val_accuracy;
  }
  json j{{"repeats", cfg.repeats},
         {"mean_accuracy", acc_sum / static_cast<double>(cfg.repeats)},
         {"runs", runs}};
  out << j.dump() << "\n";
  return 0;
}

const std::vector<Document>& pick_split(const Dataset& data, const std::string& split) {
  if (split == "train") return data.train;
  if (split == "dev") {
    if (data.dev.empty()) throw DataError("dataset has no dev split");
    return data.dev;
  }
  if (data.test.empty()) throw DataError("dataset has no test split");
  return data.test;
}

std::string label_set_text(const std::vector<std::string>& labels) {
  std::string s = "{";
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (i) s += ", ";
    s += labels[i];
  }
  return s + "}";
}

struct LoadedModel {
  Model model;
  Dataset data;
  PrecomputedStore store;
  const PrecomputedStore* store_ptr = nullptr;
};

LoadedModel load_model_and_data(const CliConfig& cfg) {
  LoadedModel lm{load_checkpoint(cfg.checkpoint), {}, {}, nullptr};
  lm.data = load_dataset(cfg.data_dir, lm.model.hp.max_len);
  if (lm.model.labels != lm.data.labels) {
    throw DataError("label sets differ: checkpoint has " +
                    label_set_text(lm.model.labels) + ", dataset has " +
                    label_set_text(lm.data.labels));
  }
  if (lm.model.hp.contextual == ContextualKind::kPrecomputed) {
    if (cfg.precomputed_path.empty()) {
      throw UsageError("this checkpoint consumes precomputed contextual "
                       "embeddings; pass --precomputed FILE");
    }
    lm.store = load_precomputed(cfg.precomputed_path);
    lm.store_ptr = &lm.store;
  }
  return lm;
}

int cmd_eval(CliConfig& cfg, std::ostream& out, std::ostream&) {
  const LoadedModel lm = load_model_and_data(cfg);
  const auto& docs = pick_split(lm.data, cfg.split);
  const Metrics m = evaluate(lm.model, docs, lm.store_ptr);
  out << metrics_to_json(m, lm.model.labels).dump() << "\n";
  return 0;
}

int cmd_attend(CliConfig& cfg, std::ostream& out, std::ostream&) {
  const LoadedModel lm = load_model_and_data(cfg);
  const Model& model = lm.model;
  if (model.hp.no_label_layer) {
    throw UsageError("this checkpoint was trained with --no-label-layer; "
                     "it has no attention weights to export");
  }
  const auto& docs = pick_split(lm.data, cfg.split);

  json written = json::array();
  for (const std::string& id : cfg.doc_ids) {
    const Document* doc = nullptr;
    for (const auto& d : docs) {
      if (d.id == id) {
        doc = &d;
        break;
      }
    }
    if (!doc) {
      throw DataError("unknown doc id '" + id + "'; split '" + cfg.split +
                      "' has " + std::to_string(docs.size()) + " documents");
    }
    const std::size_t gold = model.label_index(doc->label);
    const DocForward fwd = model_forward(model, *doc, lm.store_ptr, gold);
    const AttentionRecord& rec = fwd.records[0];

    std::vector<std::string> tokens(
        doc->tokens.begin(),
        doc->tokens.begin() +
            static_cast<std::ptrdiff_t>(
                std::min(doc->tokens.size(), model.hp.max_len)));
    if (model.hp.contextual == ContextualKind::kPrecomputed) {
      if (rec.weights.cols != tokens.size()) {
        throw DataError("doc '" + id + "': stored sequence length " +
                        std::to_string(rec.weights.cols) + " does not match " +
                        std::to_string(tokens.size()) + " tokens");
      }
    }

    json weights = json::array();
    json winners = json::array();
    for (std::size_t i = 0; i < rec.weights.rows; ++i) {
      json wrow = json::array();
      json prow = json::array();
      for (std::size_t j = 0; j < rec.weights.cols; ++j) {
        wrow.push_back(rec.weights(i, j));
        prow.push_back(rec.winners[i][j]);
      }
      weights.push_back(std::move(wrow));
      winners.push_back(std::move(prow));
    }
    json record{{"doc_id", doc->id},
                {"tokens", tokens},
                {"labels", model.labels},
                {"weights", weights},
                {"winners", winners},
                {"predicted_label", model.labels[fwd.predicted]},
                {"gold_label", doc->label}};
    const std::string path = (fs::path(cfg.out_dir) / (doc->id + ".json")).string();
    write_file_atomic(path, record.dump(2) + "\n");
    written.push_back(path);
  }
  out << json{{"written", written}}.dump() << "\n";
  return 0;
}

int cmd_sweep_t(CLI::App* cmd, CliConfig& cfg, std::ostream& out, std::ostream& err) {
  if (cfg.t_values.empty()) throw UsageError("--t-values must list at least one t");
  for (std::size_t t : cfg.t_values) {
    if (t == 0) throw UsageError("--t-values entries must be >= 1");
  }
  resolve_config(cmd, cfg);
  const Dataset data = load_dataset(cfg.data_dir, cfg.hp.max_len);
  PrecomputedStore store;
  const PrecomputedStore* store_ptr = nullptr;
  if (cfg.hp.contextual == ContextualKind::kPrecomputed) {
    store = load_precomputed(cfg.precomputed_path);
    store_ptr = &store;
  }

  const auto clock = make_clock(cfg.wall_clock);
  std::string csv = "t,accuracy,seconds\n";
  for (std::size_t t : cfg.t_values) {
    CliConfig one = cfg;
    one.hp.protos = t;
    const double t0 = clock ? clock() : 0.0;
    TrainedRun run = run_training(one, data, store_ptr, cfg.hp.seed, err);
    const double t1 = clock ? clock() : 0.0;
    const double acc = run.has_test ? run.test.accuracy : run.result.best_val_accuracy;
    char line[96];
    std::snprintf(line, sizeof line, "%zu,%.6f,%.3f\n", t, acc, t1 - t0);
    csv += line;
  }
  write_file_atomic((fs::path(cfg.out_dir) / "sweep_t.csv").string(), csv);
  out << csv;
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err) {
  CLI::App app{"label-guided text classification"};
  // --h is a model flag (hidden size), so help stays long-form only.
  app.set_help_flag("--help", "print help");
  app.require_subcommand(1);
  CliConfig cfg;

  CLI::App* train_cmd =
      app.add_subcommand("train", "train a model, writing checkpoint + metrics");
  train_cmd->add_option("--data", cfg.data_dir, "corpus directory (train.tsv/test.tsv)")
      ->required();
  train_cmd->add_option("--out", cfg.out_dir, "artifact directory")->required();
  add_model_flags(train_cmd, cfg);
  train_cmd->add_option("--repeats", cfg.repeats,
                        "train N seeds and report mean accuracy")
      ->capture_default_str();

  CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint");
  eval_cmd->add_option("--checkpoint", cfg.checkpoint, "model checkpoint")->required();
  eval_cmd->add_option("--data", cfg.data_dir, "corpus directory")->required();
  eval_cmd->add_option("--split", cfg.split, "train, dev or test")
      ->check(CLI::IsMember({"train", "dev", "test"}));
  eval_cmd->add_option("--precomputed", cfg.precomputed_path,
                       "precomputed contextual-embedding container");

  CLI::App* attend_cmd =
      app.add_subcommand("attend", "export per-document attention weights");
  attend_cmd->add_option("--checkpoint", cfg.checkpoint, "model checkpoint")
      ->required();
  attend_cmd->add_option("--data", cfg.data_dir, "corpus directory")->required();
  attend_cmd->add_option("--out", cfg.out_dir, "output directory")->required();
  attend_cmd->add_option("--split", cfg.split, "train, dev or test")
      ->check(CLI::IsMember({"train", "dev", "test"}));
  attend_cmd->add_option("--doc-id", cfg.doc_ids, "document id (repeatable)")
      ->required();
  attend_cmd->add_option("--precomputed", cfg.precomputed_path,
                         "precomputed contextual-embedding container");

  CLI::App* sweep_cmd = app.add_subcommand(
      "sweep-t", "train once per label-embedding count, emit CSV");
  sweep_cmd->add_option("--data", cfg.data_dir, "corpus directory")->required();
  sweep_cmd->add_option("--out", cfg.out_dir, "artifact directory")->required();
  add_model_flags(sweep_cmd, cfg);
  sweep_cmd->add_option("--t-values", cfg.t_values, "label-embedding counts to sweep")
      ->delimiter(',')
      ->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (train_cmd->parsed()) return cmd_train(train_cmd, cfg, out, err);
    if (eval_cmd->parsed()) return cmd_eval(cfg, out, err);
    if (attend_cmd->parsed()) return cmd_attend(cfg, out, err);
    if (sweep_cmd->parsed()) return cmd_sweep_t(sweep_cmd, cfg, out, err);
    err << "error: no command\n";
    return 2;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const ShapeError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << "\n";
    return 3;
  } catch (const DataError& e) {
    err << "error: " << e.what() << "\n";
    return 3;
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace lguided
