#include "deceptlab/cli.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>

#include <CLI11.hpp>
#include <json.hpp>

#include "deceptlab/analysis.hpp"
#include "deceptlab/checkpoint.hpp"
#include "deceptlab/config_json.hpp"
#include "deceptlab/explain.hpp"
#include "deceptlab/train.hpp"

namespace deceptlab::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

int guarded(const std::function<void()>& body) {
  try {
    body();
    return kExitOk;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInputFile;
  } catch (const LookupError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitLookup;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitParse;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInternal;
  }
}

std::string fnv1a_hex(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string timestamp_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::tm tm_utc;
  gmtime_r(&t, &tm_utc);
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  return buf;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot write " + path.string());
  os << content;
}

std::vector<data::StatementPair> load_dataset(const std::string& path,
                                              const std::string& format) {
  return format == "open_domain" ? data::load_open_domain(path) : data::load_paired(path);
}

// Lexicon features for coatt_liwc: all category values (dictionary plus the
// structural pseudo-categories), sorted by name, scaled from percentages
// into [0, 1]-ish range.
train::FeatureLookup make_feature_lookup(const linguistics::LexiconDictionary& dict) {
  return [&dict](const data::StatementPair& pair) {
    const auto fv = linguistics::extract_features(pair.q1, dict);
    std::vector<double> values;
    values.reserve(fv.values.size());
    for (const auto& [name, value] : fv.values) values.push_back(value / 100.0);
    return values;
  };
}

int lexicon_feature_dim(const linguistics::LexiconDictionary& dict) {
  return static_cast<int>(dict.categories.size()) + 4;  // + pseudo-categories
}

json metrics_to_entry(const MetricsReport& m) {
  json j;
  for (std::size_t i = 0; i < 6; ++i) j[kMetricNames[i]] = m.metric(i);
  return j;
}

MetricsReport metrics_from_entry(const json& j) {
  MetricsReport m;
  m.precision = j.at("precision").get<double>();
  m.recall = j.at("recall").get<double>();
  m.f1 = j.at("f1").get<double>();
  m.accuracy = j.at("accuracy").get<double>();
  m.auroc = j.at("auroc").get<double>();
  m.specificity = j.at("specificity").get<double>();
  return m;
}

json run_to_json(const train::RunResult& r) {
  json j;
  j["repetition"] = r.repetition;
  j["fold"] = r.fold;
  j["seed"] = r.seed;
  j["epochs_phase1"] = r.epochs_phase1;
  j["epochs_phase2"] = r.epochs_phase2;
  j["final_lr"] = r.final_lr;
  j["metrics"] = metrics_to_entry(r.metrics);
  j["timestamp"] = timestamp_now();
  return j;
}

train::RunResult run_from_json(const json& j) {
  train::RunResult r;
  r.repetition = j.at("repetition").get<int>();
  r.fold = j.at("fold").get<int>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.epochs_phase1 = j.at("epochs_phase1").get<int>();
  r.epochs_phase2 = j.at("epochs_phase2").get<int>();
  r.final_lr = j.at("final_lr").get<double>();
  r.metrics = metrics_from_entry(j.at("metrics"));
  return r;
}

}  // namespace

int cmd_train(const TrainArgs& args) {
  return guarded([&]() {
    auto cfg = load_experiment_config(args.config_path);
    if (args.seed) cfg.train.seed = *args.seed;
    if (args.arch) cfg.model.architecture = architecture_from_string(*args.arch);

    const auto dataset = load_dataset(args.data_path, cfg.data_format);

    linguistics::LexiconDictionary dict;
    train::FeatureLookup features;
    if (cfg.model.architecture == Architecture::coatt_liwc) {
      if (args.dict_path.empty())
        throw ConfigError("train: coatt_liwc needs --dict for lexicon features");
      dict = linguistics::LexiconDictionary::load(args.dict_path);
      const int dim = lexicon_feature_dim(dict);
      if (cfg.model.lexicon_dim == 0)
        cfg.model.lexicon_dim = dim;
      else if (cfg.model.lexicon_dim != dim)
        throw ConfigError("train: config lexicon_dim " + std::to_string(cfg.model.lexicon_dim) +
                          " does not match dictionary feature count " + std::to_string(dim));
      features = make_feature_lookup(dict);
    }

    fs::create_directories(args.out_dir);
    const fs::path out(args.out_dir);
    // The resume key covers the dataset identity too, so a ledger written
    // for different data can never donate its runs.
    const std::string config_hash =
        fnv1a_hex(experiment_config_to_json(cfg).dump() + "|" + args.data_path + "|" +
                  std::to_string(dataset.size()));

    // Resume: reuse completed runs from a ledger written by the same config.
    std::map<std::pair<int, int>, json> ledger_runs;
    const fs::path ledger_path = out / "ledger.json";
    if (fs::exists(ledger_path)) {
      std::ifstream in(ledger_path);
      json old;
      in >> old;
      if (old.value("config_hash", "") == config_hash)
        for (const auto& entry : old.at("runs"))
          ledger_runs[{entry.at("repetition").get<int>(), entry.at("fold").get<int>()}] = entry;
    }

    auto write_ledger = [&]() {
      json ledger;
      ledger["config_hash"] = config_hash;
      ledger["seed"] = cfg.train.seed;
      ledger["runs"] = json::array();
      for (const auto& [key, entry] : ledger_runs) ledger["runs"].push_back(entry);
      write_file(ledger_path, ledger.dump(2) + "\n");
    };

    train::CvHooks hooks;
    hooks.lookup = [&](int rep, int fold) -> std::optional<train::RunResult> {
      auto it = ledger_runs.find({rep, fold});
      if (it == ledger_runs.end()) return std::nullopt;
      return run_from_json(it->second);
    };
    hooks.on_run = [&](const train::RunResult& r, const Model& model,
                       const data::Vocabulary& vocab) {
      char name[64];
      std::snprintf(name, sizeof(name), "checkpoint_r%d_f%d.ckpt", r.repetition, r.fold);
      save_checkpoint((out / name).string(), model, vocab,
                      json{{"repetition", r.repetition}, {"fold", r.fold}, {"seed", r.seed}});
      ledger_runs[{r.repetition, r.fold}] = run_to_json(r);
      write_ledger();
    };

    const auto cv = train::cross_validate(dataset, cfg.model, cfg.train, features, &hooks);
    write_ledger();

    std::vector<MetricsReport> rows;
    rows.reserve(cv.runs.size());
    for (const auto& r : cv.runs) rows.push_back(r.metrics);
    write_file(out / "metrics.json", metrics_to_json(cv.aggregate, cv.runs.size()));
    write_file(out / "metrics.csv", metrics_to_csv(rows, cv.aggregate));

    std::cout << to_string(cfg.model.architecture) << ": " << cv.runs.size() << " runs\n";
    for (std::size_t i = 0; i < 6; ++i)
      std::cout << "  " << kMetricNames[i] << ": "
                << format_mean_std(cv.aggregate.metric(i), cv.aggregate.std_of(i)) << "\n";
  });
}

int cmd_evaluate(const EvaluateArgs& args) {
  return guarded([&]() {
    auto loaded = load_checkpoint(args.checkpoint_path);
    const auto& cfg = loaded.model.config();
    const auto dataset = data::load_paired(args.data_path);

    linguistics::LexiconDictionary dict;
    bool have_dict = false;
    if (cfg.architecture == Architecture::coatt_liwc) {
      if (args.dict_path.empty())
        throw ConfigError("evaluate: coatt_liwc needs --dict for lexicon features");
      dict = linguistics::LexiconDictionary::load(args.dict_path);
      have_dict = true;
    }

    std::vector<double> probs;
    std::vector<int> labels;
    probs.reserve(dataset.size());
    labels.reserve(dataset.size());

    if (!args.embeddings_path.empty()) {
      const auto emb = data::import_embeddings(args.embeddings_path);
      if (emb.d != static_cast<std::uint32_t>(cfg.d))
        throw ConfigError("evaluate: embedding file has d=" + std::to_string(emb.d) +
                          ", model wants d=" + std::to_string(cfg.d));
      for (const auto& pair : dataset) {
        auto it = emb.docs.find(pair.id);
        if (it == emb.docs.end())
          throw LookupError("embedding file is missing doc '" + pair.id + "'");
        std::vector<double> lex;
        if (have_dict)
          lex = make_feature_lookup(dict)(pair);
        probs.push_back(loaded.model
                            .forward_embedded(it->second.q1,
                                              cfg.paired() ? it->second.q2 : nullptr,
                                              have_dict ? &lex : nullptr)
                            .probability);
        labels.push_back(pair.label);
      }
    } else {
      train::FeatureLookup features;
      if (have_dict) features = make_feature_lookup(dict);
      for (const auto& pair : dataset) {
        const auto q1 = data::encode(pair.q1, loaded.vocab, cfg.max_len_q1);
        const auto q2 = data::encode(pair.q2, loaded.vocab, cfg.max_len_q2);
        std::vector<double> lex;
        if (features) lex = features(pair);
        probs.push_back(loaded.model
                            .forward(q1, cfg.paired() ? &q2 : nullptr,
                                     features ? &lex : nullptr)
                            .probability);
        labels.push_back(pair.label);
      }
    }

    auto report = point_metrics(confusion(probs, labels));
    try {
      report.auroc = auroc(probs, labels);
    } catch (const DomainError&) {
      report.undefined_ratio = true;  // single-class input
    }

    fs::create_directories(args.out_dir);
    const fs::path out(args.out_dir);
    write_file(out / "metrics.json", metrics_to_json(report, 1));
    write_file(out / "metrics.csv", metrics_to_csv({report}, report));
    for (std::size_t i = 0; i < 6; ++i)
      std::cout << kMetricNames[i] << ": " << report.metric(i) << "\n";
  });
}

int cmd_explain(const ExplainArgs& args) {
  return guarded([&]() {
    auto loaded = load_checkpoint(args.checkpoint_path);
    const auto dataset = data::load_paired(args.data_path);
    const data::StatementPair* doc = nullptr;
    for (const auto& pair : dataset)
      if (pair.id == args.doc_id) doc = &pair;
    if (!doc) throw LookupError("doc_id '" + args.doc_id + "' not found in " + args.data_path);

    explain::ExplainOptions options;
    options.n_samples = args.n_samples;
    options.seed = args.seed;
    options.target = explain::target_from_string(args.target);

    linguistics::LexiconDictionary dict;
    if (loaded.model.config().architecture == Architecture::coatt_liwc) {
      if (args.dict_path.empty())
        throw ConfigError("explain: coatt_liwc needs --dict for lexicon features");
      dict = linguistics::LexiconDictionary::load(args.dict_path);
      options.lexicon_features = [&dict](const std::string& q1_text) {
        const auto fv = linguistics::extract_features(q1_text, dict);
        std::vector<double> values;
        values.reserve(fv.values.size());
        for (const auto& [name, value] : fv.values) values.push_back(value / 100.0);
        return values;
      };
    }

    const auto e = explain::explain_pair(loaded.model, loaded.vocab, *doc, options);

    fs::create_directories(args.out_dir);
    const fs::path out(args.out_dir);
    write_file(out / ("explanation_" + args.doc_id + ".json"),
               explain::explanation_to_json(e, *doc, options).dump(2) + "\n");
    write_file(out / ("explanation_" + args.doc_id + ".html"),
               explain::explanation_to_html(e, *doc, options));
    std::cout << "explained " << args.doc_id << ": P(deceptive) = " << e.predicted_prob
              << ", top tokens:";
    for (std::size_t i = 0; i < std::min<std::size_t>(3, e.token_weights.size()); ++i)
      std::cout << " " << e.token_weights[i].token;
    std::cout << "\n";
  });
}

int cmd_analyze(const AnalyzeArgs& args) {
  return guarded([&]() {
    const auto dataset = data::load_paired(args.data_path);

    linguistics::LexiconDictionary dict;
    bool have_dict = false;
    if (!args.dict_path.empty()) {
      dict = linguistics::LexiconDictionary::load(args.dict_path);
      have_dict = true;
    }
    std::map<std::string, std::map<std::string, double>> imported;
    bool have_imported = false;
    if (!args.features_path.empty()) {
      imported = data::load_feature_csv(args.features_path);
      have_imported = true;
    }
    if (!have_dict && !have_imported)
      throw ConfigError("analyze: provide --dict and/or --features");

    const auto report = analysis::analyze_corpus(dataset, have_dict ? &dict : nullptr,
                                                 have_imported ? &imported : nullptr,
                                                 args.alpha);
    fs::create_directories(args.out_dir);
    write_file(fs::path(args.out_dir) / "analysis.json", report.dump(2) + "\n");

    const auto& corr = report.at("correlations");
    std::cout << "analysis written: " << corr.at("truthful").size()
              << " truthful-associated features, " << corr.at("deceptive").size()
              << " deceptive-associated\n";
  });
}

int run_cli(int argc, char** argv) {
  CLI::App app{"deceptlab: paired-statement deception classifiers and linguistic analysis"};
  app.require_subcommand(1);

  TrainArgs train_args;
  auto* train_cmd = app.add_subcommand("train", "cross-validated training per the protocol");
  train_cmd->add_option("--config", train_args.config_path, "experiment config JSON")
      ->required();
  train_cmd->add_option("--data", train_args.data_path, "dataset CSV/JSONL")->required();
  train_cmd->add_option("--out", train_args.out_dir, "output directory")->required();
  std::uint64_t seed_flag = 0;
  auto* seed_opt = train_cmd->add_option("--seed", seed_flag, "override config seed");
  std::string arch_flag;
  auto* arch_opt = train_cmd->add_option("--arch", arch_flag, "override architecture");
  train_cmd->add_option("--dict", train_args.dict_path, "lexicon dictionary (coatt_liwc)");

  EvaluateArgs eval_args;
  auto* eval_cmd = app.add_subcommand("evaluate", "score a checkpoint on a dataset");
  eval_cmd->add_option("--checkpoint", eval_args.checkpoint_path, "model checkpoint")
      ->required();
  eval_cmd->add_option("--data", eval_args.data_path, "dataset CSV/JSONL")->required();
  eval_cmd->add_option("--out", eval_args.out_dir, "output directory")->required();
  eval_cmd->add_option("--embeddings", eval_args.embeddings_path,
                       "VEMB file of precomputed contextual embeddings");
  eval_cmd->add_option("--dict", eval_args.dict_path, "lexicon dictionary (coatt_liwc)");

  ExplainArgs explain_args;
  auto* explain_cmd = app.add_subcommand("explain", "local surrogate explanation for one doc");
  explain_cmd->add_option("--checkpoint", explain_args.checkpoint_path, "model checkpoint")
      ->required();
  explain_cmd->add_option("--data", explain_args.data_path, "dataset CSV/JSONL")->required();
  explain_cmd->add_option("--doc-id", explain_args.doc_id, "document to explain")->required();
  explain_cmd->add_option("--out", explain_args.out_dir, "output directory")->required();
  explain_cmd->add_option("--samples", explain_args.n_samples, "perturbation sample count");
  explain_cmd->add_option("--seed", explain_args.seed, "sampling seed");
  explain_cmd->add_option("--target", explain_args.target, "q1, q2 or both");
  explain_cmd->add_option("--dict", explain_args.dict_path, "lexicon dictionary (coatt_liwc)");

  AnalyzeArgs analyze_args;
  auto* analyze_cmd = app.add_subcommand("analyze", "linguistic analysis report");
  analyze_cmd->add_option("--data", analyze_args.data_path, "dataset CSV/JSONL")->required();
  analyze_cmd->add_option("--out", analyze_args.out_dir, "output directory")->required();
  analyze_cmd->add_option("--dict", analyze_args.dict_path, "lexicon dictionary");
  analyze_cmd->add_option("--features", analyze_args.features_path,
                          "imported per-document feature CSV");
  analyze_cmd->add_option("--alpha", analyze_args.alpha, "significance level");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitInternal;
  }

  if (train_cmd->parsed()) {
    if (*seed_opt) train_args.seed = seed_flag;
    if (*arch_opt) train_args.arch = arch_flag;
    return cmd_train(train_args);
  }
  if (eval_cmd->parsed()) return cmd_evaluate(eval_args);
  if (explain_cmd->parsed()) return cmd_explain(explain_args);
  if (analyze_cmd->parsed()) return cmd_analyze(analyze_args);
  return kExitInternal;
}

}  // namespace deceptlab::cli
