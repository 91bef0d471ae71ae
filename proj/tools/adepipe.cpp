// adepipe: train / eval / predict / benchmark / stats front end.

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ade/bundle.hpp"
#include "ade/config.hpp"
#include "ade/corpus.hpp"
#include "ade/error.hpp"
#include "ade/executor.hpp"
#include "ade/experiment.hpp"
#include "ade/pipeline.hpp"

namespace {

using nlohmann::json;

struct CommonOpts {
  std::string embeddings;
  std::string config;
  std::optional<std::uint64_t> seed;
  std::size_t workers = 1;
};

struct InputOpts {
  std::string conll;
  std::string jsonl;
};

void add_common(CLI::App* cmd, CommonOpts& o, bool embeddings_required) {
  auto* e = cmd->add_option("--embeddings", o.embeddings, "word vectors (text or binary cache)");
  if (embeddings_required) e->required();
  cmd->add_option("--config", o.config, "key = value configuration file");
  cmd->add_option("--seed", o.seed, "random seed for training and fold assignment");
  cmd->add_option("--workers", o.workers, "worker threads")->check(CLI::PositiveNumber);
}

void add_input(CLI::App* cmd, InputOpts& in, const std::string& prefix, bool required) {
  auto* c = cmd->add_option("--" + prefix + "conll", in.conll, "CoNLL corpus");
  auto* j = cmd->add_option("--" + prefix + "jsonl", in.jsonl, "JSONL documents");
  c->excludes(j);
  if (required) {
    cmd->parse_complete_callback([cmd, c, j] {
      if (c->count() == 0 && j->count() == 0) {
        throw CLI::RequiredError("--" + std::string(cmd->get_name()) + ": one of " +
                                 c->get_name() + " / " + j->get_name());
      }
    });
  }
}

std::vector<ade::Document> read_docs(const InputOpts& in) {
  if (!in.conll.empty()) {
    ade::ReadWarnings w;
    auto docs = ade::read_conll(in.conll, &w);
    if (w.iob_repairs > 0) {
      std::clog << "warning: repaired " << w.iob_repairs << " invalid tag transitions in "
                << in.conll << "\n";
    }
    return docs;
  }
  if (!in.jsonl.empty()) return ade::read_jsonl_docs(in.jsonl);
  return {};
}

ade::ExperimentConfig experiment_config(ade::Task task, const CommonOpts& o) {
  ade::ExperimentConfig cfg;
  if (!o.config.empty()) ade::apply_config(ade::load_config(o.config), task, cfg);
  if (o.seed) {
    cfg.seed = *o.seed;
    cfg.classifier.train.seed = *o.seed;
    cfg.ner.train.seed = *o.seed;
    cfg.re.train.seed = *o.seed;
  }
  cfg.workers = o.workers;
  return cfg;
}

void write_json(const json& j, const std::string& path) {
  const auto text = j.dump(2) + "\n";
  if (path.empty() || path == "-") {
    std::cout << text;
  } else {
    ade::write_file(path, text);
  }
}

std::vector<ade::MatchMode> parse_modes(const std::vector<std::string>& names) {
  std::vector<ade::MatchMode> out;
  for (const auto& n : names) out.push_back(ade::parse_match_mode(n));
  return out;
}

const std::vector<std::string> kTasks{"classifier", "classify", "ner", "re"};

// ---- train

struct TrainOpts {
  std::string task;
  CommonOpts common;
  InputOpts input;
  InputOpts dev;
  std::string out;
  std::string metrics;
  bool quiet = false;
};

int cmd_train(const TrainOpts& o) {
  const auto task = ade::parse_task(o.task);
  const auto cfg = experiment_config(task, o.common);
  const auto store = ade::load_embeddings(o.common.embeddings);
  const auto docs = read_docs(o.input);
  const auto dev = read_docs(o.dev);
  if (docs.empty()) throw ade::TrainingError("training corpus is empty");

  ade::TrainReport report;
  ade::EpochCallback log = [&](const ade::EpochRecord& r) {
    if (!o.quiet) std::clog << ade::to_json(r).dump() << std::endl;
  };
  ade::Bundle bundle;
  json scores;
  switch (task) {
    case ade::Task::kClassify: {
      auto m = ade::train_classifier(docs, store, cfg.classifier, dev, &report, log);
      scores["train"] = ade::evaluate_classifier(m, docs, store).to_json();
      if (!dev.empty()) scores["dev"] = ade::evaluate_classifier(m, dev, store).to_json();
      bundle = m.to_bundle();
      break;
    }
    case ade::Task::kNer: {
      auto m = ade::train_ner(docs, store, cfg.ner, dev, &report, log);
      for (auto mode : cfg.modes) {
        const auto name = std::string(ade::to_string(mode));
        scores["train"][name] = ade::evaluate_ner(m, docs, store, mode).to_json();
        if (!dev.empty()) scores["dev"][name] = ade::evaluate_ner(m, dev, store, mode).to_json();
      }
      bundle = m.to_bundle();
      break;
    }
    case ade::Task::kRe: {
      const auto tr = ade::corpus_candidates(docs);
      const auto dv = ade::corpus_candidates(dev);
      auto m = ade::train_re(tr, store, cfg.re, dv, &report, log);
      scores["train"] = ade::evaluate_re(m, tr, store).to_json();
      if (!dv.empty()) scores["dev"] = ade::evaluate_re(m, dv, store).to_json();
      bundle = m.to_bundle();
      break;
    }
  }
  const auto out = o.out.empty() ? o.task + ".bundle" : o.out;
  ade::save_bundle(bundle, out);
  json metrics{{"task", std::string(ade::to_string(task))},
               {"bundle", out},
               {"n_docs", docs.size()},
               {"config", cfg.to_json(task)},
               {"training", report.to_json()},
               {"scores", scores}};
  write_json(metrics, o.metrics.empty() ? out + ".metrics.json" : o.metrics);
  std::clog << "wrote " << out << "\n";
  return 0;
}

// ---- eval

struct EvalOpts {
  std::string task;
  CommonOpts common;
  InputOpts input;
  std::string model;
  std::size_t cv = 0;
  std::vector<std::string> modes{"strict", "relax"};
  std::string out;
  std::string csv;
  std::string predictions;
};

int cmd_eval(const EvalOpts& o) {
  const auto task = ade::parse_task(o.task);
  auto cfg = experiment_config(task, o.common);
  cfg.modes = parse_modes(o.modes);
  if (cfg.modes.empty()) throw ade::ConfigError("--mode needs at least one value");
  const auto store = ade::load_embeddings(o.common.embeddings);
  const auto docs = read_docs(o.input);

  json report;
  if (o.cv > 0) {
    cfg.k = o.cv;
    report = ade::run_cv_experiment(task, docs, store, cfg);
    if (!o.csv.empty()) ade::write_file(o.csv, ade::cv_report_csv(report));
  } else {
    const auto bundle = ade::load_bundle(o.model);
    ade::check_bundle_dim(bundle, store.dim());
    report = {{"task", std::string(ade::to_string(task))},
              {"model", o.model},
              {"n_docs", docs.size()},
              {"config", bundle.manifest.value("config", json::object())}};
    switch (task) {
      case ade::Task::kClassify: {
        const auto m = ade::ClassifierModel::from_bundle(bundle);
        report["labels"] = ade::evaluate_classifier(m, docs, store).to_json();
        break;
      }
      case ade::Task::kNer: {
        const auto m = ade::NerModel::from_bundle(bundle);
        for (auto mode : cfg.modes) {
          report[std::string(ade::to_string(mode))] =
              ade::evaluate_ner(m, docs, store, mode).to_json();
        }
        if (!o.predictions.empty()) {
          auto predicted = docs;
          for (auto& d : predicted) d.gold_spans = m.predict_entities(d, store);
          ade::write_conll(predicted, o.predictions);
        }
        break;
      }
      case ade::Task::kRe: {
        const auto m = ade::ReModel::from_bundle(bundle);
        report["labels"] = ade::evaluate_re(m, ade::corpus_candidates(docs), store).to_json();
        break;
      }
    }
    if (!o.csv.empty()) throw ade::ConfigError("--csv applies to cross-validation reports");
  }
  write_json(report, o.out);
  return 0;
}

// ---- predict

struct PredictOpts {
  CommonOpts common;
  std::string pipeline;
  std::string classifier;
  std::string ner;
  std::string re;
  std::string input;
  std::string output;
  bool stream = false;
  bool flush_each = false;
  std::size_t flush_every = 64;
  std::size_t max_in_flight = 256;
};

int cmd_predict(const PredictOpts& o) {
  ade::PipelineManifest manifest;
  if (!o.pipeline.empty()) {
    manifest = ade::PipelineManifest::load(o.pipeline);
    if (!o.common.embeddings.empty()) manifest.embeddings = o.common.embeddings;
  } else {
    if (o.common.embeddings.empty() || o.ner.empty() || o.re.empty()) {
      throw CLI::ValidationError("predict",
                                 "--pipeline or all of --embeddings, --ner and --re is required");
    }
    manifest.embeddings = o.common.embeddings;
    if (!o.classifier.empty()) manifest.classifier = o.classifier;
    manifest.ner = o.ner;
    manifest.re = o.re;
  }
  const auto pipeline = ade::Pipeline::load(manifest);

  std::ifstream file_in;
  std::istream* in = &std::cin;
  if (!o.input.empty() && o.input != "-") {
    file_in.open(o.input);
    if (!file_in) throw ade::Error("cannot open " + o.input);
    in = &file_in;
  }
  std::ofstream file_out;
  std::ostream* out = &std::cout;
  if (!o.output.empty() && o.output != "-") {
    file_out.open(o.output);
    if (!file_out) throw ade::Error("cannot write " + o.output);
    out = &file_out;
  }

  ade::ExecutorStats stats;
  if (o.stream) {
    ade::ExecutorOptions opts;
    opts.workers = o.common.workers;
    opts.flush_each = o.flush_each;
    opts.flush_every = o.flush_every;
    opts.max_in_flight = o.max_in_flight;
    stats = ade::run_stream(pipeline, *in, *out, opts);
  } else {
    stats = ade::run_batch(pipeline, *in, *out, o.common.workers);
  }
  if (stats.errors > 0) {
    std::cerr << stats.errors << " of " << stats.records << " records failed\n";
    return 1;
  }
  return 0;
}

// ---- benchmark

struct BenchOpts {
  std::string task;
  CommonOpts common;
  InputOpts input;
  InputOpts test;
  std::optional<std::size_t> epochs;
  std::size_t repeat = 1;
  std::string out;
};

int cmd_benchmark(const BenchOpts& o) {
  const auto task = ade::parse_task(o.task);
  auto cfg = experiment_config(task, o.common);
  if (o.epochs) {
    cfg.classifier.train.epochs = *o.epochs;
    cfg.ner.train.epochs = *o.epochs;
    cfg.re.train.epochs = *o.epochs;
  }
  const auto store = ade::load_embeddings(o.common.embeddings);
  const auto train = read_docs(o.input);
  const auto test = read_docs(o.test);
  json runs = json::array();
  std::optional<ade::TimingReport> best;
  for (std::size_t i = 0; i < o.repeat; ++i) {
    auto r = ade::benchmark_timing(task, train, test, store, cfg);
    runs.push_back(r.to_json());
    if (!best || r.train_seconds < best->train_seconds) best = r;
  }
  auto j = best->to_json();
  j["config"] = cfg.to_json(task);
  if (o.repeat > 1) j["runs"] = runs;
  write_json(j, o.out);
  return 0;
}

// ---- stats, candidates, manifest, cache

int cmd_stats(const InputOpts& in, const std::string& out) {
  const auto docs = read_docs(in);
  write_json(ade::corpus_stats(docs).to_json(), out);
  return 0;
}

int cmd_candidates(const InputOpts& in, const std::string& out) {
  const auto docs = read_docs(in);
  std::ostringstream text;
  for (const auto& c : ade::corpus_candidates(docs)) text << ade::candidate_to_json(c).dump() << "\n";
  if (out.empty() || out == "-") {
    std::cout << text.str();
  } else {
    ade::write_file(out, text.str());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adverse drug event mining: classification, tagging and relation extraction"};
  app.require_subcommand(1);
  int rc = 0;

  TrainOpts train;
  auto* t = app.add_subcommand("train", "train one stage and write its bundle");
  t->add_option("task", train.task, "classifier | ner | re")
      ->required()
      ->check(CLI::IsMember(kTasks));
  add_common(t, train.common, true);
  add_input(t, train.input, "", true);
  add_input(t, train.dev, "dev-", false);
  t->add_option("--out", train.out, "bundle path (default <task>.bundle)");
  t->add_option("--metrics", train.metrics, "metrics JSON path (default <bundle>.metrics.json)");
  t->add_flag("--quiet", train.quiet, "no per-epoch log");
  t->final_callback([&] { rc = cmd_train(train); });

  EvalOpts eval;
  auto* e = app.add_subcommand("eval", "score a bundle or run k-fold cross-validation");
  e->add_option("task", eval.task, "classifier | ner | re")
      ->required()
      ->check(CLI::IsMember(kTasks));
  add_common(e, eval.common, true);
  add_input(e, eval.input, "", true);
  auto* model = e->add_option("--model", eval.model, "stage bundle");
  auto* cv = e->add_option("--cv", eval.cv, "folds for cross-validation")
                 ->check(CLI::Range(2, 1000));
  model->excludes(cv);
  e->add_option("--mode", eval.modes, "entity matching: strict, relax, overlap-any")
      ->delimiter(',')
      ->check(CLI::IsMember({"strict", "relax", "overlap-any"}));
  e->add_option("--out", eval.out, "report JSON path (default stdout)");
  e->add_option("--csv", eval.csv, "per-fold CSV (cross-validation only)")->needs(cv);
  e->add_option("--predictions", eval.predictions, "write predicted tags as CoNLL (ner)")
      ->needs(model);
  e->final_callback([&] {
    if (eval.model.empty() && eval.cv == 0) {
      throw CLI::ValidationError("eval", "--model or --cv is required");
    }
    rc = cmd_eval(eval);
  });

  PredictOpts pred;
  auto* p = app.add_subcommand("predict", "run the full pipeline over JSONL documents");
  add_common(p, pred.common, false);
  auto* manifest =
      p->add_option("--pipeline", pred.pipeline, "pipeline manifest");
  for (auto* opt : {p->add_option("--classifier", pred.classifier, "classifier bundle"),
                    p->add_option("--ner", pred.ner, "tagger bundle"),
                    p->add_option("--re", pred.re, "relation bundle")}) {
    opt->excludes(manifest);
  }
  auto* stream = p->add_flag("--stream", pred.stream, "read stdin continuously, flush as it goes");
  p->add_option("--input", pred.input, "input JSONL (default stdin)")->excludes(stream);
  p->add_option("--output", pred.output, "output JSONL (default stdout)");
  p->add_flag("--flush-each", pred.flush_each, "flush after every record")->needs(stream);
  p->add_option("--flush-every", pred.flush_every, "records per flush in stream mode")
      ->needs(stream);
  p->add_option("--max-in-flight", pred.max_in_flight, "records buffered at most")
      ->check(CLI::PositiveNumber);
  p->final_callback([&] { rc = cmd_predict(pred); });

  BenchOpts bench;
  auto* b = app.add_subcommand("benchmark", "time training and inference");
  b->add_option("task", bench.task, "classifier | ner | re")
      ->required()
      ->check(CLI::IsMember(kTasks));
  add_common(b, bench.common, true);
  add_input(b, bench.input, "", true);
  add_input(b, bench.test, "test-", false);
  b->add_option("--epochs", bench.epochs, "override the configured epoch count");
  b->add_option("--repeat", bench.repeat, "runs; the fastest is reported")
      ->check(CLI::PositiveNumber);
  b->add_option("--out", bench.out, "report JSON path (default stdout)");
  b->final_callback([&] { rc = cmd_benchmark(bench); });

  InputOpts stats_in;
  std::string stats_out;
  auto* s = app.add_subcommand("stats", "corpus statistics");
  add_input(s, stats_in, "", true);
  s->add_option("--out", stats_out, "JSON path (default stdout)");
  s->final_callback([&] { rc = cmd_stats(stats_in, stats_out); });

  InputOpts cand_in;
  std::string cand_out;
  auto* c = app.add_subcommand("candidates", "labeled relation candidates as JSONL");
  add_input(c, cand_in, "", true);
  c->add_option("--out", cand_out, "JSONL path (default stdout)");
  c->final_callback([&] { rc = cmd_candidates(cand_in, cand_out); });

  ade::PipelineManifest pm;
  std::string pm_classifier, pm_out;
  auto* m = app.add_subcommand("manifest", "write a pipeline manifest");
  m->add_option("--embeddings", pm.embeddings)->required();
  m->add_option("--classifier", pm_classifier);
  m->add_option("--ner", pm.ner)->required();
  m->add_option("--re", pm.re)->required();
  m->add_option("--out", pm_out)->required();
  m->final_callback([&] {
    if (!pm_classifier.empty()) pm.classifier = pm_classifier;
    pm.save(pm_out);
  });

  std::string cache_in, cache_out;
  auto* k = app.add_subcommand("cache-embeddings", "convert text vectors to the binary cache");
  k->add_option("--embeddings", cache_in)->required();
  k->add_option("--out", cache_out)->required();
  k->final_callback([&] { ade::load_embeddings(cache_in).save_binary(cache_out); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& err) {
    return app.exit(err);
  } catch (const CLI::CallForAllHelp& err) {
    return app.exit(err);
  } catch (const CLI::ParseError& err) {
    app.exit(err);
    return 2;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  }
  return rc;
}
