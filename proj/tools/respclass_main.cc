/* Copyright 2026 The respclass Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include <cstdio>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "respclass/classifier.h"
#include "respclass/common.h"
#include "respclass/pipeline.h"
#include "respclass/responseclasses.h"
#include "respclass/selective.h"
#include "respclass/service.h"
#include "respclass/synthetic.h"

namespace {

using nlohmann::json;
using namespace respclass;

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;

struct GlobalFlags {
  std::string config_path;
  std::optional<uint64_t> seed;
  std::optional<int> jobs;
  bool force = false;
  std::string corpus;
  std::string word_vectors;
  std::string work_dir;
  std::vector<std::string> placeholders;
};

PipelineConfig resolve_config(const GlobalFlags& flags) {
  PipelineConfig cfg;
  if (!flags.config_path.empty()) cfg = config_from_json(read_file(flags.config_path));
  if (!flags.corpus.empty()) cfg.corpus_path = flags.corpus;
  if (!flags.word_vectors.empty()) cfg.word_vectors_path = flags.word_vectors;
  if (!flags.work_dir.empty()) cfg.work_dir = flags.work_dir;
  for (const auto& p : flags.placeholders) cfg.placeholders.insert(p);
  if (flags.seed) cfg.seed = *flags.seed;
  if (flags.jobs) cfg.jobs = *flags.jobs;
  cfg.training.seed = cfg.seed;
  cfg.force = flags.force;
  cfg.validate();
  return cfg;
}

std::pair<std::string, int> split_bind(const std::string& bind) {
  const size_t colon = bind.rfind(':');
  if (colon == std::string::npos) {
    throw Error(ErrorKind::kInvalidArgument, "bind address must be host:port");
  }
  try {
    return {bind.substr(0, colon), std::stoi(bind.substr(colon + 1))};
  } catch (const std::exception&) {
    throw Error(ErrorKind::kInvalidArgument, "bad port in " + bind);
  }
}

std::vector<double> parse_doubles(const std::string& csv) {
  std::vector<double> out;
  std::string item;
  for (size_t i = 0; i <= csv.size(); ++i) {
    if (i == csv.size() || csv[i] == ',') {
      if (!item.empty()) {
        try {
          out.push_back(std::stod(item));
        } catch (const std::exception&) {
          throw Error(ErrorKind::kInvalidArgument, "not a number: " + item);
        }
      }
      item.clear();
    } else {
      item += csv[i];
    }
  }
  return out;
}

std::vector<Turn> parse_turn_args(const std::vector<std::string>& args,
                                  const std::string& turns_file) {
  std::vector<Turn> turns;
  if (!turns_file.empty()) {
    try {
      for (const json& t : json::parse(read_file(turns_file))) {
        turns.push_back({parse_speaker(t.at("speaker").get<std::string>()),
                         t.at("text").get<std::string>()});
      }
    } catch (const json::exception& e) {
      throw Error(ErrorKind::kDataError, turns_file + ": " + e.what());
    }
  }
  for (const std::string& a : args) {
    const size_t colon = a.find(':');
    if (colon == std::string::npos) {
      throw Error(ErrorKind::kInvalidArgument, "--turn expects SPEAKER:TEXT");
    }
    turns.push_back({parse_speaker(a.substr(0, colon)), a.substr(colon + 1)});
  }
  if (turns.empty()) throw Error(ErrorKind::kInvalidArgument, "no context turns given");
  return turns;
}

void print_suggestion(const SuggestionResult& r) {
  json out = {{"opted_out", r.opted_out}, {"confidence", r.confidence}};
  if (r.class_id) out["class_id"] = *r.class_id;
  if (r.exemplar_text) out["exemplar"] = *r.exemplar_text;
  std::cout << out.dump() << "\n";
}

int run(int argc, char** argv) {
  CLI::App app{"respclass: response classes for dialogue suggestion"};
  app.require_subcommand(1);
  app.fallthrough();
  GlobalFlags flags;
  app.add_option("--config", flags.config_path, "JSON pipeline config");
  app.add_option("--seed", flags.seed, "seed for every randomized step");
  app.add_option("--jobs", flags.jobs, "worker thread cap")->check(CLI::PositiveNumber);
  app.add_flag("--force", flags.force, "accept artifacts from another config");
  app.add_option("--corpus", flags.corpus, "conversation JSONL");
  app.add_option("--word-vectors", flags.word_vectors, "word-vector text file");
  app.add_option("--work-dir", flags.work_dir, "artifact directory");
  app.add_option("--placeholder", flags.placeholders, "anonymization marker");

  auto* synth = app.add_subcommand("synth", "write the planted-class synthetic corpus");
  std::string synth_out = "data";
  int synth_conversations = 200;
  synth->add_option("--out", synth_out);
  synth->add_option("--conversations", synth_conversations);

  auto* ingest = app.add_subcommand("ingest", "build the response table");
  auto* embed = app.add_subcommand("embed", "embed every response");
  auto* cands = app.add_subcommand("candidates", "kNN candidate pairs");
  auto* score = app.add_subcommand("score", "score pairs into a distance matrix");
  auto* cluster = app.add_subcommand("cluster", "complete-linkage clustering");

  auto* serve = app.add_subcommand("serve", "merge service and labeling UI");
  std::string bind;
  serve->add_option("--bind", bind, "host:port");

  auto* export_cmd = app.add_subcommand("export-classes", "replay the action log into a catalog");
  auto* scripted = app.add_subcommand("merge-scripted", "merge clusters from a truth file");
  std::string truth_path;
  scripted->add_option("--truth", truth_path)->required();

  auto* kmeans = app.add_subcommand("kmeans-catalog", "catalog from a k-means baseline");
  int kmeans_k = 0;
  std::string kmeans_out;
  kmeans->add_option("-k", kmeans_k)->required()->check(CLI::PositiveNumber);
  kmeans->add_option("--out", kmeans_out)->required();

  auto* dataset = app.add_subcommand("dataset", "labeled contexts from the catalog");
  auto* train = app.add_subcommand("train", "train the classifier");

  auto* ablate = app.add_subcommand("ablate-history", "accuracy by context length");
  std::string ablate_turns = "1,2,3,4,6,8,0";
  ablate->add_option("--turns", ablate_turns, "comma list, 0 = all turns");

  auto* evaluate = app.add_subcommand("evaluate", "risk-coverage on the validation split");
  std::string eval_thresholds = "0,0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9";
  std::string eval_coverages;
  std::string eval_judgments;
  std::string eval_judgments_out;
  std::string eval_suggestions_out;
  evaluate->add_option("--thresholds", eval_thresholds);
  evaluate->add_option("--coverage", eval_coverages, "target coverages, comma list");
  evaluate->add_option("--judgments", eval_judgments, "judgment file");
  evaluate->add_option("--write-judgments", eval_judgments_out);
  evaluate->add_option("--write-suggestions", eval_suggestions_out);

  auto* suggest_cmd = app.add_subcommand("suggest", "suggest a reply for a context");
  double suggest_threshold = 0.5;
  std::vector<std::string> suggest_turns;
  std::string suggest_turns_file;
  suggest_cmd->add_option("--threshold", suggest_threshold)->check(CLI::Range(0.0, 1.0));
  suggest_cmd->add_option("--turn", suggest_turns, "SPEAKER:TEXT, oldest first");
  suggest_cmd->add_option("--turns-file", suggest_turns_file, "JSON list of turns");

  auto* compare = app.add_subcommand("compare-procedures", "labeling-procedure table");
  std::string runs_path;
  compare->add_option("--runs", runs_path, "JSON list of runs")->required();

  auto* judge = app.add_subcommand("tabulate-judgments", "judgment percentages per model");
  std::string judge_path;
  judge->add_option("judgments", judge_path)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  if (synth->parsed()) {
    SyntheticOptions opts;
    opts.num_conversations = synth_conversations;
    if (flags.seed) opts.seed = *flags.seed;
    const SyntheticCorpus corpus = generate_synthetic_corpus(opts);
    std::string lines;
    for (const auto& c : corpus.conversations) lines += conversation_to_json_line(c) + "\n";
    const std::filesystem::path out = synth_out;
    write_file_atomic(out / "corpus.jsonl", lines);
    write_file_atomic(out / "wordvecs.txt", corpus.word_vectors);
    write_file_atomic(out / "truth.json", truth_to_json(corpus));
    PipelineConfig cfg;
    cfg.corpus_path = out / "corpus.jsonl";
    cfg.word_vectors_path = out / "wordvecs.txt";
    cfg.placeholders = corpus.placeholders;
    write_file_atomic(out / "config.json", config_to_json(cfg));
    std::cout << "wrote " << corpus.conversations.size() << " conversations to "
              << out.string() << "\n";
    return 0;
  }

  if (judge->parsed()) {
    const auto rows = tabulate_judgments(parse_judgments(read_file(judge_path)));
    std::cout << format_judgment_table(rows);
    return 0;
  }

  if (compare->parsed()) {
    std::vector<ProcedureRun> runs;
    try {
      for (const json& r : json::parse(read_file(runs_path))) {
        const Catalog catalog = catalog_from_json(read_file(r.at("catalog").get<std::string>()));
        const SoftmaxModel model = load_model(r.at("model").get<std::string>());
        std::vector<JudgmentRecord> judgments;
        if (r.contains("judgments"))
          judgments = parse_judgments(read_file(r.at("judgments").get<std::string>()));
        std::vector<std::string> suggestions;
        if (r.contains("suggestions")) {
          std::istringstream in(read_file(r.at("suggestions").get<std::string>()));
          for (std::string line; std::getline(in, line);)
            if (!line.empty()) suggestions.push_back(line);
        }
        runs.push_back(make_procedure_run(r.at("name").get<std::string>(), catalog, model,
                                          std::move(judgments), std::move(suggestions)));
      }
    } catch (const json::exception& e) {
      throw Error(ErrorKind::kDataError, runs_path + ": " + e.what());
    }
    std::cout << format_procedure_table(compare_labeling_procedures(runs));
    return 0;
  }

  const PipelineConfig cfg = resolve_config(flags);

  if (ingest->parsed()) {
    const ResponseTable t = run_ingest(cfg);
    std::cout << t.size() << " responses\n";
  } else if (embed->parsed()) {
    for (const EmbeddingMatrix& m : run_embed(cfg)) {
      size_t fallback = 0;
      for (bool f : m.fallback) fallback += f;
      std::cout << m.encoder.name << ": " << m.size() << " rows, dimension "
                << m.dimension << ", " << fallback << " fallback rows\n";
    }
  } else if (cands->parsed()) {
    const CandidatePairSet p = run_candidates(cfg);
    std::cout << p.size() << " candidate pairs\n";
  } else if (score->parsed()) {
    const SparseDistanceMatrix d = run_score(cfg);
    std::cout << d.entries().size() << " scored pairs\n";
  } else if (cluster->parsed()) {
    const ClusterSet cs = run_cluster(cfg);
    const ClusterStats st = cluster_stats(cs, load_response_table(cfg));
    std::cout << st.num_clusters << " clusters, largest " << st.max_size
              << ", non-singleton coverage " << st.non_singleton_coverage << "\n";
  } else if (serve->parsed()) {
    const WorkLayout w{cfg.work_dir};
    std::optional<SoftmaxModel> model;
    std::optional<Catalog> catalog;
    if (std::filesystem::exists(w.catalog())) catalog = load_catalog(cfg);
    if (std::filesystem::exists(w.model()) && catalog) model = load_model(w.model());
    ServiceOptions opts;
    opts.static_dir = cfg.static_dir;
    opts.placeholders = cfg.placeholders;
    MergeService service(load_session_base(cfg), w.action_log(), std::move(model),
                         std::move(catalog), opts);
    const auto [host, port] = split_bind(bind.empty() ? cfg.bind_address : bind);
    std::cout << "serving on " << host << ":" << port << "\n" << std::flush;
    service.listen(host, port);
  } else if (export_cmd->parsed()) {
    const Catalog c = run_export_classes(cfg);
    std::cout << c.size() << " classes\n";
  } else if (scripted->parsed()) {
    std::map<std::string, int> truth;
    std::vector<std::string> names;
    truth_from_json(read_file(truth_path), &truth, &names);
    const Catalog c = run_scripted_merge(cfg, truth, names);
    std::cout << c.size() << " classes\n";
  } else if (kmeans->parsed()) {
    const Catalog c = run_kmeans_catalog(cfg, kmeans_k, kmeans_out);
    std::cout << c.size() << " classes\n";
  } else if (dataset->parsed()) {
    const auto ex = run_dataset(cfg);
    std::cout << ex.size() << " examples\n";
  } else if (train->parsed()) {
    const TrainReport r = run_train(cfg);
    std::printf("train %zu examples, accuracy %.4f\nvalidation %zu examples, accuracy %.4f\n",
                r.train_size, r.train_accuracy, r.validation_size, r.validation_accuracy);
  } else if (ablate->parsed()) {
    std::vector<int> counts;
    for (double v : parse_doubles(ablate_turns)) counts.push_back(static_cast<int>(v));
    std::printf("%-10s %10s %8s %8s\n", "turns", "accuracy", "train", "val");
    for (const AblationRow& r : run_ablate_history(cfg, counts)) {
      const std::string turns = r.max_turns <= 0 ? "all" : std::to_string(r.max_turns);
      std::printf("%-10s %10.4f %8zu %8zu\n", turns.c_str(), r.accuracy, r.train_size,
                  r.validation_size);
    }
  } else if (evaluate->parsed()) {
    std::vector<double> thresholds = parse_doubles(eval_thresholds);
    EvaluationReport rep = run_evaluate(cfg, {}, eval_judgments);
    for (double c : parse_doubles(eval_coverages))
      thresholds.push_back(threshold_for_coverage(rep.confidences, c));
    rep.curve = risk_coverage_curve(rep.confidences, rep.judgments, thresholds);
    std::printf("validation accuracy %.4f over %zu contexts\n", rep.accuracy, rep.examples);
    std::cout << format_risk_coverage(rep.curve);
    if (!eval_judgments_out.empty())
      write_file_atomic(eval_judgments_out, judgments_to_text(rep.judgments));
    if (!eval_suggestions_out.empty()) {
      std::string text;
      const size_t n = rep.suggestions.size() / 100 * 100;
      for (size_t i = 0; i < n; ++i) text += rep.suggestions[i] + "\n";
      write_file_atomic(eval_suggestions_out, text);
    }
  } else if (suggest_cmd->parsed()) {
    const WorkLayout w{cfg.work_dir};
    const Catalog catalog = load_catalog(cfg);
    const SoftmaxModel model = load_model(w.model());
    print_suggestion(suggest(model, catalog,
                             parse_turn_args(suggest_turns, suggest_turns_file),
                             suggest_threshold, cfg.placeholders));
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.kind() == ErrorKind::kInvalidArgument ? kExitUsage : kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
}
