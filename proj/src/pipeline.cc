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

#include "respclass/pipeline.h"

#include <algorithm>
#include <set>

#include "json.hpp"
#include "respclass/responseclasses.h"
#include "respclass/synthetic.h"

namespace respclass {
namespace {

using nlohmann::json;

std::string read_artifact(const std::filesystem::path& path, Stage producer) {
  if (!std::filesystem::exists(path)) {
    throw Error(ErrorKind::kFailedPrecondition,
                "missing " + path.string() + ": run `" + stage_name(producer) +
                    "` first");
  }
  return read_file(path);
}

void check_hash(const PipelineConfig& cfg, const std::string& found, Stage producer,
                const std::filesystem::path& path) {
  if (cfg.force) return;
  const std::string expected = stage_hash(cfg, producer);
  if (found != expected) {
    throw Error(ErrorKind::kFailedPrecondition,
                path.string() + " was produced with a different configuration (" +
                    found + " != " + expected + "); re-run `" +
                    stage_name(producer) + "` or pass --force");
  }
}

std::vector<EmbeddingMatrix> load_embeddings(const PipelineConfig& cfg) {
  const WorkLayout w{cfg.work_dir};
  std::vector<EmbeddingMatrix> mats;
  for (const EncoderSpec& spec : cfg.effective_encoders()) {
    std::string hash;
    mats.push_back(embedding_matrix_from_json(
        read_artifact(w.embedding(spec.name), Stage::kEmbed), &hash));
    check_hash(cfg, hash, Stage::kEmbed, w.embedding(spec.name));
  }
  return mats;
}

ClusterSet load_clusters(const PipelineConfig& cfg) {
  const WorkLayout w{cfg.work_dir};
  std::string hash;
  ClusterSet cs =
      cluster_set_from_json(read_artifact(w.clusters(), Stage::kCluster), &hash);
  check_hash(cfg, hash, Stage::kCluster, w.clusters());
  return cs;
}

std::vector<LabeledExample> load_dataset(const PipelineConfig& cfg) {
  const WorkLayout w{cfg.work_dir};
  const std::string content = read_artifact(w.dataset(), Stage::kDataset);
  const size_t nl = content.find('\n');
  std::string hash;
  try {
    hash = json::parse(content.substr(0, nl)).value("config_hash", "");
  } catch (const json::exception&) {
    throw Error(ErrorKind::kDataError, w.dataset().string() + ": missing header line");
  }
  check_hash(cfg, hash, Stage::kDataset, w.dataset());
  return dataset_from_jsonl(nl == std::string::npos ? "" : content.substr(nl + 1));
}

json encoder_json(const EncoderSpec& e) {
  return {{"name", e.name},
          {"kind", encoder_kind_name(e.kind)},
          {"word_vectors", e.word_vectors_path},
          {"endpoint", e.endpoint},
          {"batch_size", e.batch_size},
          {"max_in_flight", e.max_in_flight}};
}

json training_json(const TrainingConfig& t) {
  return {{"max_tokens", t.max_tokens},
          {"max_turns", t.max_turns},
          {"smoothing", t.smoothing},
          {"learning_rate", t.learning_rate},
          {"epochs", t.epochs},
          {"batch_size", t.batch_size},
          {"validation_fraction", t.validation_fraction},
          {"hash_bits", t.hash_bits}};
}

std::string file_fingerprint(const std::filesystem::path& path) {
  if (path.empty() || !std::filesystem::exists(path)) return "";
  return content_hash(read_file(path));
}

}  // namespace

std::vector<EncoderSpec> PipelineConfig::effective_encoders() const {
  if (!encoders.empty()) {
    std::vector<EncoderSpec> out = encoders;
    for (EncoderSpec& e : out) {
      if (e.word_vectors_path.empty()) e.word_vectors_path = word_vectors_path.string();
      if (e.name.empty()) e.name = encoder_kind_name(e.kind);
    }
    return out;
  }
  std::vector<EncoderSpec> out;
  out.push_back({.name = "tfidf", .kind = EncoderKind::kTfidf});
  if (!word_vectors_path.empty()) {
    out.push_back({.name = "avg_wordvec",
                   .kind = EncoderKind::kAvgWordVec,
                   .word_vectors_path = word_vectors_path.string()});
    out.push_back({.name = "tfidf_weighted_wordvec",
                   .kind = EncoderKind::kTfidfWeightedWordVec,
                   .word_vectors_path = word_vectors_path.string()});
  }
  return out;
}

void PipelineConfig::validate() const {
  if (k < 1) throw Error(ErrorKind::kInvalidArgument, "k must be >= 1");
  if (!(threshold > 0.0 && threshold <= 1.0)) {
    throw Error(ErrorKind::kInvalidArgument, "threshold must lie in (0, 1]");
  }
  if (top_n < 1) throw Error(ErrorKind::kInvalidArgument, "top_n must be >= 1");
  if (jobs < 1) throw Error(ErrorKind::kInvalidArgument, "jobs must be >= 1");
  std::set<std::string> names;
  for (const EncoderSpec& e : effective_encoders()) {
    e.validate();
    if (!names.insert(e.name).second) {
      throw Error(ErrorKind::kInvalidArgument, "duplicate encoder name " + e.name);
    }
  }
  scorer.validate();
  training.validate();
}

PipelineConfig config_from_json(std::string_view content) {
  PipelineConfig cfg;
  try {
    json j = json::parse(content);
    cfg.corpus_path = j.value("corpus", "");
    cfg.word_vectors_path = j.value("word_vectors", "");
    cfg.work_dir = j.value("work_dir", "work");
    for (const auto& p : j.value("placeholders", std::vector<std::string>{}))
      cfg.placeholders.insert(p);
    for (const json& e : j.value("encoders", json::array())) {
      EncoderSpec spec;
      spec.kind = parse_encoder_kind(e.at("kind").get<std::string>());
      spec.name = e.value("name", std::string(encoder_kind_name(spec.kind)));
      spec.word_vectors_path = e.value("word_vectors", "");
      spec.endpoint = e.value("endpoint", "");
      spec.batch_size = e.value("batch_size", spec.batch_size);
      spec.max_in_flight = e.value("max_in_flight", spec.max_in_flight);
      cfg.encoders.push_back(std::move(spec));
    }
    if (j.contains("scorer")) {
      const json& s = j.at("scorer");
      cfg.scorer.kind = parse_scorer_kind(s.value("kind", "cosine_calibrated"));
      cfg.scorer.slope = s.value("slope", cfg.scorer.slope);
      cfg.scorer.intercept = s.value("intercept", cfg.scorer.intercept);
      cfg.scorer.endpoint = s.value("endpoint", "");
      cfg.scorer.batch_size = s.value("batch_size", cfg.scorer.batch_size);
      cfg.scorer.max_in_flight = s.value("max_in_flight", cfg.scorer.max_in_flight);
    }
    cfg.k = j.value("k", cfg.k);
    cfg.threshold = j.value("threshold", cfg.threshold);
    cfg.top_n = j.value("top_n", cfg.top_n);
    if (j.contains("training")) {
      const json& t = j.at("training");
      TrainingConfig& tc = cfg.training;
      tc.max_tokens = t.value("max_tokens", tc.max_tokens);
      tc.max_turns = t.value("max_turns", tc.max_turns);
      tc.smoothing = t.value("smoothing", tc.smoothing);
      tc.learning_rate = t.value("learning_rate", tc.learning_rate);
      tc.epochs = t.value("epochs", tc.epochs);
      tc.batch_size = t.value("batch_size", tc.batch_size);
      tc.validation_fraction = t.value("validation_fraction", tc.validation_fraction);
      tc.hash_bits = t.value("hash_bits", tc.hash_bits);
    }
    cfg.bind_address = j.value("bind", cfg.bind_address);
    cfg.static_dir = j.value("static_dir", "");
    cfg.seed = j.value("seed", cfg.seed);
    cfg.jobs = j.value("jobs", cfg.jobs);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kInvalidArgument, std::string("bad config: ") + e.what());
  }
  cfg.training.seed = cfg.seed;
  return cfg;
}

std::string config_to_json(const PipelineConfig& cfg) {
  json encoders = json::array();
  for (const auto& e : cfg.encoders) encoders.push_back(encoder_json(e));
  json j = {{"corpus", cfg.corpus_path.string()},
            {"word_vectors", cfg.word_vectors_path.string()},
            {"work_dir", cfg.work_dir.string()},
            {"placeholders", std::vector<std::string>(cfg.placeholders.begin(),
                                                      cfg.placeholders.end())},
            {"encoders", encoders},
            {"scorer",
             {{"kind", scorer_kind_name(cfg.scorer.kind)},
              {"slope", cfg.scorer.slope},
              {"intercept", cfg.scorer.intercept},
              {"endpoint", cfg.scorer.endpoint},
              {"batch_size", cfg.scorer.batch_size},
              {"max_in_flight", cfg.scorer.max_in_flight}}},
            {"k", cfg.k},
            {"threshold", cfg.threshold},
            {"top_n", cfg.top_n},
            {"training", training_json(cfg.training)},
            {"bind", cfg.bind_address},
            {"static_dir", cfg.static_dir.string()},
            {"seed", cfg.seed},
            {"jobs", cfg.jobs}};
  return j.dump(2) + "\n";
}

const char* stage_name(Stage stage) {
  switch (stage) {
    case Stage::kIngest:
      return "ingest";
    case Stage::kEmbed:
      return "embed";
    case Stage::kCandidates:
      return "candidates";
    case Stage::kScore:
      return "score";
    case Stage::kCluster:
      return "cluster";
    case Stage::kDataset:
      return "dataset";
    case Stage::kTrain:
      return "train";
  }
  return "unknown";
}

std::string stage_hash(const PipelineConfig& cfg, Stage stage) {
  json j;
  switch (stage) {
    case Stage::kIngest:
      j = {{"corpus", file_fingerprint(cfg.corpus_path)},
           {"placeholders", std::vector<std::string>(cfg.placeholders.begin(),
                                                     cfg.placeholders.end())}};
      break;
    case Stage::kEmbed: {
      json encoders = json::array();
      for (const auto& e : cfg.effective_encoders()) {
        json ej = encoder_json(e);
        ej["word_vectors"] = e.kind == EncoderKind::kAvgWordVec ||
                                     e.kind == EncoderKind::kTfidfWeightedWordVec
                                 ? file_fingerprint(e.word_vectors_path)
                                 : "";
        ej.erase("batch_size");
        ej.erase("max_in_flight");
        encoders.push_back(ej);
      }
      j = {{"up", stage_hash(cfg, Stage::kIngest)}, {"encoders", encoders}};
      break;
    }
    case Stage::kCandidates:
      j = {{"up", stage_hash(cfg, Stage::kEmbed)}, {"k", cfg.k}};
      break;
    case Stage::kScore:
      j = {{"up", stage_hash(cfg, Stage::kCandidates)},
           {"kind", scorer_kind_name(cfg.scorer.kind)},
           {"slope", cfg.scorer.slope},
           {"intercept", cfg.scorer.intercept},
           {"endpoint", cfg.scorer.endpoint}};
      break;
    case Stage::kCluster:
      j = {{"up", stage_hash(cfg, Stage::kScore)}, {"threshold", cfg.threshold}};
      break;
    case Stage::kDataset: {
      const WorkLayout w{cfg.work_dir};
      std::string catalog_structure;
      if (std::filesystem::exists(w.catalog())) {
        catalog_structure = catalog_from_json(read_file(w.catalog())).structure_hash();
      }
      j = {{"up", stage_hash(cfg, Stage::kCluster)},
           {"top_n", cfg.top_n},
           {"catalog", catalog_structure},
           {"max_tokens", cfg.training.max_tokens},
           {"max_turns", cfg.training.max_turns}};
      break;
    }
    case Stage::kTrain:
      j = {{"up", stage_hash(cfg, Stage::kDataset)},
           {"training", training_json(cfg.training)},
           {"seed", cfg.training.seed}};
      break;
  }
  return content_hash(j.dump());
}

ResponseTable run_ingest(const PipelineConfig& cfg) {
  if (cfg.corpus_path.empty()) {
    throw Error(ErrorKind::kInvalidArgument, "no corpus path configured");
  }
  const WorkLayout w{cfg.work_dir};
  const auto convs = load_conversations(cfg.corpus_path);
  ResponseTable table = extract_response_table(convs, Speaker::kDoctor, cfg.placeholders);
  const std::string hash = stage_hash(cfg, Stage::kIngest);
  write_file_atomic(w.responses(), response_table_to_json(table, hash));
  write_file_atomic(w.responses_tsv(), response_table_to_tsv(table));
  return table;
}

std::vector<EmbeddingMatrix> run_embed(const PipelineConfig& cfg) {
  const WorkLayout w{cfg.work_dir};
  const ResponseTable table = load_response_table(cfg);
  if (table.empty()) {
    throw Error(ErrorKind::kDataError,
                "response table is empty; nothing occurs more than once");
  }
  const TfidfModel tfidf = fit_tfidf(table);
  std::map<std::string, WordVectorTable> word_vectors;
  std::vector<EmbeddingMatrix> mats;
  const std::string hash = stage_hash(cfg, Stage::kEmbed);
  for (const EncoderSpec& spec : cfg.effective_encoders()) {
    const WordVectorTable* wv = nullptr;
    if (spec.kind == EncoderKind::kAvgWordVec ||
        spec.kind == EncoderKind::kTfidfWeightedWordVec) {
      if (spec.word_vectors_path.empty()) {
        throw Error(ErrorKind::kInvalidArgument,
                    "encoder " + spec.name + " needs a word-vector file");
      }
      auto it = word_vectors.find(spec.word_vectors_path);
      if (it == word_vectors.end()) {
        it = word_vectors
                 .emplace(spec.word_vectors_path,
                          load_word_vectors(spec.word_vectors_path))
                 .first;
      }
      wv = &it->second;
    }
    mats.push_back(embed(table, spec, &tfidf, wv));
    write_file_atomic(w.embedding(spec.name), embedding_matrix_to_json(mats.back(), hash));
  }
  return mats;
}

CandidatePairSet run_candidates(const PipelineConfig& cfg) {
  const WorkLayout w{cfg.work_dir};
  const auto mats = load_embeddings(cfg);
  CandidatePairSet pairs = generate_candidate_pairs(mats, cfg.k, cfg.jobs);
  write_file_atomic(w.candidates(),
                    candidate_pairs_to_tsv(pairs, stage_hash(cfg, Stage::kCandidates)));
  return pairs;
}

SparseDistanceMatrix run_score(const PipelineConfig& cfg) {
  const WorkLayout w{cfg.work_dir};
  std::string hash;
  const CandidatePairSet pairs = candidate_pairs_from_tsv(
      read_artifact(w.candidates(), Stage::kCandidates), &hash);
  check_hash(cfg, hash, Stage::kCandidates, w.candidates());
  const ResponseTable table = load_response_table(cfg);
  std::vector<EmbeddingMatrix> mats;
  if (cfg.scorer.kind == ScorerKind::kCosineCalibrated) mats = load_embeddings(cfg);
  const PairScores scores = score_pairs(pairs, table, cfg.scorer, mats);
  SparseDistanceMatrix d =
      build_distance_matrix(scores, static_cast<int32_t>(table.size()));
  write_file_atomic(w.distances(),
                    distance_matrix_to_tsv(d, stage_hash(cfg, Stage::kScore)));
  return d;
}

ClusterSet run_cluster(const PipelineConfig& cfg) {
  const WorkLayout w{cfg.work_dir};
  std::string hash;
  const SparseDistanceMatrix d =
      distance_matrix_from_tsv(read_artifact(w.distances(), Stage::kScore), &hash);
  check_hash(cfg, hash, Stage::kScore, w.distances());
  const ResponseTable table = load_response_table(cfg);
  const auto counts = table.counts();
  ClusterSet cs = complete_linkage_cluster(d, cfg.threshold, counts);
  write_file_atomic(w.clusters(),
                    cluster_set_to_json(cs, table, stage_hash(cfg, Stage::kCluster)));
  return cs;
}

MergeSession load_session_base(const PipelineConfig& cfg) {
  const ResponseTable table = load_response_table(cfg);
  const ClusterSet cs = load_clusters(cfg);
  return MergeSession(cs, table, cfg.top_n);
}

Catalog run_export_classes(const PipelineConfig& cfg) {
  const WorkLayout w{cfg.work_dir};
  MergeSession session =
      load_session_base(cfg).replay(ActionLog(w.action_log()).read_all());
  export_classes(session, w.catalog());
  return session.catalog();
}

Catalog run_scripted_merge(const PipelineConfig& cfg,
                           const std::map<std::string, int>& truth,
                           const std::vector<std::string>& class_names) {
  const WorkLayout w{cfg.work_dir};
  const ActionLog log(w.action_log());
  MergeSession session = load_session_base(cfg).replay(log.read_all());
  const size_t before = session.log().size();
  scripted_merge(session, truth, class_names);
  for (size_t i = before; i < session.log().size(); ++i) log.append(session.log()[i]);
  export_classes(session, w.catalog());
  return session.catalog();
}

Catalog run_kmeans_catalog(const PipelineConfig& cfg, int k,
                           const std::filesystem::path& out) {
  const ResponseTable table = load_response_table(cfg);
  const auto mats = load_embeddings(cfg);
  if (mats.empty()) throw Error(ErrorKind::kInvalidArgument, "no encoders configured");
  const auto counts = table.counts();
  const KMeansResult km = kmeans_baseline(mats.front(), k, cfg.seed, counts);
  Catalog catalog;
  std::set<std::string> names;
  for (const Cluster& c : km.clusters.clusters) {
    ResponseClass rc;
    rc.id = static_cast<int32_t>(catalog.classes.size());
    rc.name = table[c.centroid_id].normalized_text;
    // Centroid texts are distinct responses, but guard against collisions.
    while (!names.insert(rc.name).second) rc.name += " #" + std::to_string(rc.id);
    rc.exemplar_text = table[c.centroid_id].most_frequent_variant();
    rc.member_cluster_ids = {c.id};
    rc.member_response_ids = c.member_ids;
    catalog.classes.push_back(std::move(rc));
  }
  write_file_atomic(out, catalog_to_json(catalog));
  return catalog;
}

ResponseTable load_response_table(const PipelineConfig& cfg) {
  const WorkLayout w{cfg.work_dir};
  std::string hash;
  ResponseTable table =
      response_table_from_json(read_artifact(w.responses(), Stage::kIngest), &hash);
  check_hash(cfg, hash, Stage::kIngest, w.responses());
  return table;
}


Catalog load_catalog(const PipelineConfig& cfg, const std::filesystem::path& path) {
  const WorkLayout w{cfg.work_dir};
  const std::filesystem::path p = path.empty() ? w.catalog() : path;
  if (!std::filesystem::exists(p)) {
    throw Error(ErrorKind::kFailedPrecondition,
                "missing " + p.string() + ": finish the merge step (`serve`) and "
                "export the catalog first");
  }
  return catalog_from_json(read_file(p));
}

SoftmaxModel load_model(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    throw Error(ErrorKind::kFailedPrecondition,
                "missing " + path.string() + ": run `train` first");
  }
  return model_from_json(read_file(path));
}

std::vector<LabeledExample> run_dataset(const PipelineConfig& cfg) {
  const WorkLayout w{cfg.work_dir};
  const ResponseTable table = load_response_table(cfg);
  const Catalog catalog = load_catalog(cfg);
  const auto convs = load_conversations(cfg.corpus_path);
  auto examples = build_dataset(convs, catalog, table, cfg.training, cfg.placeholders);
  const json header = {{"config_hash", stage_hash(cfg, Stage::kDataset)},
                       {"catalog_hash", catalog.structure_hash()}};
  write_file_atomic(w.dataset(), header.dump() + "\n" + dataset_to_jsonl(examples));
  return examples;
}

TrainReport run_train(const PipelineConfig& cfg) {
  const WorkLayout w{cfg.work_dir};
  const auto examples = load_dataset(cfg);
  const Catalog catalog = load_catalog(cfg);
  const DatasetSplit split =
      split_dataset(examples, cfg.training.validation_fraction, cfg.training.seed);
  TrainResult tr = train(split.train, cfg.training,
                         static_cast<int32_t>(catalog.size()), catalog.structure_hash());
  TrainReport report;
  report.model = std::move(tr.model);
  report.model.config_hash = stage_hash(cfg, Stage::kTrain);
  report.loss_curve = std::move(tr.loss_curve);
  report.train_size = split.train.size();
  report.validation_size = split.validation.size();
  report.train_accuracy = evaluate_accuracy(report.model, split.train);
  report.validation_accuracy = evaluate_accuracy(report.model, split.validation);
  write_file_atomic(w.model(), model_to_json(report.model));
  const json summary = {{"config_hash", report.model.config_hash},
                        {"loss_curve", report.loss_curve},
                        {"train_size", report.train_size},
                        {"validation_size", report.validation_size},
                        {"train_accuracy", report.train_accuracy},
                        {"validation_accuracy", report.validation_accuracy}};
  write_file_atomic(w.training_report(), summary.dump(1) + "\n");
  return report;
}

std::vector<AblationRow> run_ablate_history(const PipelineConfig& cfg,
                                            const std::vector<int>& turn_counts) {
  const ResponseTable table = load_response_table(cfg);
  const Catalog catalog = load_catalog(cfg);
  const auto convs = load_conversations(cfg.corpus_path);
  return history_ablation(convs, catalog, table, cfg.training, turn_counts,
                          cfg.placeholders);
}

EvaluationReport run_evaluate(const PipelineConfig& cfg,
                              const std::vector<double>& thresholds,
                              const std::filesystem::path& judgments_path) {
  const WorkLayout w{cfg.work_dir};
  const Catalog catalog = load_catalog(cfg);
  const SoftmaxModel model = load_model(w.model());
  check_catalog(model, catalog);
  if (!cfg.force && model.config_hash != stage_hash(cfg, Stage::kTrain)) {
    throw Error(ErrorKind::kFailedPrecondition,
                w.model().string() +
                    " was trained with a different configuration; re-run `train` "
                    "or pass --force");
  }
  const auto examples = load_dataset(cfg);
  const DatasetSplit split =
      split_dataset(examples, cfg.training.validation_fraction, cfg.training.seed);
  EvaluationReport report;
  report.examples = split.validation.size();
  report.accuracy = evaluate_accuracy(model, split.validation);
  std::map<std::string, Judgment> given;
  if (!judgments_path.empty()) {
    for (const auto& r : parse_judgments(read_file(judgments_path)))
      given[r.context_id] = r.category;
  }
  for (const LabeledExample& ex : split.validation) {
    const auto p = model.probabilities(model.hasher.featurize(ex.context));
    const int32_t best = argmax(p);
    const std::string id =
        ex.context.source_conversation + ":" + std::to_string(ex.context.position);
    JudgmentRecord rec{id, "discriminative",
                       best == ex.class_id ? Judgment::kEquivalent : Judgment::kWorse};
    if (!judgments_path.empty()) {
      auto it = given.find(id);
      if (it == given.end()) continue;
      rec.category = it->second;
    }
    const ResponseClass* rc = catalog.find(best);
    report.suggestions.push_back(rc ? rc->exemplar_text : "");
    report.confidences.push_back(p[best]);
    report.judgments.push_back(rec);
  }
  report.curve = risk_coverage_curve(report.confidences, report.judgments, thresholds);
  return report;
}

}  // namespace respclass
