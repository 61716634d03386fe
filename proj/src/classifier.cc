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

#include "respclass/classifier.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <unordered_map>

#include "json.hpp"

namespace respclass {

using nlohmann::json;

void TrainingConfig::validate() const {
  if (max_tokens < 1) {
    throw Error(ErrorKind::kInvalidArgument, "max_tokens must be >= 1");
  }
  if (!(smoothing >= 0.0 && smoothing < 1.0)) {
    throw Error(ErrorKind::kInvalidArgument, "smoothing must lie in [0, 1)");
  }
  if (!(learning_rate > 0.0) || epochs < 1 || batch_size < 1) {
    throw Error(ErrorKind::kInvalidArgument,
                "learning_rate, epochs and batch_size must be positive");
  }
  if (!(validation_fraction >= 0.0 && validation_fraction < 1.0)) {
    throw Error(ErrorKind::kInvalidArgument,
                "validation_fraction must lie in [0, 1)");
  }
  if (hash_bits < 1 || hash_bits > 26) {
    throw Error(ErrorKind::kInvalidArgument, "hash_bits must lie in [1, 26]");
  }
}

ContextWindow featurize_context(std::span<const Turn> turns,
                                const TrainingConfig& cfg,
                                const PlaceholderSet& placeholders) {
  ContextWindow window;
  std::vector<Turn> merged = merge_consecutive_turns(turns);
  size_t first = 0;
  if (cfg.max_turns > 0 && merged.size() > static_cast<size_t>(cfg.max_turns)) {
    first = merged.size() - static_cast<size_t>(cfg.max_turns);
  }
  for (size_t i = first; i < merged.size(); ++i) {
    window.tokens.emplace_back(merged[i].speaker == Speaker::kDoctor
                                   ? kDoctorMarker
                                   : kPatientMarker);
    for (auto& tok : split_whitespace(normalize_text(merged[i].text, placeholders)))
      window.tokens.push_back(std::move(tok));
  }
  const size_t limit = static_cast<size_t>(std::max(cfg.max_tokens, 1));
  if (window.tokens.size() > limit) {
    window.tokens.erase(window.tokens.begin(),
                        window.tokens.end() - static_cast<ptrdiff_t>(limit));
  }
  return window;
}

FeatureHasher::FeatureHasher(int bits, uint64_t seed) : bits_(bits), seed_(seed) {
  Rng rng(seed);
  multiplier_ = rng.next_u64() | 1ULL;
}

int32_t FeatureHasher::slot(std::string_view key) const {
  const uint64_t h = fnv1a64(key) * multiplier_;
  return static_cast<int32_t>(h >> (64 - bits_));
}

SparseVector FeatureHasher::featurize(const ContextWindow& window) const {
  std::map<int32_t, double> counts;
  const int32_t pat_slot = (int32_t{1} << bits_);
  const int32_t doc_slot = pat_slot + 1;
  const auto& toks = window.tokens;
  for (size_t i = 0; i < toks.size(); ++i) {
    if (toks[i] == kPatientMarker) {
      counts[pat_slot] += 1.0;
    } else if (toks[i] == kDoctorMarker) {
      counts[doc_slot] += 1.0;
    } else {
      counts[slot("u\x1f" + toks[i])] += 1.0;
    }
    if (i + 1 < toks.size()) {
      counts[slot("b\x1f" + toks[i] + "\x1f" + toks[i + 1])] += 1.0;
    }
  }
  double sq = 0.0;
  for (const auto& [idx, v] : counts) sq += v * v;
  const double inv = sq > 0.0 ? 1.0 / std::sqrt(sq) : 0.0;
  SparseVector out;
  for (const auto& [idx, v] : counts) {
    out.indices.push_back(idx);
    out.values.push_back(v * inv);
  }
  return out;
}

SoftmaxModel SoftmaxModel::zeros(int32_t num_classes, int32_t feature_dim) {
  SoftmaxModel m;
  m.num_classes = num_classes;
  m.feature_dim = feature_dim;
  m.weights.assign(static_cast<size_t>(num_classes) * feature_dim, 0.0);
  m.bias.assign(static_cast<size_t>(num_classes), 0.0);
  return m;
}

std::vector<double> SoftmaxModel::logits(const SparseVector& x) const {
  std::vector<double> z(bias);
  for (size_t i = 0; i < x.indices.size(); ++i) {
    const int32_t f = x.indices[i];
    if (f < 0 || f >= feature_dim) continue;
    const double* col = &weights[static_cast<size_t>(f) * num_classes];
    for (int32_t k = 0; k < num_classes; ++k) z[k] += x.values[i] * col[k];
  }
  return z;
}

std::vector<double> SoftmaxModel::probabilities(const SparseVector& x) const {
  return softmax(logits(x));
}

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> p(logits.begin(), logits.end());
  if (p.empty()) return p;
  const double mx = *std::max_element(p.begin(), p.end());
  double sum = 0.0;
  for (double& v : p) {
    v = std::exp(v - mx);
    sum += v;
  }
  for (double& v : p) v /= sum;
  return p;
}

std::vector<double> smoothed_targets(int32_t class_id, int32_t num_classes,
                                     double smoothing) {
  if (num_classes < 1 || class_id < 0 || class_id >= num_classes) {
    throw Error(ErrorKind::kInvalidArgument, "class id out of range");
  }
  if (!(smoothing >= 0.0 && smoothing < 1.0)) {
    throw Error(ErrorKind::kInvalidArgument, "smoothing must lie in [0, 1)");
  }
  const double off = smoothing / num_classes;
  std::vector<double> q(static_cast<size_t>(num_classes), off);
  q[class_id] = (1.0 - smoothing) + off;
  return q;
}

std::vector<double> Gradient::dense_weights(int32_t feature_dim,
                                            int32_t num_classes) const {
  std::vector<double> out(static_cast<size_t>(feature_dim) * num_classes, 0.0);
  for (const auto& [f, col] : columns) {
    std::copy(col.begin(), col.end(),
              out.begin() + static_cast<ptrdiff_t>(f) * num_classes);
  }
  return out;
}

LossAndGrad loss_and_grad(const SoftmaxModel& model,
                          std::span<const FeaturizedExample> batch) {
  if (batch.empty()) {
    throw Error(ErrorKind::kInvalidArgument, "loss_and_grad: empty batch");
  }
  const int32_t K = model.num_classes;
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  LossAndGrad out;
  out.gradient.bias.assign(static_cast<size_t>(K), 0.0);
  for (const FeaturizedExample& ex : batch) {
    for (size_t i = 0; i < ex.features.indices.size(); ++i) {
      if (!std::isfinite(ex.features.values[i])) {
        throw Error(ErrorKind::kInvalidArgument, "non-finite feature value");
      }
      if (ex.features.indices[i] < 0 || ex.features.indices[i] >= model.feature_dim) {
        throw Error(ErrorKind::kInvalidArgument, "feature index out of range");
      }
    }
    const std::vector<double> z = model.logits(ex.features);
    const double mx = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (double v : z) sum += std::exp(v - mx);
    const double lse = mx + std::log(sum);
    const std::vector<double> q = smoothed_targets(ex.class_id, K, model.smoothing);
    std::vector<double> residual(static_cast<size_t>(K));
    for (int32_t k = 0; k < K; ++k) {
      const double log_p = z[k] - lse;
      out.loss -= q[k] * log_p * inv_b;
      residual[k] = (std::exp(log_p) - q[k]) * inv_b;
      out.gradient.bias[k] += residual[k];
    }
    for (size_t i = 0; i < ex.features.indices.size(); ++i) {
      auto& col = out.gradient.columns[ex.features.indices[i]];
      if (col.empty()) col.assign(static_cast<size_t>(K), 0.0);
      for (int32_t k = 0; k < K; ++k) col[k] += ex.features.values[i] * residual[k];
    }
  }
  return out;
}

std::vector<FeaturizedExample> featurize_examples(
    const FeatureHasher& hasher, std::span<const LabeledExample> examples) {
  std::vector<FeaturizedExample> out;
  out.reserve(examples.size());
  for (const LabeledExample& ex : examples) {
    out.push_back({hasher.featurize(ex.context), ex.class_id});
  }
  return out;
}

std::vector<LabeledExample> build_dataset(std::span<const Conversation> convs,
                                          const Catalog& catalog,
                                          const ResponseTable& table,
                                          const TrainingConfig& cfg,
                                          const PlaceholderSet& placeholders) {
  if (catalog.classes.empty()) {
    throw Error(ErrorKind::kInvalidArgument, "build_dataset: empty catalog");
  }
  std::unordered_map<std::string, int32_t> text_to_class;
  for (const ResponseClass& c : catalog.classes) {
    for (ResponseId r : c.member_response_ids) {
      if (r >= 0 && static_cast<size_t>(r) < table.size())
        text_to_class[table[r].normalized_text] = c.id;
    }
  }
  std::vector<LabeledExample> out;
  for (const Conversation& conv : convs) {
    const std::vector<Turn> turns = merge_consecutive_turns(conv.turns);
    for (size_t i = 1; i < turns.size(); ++i) {
      if (turns[i].speaker != Speaker::kDoctor) continue;
      auto it = text_to_class.find(normalize_text(turns[i].text, placeholders));
      if (it == text_to_class.end()) continue;
      LabeledExample ex;
      ex.context = featurize_context(std::span(turns).first(i), cfg, placeholders);
      ex.context.source_conversation = conv.id;
      ex.context.position = static_cast<int>(i);
      ex.class_id = it->second;
      out.push_back(std::move(ex));
    }
  }
  return out;
}

DatasetSplit split_dataset(std::span<const LabeledExample> examples,
                           double validation_fraction, uint64_t seed) {
  std::vector<std::string> ids;
  std::set<std::string> seen;
  for (const LabeledExample& ex : examples) {
    if (seen.insert(ex.context.source_conversation).second)
      ids.push_back(ex.context.source_conversation);
  }
  Rng rng(seed ^ 0x73706c6974ULL);
  rng.shuffle(ids);
  const auto n_val = static_cast<size_t>(
      std::llround(validation_fraction * static_cast<double>(ids.size())));
  std::set<std::string> validation(ids.begin(),
                                   ids.begin() + static_cast<ptrdiff_t>(n_val));
  DatasetSplit split;
  for (const LabeledExample& ex : examples) {
    (validation.count(ex.context.source_conversation) ? split.validation
                                                      : split.train)
        .push_back(ex);
  }
  return split;
}

TrainResult train_featurized(std::span<const FeaturizedExample> examples,
                             const TrainingConfig& cfg, int32_t num_classes,
                             int32_t feature_dim) {
  cfg.validate();
  if (examples.empty()) {
    throw Error(ErrorKind::kInvalidArgument, "train: no examples");
  }
  std::set<int32_t> present;
  for (const FeaturizedExample& ex : examples) {
    if (ex.class_id < 0 || ex.class_id >= num_classes) {
      throw Error(ErrorKind::kInvalidArgument,
                  "train: class id " + std::to_string(ex.class_id) +
                      " outside the catalog");
    }
    present.insert(ex.class_id);
  }
  if (present.size() < 2) {
    throw Error(ErrorKind::kInvalidArgument,
                "train: need at least two classes in the data");
  }
  TrainResult result;
  SoftmaxModel& model = result.model;
  model = SoftmaxModel::zeros(num_classes, feature_dim);
  model.smoothing = cfg.smoothing;
  model.config = cfg;
  model.train_examples = static_cast<int64_t>(examples.size());

  std::vector<size_t> order(examples.size());
  std::iota(order.begin(), order.end(), size_t{0});
  Rng rng(cfg.seed);
  std::vector<FeaturizedExample> batch;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order);
    double epoch_loss = 0.0;
    for (size_t start = 0; start < order.size();
         start += static_cast<size_t>(cfg.batch_size)) {
      const size_t end =
          std::min(order.size(), start + static_cast<size_t>(cfg.batch_size));
      batch.clear();
      for (size_t i = start; i < end; ++i) batch.push_back(examples[order[i]]);
      LossAndGrad lg = loss_and_grad(model, batch);
      epoch_loss += lg.loss * static_cast<double>(end - start);
      for (const auto& [f, col] : lg.gradient.columns) {
        double* w = &model.weights[static_cast<size_t>(f) * num_classes];
        for (int32_t k = 0; k < num_classes; ++k) w[k] -= cfg.learning_rate * col[k];
      }
      for (int32_t k = 0; k < num_classes; ++k)
        model.bias[k] -= cfg.learning_rate * lg.gradient.bias[k];
    }
    result.loss_curve.push_back(epoch_loss / static_cast<double>(order.size()));
  }
  return result;
}

TrainResult train(std::span<const LabeledExample> examples,
                  const TrainingConfig& cfg, int32_t num_classes,
                  std::string catalog_hash) {
  cfg.validate();
  FeatureHasher hasher(cfg.hash_bits);
  const auto featurized = featurize_examples(hasher, examples);
  TrainResult result =
      train_featurized(featurized, cfg, num_classes, hasher.dimension());
  result.model.hasher = hasher;
  result.model.catalog_hash = std::move(catalog_hash);
  return result;
}

void check_catalog(const SoftmaxModel& model, const Catalog& catalog) {
  if (model.catalog_hash != catalog.structure_hash() ||
      static_cast<size_t>(model.num_classes) != catalog.size()) {
    throw Error(ErrorKind::kFailedPrecondition,
                "model was trained on a different catalog (hash " +
                    model.catalog_hash + ", catalog " + catalog.structure_hash() +
                    "); retrain after changing class membership");
  }
}

std::vector<double> predict_proba(const SoftmaxModel& model,
                                  const Catalog& catalog,
                                  std::span<const Turn> turns,
                                  const PlaceholderSet& placeholders) {
  check_catalog(model, catalog);
  const ContextWindow window = featurize_context(turns, model.config, placeholders);
  return model.probabilities(model.hasher.featurize(window));
}

int32_t argmax(std::span<const double> values) {
  int32_t best = 0;
  for (size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = static_cast<int32_t>(i);
  }
  return best;
}

double evaluate_accuracy(const SoftmaxModel& model,
                         std::span<const LabeledExample> examples) {
  if (examples.empty()) return 0.0;
  size_t correct = 0;
  for (const LabeledExample& ex : examples) {
    const auto p = model.probabilities(model.hasher.featurize(ex.context));
    if (argmax(p) == ex.class_id) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(examples.size());
}

std::vector<AblationRow> history_ablation(std::span<const Conversation> convs,
                                          const Catalog& catalog,
                                          const ResponseTable& table,
                                          const TrainingConfig& cfg,
                                          std::span<const int> turn_counts,
                                          const PlaceholderSet& placeholders) {
  if (turn_counts.empty()) {
    throw Error(ErrorKind::kInvalidArgument, "history_ablation: no turn counts");
  }
  std::vector<AblationRow> rows;
  for (int turns : turn_counts) {
    TrainingConfig c = cfg;
    c.max_turns = turns;
    const auto examples = build_dataset(convs, catalog, table, c, placeholders);
    const DatasetSplit split =
        split_dataset(examples, c.validation_fraction, c.seed);
    AblationRow row;
    row.max_turns = turns;
    row.train_size = split.train.size();
    row.validation_size = split.validation.size();
    const TrainResult tr = train(split.train, c,
                                 static_cast<int32_t>(catalog.size()),
                                 catalog.structure_hash());
    row.accuracy = evaluate_accuracy(tr.model, split.validation);
    rows.push_back(row);
  }
  return rows;
}

namespace {

json config_json(const TrainingConfig& c) {
  return {{"max_tokens", c.max_tokens},
          {"max_turns", c.max_turns},
          {"smoothing", c.smoothing},
          {"learning_rate", c.learning_rate},
          {"epochs", c.epochs},
          {"batch_size", c.batch_size},
          {"seed", c.seed},
          {"validation_fraction", c.validation_fraction},
          {"hash_bits", c.hash_bits}};
}

TrainingConfig config_from(const json& j) {
  TrainingConfig c;
  c.max_tokens = j.at("max_tokens").get<int>();
  c.max_turns = j.at("max_turns").get<int>();
  c.smoothing = j.at("smoothing").get<double>();
  c.learning_rate = j.at("learning_rate").get<double>();
  c.epochs = j.at("epochs").get<int>();
  c.batch_size = j.at("batch_size").get<int>();
  c.seed = j.at("seed").get<uint64_t>();
  c.validation_fraction = j.at("validation_fraction").get<double>();
  c.hash_bits = j.at("hash_bits").get<int>();
  return c;
}

constexpr int kModelFormatVersion = 1;

}  // namespace

std::string model_to_json(const SoftmaxModel& model) {
  json columns = json::array();
  for (int32_t f = 0; f < model.feature_dim; ++f) {
    const auto begin = model.weights.begin() + static_cast<ptrdiff_t>(f) * model.num_classes;
    const auto end = begin + model.num_classes;
    if (std::all_of(begin, end, [](double w) { return w == 0.0; })) continue;
    columns.push_back({{"f", f}, {"w", std::vector<double>(begin, end)}});
  }
  json doc = {{"format_version", kModelFormatVersion},
              {"config", config_json(model.config)},
              {"hash_spec",
               {{"kind", "multiply_shift_fnv1a"},
                {"bits", model.hasher.bits()},
                {"seed", model.hasher.seed()},
                {"dimension", model.feature_dim}}},
              {"num_classes", model.num_classes},
              {"catalog_hash", model.catalog_hash},
              {"smoothing", model.smoothing},
              {"train_examples", model.train_examples},
              {"config_hash", model.config_hash},
              {"bias", model.bias},
              {"columns", std::move(columns)}};
  return doc.dump() + "\n";
}

SoftmaxModel model_from_json(std::string_view content) {
  try {
    json doc = json::parse(content);
    if (doc.at("format_version").get<int>() != kModelFormatVersion) {
      throw Error(ErrorKind::kDataError, "unsupported model format version");
    }
    const json& hs = doc.at("hash_spec");
    SoftmaxModel m = SoftmaxModel::zeros(doc.at("num_classes").get<int32_t>(),
                                         hs.at("dimension").get<int32_t>());
    m.hasher = FeatureHasher(hs.at("bits").get<int>(), hs.at("seed").get<uint64_t>());
    m.config = config_from(doc.at("config"));
    m.catalog_hash = doc.at("catalog_hash").get<std::string>();
    m.smoothing = doc.at("smoothing").get<double>();
    m.train_examples = doc.at("train_examples").get<int64_t>();
    m.config_hash = doc.value("config_hash", "");
    m.bias = doc.at("bias").get<std::vector<double>>();
    if (m.bias.size() != static_cast<size_t>(m.num_classes)) {
      throw Error(ErrorKind::kDataError, "model bias length mismatch");
    }
    for (const json& col : doc.at("columns")) {
      const auto f = col.at("f").get<int32_t>();
      const auto w = col.at("w").get<std::vector<double>>();
      if (f < 0 || f >= m.feature_dim || w.size() != static_cast<size_t>(m.num_classes)) {
        throw Error(ErrorKind::kDataError, "model weight column out of range");
      }
      std::copy(w.begin(), w.end(),
                m.weights.begin() + static_cast<ptrdiff_t>(f) * m.num_classes);
    }
    return m;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kDataError, std::string("malformed model: ") + e.what());
  }
}

std::string dataset_to_jsonl(std::span<const LabeledExample> examples) {
  std::string out;
  for (const LabeledExample& ex : examples) {
    json j = {{"conversation", ex.context.source_conversation},
              {"position", ex.context.position},
              {"class_id", ex.class_id},
              {"tokens", ex.context.tokens}};
    out += j.dump() + "\n";
  }
  return out;
}

std::vector<LabeledExample> dataset_from_jsonl(std::string_view content) {
  std::vector<LabeledExample> out;
  size_t start = 0, line_no = 0;
  while (start < content.size()) {
    size_t end = content.find('\n', start);
    if (end == std::string_view::npos) end = content.size();
    std::string_view line = content.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (line.empty()) continue;
    try {
      json j = json::parse(line);
      LabeledExample ex;
      ex.context.source_conversation = j.at("conversation").get<std::string>();
      ex.context.position = j.at("position").get<int>();
      ex.context.tokens = j.at("tokens").get<std::vector<std::string>>();
      ex.class_id = j.at("class_id").get<int32_t>();
      out.push_back(std::move(ex));
    } catch (const json::exception& e) {
      throw Error(ErrorKind::kDataError, "dataset line " + std::to_string(line_no) +
                                             ": " + e.what());
    }
  }
  return out;
}

}  // namespace respclass
