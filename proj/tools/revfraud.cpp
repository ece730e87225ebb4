// Command-line front end: keyword extraction, attack simulation, pair
// sampling, training, evaluation and scoring.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "revfraud/attacksim/attacksim.hpp"
#include "revfraud/errors.hpp"
#include "revfraud/features/binary_io.hpp"
#include "revfraud/features/checkpoint.hpp"
#include "revfraud/features/dataset.hpp"
#include "revfraud/features/embedding_store.hpp"
#include "revfraud/pipeline/config.hpp"
#include "revfraud/pipeline/model.hpp"
#include "revfraud/pipeline/synthetic.hpp"
#include "revfraud/pipeline/train.hpp"
#include "revfraud/sampler/sampler.hpp"
#include "revfraud/textrank/textrank.hpp"

namespace {

using namespace revfraud;
using nlohmann::json;

struct CommonOptions {
  std::optional<std::uint64_t> seed;
  std::string config;
  std::string dataset;
  std::string embeddings;
  std::string checkpoint;
  std::string out;
};

// Writes to --out atomically, or to stdout when no path was given.
void emit(const std::string& out, const std::string& text) {
  if (out.empty()) {
    std::cout << text;
  } else {
    features::write_file_atomic(out, text);
  }
}

std::string require(const std::string& value, const char* flag) {
  if (value.empty()) throw ConfigError(std::string("missing required option ") + flag);
  return value;
}

pipeline::TrainConfig load_config(const CommonOptions& o) {
  pipeline::TrainConfig c = o.config.empty() ? pipeline::TrainConfig{} : pipeline::TrainConfig::load(o.config);
  if (o.seed) c.seed = *o.seed;
  c.validate();
  return c;
}

struct TextOptions {
  std::string stopwords;
  std::string pos_lexicon;
  std::string unknown_tag = "noun";
};

attacksim::StopwordSet load_stopwords_or_empty(const std::string& path) {
  return path.empty() ? attacksim::StopwordSet{} : attacksim::load_stopwords(path);
}

// Words missing from the dictionary (or every word, without one) get `unknown_tag`.
std::unique_ptr<textrank::PosTagger> load_tagger(const TextOptions& t) {
  const textrank::PosTag fallback = textrank::parse_pos_tag(t.unknown_tag);
  if (t.pos_lexicon.empty()) {
    return std::make_unique<textrank::DictionaryTagger>(std::unordered_map<std::string, textrank::PosTag>{}, fallback);
  }
  return std::make_unique<textrank::DictionaryTagger>(textrank::DictionaryTagger::load(t.pos_lexicon, fallback));
}

void run_extract_keywords(const CommonOptions& o, const TextOptions& t, const std::string& text, std::size_t top_n) {
  const auto stopwords = load_stopwords_or_empty(t.stopwords);
  const auto tagger = load_tagger(t);
  textrank::RankConfig rank;
  rank.top_n = top_n;
  auto keywords = [&](const std::string& review) {
    const auto sentences = attacksim::preprocess_sentences(review, stopwords);
    return textrank::extract_keywords(textrank::tag_sentences(sentences, *tagger), rank);
  };

  std::ostringstream out;
  if (!text.empty()) {
    out << json{{"keywords", keywords(text)}}.dump() << '\n';
  } else {
    const auto schema = features::FeatureSchema::standard();
    for (const auto& row : features::load_dataset(require(o.dataset, "--dataset"), schema)) {
      out << json{{"row_id", row.row_id}, {"keywords", keywords(row.text)}}.dump() << '\n';
    }
  }
  emit(o.out, out.str());
}

struct FakeOptions {
  std::size_t category = 0;
  std::size_t count = 0;
  std::string lexicon;
  std::string generator;
  std::uint64_t first_row_id = 0;
  bool merge = true;
};

void run_generate_fakes(const CommonOptions& o, const TextOptions& t, const FakeOptions& f) {
  const auto schema = features::FeatureSchema::standard();
  const auto dataset = features::load_dataset(require(o.dataset, "--dataset"), schema);
  const attacksim::Lexicon lexicon = f.lexicon.empty() ? attacksim::Lexicon{} : attacksim::Lexicon::load(f.lexicon);
  const auto tagger = load_tagger(t);
  attacksim::GenerationConfig gen_config;
  gen_config.stopwords = load_stopwords_or_empty(t.stopwords);

  std::unique_ptr<attacksim::GeneratorClient> generator;
  if (f.generator.empty()) {
    generator = std::make_unique<attacksim::EchoGenerator>();
  } else {
    generator = std::make_unique<attacksim::ExternalCommandGenerator>(f.generator);
  }

  ndmath::Rng rng(o.seed.value_or(0));
  attacksim::GenerationReport report;
  const auto texts = attacksim::generate_fake_reviews(dataset, schema, f.category, f.count, lexicon, *tagger,
                                                      *generator, gen_config, rng, &report);
  std::uint64_t first_id = f.first_row_id;
  if (first_id == 0) {
    for (const auto& r : dataset) first_id = std::max(first_id, r.row_id + 1);
  }
  const auto pool = features::attributes_of(dataset);
  auto fakes = attacksim::assign_random_attributes(texts, pool, first_id, rng);
  const auto rows = f.merge ? attacksim::merge_balanced(fakes, dataset, rng) : fakes;

  std::ostringstream out;
  features::write_dataset(out, rows, schema);
  emit(o.out, out.str());
  std::cerr << "generated " << texts.size() << " fakes from " << report.groups_used << " groups ("
            << report.groups_skipped << " skipped, " << report.retries << " retries), wrote " << rows.size()
            << " rows\n";
}

void run_sample_pairs(const CommonOptions& o, double keep_probability, const std::string& mode) {
  const auto schema = features::FeatureSchema::standard();
  const auto dataset = features::load_dataset(require(o.dataset, "--dataset"), schema);
  const auto store = features::EmbeddingStore::load(require(o.embeddings, "--embeddings"));
  sampler::SamplerConfig cfg;
  cfg.keep_probability = keep_probability;
  cfg.rng_seed = o.seed.value_or(0);
  cfg.mode = mode == "argmin" ? sampler::DissimilarityMode::argmin_dot : sampler::DissimilarityMode::argmax_dot;
  const auto result = sampler::sample_pairs(dataset, store, cfg);
  std::ostringstream out;
  features::write_dataset(out, result.rows, schema);
  emit(require(o.out, "--out"), out.str());
  std::cerr << "kept " << result.report.kept << ", swap events " << result.report.swap_events << ", fallbacks "
            << result.report.fallbacks << '\n';
}

void run_train(const CommonOptions& o, const std::string& metrics_path, const std::string& best_path) {
  const auto schema = features::FeatureSchema::standard();
  const auto config = load_config(o);
  const auto dataset = features::load_dataset(require(o.dataset, "--dataset"), schema);
  const auto store = features::EmbeddingStore::load(require(o.embeddings, "--embeddings"));
  const auto [train_rows, val_rows] = pipeline::split(dataset, config.split_ratio, config.seed);

  std::cerr << "training on " << train_rows.size() << " rows, validating on " << val_rows.size() << '\n';
  const auto result = pipeline::train(train_rows, val_rows, store, schema, config, [](const pipeline::EpochMetrics& m) {
    std::cerr << "epoch " << m.epoch << "  train loss " << m.train_loss << "  val loss " << m.val_loss
              << "  train acc " << m.train_accuracy << "  val acc " << m.val_accuracy << '\n';
  });

  features::save_checkpoint(require(o.checkpoint, "--checkpoint"), result.final_checkpoint);
  if (!best_path.empty()) features::save_checkpoint(best_path, result.best_checkpoint);

  std::ostringstream metrics;
  std::vector<pipeline::EpochMetrics> all{result.initial};
  all.insert(all.end(), result.history.begin(), result.history.end());
  pipeline::write_metrics(metrics, all);
  const std::string path = metrics_path.empty() ? o.out : metrics_path;
  if (!path.empty()) features::write_file_atomic(path, metrics.str());
}

void run_evaluate(const CommonOptions& o, std::optional<double> threshold) {
  const auto schema = features::FeatureSchema::standard();
  const auto ck = features::load_checkpoint(require(o.checkpoint, "--checkpoint"), schema);
  const auto dataset = features::load_dataset(require(o.dataset, "--dataset"), schema);
  const auto store = features::EmbeddingStore::load(require(o.embeddings, "--embeddings"));
  const double tau = threshold.value_or(ck.threshold);
  const auto r = pipeline::evaluate(ck.model, schema, dataset, store, tau, ck.margin);
  emit(o.out, json{{"rows", r.rows}, {"accuracy", r.accuracy}, {"loss", r.loss_sum}, {"threshold", tau}}.dump() +
                  "\n");
}

void run_score(const CommonOptions& o, std::optional<double> threshold) {
  const auto schema = features::FeatureSchema::standard();
  const auto ck = features::load_checkpoint(require(o.checkpoint, "--checkpoint"), schema);
  const auto dataset = features::load_dataset(require(o.dataset, "--dataset"), schema);
  const auto store = features::EmbeddingStore::load(require(o.embeddings, "--embeddings"));
  const double tau = threshold.value_or(ck.threshold);
  std::ostringstream out;
  for (const auto& row : dataset) {
    const auto c = pipeline::classify_pair(ck.model, schema, store.at(row.row_id), row.attributes, tau);
    out << json{{"row_id", row.row_id}, {"distance", c.distance}, {"label", c.label}}.dump() << '\n';
  }
  emit(o.out, out.str());
}

void run_synth(const CommonOptions& o, pipeline::SyntheticConfig cfg) {
  const auto schema = features::FeatureSchema::standard();
  cfg.seed = o.seed.value_or(0);
  const auto data = pipeline::make_synthetic_dataset(schema, cfg);
  features::save_dataset(require(o.dataset, "--dataset"), data.rows, schema);
  data.store.save(require(o.embeddings, "--embeddings"));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Review-fraud detection by contrastive text/attribute consistency"};
  app.require_subcommand(1);

  CommonOptions common;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--seed", common.seed, "Random seed");
    sub->add_option("--config", common.config, "Training configuration file (key = value)");
    sub->add_option("--dataset", common.dataset, "Dataset file (JSON lines)");
    sub->add_option("--embeddings", common.embeddings, "Embedding store file");
    sub->add_option("--checkpoint", common.checkpoint, "Model checkpoint file");
    sub->add_option("--out", common.out, "Output file");
  };
  TextOptions text_opts;
  auto add_text = [&](CLI::App* sub) {
    sub->add_option("--stopwords", text_opts.stopwords, "Stopword list, one word per line");
    sub->add_option("--pos-lexicon", text_opts.pos_lexicon, "POS dictionary, word<TAB>tag per line");
    sub->add_option("--unknown-tag", text_opts.unknown_tag, "Tag for words missing from the dictionary")
        ->check(CLI::IsMember({"noun", "verb", "adverb", "adjective", "other"}));
  };

  auto* extract = app.add_subcommand("extract-keywords", "TextRank keywords of a text or of every dataset row");
  add_common(extract);
  add_text(extract);
  std::string text;
  std::size_t top_n = 10;
  extract->add_option("--text", text, "Review text; overrides --dataset");
  extract->add_option("--top", top_n, "Keywords per review")->check(CLI::PositiveNumber);

  auto* fakes = app.add_subcommand("generate-fakes", "Generate fake reviews for one business category");
  add_common(fakes);
  add_text(fakes);
  FakeOptions fake_opts;
  fakes->add_option("--category", fake_opts.category, "Business category index")->required();
  fakes->add_option("--count", fake_opts.count, "Number of fake reviews")->required();
  fakes->add_option("--lexicon", fake_opts.lexicon, "Synonym/antonym lexicon");
  fakes->add_option("--generator", fake_opts.generator, "Shell command reading a prompt on stdin (default: echo stub)");
  fakes->add_option("--first-row-id", fake_opts.first_row_id, "Row id of the first fake (default: max id + 1)");
  bool fakes_only = false;
  fakes->add_flag("--fakes-only", fakes_only, "Write only the fake rows instead of the balanced merge");

  auto* sample = app.add_subcommand("sample-pairs", "Label a genuine dataset by attribute swapping");
  add_common(sample);
  double keep_probability = 2.0 / 3.0;
  std::string mode = "argmax";
  sample->add_option("--keep-probability", keep_probability, "Probability of keeping a row as genuine");
  sample->add_option("--mode", mode, "Partner choice: argmax or argmin dot product")
      ->check(CLI::IsMember({"argmax", "argmin"}));

  auto* train = app.add_subcommand("train", "Train the two-branch model");
  add_common(train);
  std::string metrics_path;
  std::string best_path;
  train->add_option("--metrics", metrics_path, "Metrics history (JSON lines); defaults to --out");
  train->add_option("--best-checkpoint", best_path, "Checkpoint of the epoch with the best validation accuracy");

  auto* eval = app.add_subcommand("evaluate", "Accuracy and summed contrastive loss on a labelled dataset");
  add_common(eval);
  std::optional<double> threshold;
  eval->add_option("--threshold", threshold, "Distance threshold (default: from checkpoint)");

  auto* score = app.add_subcommand("score", "Per-row distance and predicted label");
  add_common(score);
  score->add_option("--threshold", threshold, "Distance threshold (default: from checkpoint)");

  auto* synth = app.add_subcommand("synth", "Write a synthetic dataset and embedding store");
  add_common(synth);
  pipeline::SyntheticConfig synth_cfg;
  synth->add_option("--rows", synth_cfg.rows, "Number of reviews");
  synth->add_option("--users", synth_cfg.users, "Number of users");
  synth->add_option("--dim", synth_cfg.text_dim, "Text embedding dimension");
  synth->add_option("--noise", synth_cfg.noise_stddev, "Gaussian noise standard deviation");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*extract) run_extract_keywords(common, text_opts, text, top_n);
    if (*fakes) {
      fake_opts.merge = !fakes_only;
      run_generate_fakes(common, text_opts, fake_opts);
    }
    if (*sample) run_sample_pairs(common, keep_probability, mode);
    if (*train) run_train(common, metrics_path, best_path);
    if (*eval) run_evaluate(common, threshold);
    if (*score) run_score(common, threshold);
    if (*synth) run_synth(common, synth_cfg);
  } catch (const revfraud::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
