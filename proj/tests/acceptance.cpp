// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "revfraud/attacksim/attacksim.hpp"
#include "revfraud/contrastive/loss.hpp"
#include "revfraud/errors.hpp"
#include "revfraud/features/checkpoint.hpp"
#include "revfraud/features/dataset.hpp"
#include "revfraud/features/embedding_store.hpp"
#include "revfraud/ndmath/grad_check.hpp"
#include "revfraud/pipeline/synthetic.hpp"
#include "revfraud/pipeline/train.hpp"
#include "revfraud/sampler/sampler.hpp"
#include "revfraud/textrank/textrank.hpp"

namespace {

using namespace revfraud;
using Clock = std::chrono::steady_clock;

const features::FeatureSchema kSchema = features::FeatureSchema::standard();

// Collects failed expectations of one criterion.
class Check {
 public:
  void expect(bool ok, const std::string& what) {
    if (!ok && failures_.size() < 5) failures_.push_back(what);
    failed_ = failed_ || !ok;
  }
  bool failed() const { return failed_; }
  std::string summary() const {
    std::string s;
    for (const auto& f : failures_) s += (s.empty() ? "" : "; ") + f;
    return s;
  }

 private:
  bool failed_ = false;
  std::vector<std::string> failures_;
};

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

void gradient_correctness(Check& c, std::string& detail) {
  const auto t0 = Clock::now();
  double worst = 0.0;
  for (std::uint64_t seed : {1, 2, 3}) {
    pipeline::SyntheticConfig sc;
    sc.rows = 64;
    sc.users = 8;
    sc.seed = seed;
    const auto data = pipeline::make_synthetic_dataset(kSchema, sc);
    const auto pairs = sampler::sample_pairs(data.rows, data.store, {.rng_seed = seed});
    pipeline::TrainConfig cfg;
    cfg.seed = seed;
    auto model = pipeline::init_model(
        cfg, kSchema, features::fit_normalizer(features::attributes_of(pairs.rows), kSchema), seed);
    const auto in = pipeline::make_inputs(std::span<const features::ReviewRow>(pairs.rows).subspan(0, 32), data.store);
    const contrastive::Margin m(cfg.margin);
    auto loss_at = [&](std::vector<ndmath::DenseMatrix>* grads) {
      ndmath::Rng dropout_rng(seed * 7919);
      auto ev = pipeline::loss_and_gradients(model, kSchema, in, m, contrastive::Reduction::mean,
                                             ndmath::Mode::train, dropout_rng);
      if (grads) *grads = std::move(ev.gradients);
      return ev.loss;
    };
    std::vector<ndmath::DenseMatrix> analytic;
    loss_at(&analytic);
    const auto params = features::trainable_tensors(model);
    const auto report = ndmath::grad_check(params, analytic, [&] { return loss_at(nullptr); }, 50, 1e-5, seed);
    c.expect(report.probes == 50, "seed " + std::to_string(seed) + " probed " + std::to_string(report.probes));
    c.expect(report.max_relative_error < 1e-4,
             "seed " + std::to_string(seed) + " relative error " + fmt(report.max_relative_error));
    worst = std::max(worst, report.max_relative_error);
  }
  const double secs = seconds_since(t0);
  c.expect(secs < 60.0, "runtime " + fmt(secs) + " s");
  detail = "max relative error " + fmt(worst) + " over 3 seeds x 50 probes, " + fmt(secs) + " s";
}

void loss_values(Check& c, std::string& detail) {
  const contrastive::Margin m(1.0);
  auto near = [&](double got, double want, const std::string& what) {
    c.expect(std::abs(got - want) <= 1e-12, what + " = " + fmt(got));
  };
  near(contrastive::loss_similar(2.0), 2.0, "L_S(2)");
  near(contrastive::loss_dissimilar(0.3, m), 0.245, "L_D(0.3)");
  near(contrastive::loss_dissimilar(1.0, m), 0.0, "L_D(1.0)");
  near(contrastive::loss_dissimilar(1.7, m), 0.0, "L_D(1.7)");
  near(contrastive::pair_loss(2.0, 0, m), 2.0, "pair genuine");
  near(contrastive::pair_loss(0.3, 1, m), 0.245, "pair fraudulent");
  near(contrastive::loss_grad_wrt_distance(0.3, 0, m), 0.3, "dL/dD genuine");
  near(contrastive::loss_grad_wrt_distance(1.7, 1, m), 0.0, "dL/dD beyond margin");
  near(contrastive::loss_grad_wrt_distance(0.3, 1, m), -0.7, "dL/dD inside margin");
  detail = "L_S(2)=2, L_D(0.3)=0.245, L_D(D>=m)=0, gradients D / 0 / -(m-D)";
}

void textrank_oracle(Check& c, std::string& detail) {
  const textrank::RankConfig cfg;
  ndmath::Rng rng(2024);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto g = testing::random_token_graph(1 + rng.index(50), rng.uniform(0.0, 0.4), rng);
    const auto got = textrank::pagerank(g, cfg);
    const auto want = testing::dense_pagerank(g, cfg.damping, cfg.tolerance, cfg.max_iterations);
    for (std::size_t i = 0; i < got.size(); ++i) worst = std::max(worst, std::abs(got[i] - want[i]));
  }
  c.expect(worst <= 1e-8, "max deviation from dense oracle " + fmt(worst));

  textrank::TokenizedReview single;
  single.sentences = {{{"alone", textrank::PosTag::noun}}};
  const auto isolated = textrank::pagerank(textrank::build_graph(single, cfg), cfg);
  c.expect(isolated.size() == 1 && std::abs(isolated[0] - 0.15) <= 1e-12, "isolated node score");

  textrank::TokenizedReview pair;
  pair.sentences = {{{"good", textrank::PosTag::adjective}, {"food", textrank::PosTag::noun}}};
  const auto two = textrank::pagerank(textrank::build_graph(pair, cfg), cfg);
  c.expect(two.size() == 2 && std::abs(two[0] - 1.0) <= 1e-12 && std::abs(two[1] - 1.0) <= 1e-12,
           "two-node graph scores");
  detail = "100 graphs, max deviation " + fmt(worst) + "; isolated 0.15; two-node 1.0";
}

void sampler_properties(Check& c, std::string& detail) {
  ndmath::Rng rng(77);
  const std::size_t review_length = kSchema.index_of(features::feature_names::kReviewLength);
  std::vector<features::ReviewRow> rows;
  for (std::size_t i = 0; i < 10000; ++i) {
    features::ReviewRow r;
    r.row_id = 1000 + i;
    r.user_id = "user" + std::to_string(i < 20 ? i : rng.index(20));
    r.attributes = testing::random_record(kSchema, rng);
    r.attributes.values[review_length] = static_cast<double>(i);  // tags the record with its origin
    rows.push_back(std::move(r));
  }
  const auto store = testing::random_store(rows, 32, rng);
  const auto out = sampler::sample_pairs(rows, store, {.rng_seed = 5});

  c.expect(out.rows.size() == rows.size(), "row count changed");
  std::vector<int> consumed(rows.size(), 0);
  std::vector<int> carried(rows.size(), 0);
  std::size_t fraud = 0;
  for (std::size_t i = 0; i < out.rows.size() && i < rows.size(); ++i) {
    const auto& o = out.rows[i];
    c.expect(o.row_id == rows[i].row_id && o.user_id == rows[i].user_id && o.text == rows[i].text,
             "row identity changed at " + std::to_string(i));
    c.expect(o.label.has_value(), "unlabelled row " + std::to_string(i));
    ++consumed[i];
    const auto origin = static_cast<std::size_t>(o.attributes.values[review_length]);
    if (origin >= rows.size()) {
      c.expect(false, "unknown attribute origin");
      continue;
    }
    ++carried[origin];
    c.expect(o.attributes == rows[origin].attributes, "attribute record altered");
    if (o.label == 0) {
      c.expect(origin == i, "kept row " + std::to_string(i) + " changed attributes");
    } else {
      ++fraud;
      const auto& back = out.rows[origin].attributes.values[review_length];
      c.expect(origin != i && static_cast<std::size_t>(back) == i && out.rows[origin].label == 1 &&
                   rows[origin].user_id != rows[i].user_id,
               "row " + std::to_string(i) + " is not part of a cross-user swap");
    }
  }
  c.expect(std::all_of(consumed.begin(), consumed.end(), [](int n) { return n == 1; }), "row consumed twice");
  c.expect(std::all_of(carried.begin(), carried.end(), [](int n) { return n == 1; }), "attribute multiset changed");
  const double fraction = static_cast<double>(fraud) / static_cast<double>(rows.size());
  c.expect(fraction >= 0.47 && fraction <= 0.53, "label-1 fraction " + fmt(fraction));

  std::vector<features::ReviewRow> two(2);
  two[0].row_id = 0;
  two[0].user_id = "user0";
  two[0].attributes.values.assign(kSchema.size(), 1.0);
  two[1].row_id = 1;
  two[1].user_id = "user1";
  two[1].attributes.values.assign(kSchema.size(), 2.0);
  features::EmbeddingStore small(2);
  small.insert(0, {1.0f, 0.0f});
  small.insert(1, {0.0f, 1.0f});
  const auto traced = sampler::sample_pairs(two, small, {.keep_probability = 1e-300, .rng_seed = 0});
  c.expect(traced.rows.size() == 2 && traced.rows[0].label == 1 && traced.rows[1].label == 1 &&
               traced.rows[0].attributes == two[1].attributes && traced.rows[1].attributes == two[0].attributes,
           "2-row swap trace");
  detail = "10000 rows / 20 users, label-1 fraction " + fmt(fraction) + "; 2-row trace exact";
}

void separability_benchmark(Check& c, std::string& detail) {
  const auto t0 = Clock::now();
  constexpr std::uint64_t kSeed = 1;
  pipeline::SyntheticConfig sc;  // 5000 rows, noise 0.1
  sc.seed = kSeed;
  const auto data = pipeline::make_synthetic_dataset(kSchema, sc);
  const auto pairs = sampler::sample_pairs(data.rows, data.store, {.rng_seed = kSeed});
  pipeline::TrainConfig cfg;  // 30 epochs, margin 1, threshold 0.5, 80/20 split
  cfg.seed = kSeed;
  const auto [train_rows, val_rows] = pipeline::split(pairs.rows, cfg.split_ratio, cfg.seed);
  const auto result = pipeline::train(train_rows, val_rows, data.store, kSchema, cfg);
  const double secs = seconds_since(t0);

  c.expect(result.history.size() == cfg.epochs, "epochs run " + std::to_string(result.history.size()));
  const auto& last = result.history.back();
  const double initial_loss = result.initial.val_loss;
  c.expect(last.val_accuracy >= 0.90, "validation accuracy " + fmt(last.val_accuracy));
  c.expect(last.val_loss <= 0.5 * initial_loss,
           "validation loss " + fmt(last.val_loss) + " vs initial " + fmt(initial_loss));
  c.expect(secs < 600.0, "runtime " + fmt(secs) + " s");
  detail = "val accuracy " + fmt(last.val_accuracy) + ", val loss " + fmt(initial_loss) + " -> " +
           fmt(last.val_loss) + ", " + fmt(secs) + " s";
}

std::vector<features::ReviewRow> review_corpus(ndmath::Rng& rng) {
  const std::vector<std::string> nouns{"food", "service", "staff", "pizza", "coffee", "view", "room", "price",
                                       "menu", "dessert", "waiter", "atmosphere"};
  const std::vector<std::string> adjectives{"delicious", "friendly", "slow", "cozy", "expensive", "fresh",
                                            "noisy", "clean", "rude", "amazing"};
  auto pick = [&](const std::vector<std::string>& v) { return v[rng.index(v.size())]; };
  std::vector<features::ReviewRow> rows;
  const std::size_t category = kSchema.index_of(features::feature_names::kBusinessCategory);
  for (std::size_t i = 0; i < 60; ++i) {
    features::ReviewRow r;
    r.row_id = i;
    r.user_id = "user" + std::to_string(i % 15);
    r.attributes = testing::random_record(kSchema, rng);
    r.attributes.values[category] = static_cast<double>(i % 3);
    r.text = "The " + pick(nouns) + " was " + pick(adjectives) + " and the " + pick(nouns) + " felt " +
             pick(adjectives) + ". We loved the " + pick(nouns) + "; the " + pick(nouns) + " was " +
             pick(adjectives) + "!";
    rows.push_back(std::move(r));
  }
  return rows;
}

void attack_determinism(Check& c, std::string& detail) {
  const std::string data_dir = REVFRAUD_DATA_DIR;
  const auto lexicon = attacksim::Lexicon::load(data_dir + "/lexicon.tsv");
  const auto tagger = textrank::DictionaryTagger::load(data_dir + "/pos_lexicon.tsv", textrank::PosTag::noun);
  attacksim::GenerationConfig gen_cfg;
  gen_cfg.stopwords = attacksim::load_stopwords(data_dir + "/stopwords.txt");
  ndmath::Rng corpus_rng(31);
  const auto corpus = review_corpus(corpus_rng);

  auto run = [&](std::uint64_t seed, std::vector<features::ReviewRow>* merged_out, std::size_t* fake_count) {
    attacksim::EchoGenerator echo;
    ndmath::Rng rng(seed);
    const auto texts = attacksim::generate_fake_reviews(corpus, kSchema, 1, 12, lexicon, tagger, echo, gen_cfg, rng);
    const auto fakes = attacksim::assign_random_attributes(texts, features::attributes_of(corpus), 10000, rng);
    auto merged = attacksim::merge_balanced(fakes, corpus, rng);
    std::ostringstream bytes;
    features::write_dataset(bytes, merged, kSchema);
    if (merged_out) *merged_out = std::move(merged);
    if (fake_count) *fake_count = fakes.size();
    return bytes.str();
  };
  std::vector<features::ReviewRow> merged;
  std::size_t fakes = 0;
  const std::string first = run(9, &merged, &fakes);
  const std::string second = run(9, nullptr, nullptr);
  c.expect(first == second, "corpus bytes differ between runs");
  c.expect(fakes == 12, "fake count " + std::to_string(fakes));
  c.expect(merged.size() == 2 * fakes, "merged size " + std::to_string(merged.size()));
  const auto label_one = static_cast<std::size_t>(
      std::count_if(merged.begin(), merged.end(), [](const features::ReviewRow& r) { return r.label == 1; }));
  const auto label_zero = static_cast<std::size_t>(
      std::count_if(merged.begin(), merged.end(), [](const features::ReviewRow& r) { return r.label == 0; }));
  c.expect(label_one == fakes && label_zero == fakes, "label counts " + std::to_string(label_one) + "/" +
                                                          std::to_string(label_zero));
  detail = std::to_string(first.size()) + " identical bytes across runs; " + std::to_string(merged.size()) +
           " rows = 2 x " + std::to_string(fakes) + ", labels " + std::to_string(label_zero) + "/" +
           std::to_string(label_one);
}

template <typename F>
bool throws_format_error(F&& f) {
  try {
    f();
  } catch (const FormatError&) {
    return true;
  } catch (...) {
    return false;
  }
  return false;
}

void format_round_trips(Check& c, std::string& detail) {
  ndmath::Rng rng(4242);
  for (int t = 0; t < 100; ++t) {
    const auto rows = testing::random_rows(kSchema, 1 + rng.index(20), 4, rng);
    std::ostringstream out;
    features::write_dataset(out, rows, kSchema);
    std::istringstream in(out.str());
    const auto back = features::read_dataset(in, kSchema);
    std::ostringstream again;
    features::write_dataset(again, back, kSchema);
    c.expect(back == rows && again.str() == out.str(), "dataset round trip " + std::to_string(t));

    const auto store = testing::random_store(rows, 1 + rng.index(64), rng);
    const std::string bytes = store.serialize();
    const auto store_back = features::EmbeddingStore::deserialize(bytes);
    c.expect(store_back == store && store_back.serialize() == bytes, "embedding round trip " + std::to_string(t));

    const auto ck = testing::random_checkpoint(kSchema, rng);
    const std::string ck_bytes = features::serialize_checkpoint(ck);
    const auto ck_back = features::deserialize_checkpoint(ck_bytes, kSchema);
    c.expect(ck_back == ck && features::serialize_checkpoint(ck_back) == ck_bytes,
             "checkpoint round trip " + std::to_string(t));
  }

  ndmath::Rng crng(5);
  const auto rows = testing::random_rows(kSchema, 5, 2, crng);
  std::ostringstream ds;
  features::write_dataset(ds, rows, kSchema);
  const std::string dataset = ds.str();
  auto read = [](const std::string& text) {
    std::istringstream in(text);
    return features::read_dataset(in, kSchema);
  };
  std::string bad = dataset;
  bad.replace(bad.find("revfraud-dataset"), 8, "notfraud");
  c.expect(throws_format_error([&] { read(bad); }), "dataset with corrupted format tag accepted");
  bad = dataset;
  const auto hash_at = bad.find("\"schema_hash\":\"") + 15;
  bad[hash_at] = bad[hash_at] == '0' ? '1' : '0';
  c.expect(throws_format_error([&] { read(bad); }), "dataset with corrupted schema hash accepted");

  const std::string embs = testing::random_store(rows, 8, crng).serialize();
  bad = embs;
  bad[0] = 'X';
  c.expect(throws_format_error([&] { features::EmbeddingStore::deserialize(bad); }), "store with bad magic accepted");
  bad = embs;
  bad[8] = 9;
  c.expect(throws_format_error([&] { features::EmbeddingStore::deserialize(bad); }),
           "store with corrupted dimension accepted");

  const auto ck = testing::random_checkpoint(kSchema, crng);
  const std::string ckb = features::serialize_checkpoint(ck);
  bad = ckb;
  bad[0] = 'X';
  c.expect(throws_format_error([&] { features::deserialize_checkpoint(bad, kSchema); }),
           "checkpoint with bad magic accepted");
  // magic, version, hash, margin, threshold, config string, branch count, layer count, layer kind
  const std::size_t in_dim_at = 4 + 4 + 8 + 8 + 8 + 8 + ck.config_text.size() + 4 + 4 + 1;
  bad = ckb;
  bad[in_dim_at] = static_cast<char>(bad[in_dim_at] + 1);
  c.expect(throws_format_error([&] { features::deserialize_checkpoint(bad, kSchema); }),
           "checkpoint with corrupted dimension accepted");
  detail = "100 bit-exact round trips per format; corrupted magic and dimension rejected";
}

struct Criterion {
  const char* name;
  std::function<void(Check&, std::string&)> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {"gradient-correctness", gradient_correctness},
      {"contrastive-loss-values", loss_values},
      {"textrank-oracle", textrank_oracle},
      {"pair-sampler-properties", sampler_properties},
      {"synthetic-separability", separability_benchmark},
      {"attack-pipeline-determinism", attack_determinism},
      {"file-format-round-trips", format_round_trips},
  };
  int failed = 0;
  for (const auto& criterion : criteria) {
    Check check;
    std::string detail;
    try {
      criterion.run(check, detail);
    } catch (const std::exception& e) {
      check.expect(false, std::string("exception: ") + e.what());
    }
    if (check.failed()) {
      ++failed;
      std::printf("FAIL %s: %s\n", criterion.name, check.summary().c_str());
    } else {
      std::printf("PASS %s: %s\n", criterion.name, detail.c_str());
    }
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
