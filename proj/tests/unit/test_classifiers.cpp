#include <doctest.h>

#include <cmath>
#include <map>
#include <set>

#include "episodekit/classify/features.hpp"
#include "episodekit/classify/model.hpp"
#include "episodekit/classify/split.hpp"
#include "episodekit/error.hpp"
#include "episodekit/fileutil.hpp"
#include "episodekit/hash.hpp"
#include "episodekit/kernels.hpp"
#include "episodekit/rng.hpp"
#include "support/generators.hpp"
#include "support/support.hpp"

using namespace episodekit;
using namespace episodekit::classify;
using testsupport::TempDir;
using testsupport::clusters;
using testsupport::labeled_units;

namespace {

Matrix rows(std::initializer_list<std::vector<double>> data) {
  Matrix m(data.size(), data.begin()->size());
  std::size_t r = 0;
  for (const auto& row : data) {
    for (std::size_t c = 0; c < row.size(); ++c) m(r, c) = row[c];
    ++r;
  }
  return m;
}

double train_accuracy(const ClassifierModel& m, const Matrix& x, const std::vector<std::size_t>& y) {
  std::size_t ok = 0;
  for (std::size_t r = 0; r < x.rows; ++r) ok += predict(m, x.row(r)) == y[r];
  return static_cast<double>(ok) / static_cast<double>(x.rows);
}

std::size_t argmax_first(const std::vector<double>& v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

}  // namespace

TEST_CASE("softmax separates two classes in 2-D") {
  const auto x = rows({{1, 0}, {1.5, 0.2}, {-1, 0}, {-1.2, -0.3}});
  const std::vector<std::size_t> y{0, 0, 1, 1};
  // Every class needs a member, so the third paragraph label gets one far point.
  auto x3 = rows({{1, 0}, {1.5, 0.2}, {-1, 0}, {-1.2, -0.3}, {0, 5}});
  std::vector<std::size_t> y3{0, 0, 1, 1, 2};
  const auto m = train(ClassifierKind::Softmax, Level::Paragraph, x3, y3, {}, 1);
  for (std::size_t r = 0; r < 4; ++r) CHECK(predict(m, x.row(r)) == y[r]);
}

TEST_CASE("centroid of singletons is the point itself; ties go to the first label") {
  const auto x = rows({{0, 0}, {2, 0}, {0, 9}});
  const auto m = train(ClassifierKind::Centroid, Level::Paragraph, x, {0, 1, 2}, {}, 0);
  const auto& c = std::get<CentroidParams>(m.parameters).centroids;
  CHECK(c == x);
  const std::vector<double> mid{1, 0};
  CHECK(predict(m, mid) == 0);
  CHECK(std::get<ParagraphLabel>(predict_label(m, mid)) == ParagraphLabel::General);
}

TEST_CASE("knn k=1 returns the label of an identical training vector") {
  Rng rng(3);
  auto [x, y] = clusters(rng, 4, 5);
  Hyperparameters hp;
  hp.knn_k = 1;
  const auto m = train(ClassifierKind::Knn, Level::Sentence, x, y, hp, 0);
  CHECK(train_accuracy(m, x, y) == 1.0);
}

TEST_CASE("knn is invariant to positive query scaling") {
  Rng rng(11);
  auto [x, y] = clusters(rng, 5, 6);
  const auto m = train(ClassifierKind::Knn, Level::Sentence, x, y, {}, 0);
  for (int probe = 0; probe < 100; ++probe) {
    std::vector<double> q(6);
    for (auto& v : q) v = rng.uniform(-3, 3);
    const auto base = predict(m, q);
    const double c = std::exp(rng.uniform(-5, 5));
    for (auto& v : q) v *= c;
    CHECK(predict(m, q) == base);
  }
}

TEST_CASE("zero softmax weights predict the first label") {
  Rng rng(5);
  auto [x, y] = clusters(rng, 2, 3);
  auto m = train(ClassifierKind::Softmax, Level::Sentence, x, y, {}, 0);
  auto& p = std::get<LinearParams>(m.parameters);
  std::fill(p.weights.data.begin(), p.weights.data.end(), 0.0);
  std::fill(p.bias.begin(), p.bias.end(), 0.0);
  for (int i = 0; i < 10; ++i) {
    const std::vector<double> q{rng.uniform(-9, 9), rng.uniform(-9, 9), rng.uniform(-9, 9)};
    CHECK(predict(m, q) == 0);
  }
}

TEST_CASE("dimension mismatch and missing classes are rejected") {
  Rng rng(5);
  auto [x, y] = clusters(rng, 2, 3);
  const auto m = train(ClassifierKind::Centroid, Level::Sentence, x, y, {}, 0);
  const std::vector<double> q{1, 2};
  CHECK_THROWS_AS(predict(m, q), InvariantError);

  std::vector<std::size_t> no_monitor = y;
  for (auto& l : no_monitor)
    if (l == 6) l = 5;
  for (auto kind : {ClassifierKind::Centroid, ClassifierKind::Softmax, ClassifierKind::SvmLinear,
                    ClassifierKind::Mlp1}) {
    try {
      train(kind, Level::Sentence, x, no_monitor, {}, 0);
      FAIL("expected InvariantError");
    } catch (const InvariantError& e) {
      CHECK(std::string(e.what()).find("Monitor") != std::string::npos);
    }
  }
  CHECK_NOTHROW(train(ClassifierKind::Knn, Level::Sentence, x, no_monitor, {}, 0));
}

TEST_CASE("every kind fits well separated clusters") {
  Rng rng(17);
  auto [x, y] = clusters(rng, 6, 8);
  Hyperparameters hp;
  hp.hidden_width = 16;
  for (auto kind : {ClassifierKind::Knn, ClassifierKind::Centroid, ClassifierKind::SvmLinear,
                    ClassifierKind::Softmax, ClassifierKind::Mlp1}) {
    CAPTURE(to_string(kind));
    const auto m = train(kind, Level::Sentence, x, y, hp, 42);
    CHECK(train_accuracy(m, x, y) == 1.0);
    CHECK(m.label_order.size() == 7);
    CHECK(m.label_order[3] == "Implement");
  }
}

TEST_CASE("training is deterministic and independent of the kernel variant") {
  Rng rng(23);
  auto [x, y] = clusters(rng, 5, 9);
  Hyperparameters hp;
  hp.hidden_width = 8;
  hp.epochs = 30;
  const auto original = kernels::active().isa;
  for (auto kind : {ClassifierKind::SvmLinear, ClassifierKind::Softmax, ClassifierKind::Mlp1}) {
    kernels::set_active(kernels::Isa::Scalar);
    const auto a = train(kind, Level::Sentence, x, y, hp, 9);
    kernels::set_active(original);
    const auto b = train(kind, Level::Sentence, x, y, hp, 9);
    CHECK(a == b);
    const auto c = train(kind, Level::Sentence, x, y, hp, 10);
    if (kind == ClassifierKind::Mlp1) CHECK_FALSE(a == c);
  }
}

TEST_CASE("softmax argmax is invariant under uniform logit shifts") {
  Rng rng(31);
  auto [x, y] = clusters(rng, 3, 4);
  const auto m = train(ClassifierKind::Softmax, Level::Sentence, x, y, {}, 0);
  for (int probe = 0; probe < 100; ++probe) {
    std::vector<double> q(4);
    for (auto& v : q) v = rng.uniform(-4, 4);
    auto s = scores(m, q);
    const auto base = argmax_first(s);
    CHECK(base == predict(m, q));
    const double shift = rng.uniform(-1e3, 1e3);
    for (auto& v : s) v += shift;
    CHECK(argmax_first(s) == base);
    auto shifted = m;
    for (auto& b : std::get<LinearParams>(shifted.parameters).bias) b += shift;
    CHECK(predict(shifted, q) == base);
  }
}

TEST_CASE("gradient check") {
  Rng rng(2);
  Matrix x(5, 4);
  for (auto& v : x.data) v = rng.uniform(-1, 1);
  const std::vector<std::size_t> y{0, 1, 2, 1, 0};
  CHECK(gradient_check(ClassifierKind::Softmax, x, y, 3) < 1e-4);
  Hyperparameters hp;
  hp.hidden_width = 3;
  CHECK(gradient_check(ClassifierKind::Mlp1, x, y, 3, 1e-5, hp) < 1e-4);
  CHECK(gradient_check(ClassifierKind::Mlp1, x, y, 7, 1e-5, {}, 4) < 1e-4);

  CHECK_THROWS_AS(gradient_check(ClassifierKind::Softmax, Matrix(5, 0), y, 3), std::invalid_argument);
  CHECK_THROWS_AS(gradient_check(ClassifierKind::Knn, x, y, 3), std::invalid_argument);
  CHECK_THROWS_AS(gradient_check(ClassifierKind::Softmax, Matrix(0, 4), {}, 3), std::invalid_argument);
}

TEST_CASE("model files round trip") {
  TempDir dir;
  Rng rng(8);
  auto [x, y] = clusters(rng, 3, 5);
  Hyperparameters hp;
  hp.hidden_width = 4;
  hp.knn_k = 3;
  for (auto kind : {ClassifierKind::Knn, ClassifierKind::Centroid, ClassifierKind::SvmLinear,
                    ClassifierKind::Softmax, ClassifierKind::Mlp1}) {
    const auto m = train(kind, Level::Sentence, x, y, hp, 77);
    const auto path = dir / (std::string(to_string(kind)) + ".json");
    save_model(m, path);
    const auto loaded = load_model(path);
    CHECK(loaded == m);
  }
  auto j = to_json(train(ClassifierKind::Centroid, Level::Sentence, x, y, hp, 0));
  std::swap(j["label_order"][0], j["label_order"][1]);
  CHECK_THROWS(model_from_json(j));
}

TEST_CASE("hyperparameter validation") {
  Hyperparameters hp;
  CHECK_NOTHROW(hp.validate());
  hp.batch_size = 0;
  CHECK_THROWS_AS(hp.validate(), InvariantError);
  hp = {};
  hp.learning_rate = -1;
  CHECK_THROWS_AS(hp.validate(), InvariantError);
  hp = {};
  hp.epochs = 7;
  CHECK(Hyperparameters::from_json(hp.to_json()).epochs == 7);
}

// Split ----------------------------------------------------------------------

TEST_CASE("split of ten per class puts seven in train") {
  const auto units = labeled_units(std::vector<std::size_t>(7, 10));
  const auto s = split_train_test(units, {0.7, 1});
  CHECK(s.train.size() == 49);
  CHECK(s.test.size() == 21);
  CHECK(s.warnings.empty());
}

TEST_CASE("split is stratified, exhaustive and seed-deterministic") {
  Rng rng(1234);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::size_t> sizes(7);
    for (auto& s : sizes) s = rng.below(40);
    auto units = labeled_units(sizes);
    rng.shuffle(std::span(units));
    const SplitSpec spec{rng.uniform(0.05, 0.95), rng.next()};
    const auto a = split_train_test(units, spec);
    const auto b = split_train_test(units, spec);
    REQUIRE(a.train == b.train);
    REQUIRE(a.test == b.test);

    std::map<UnitRef, std::size_t> label_of;
    for (const auto& [u, l] : units) label_of[u] = label_index(l);
    std::set<UnitRef> seen;
    std::vector<std::size_t> train_count(7, 0);
    for (const auto& u : a.train) {
      CHECK(seen.insert(u).second);
      ++train_count[label_of.at(u)];
    }
    for (const auto& u : a.test) CHECK(seen.insert(u).second);
    CHECK(seen.size() == units.size());
    for (std::size_t c = 0; c < 7; ++c) {
      if (sizes[c] < 2) {
        CHECK(train_count[c] == sizes[c]);
        continue;
      }
      CHECK(std::abs(static_cast<double>(train_count[c]) - spec.train_fraction * sizes[c]) <= 1.0);
    }
  }
}

TEST_CASE("3087 sentences split near 2160") {
  // Class sizes chosen arbitrarily; only the total matters here.
  const auto units = labeled_units({400, 700, 300, 900, 350, 287, 150});
  const auto s = split_train_test(units, {0.7, 5});
  CHECK(std::abs(static_cast<long>(s.train.size()) - 2160) <= 7);
}

TEST_CASE("small classes go wholly to train with a warning") {
  const auto units = labeled_units({5, 1, 5, 5, 5, 5, 5});
  const auto s = split_train_test(units, {});
  REQUIRE(s.warnings.size() == 1);
  CHECK(s.warnings[0].find("Analyze") != std::string::npos);
  CHECK(SplitSpec{1.0, 0}.train_fraction == 1.0);
  CHECK_THROWS_AS(split_train_test(units, {1.0, 0}), InvariantError);
  CHECK_THROWS_AS(split_train_test(units, {0.0, 0}), InvariantError);
}

// Features ---------------------------------------------------------------------

namespace {

class CountingProvider : public EmbeddingProvider {
 public:
  std::string id() const override { return "counting"; }
  std::vector<std::vector<double>> embed(const std::vector<std::string>& texts) override {
    ++calls;
    texts_seen += texts.size();
    std::vector<std::vector<double>> out;
    for (const auto& t : texts) out.push_back({static_cast<double>(t.size()), 1.0, -1.0});
    return out;
  }
  int calls = 0;
  std::size_t texts_seen = 0;
};

}  // namespace

TEST_CASE("vectors file with three vectors of dim 8") {
  TempDir dir;
  std::string text;
  for (int i = 0; i < 3; ++i) {
    nlohmann::json j{{"unit_ref", {{"trace_id", "t"}, {"level", "sentence"}, {"index", i}}},
                     {"dim", 8},
                     {"values", std::vector<double>(8, i + 0.5)}};
    text += j.dump() + "\n";
  }
  write_file_atomic(dir / "v.jsonl", text);
  const auto fs = load_vectors_file(dir / "v.jsonl");
  CHECK(fs.vectors.size() == 3);
  CHECK(fs.dim == 8);
  REQUIRE(fs.find({"t", Level::Sentence, 2}) != nullptr);
  CHECK(fs.find({"t", Level::Sentence, 2})->values[7] == 2.5);

  save_vectors_file(fs, dir / "w.jsonl");
  CHECK(load_vectors_file(dir / "w.jsonl") == fs);
}

TEST_CASE("mixed dims in a vectors file name the unit") {
  TempDir dir;
  const std::string text =
      R"({"unit_ref":"t:sentence:0","dim":2,"values":[1,2]})"
      "\n"
      R"({"unit_ref":"t:sentence:1","dim":3,"values":[1,2,3]})"
      "\n";
  write_file_atomic(dir / "v.jsonl", text);
  try {
    load_vectors_file(dir / "v.jsonl");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
    CHECK(std::string(e.what()).find("t:sentence:1") != std::string::npos);
  }
  write_file_atomic(dir / "v.jsonl", R"({"unit_ref":"t:sentence:0","dim":3,"values":[1,2]})");
  CHECK_THROWS_AS(load_vectors_file(dir / "v.jsonl"), ParseError);
}

TEST_CASE("duplicate text costs one provider request and shares the vector") {
  TempDir dir;
  CountingProvider provider;
  const std::vector<EmbedUnit> units{{{"t", Level::Sentence, 0}, "Wait."},
                                     {{"t", Level::Sentence, 1}, "Let me check."},
                                     {{"t", Level::Sentence, 2}, "Wait."}};
  EmbedOptions opts;
  opts.cache_dir = dir / "cache";
  const auto fs = embed_units(provider, units, opts);
  CHECK(provider.calls == 1);
  CHECK(provider.texts_seen == 2);
  REQUIRE(fs.vectors.size() == 3);
  CHECK(fs.vectors[0].values == fs.vectors[2].values);
  CHECK(fs.vectors[0].content_hash == sha256_hex("Wait."));
  CHECK(fs.dim == 3);

  const auto again = embed_units(provider, units, opts);
  CHECK(provider.calls == 1);
  CHECK(again == fs);
}

TEST_CASE("file provider serves by content hash") {
  FileEmbeddingProvider p("file", {{sha256_hex("a"), {1.0, 2.0}}});
  CHECK(p.embed({"a"}) == std::vector<std::vector<double>>{{1.0, 2.0}});
  CHECK_THROWS_AS(p.embed({"b"}), Error);
}
