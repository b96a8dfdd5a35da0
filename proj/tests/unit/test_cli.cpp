#include <doctest.h>

#include <sstream>

#include "episodekit/classify/features.hpp"
#include "episodekit/classify/model.hpp"
#include "episodekit/cli.hpp"
#include "episodekit/dynamics.hpp"
#include "episodekit/hash.hpp"
#include "episodekit/metrics.hpp"
#include "support/support.hpp"

using namespace episodekit;
using nlohmann::json;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run invoke(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

bool contains(const std::string& haystack, const std::string& needle) {
  return haystack.find(needle) != std::string::npos;
}

// The labeled example corpus on disk, plus a prediction set that differs
// from the stored labels on the first `wrong` sentences.
struct Workspace {
  testsupport::TempDir dir;
  std::string corpus_path = (dir / "corpus.jsonl").string();
  AnnotatedCorpus corpus = testsupport::example_corpus();

  Workspace() { save_corpus(corpus, corpus_path); }

  AnnotationSet perturbed(std::size_t wrong) const {
    AnnotationSet set("pred");
    std::size_t i = 0;
    for (const auto& [unit, label] : embedded_labels(corpus, "x").unit_labels(Level::Sentence)) {
      auto l = std::get<EpisodeLabel>(label);
      if (i++ < wrong) l = l == EpisodeLabel::Verify ? EpisodeLabel::Monitor : EpisodeLabel::Verify;
      set.append({unit, l, "m", Source::Classifier, std::nullopt, std::nullopt, "2025-01-01T00:00:00Z"});
    }
    return set;
  }
};

}  // namespace

TEST_CASE("usage errors exit 2") {
  const auto none = invoke({});
  CHECK(none.code == 2);
  CHECK(contains(none.err, "subcommand"));

  const auto typo = invoke({"eval", "--gold", "a", "--pedr", "b"});
  CHECK(typo.code == 2);
  CHECK(contains(typo.err, "did you mean --pred?"));

  const auto cmd = invoke({"transitons"});
  CHECK(cmd.code == 2);
  CHECK(contains(cmd.err, "did you mean 'transitions'?"));

  const auto level = invoke({"eval", "--level", "word", "--gold", "a", "--pred", "b"});
  CHECK(level.code == 2);

  CHECK(invoke({"predict", "--model", "m", "--features", "f"}).code == 2);
  CHECK(invoke({"eval", "--gold", "a"}).code == 2);
}

TEST_CASE("help for every subcommand") {
  CHECK(invoke({"--help"}).code == 0);
  for (const std::string c : {"segment", "annotate-llm", "embed", "split", "train", "predict", "eval", "agree",
                              "transitions", "serve", "export"}) {
    CAPTURE(c);
    const auto r = invoke({c, "--help"});
    CHECK(r.code == 0);
    CHECK(contains(r.out, c));
  }
  CHECK(contains(invoke({"--version"}).out, "episodekit"));
}

TEST_CASE("operational errors exit 1") {
  testsupport::TempDir dir;
  const auto r = invoke({"transitions", "--corpus", (dir / "missing.jsonl").string()});
  CHECK(r.code == 1);
  CHECK(contains(r.err, "missing.jsonl"));
}

TEST_CASE("edit distance") {
  CHECK(cli::edit_distance("", "") == 0);
  CHECK(cli::edit_distance("kitten", "sitting") == 3);
  CHECK(cli::edit_distance("--pedr", "--pred") == 2);
  CHECK(cli::edit_distance("abc", "") == 3);
}

TEST_CASE("segment writes the segmenter's corpus and a manifest") {
  testsupport::TempDir dir;
  const auto out = (dir / "c.jsonl").string();
  const auto trace = testsupport::fixture("example_trace.txt").string();
  const auto r = invoke({"segment", "--in", trace, "--trace-id", "t1", "--question-id", "q-linear-001", "--items",
                      testsupport::fixture("sat_items.json").string(), "--out", out});
  REQUIRE(r.code == 0);
  CHECK(contains(r.out, "5 paragraphs, 16 sentences"));

  const auto loaded = load_corpus(out);
  auto expected = segment::segment_trace("t1", testsupport::fixture_text("example_trace.txt")).trace;
  expected.question_id = "q-linear-001";
  REQUIRE(loaded.traces.size() == 1);
  CHECK(loaded.traces[0] == expected);
  CHECK(loaded.items.size() == 2);

  const auto manifest = json::parse(read_file(out + ".manifest.json"));
  CHECK(manifest["command"] == "segment");
  CHECK(manifest["tool_version"] == "episodekit 0.1.0");
  CHECK(manifest["inputs"][trace] == sha256_file(trace));
  CHECK(manifest["outputs"][out] == sha256_file(out));
  CHECK(manifest["config"]["segmentation"]["protect_math"] == true);

  // Re-segmenting replaces the trace by id instead of duplicating it.
  REQUIRE(invoke({"segment", "--in", trace, "--trace-id", "t1", "--out", out}).code == 0);
  CHECK(load_corpus(out).traces.size() == 1);
  CHECK(invoke({"segment", "--in", trace, "--in", trace, "--trace-id", "t1", "--out", out}).code == 2);
}

TEST_CASE("eval agrees with the metrics module") {
  Workspace ws;
  const auto pred = ws.perturbed(3);
  save_annotation_set(pred, annotation_set_path(ws.corpus_path, "pred"));

  const auto r = invoke({"eval", "--corpus", ws.corpus_path, "--gold", "corpus", "--pred", "pred", "--format", "json"});
  REQUIRE(r.code == 0);
  const auto expected = metrics::agreement_report(embedded_labels(ws.corpus, "g").unit_labels(Level::Sentence),
                                                  pred.unit_labels(Level::Sentence), Level::Sentence);
  CHECK(json::parse(r.out) == metrics::to_json(expected));
  CHECK(expected.accuracy == doctest::Approx(13.0 / 16.0));

  // A literal annotation file works as well as a set name.
  const auto by_path = invoke({"eval", "--corpus", ws.corpus_path, "--gold", "corpus", "--pred",
                            annotation_set_path(ws.corpus_path, "pred").string(), "--format", "json"});
  CHECK(by_path.out == r.out);

  const auto csv = invoke({"eval", "--corpus", ws.corpus_path, "--gold", "corpus", "--pred", "pred", "--format", "csv"});
  CHECK(csv.out == metrics::confusion_csv(expected.confusion, metrics::Normalization::Counts));

  CHECK(invoke({"eval", "--corpus", ws.corpus_path, "--gold", "corpus", "--pred", "nope"}).code == 1);
}

TEST_CASE("eval of a published percent matrix") {
  const auto r = invoke({"eval", "--confusion", testsupport::fixture("confusion_gpt41.csv").string(), "--given",
                      "percent_of_total", "--reference-accuracy", "0.805", "--reference-kappa", "0.7645"});
  REQUIRE(r.code == 0);
  CHECK(contains(r.out, "accuracy: 0.805"));
  CHECK(contains(r.out, "kappa: 0.764"));
  CHECK(contains(r.out, "| Read      | 11.3 |"));
  CHECK(!contains(r.out, "units compared"));
}

TEST_CASE("transitions agree with the dynamics module") {
  Workspace ws;
  const auto csv = (ws.dir / "heat.csv").string();
  const auto js = (ws.dir / "heat.json").string();
  const auto r = invoke({"transitions", "--corpus", ws.corpus_path, "--alpha", "0.1", "--top", "2", "--out", csv,
                      "--json", js});
  REQUIRE(r.code == 0);
  const auto tm = dynamics::transition_matrix(embedded_labels(ws.corpus, "g").unit_labels(Level::Sentence),
                                              ws.corpus, Level::Sentence, 0.1);
  CHECK(read_file(csv) == dynamics::heatmap_csv(tm));
  CHECK(json::parse(read_file(js)) == dynamics::to_json(tm));
  CHECK(contains(r.out, "15 transitions"));
  const auto top = dynamics::top_transitions(tm, 2, true);
  CHECK(contains(r.out, std::string(label_name(Level::Sentence, top[0].from)) + " -> " +
                            std::string(label_name(Level::Sentence, top[0].to))));
  CHECK(std::filesystem::exists(csv + ".manifest.json"));

  const auto strat = invoke({"transitions", "--corpus", ws.corpus_path, "--stratify", "difficulty", "--out", csv});
  REQUIRE(strat.code == 0);
  CHECK(contains(strat.out, "transitions"));
}

TEST_CASE("split, train, predict and eval pipeline") {
  Workspace ws;
  // Round-robin labels cover every class; the fixture's own labels skip Analyze.
  AnnotationSet g7("g7");
  std::map<UnitRef, AnyLabel> gold;
  for (const auto& unit : ws.corpus.units(Level::Sentence)) {
    const auto label = kEpisodeLabels[unit.index % 7];
    gold[unit] = label;
    g7.append({unit, label, "lead", Source::Human, std::nullopt, std::nullopt, "2025-01-01T00:00:00Z"});
  }
  save_annotation_set(g7, annotation_set_path(ws.corpus_path, "g7"));

  // One cluster per label, so a centroid model recovers the gold labels.
  classify::FeatureSet fs;
  fs.dim = 7;
  for (const auto& [unit, label] : gold) {
    std::vector<double> v(7, 0.0);
    v[label_index(label)] = 1.0;
    v[(label_index(label) + 1) % 7] = 0.01 * static_cast<double>(unit.index);
    fs.vectors.push_back({unit, 7, v, "test", ""});
  }
  const auto features = (ws.dir / "f.jsonl").string();
  classify::save_vectors_file(fs, features);
  const auto model = (ws.dir / "m.json").string();

  const auto missing = invoke({"train", "--features", features, "--corpus", ws.corpus_path, "--kind", "centroid",
                               "--out", model});
  CHECK(missing.code == 1);
  CHECK(contains(missing.err, "Analyze"));

  const auto split = (ws.dir / "split.json").string();
  REQUIRE(invoke({"split", "--corpus", ws.corpus_path, "--gold", "g7", "--fraction", "0.5", "--seed", "3", "--out",
                  split})
              .code == 0);
  const auto sj = json::parse(read_file(split));
  CHECK(sj["train"].size() + sj["test"].size() == gold.size());

  const auto t = invoke({"train", "--features", features, "--corpus", ws.corpus_path, "--gold", "g7", "--kind",
                         "centroid", "--out", model, "--seed", "5"});
  INFO(t.err);
  REQUIRE(t.code == 0);
  CHECK(contains(t.out, "training accuracy 1.000"));
  CHECK(json::parse(read_file(model + ".manifest.json"))["seed"] == 5);

  const auto p = invoke({"predict", "--model", model, "--features", features, "--corpus", ws.corpus_path, "--split",
                         split, "--timestamp", "2025-02-01T00:00:00Z"});
  REQUIRE(p.code == 0);
  const auto pred = load_annotation_set(annotation_set_path(ws.corpus_path, "classifier"));
  CHECK(pred.events().size() == sj["test"].size());
  for (const auto& a : pred.events()) {
    CHECK(a.source == Source::Classifier);
    CHECK(a.annotator_id == "classifier:centroid");
    CHECK(a.timestamp == "2025-02-01T00:00:00Z");
    CHECK(a.label == gold.at(a.unit));
  }

  const auto e = invoke({"eval", "--corpus", ws.corpus_path, "--gold", "g7", "--pred", "classifier"});
  REQUIRE(e.code == 0);
  CHECK(contains(e.out, "accuracy: 1.000"));
  const auto wrong = invoke({"eval", "--corpus", ws.corpus_path, "--gold", "g7", "--pred", "classifier",
                             "--missing-as-wrong", "--format", "json"});
  const auto j = json::parse(wrong.out);
  CHECK(j["accuracy"].get<double>() ==
        doctest::Approx(static_cast<double>(sj["test"].size()) / static_cast<double>(gold.size())));
}

TEST_CASE("agree lists disagreements") {
  Workspace ws;
  save_annotation_set(ws.perturbed(2), annotation_set_path(ws.corpus_path, "pred"));
  const auto r = invoke({"agree", "--corpus", ws.corpus_path, "--a", "corpus", "--b", "pred", "--disagreements",
                      "--format", "json"});
  REQUIRE(r.code == 0);
  const auto j = json::parse(r.out);
  CHECK(j["disagreements"].size() == 2);
  CHECK(j["accuracy"].get<double>() == doctest::Approx(14.0 / 16.0));
  for (const auto& d : j["disagreements"]) CHECK(d["status"] == "open");
}

TEST_CASE("export formats") {
  Workspace ws;
  save_annotation_set(ws.perturbed(0), annotation_set_path(ws.corpus_path, "pred"));
  const auto jsonl = invoke({"export", "--corpus", ws.corpus_path, "--set", "pred"});
  REQUIRE(jsonl.code == 0);
  CHECK(jsonl.out == read_file(annotation_set_path(ws.corpus_path, "pred")));

  const auto csv_path = (ws.dir / "pred.csv").string();
  REQUIRE(invoke({"export", "--corpus", ws.corpus_path, "--set", "pred", "--format", "csv", "--out", csv_path}).code == 0);
  const auto csv = read_file(csv_path);
  CHECK(csv.rfind("unit_ref,level,label,annotator_id,source,model_id,prompt_variant,timestamp\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 17);
}
