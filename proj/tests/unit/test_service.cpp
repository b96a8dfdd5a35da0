#include <doctest.h>

#include <httplib.h>

#include <fstream>
#include <thread>

#include "episodekit/corpus_io.hpp"
#include "episodekit/dynamics.hpp"
#include "episodekit/fileutil.hpp"
#include "episodekit/metrics.hpp"
#include "episodekit/service/service.hpp"
#include "support/support.hpp"

using namespace episodekit;
using namespace episodekit::service;
using nlohmann::json;
using testsupport::TempDir;

namespace {

const std::string kTrace = "sat-linear-001";

// A running service over a fresh copy of the fixture corpus.
struct Fixture {
  TempDir dir;
  std::filesystem::path corpus_path;
  std::unique_ptr<AnnotationService> service;
  std::unique_ptr<HttpServer> server;
  std::unique_ptr<httplib::Client> client;

  Fixture() {
    corpus_path = dir / "corpus.jsonl";
    save_corpus(testsupport::example_corpus(), corpus_path);
    start();
  }

  void start() {
    service = AnnotationService::open(corpus_path, {{"tok-a", "ann1"}, {"tok-b", "ann2"}, {"tok-c", "lead"}});
    server = std::make_unique<HttpServer>(*service);
    const int port = server->start("127.0.0.1", 0);
    client = std::make_unique<httplib::Client>("127.0.0.1", port);
  }

  void restart() {
    server->stop();
    server.reset();
    service.reset();
    start();
  }

  httplib::Headers auth(const std::string& token) const { return {{"Authorization", "Bearer " + token}}; }

  std::pair<int, json> get(const std::string& path, const std::string& token = "tok-a") {
    auto r = client->Get(path, auth(token));
    REQUIRE(r);
    return {r->status, r->body.empty() ? json() : json::parse(r->body, nullptr, false)};
  }

  std::pair<int, json> put(const std::string& path, const json& body, const std::string& token = "tok-a") {
    auto r = client->Put(path, auth(token), body.dump(), "application/json");
    REQUIRE(r);
    return {r->status, json::parse(r->body, nullptr, false)};
  }

  std::pair<int, json> label(const std::string& level, int index, const std::string& lbl,
                             const std::string& token = "tok-a", bool override_seq = false) {
    json body{{"unit_ref", kTrace + ":" + level + ":" + std::to_string(index)}, {"label", lbl}};
    if (override_seq) body["override_sequencing"] = true;
    return put("/annotations", body, token);
  }

  // All paragraphs, then every sentence, from the embedded fixture labels.
  void label_everything(const std::string& token, int flip_sentence = -1) {
    const auto corpus = testsupport::example_corpus();
    for (const auto& p : corpus.traces[0].paragraphs)
      REQUIRE(label("paragraph", static_cast<int>(p.index), std::string(to_string(*p.label)), token).first == 200);
    for (const auto& p : corpus.traces[0].paragraphs)
      for (const auto& s : p.sentences) {
        std::string l(to_string(*s.label));
        if (static_cast<int>(s.global_index) == flip_sentence) l = l == "Read" ? "Analyze" : "Read";
        REQUIRE(label("sentence", static_cast<int>(s.global_index), l, token).first == 200);
      }
  }
};

}  // namespace

TEST_CASE("authentication is required") {
  Fixture f;
  auto r = f.client->Get("/traces");
  REQUIRE(r);
  CHECK(r->status == 401);
  CHECK(json::parse(r->body)["code"] == "unauthorized");
  CHECK(f.get("/traces", "nope").first == 401);
}

TEST_CASE("trace listing and detail") {
  Fixture f;
  auto [status, body] = f.get("/traces");
  CHECK(status == 200);
  REQUIRE(body["traces"].size() == 1);
  CHECK(body["traces"][0]["trace_id"] == kTrace);

  auto [s2, trace] = f.get("/traces/" + kTrace);
  CHECK(s2 == 200);
  CHECK(trace["phase"] == "paragraph_pass");
  CHECK(trace["paragraphs"].size() == 5);
  CHECK(trace["paragraphs"][0]["label"].is_null());
  CHECK(trace["progress"]["paragraphs_labeled"] == 0);
  CHECK(f.get("/traces/missing").first == 404);
}

TEST_CASE("sequencing, arity and resubmission") {
  Fixture f;
  auto [s, body] = f.label("sentence", 0, "Read");
  CHECK(s == 409);
  CHECK(body["code"] == "paragraphs_unlabeled");
  CHECK(body["detail"]["unlabeled_paragraphs"] == json::array({0, 1, 2, 3, 4}));

  auto [bad, err] = f.label("paragraph", 0, "Implement");
  CHECK(bad == 422);
  CHECK(err["detail"]["field"] == "label");

  CHECK(f.label("paragraph", 0, "General").first == 200);
  CHECK(f.label("paragraph", 1, "General").first == 200);
  CHECK(f.label("paragraph", 3, "Explore").first == 200);
  CHECK(f.label("paragraph", 4, "Verify").first == 200);
  auto [s2, b2] = f.label("sentence", 0, "Read");
  CHECK(s2 == 409);
  CHECK(b2["detail"]["unlabeled_paragraphs"] == json::array({2}));

  // Another annotator's paragraphs do not count.
  CHECK(f.label("paragraph", 2, "Explore", "tok-b").first == 200);
  CHECK(f.label("sentence", 0, "Read").first == 409);
  CHECK(f.label("sentence", 0, "Read", "tok-a", true).first == 200);

  CHECK(f.label("paragraph", 2, "Explore").first == 200);
  auto [s3, b3] = f.label("sentence", 1, "Plan");
  CHECK(s3 == 200);
  CHECK(b3["annotation"]["annotator_id"] == "ann1");
  const auto before = b3["events"].get<int>();
  auto [s4, b4] = f.label("sentence", 1, "Analyze");
  CHECK(s4 == 200);
  CHECK(b4["events"].get<int>() == before + 1);

  auto [s5, set] = f.get("/annotations?set=ann1");
  CHECK(s5 == 200);
  bool found = false;
  for (const auto& a : set["latest"])
    if (a["unit_ref"]["index"] == 1 && a["unit_ref"]["level"] == "sentence") {
      CHECK(a["label"] == "Analyze");
      found = true;
    }
  CHECK(found);

  CHECK(f.label("sentence", 99, "Read").first == 404);
  CHECK(f.put("/annotations", json{{"label", "Read"}}).first == 422);
  auto [s6, trace] = f.get("/traces/" + kTrace);
  CHECK(trace["phase"] == "sentence_pass");
  CHECK(trace["progress"]["sentences_labeled"] == 2);
}

TEST_CASE("agreement and disagreements") {
  Fixture f;
  CHECK(f.label("paragraph", 0, "General").first == 200);
  CHECK(f.label("paragraph", 1, "General", "tok-b").first == 200);
  auto [s0, none] = f.get("/agreement?a=ann1&b=ann2&level=paragraph");
  CHECK(s0 == 409);
  CHECK(none["code"] == "no_overlap");
  CHECK(f.get("/agreement?a=ann1&b=nobody&level=paragraph").first == 404);

  f.label_everything("tok-a");
  f.label_everything("tok-b", 3);
  auto [s1, agree] = f.get("/agreement?a=ann1&b=ann2&level=sentence");
  CHECK(s1 == 200);
  // Same numbers as the offline computation.
  const auto offline = metrics::agreement_report(f.service->snapshot("ann1").unit_labels(Level::Sentence),
                                                 f.service->snapshot("ann2").unit_labels(Level::Sentence),
                                                 Level::Sentence);
  CHECK(agree["accuracy"].get<double>() == offline.accuracy);
  CHECK(agree["kappa"].get<double>() == *offline.kappa);
  CHECK(agree["n_units_compared"] == 16);

  auto [s2, same] = f.get("/disagreements?a=ann1&b=ann2&level=paragraph");
  CHECK(s2 == 200);
  CHECK(same["disagreements"].empty());

  auto [s3, diff] = f.get("/disagreements?a=ann1&b=ann2");
  REQUIRE(diff["disagreements"].size() == 1);
  const auto unit = diff["disagreements"][0]["unit_ref"].get<std::string>();
  CHECK(unit == kTrace + ":sentence:3");
  CHECK(diff["disagreements"][0]["status"] == "open");

  auto [s4, adj] = f.put("/disagreements/" + unit, json{{"a", "ann1"}, {"b", "ann2"}, {"label", "Implement"}}, "tok-c");
  CHECK(s4 == 200);
  CHECK(adj["status"] == "adjudicated");
  CHECK(adj["final_label"] == "Implement");

  auto [s5, open] = f.get("/disagreements?a=ann1&b=ann2&status=open");
  CHECK(open["disagreements"].empty());
  auto [s6, all] = f.get("/disagreements?a=ann1&b=ann2");
  REQUIRE(all["disagreements"].size() == 1);
  CHECK(all["disagreements"][0]["status"] == "adjudicated");

  // Units both annotators agree on have nothing to adjudicate.
  CHECK(f.put("/disagreements/" + kTrace + ":sentence:0", json{{"a", "ann1"}, {"b", "ann2"}, {"label", "Read"}})
            .first == 404);
  // The pair is unordered.
  auto [s7, swapped] = f.get("/disagreements?b=ann1&a=ann2");
  REQUIRE(swapped["disagreements"].size() == 1);
  CHECK(swapped["disagreements"][0]["status"] == "adjudicated");
}

TEST_CASE("transitions and export") {
  Fixture f;
  f.label_everything("tok-a");
  auto [s, m] = f.get("/transitions?set=ann1&alpha=0");
  CHECK(s == 200);
  CHECK(m["counts"][0][2] == 1);  // Read -> Plan
  CHECK(f.get("/transitions?set=ann1&alpha=-1").first == 422);
  CHECK(f.get("/transitions?set=ann1&alpha=abc").first == 400);
  CHECK(f.get("/transitions?set=ann1&level=paragraph").first == 200);

  auto r = f.client->Get("/export?set=ann1", f.auth("tok-a"));
  REQUIRE(r);
  CHECK(r->status == 200);
  const auto exported = parse_annotation_set(r->body);
  CHECK(exported == f.service->snapshot("ann1"));
  CHECK(exported.events().size() == 21);
}

TEST_CASE("the event log replays to the same view after restart") {
  Fixture f;
  f.label_everything("tok-a");
  CHECK(f.label("sentence", 5, "Verify").first == 200);
  const auto before = f.service->snapshot("ann1");
  const auto path = annotation_set_path(f.corpus_path, "ann1");
  CHECK(load_annotation_set(path) == before);

  // A crash mid-append leaves a torn last line; it is dropped on open.
  {
    std::ofstream out(path, std::ios::app);
    out << "{\"unit_ref\":{\"trace_id\":\"sat-li";
  }
  f.restart();
  CHECK(f.service->snapshot("ann1") == before);
  auto [s, set] = f.get("/annotations?set=ann1");
  CHECK(s == 200);
  CHECK(set["events"] == before.events().size());
  CHECK(f.label("sentence", 6, "Verify").first == 200);
  CHECK(load_annotation_set(path).events().size() == before.events().size() + 1);
}

TEST_CASE("concurrent writers leave a consistent log") {
  Fixture f;
  std::vector<std::thread> workers;
  for (const std::string token : {"tok-a", "tok-b", "tok-c"}) {
    workers.emplace_back([&f, token] {
      httplib::Client c("127.0.0.1", f.client->port());
      for (int round = 0; round < 10; ++round) {
        for (int p = 0; p < 5; ++p) {
          const json body{{"unit_ref", kTrace + ":paragraph:" + std::to_string(p)},
                          {"label", (round + p) % 2 ? "Explore" : "General"}};
          c.Put("/annotations", f.auth(token), body.dump(), "application/json");
        }
      }
    });
  }
  for (auto& w : workers) w.join();
  for (const std::string set : {"ann1", "ann2", "lead"}) {
    const auto live = f.service->snapshot(set);
    CHECK(live.events().size() == 50);
    CHECK(load_annotation_set(annotation_set_path(f.corpus_path, set)) == live);
  }
}

TEST_CASE("token file") {
  TempDir dir;
  write_file_atomic(dir / "tokens.json", R"({"abc": "ann1"})");
  CHECK(load_tokens(dir / "tokens.json") == std::map<std::string, std::string>{{"abc", "ann1"}});
  write_file_atomic(dir / "bad.json", R"({"abc": 3})");
  CHECK_THROWS_AS(load_tokens(dir / "bad.json"), Error);
  CHECK(adjudication_set_name("b", "a") == adjudication_set_name("a", "b"));
}
