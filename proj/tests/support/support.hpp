#pragma once

#include <cstdlib>
#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "episodekit/corpus.hpp"
#include "episodekit/corpus_io.hpp"
#include "episodekit/fileutil.hpp"
#include "episodekit/segmenter.hpp"

namespace testsupport {

inline std::filesystem::path fixture(const std::string& name) {
  return std::filesystem::path(EPISODEKIT_FIXTURE_DIR) / name;
}

inline std::string fixture_text(const std::string& name) { return episodekit::read_file(fixture(name)); }

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    std::string pattern = (std::filesystem::temp_directory_path() / "episodekit-test-XXXXXX").string();
    if (!::mkdtemp(pattern.data())) throw std::runtime_error("mkdtemp failed");
    path_ = pattern;
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

// The hand-labeled fixture trace, segmented with the default config, with
// its labels stored on the units and the two fixture items attached.
inline episodekit::AnnotatedCorpus example_corpus() {
  using namespace episodekit;
  const auto labels = nlohmann::json::parse(fixture_text("example_labels.json"));
  auto seg = segment::segment_trace(labels["trace_id"], fixture_text("example_trace.txt"));
  Trace trace = std::move(seg.trace);
  trace.question_id = labels["question_id"].get<std::string>();
  const auto& para = labels["paragraph_labels"];
  const auto& sent = labels["sentence_labels"];
  for (auto& p : trace.paragraphs) {
    p.label = *paragraph_label_from_string(para.at(p.index).get<std::string>());
    for (auto& s : p.sentences) s.label = *episode_label_from_string(sent.at(s.global_index).get<std::string>());
  }
  AnnotatedCorpus corpus;
  corpus.items = ingest_sat_items(fixture("sat_items.json"));
  corpus.traces.push_back(std::move(trace));
  return corpus;
}

}  // namespace testsupport
