#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <thread>

#include <nlohmann/json.hpp>

#include "episodekit/corpus.hpp"
#include "episodekit/error.hpp"

namespace episodekit::service {

// Maps to an HTTP error response {code, message, detail}.
class ServiceError : public Error {
 public:
  ServiceError(int status, std::string code, const std::string& message,
               nlohmann::json detail = nlohmann::json::object())
      : Error(message), status_(status), code_(std::move(code)), detail_(std::move(detail)) {}

  int status() const noexcept { return status_; }
  const std::string& code() const noexcept { return code_; }
  const nlohmann::json& detail() const noexcept { return detail_; }
  nlohmann::json body() const { return {{"code", code_}, {"message", what()}, {"detail", detail_}}; }

 private:
  int status_;
  std::string code_;
  nlohmann::json detail_;
};

// Bearer token -> annotator id, read from a JSON object file.
std::map<std::string, std::string> load_tokens(const std::filesystem::path& path);

// Name of the set holding adjudicated labels for the unordered pair {a, b}.
std::string adjudication_set_name(const std::string& a, const std::string& b);

// Request handling independent of the transport. Human labels go to one
// annotation set per annotator, named by the annotator id. Every accepted
// write is appended to annotations.<set>.jsonl beside the corpus and flushed
// before the in-memory view changes. Readers share a lock, so a request
// never observes a half-applied event.
class AnnotationService {
 public:
  AnnotationService(AnnotatedCorpus corpus, std::filesystem::path corpus_path,
                    std::map<std::string, std::string> tokens);

  // Loads and validates the corpus plus every annotations.*.jsonl beside it.
  // A torn final line (crash mid-append) is dropped. Throws Error.
  static std::unique_ptr<AnnotationService> open(const std::filesystem::path& corpus_path,
                                                 std::map<std::string, std::string> tokens);

  // Annotator id for an Authorization header value; throws 401.
  std::string authenticate(std::string_view authorization) const;

  nlohmann::json list_traces() const;
  nlohmann::json get_trace(const std::string& trace_id, const std::string& annotator) const;
  // Body: {unit_ref, label, override_sequencing?}.
  nlohmann::json submit(const std::string& annotator, const nlohmann::json& body);
  nlohmann::json annotations(const std::string& set) const;
  nlohmann::json agreement(const std::string& a, const std::string& b, Level level) const;
  // `level` null for both levels; `open_only` filters adjudicated entries.
  nlohmann::json disagreements(const std::string& a, const std::string& b, std::optional<Level> level,
                               bool open_only) const;
  // Body: {a, b, label}.
  nlohmann::json adjudicate(const std::string& annotator, const std::string& unit, const nlohmann::json& body);
  nlohmann::json transitions(const std::string& set, double alpha, Level level) const;
  std::string export_set(const std::string& set) const;

  // Copy of a set as currently materialized (tests, tools).
  AnnotationSet snapshot(const std::string& set) const;

 private:
  const AnnotationSet& require_set(const std::string& name) const;
  void append_event(const std::string& set, Annotation a);

  AnnotatedCorpus corpus_;
  std::filesystem::path corpus_path_;
  std::map<std::string, std::string> tokens_;
  mutable std::shared_mutex mutex_;
};

// HTTP front end. start() binds and serves on a background thread.
class HttpServer {
 public:
  explicit HttpServer(AnnotationService& service);
  ~HttpServer();

  // Port 0 picks a free port. Returns the bound port; throws Error.
  int start(const std::string& host, int port);
  // Serves on the calling thread until stop().
  void run(const std::string& host, int port);
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace episodekit::service
