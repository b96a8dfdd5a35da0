#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "episodekit/corpus.hpp"
#include "episodekit/error.hpp"
#include "episodekit/schema.hpp"

namespace episodekit::llm {

struct ChatMessage {
  std::string role;  // system, user, assistant
  std::string content;
};

struct ChatRequest {
  std::string model;
  std::vector<ChatMessage> messages;
  double temperature = 0.0;
};

nlohmann::json to_json(const ChatRequest& r);

// Failure to obtain a reply at all. `retryable` marks timeouts, 429 and 5xx.
class TransportFailure : public Error {
 public:
  TransportFailure(const std::string& what, bool retryable) : Error(what), retryable_(retryable) {}
  bool retryable() const noexcept { return retryable_; }

 private:
  bool retryable_;
};

class ChatClient {
 public:
  virtual ~ChatClient() = default;
  // Text of the first choice. Throws TransportFailure. Must be safe to call
  // from several threads at once.
  virtual std::string complete(const ChatRequest& request) = 0;
};

struct AnnotatorClientConfig {
  std::string base_url = "https://api.openai.com/v1";
  std::string model_id = "gpt-4.1";
  std::string api_key_env = "OPENAI_API_KEY";
  double temperature = 0.0;
  std::size_t max_parallel = 4;
  int retry_limit = 3;
  std::chrono::milliseconds timeout{60000};
  // First wait before re-sending after a retryable transport failure; doubles.
  std::chrono::milliseconds backoff{500};

  void validate() const;
  // Snapshot for reports; holds the variable name, never the key.
  nlohmann::json to_json() const;
};

// POST {base_url}/chat/completions with a bearer key from api_key_env.
class HttpChatClient : public ChatClient {
 public:
  explicit HttpChatClient(AnnotatorClientConfig config) : config_(std::move(config)) {}
  std::string complete(const ChatRequest& request) override;

 private:
  AnnotatorClientConfig config_;
};

// Content-addressed reply store: one JSON file per (messages, model,
// temperature) under `dir`. Writes are atomic; concurrent identical writes
// are harmless.
class ResponseCache {
 public:
  struct Entry {
    std::string content;
    std::string created_at;
  };

  explicit ResponseCache(std::filesystem::path dir) : dir_(std::move(dir)) {}

  static std::string key(const ChatRequest& request);
  std::optional<Entry> get(const ChatRequest& request) const;
  void put(const ChatRequest& request, const Entry& entry) const;
  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path dir_;
};

enum class Outcome { Succeeded, Unparsed, TransportFailed };

std::string_view to_string(Outcome o);

struct UnitOutcome {
  UnitRef unit;
  Outcome outcome = Outcome::Unparsed;
  std::optional<AnyLabel> label;
  int requests = 0;      // replies consumed, cached or not
  int network_calls = 0;  // replies that missed the cache
  std::string last_reply;
  std::string cause;       // transport failure message
  std::string created_at;  // of the reply that produced the label
};

// Sends the prompt, parses the reply, and re-asks with a format reminder up
// to config.retry_limit times. `cache` may be null.
UnitOutcome annotate_unit(ChatClient& client, const AnnotatorClientConfig& config, const schema::RenderedPrompt& prompt,
                          Level level, const ResponseCache* cache = nullptr);

struct AnnotateOptions {
  std::string set_name = "llm";
  Level level = Level::Sentence;
  schema::PromptOptions prompt;
  std::string template_text = schema::default_template();
  std::optional<schema::GuidebookAsset> guidebook_override;
  // Gold labels to draw examples from (Example and ExGuide variants).
  std::map<UnitRef, AnyLabel> example_labels;
  // Paragraph labels shown in sentence prompts; empty for none.
  std::map<UnitRef, AnyLabel> paragraph_labels;
};

struct Counts {
  std::size_t succeeded = 0;
  std::size_t retried = 0;  // units that needed at least one reminder
  std::size_t unparsed = 0;
  std::size_t transport_failed = 0;

  bool operator==(const Counts&) const = default;
};

struct AnnotationRunReport {
  std::string set_name;
  Counts counts;
  std::size_t network_calls = 0;
  std::vector<UnitOutcome> outcomes;  // document order
  nlohmann::json config;
  PromptVariant variant = PromptVariant::Base;
  std::optional<std::string> guidebook_version;
};

nlohmann::json to_json(const AnnotationRunReport& r);

struct RunResult {
  AnnotationSet set;
  AnnotationRunReport report;
};

// Every unit of the level, in document order. Prompts are built up front,
// so pool errors surface before any request.
RunResult annotate_corpus(ChatClient& client, const AnnotatedCorpus& corpus, const AnnotatorClientConfig& config,
                          const AnnotateOptions& options, const ResponseCache* cache = nullptr);

}  // namespace episodekit::llm
