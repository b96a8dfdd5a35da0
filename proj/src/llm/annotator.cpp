#include "episodekit/llm/annotator.hpp"

#include <atomic>
#include <thread>

#include "episodekit/fileutil.hpp"
#include "episodekit/hash.hpp"
#include "episodekit/http_client.hpp"
#include "episodekit/timeutil.hpp"

namespace episodekit::llm {

using nlohmann::json;

json to_json(const ChatRequest& r) {
  json messages = json::array();
  for (const auto& m : r.messages) messages.push_back({{"role", m.role}, {"content", m.content}});
  return {{"model", r.model}, {"messages", messages}, {"temperature", r.temperature}};
}

void AnnotatorClientConfig::validate() const {
  if (!(temperature >= 0)) throw InvariantError("temperature", "must be >= 0");
  if (max_parallel < 1) throw InvariantError("max_parallel", "must be >= 1");
  if (retry_limit < 0) throw InvariantError("retry_limit", "must be >= 0");
  if (model_id.empty()) throw InvariantError("model_id", "must not be empty");
}

json AnnotatorClientConfig::to_json() const {
  return {{"base_url", base_url},       {"model_id", model_id},
          {"api_key_env", api_key_env}, {"temperature", temperature},
          {"max_parallel", max_parallel}, {"retry_limit", retry_limit},
          {"timeout_ms", timeout.count()}};
}

std::string HttpChatClient::complete(const ChatRequest& request) {
  std::map<std::string, std::string> headers;
  const std::string key = http::env_or_empty(config_.api_key_env);
  if (!key.empty()) headers["Authorization"] = "Bearer " + key;
  http::Response res;
  try {
    res = http::post_json(config_.base_url, "/chat/completions", llm::to_json(request).dump(), headers,
                          config_.timeout);
  } catch (const http::TransportError& e) {
    throw TransportFailure(e.what(), true);
  }
  if (res.status == 401 || res.status == 403) {
    throw TransportFailure("authentication failed (HTTP " + std::to_string(res.status) + ")", false);
  }
  if (res.status == 429 || res.status >= 500) {
    throw TransportFailure("endpoint returned HTTP " + std::to_string(res.status), true);
  }
  if (res.status != 200) throw TransportFailure("endpoint returned HTTP " + std::to_string(res.status), false);
  try {
    const json j = json::parse(res.body);
    return j.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const json::exception& e) {
    throw TransportFailure(std::string("malformed chat response: ") + e.what(), false);
  }
}

std::string ResponseCache::key(const ChatRequest& request) { return sha256_hex(llm::to_json(request).dump()); }

std::optional<ResponseCache::Entry> ResponseCache::get(const ChatRequest& request) const {
  const auto path = dir_ / (key(request) + ".json");
  std::error_code ec;
  if (!std::filesystem::exists(path, ec)) return std::nullopt;
  try {
    const json j = json::parse(read_file(path));
    return Entry{j.at("content").get<std::string>(), j.at("created_at").get<std::string>()};
  } catch (const std::exception&) {
    return std::nullopt;  // unreadable entries are refetched and overwritten
  }
}

void ResponseCache::put(const ChatRequest& request, const Entry& entry) const {
  const json j = {{"key", key(request)},
                  {"model", request.model},
                  {"temperature", request.temperature},
                  {"content", entry.content},
                  {"created_at", entry.created_at}};
  write_file_atomic(dir_ / (key(request) + ".json"), j.dump(2) + "\n");
}

std::string_view to_string(Outcome o) {
  switch (o) {
    case Outcome::Succeeded: return "succeeded";
    case Outcome::Unparsed: return "unparsed";
    case Outcome::TransportFailed: return "transport_failed";
  }
  return "unparsed";
}

namespace {

ResponseCache::Entry fetch(ChatClient& client, const AnnotatorClientConfig& config, const ChatRequest& req,
                           const ResponseCache* cache, UnitOutcome& out) {
  ++out.requests;
  if (cache) {
    if (auto hit = cache->get(req)) return *hit;
  }
  auto wait = config.backoff;
  for (int attempt = 0;; ++attempt) {
    try {
      ++out.network_calls;
      ResponseCache::Entry e{client.complete(req), utc_now()};
      if (cache) cache->put(req, e);
      return e;
    } catch (const TransportFailure& f) {
      if (!f.retryable() || attempt >= config.retry_limit) throw;
      std::this_thread::sleep_for(wait);
      wait *= 2;
    }
  }
}

}  // namespace

UnitOutcome annotate_unit(ChatClient& client, const AnnotatorClientConfig& config, const schema::RenderedPrompt& prompt,
                          Level level, const ResponseCache* cache) {
  UnitOutcome out;
  ChatRequest req{config.model_id, {{"system", prompt.system}, {"user", prompt.user}}, config.temperature};
  for (int attempt = 0; attempt <= config.retry_limit; ++attempt) {
    ResponseCache::Entry reply;
    try {
      reply = fetch(client, config, req, cache, out);
    } catch (const TransportFailure& f) {
      out.outcome = Outcome::TransportFailed;
      out.cause = f.what();
      return out;
    }
    out.last_reply = reply.content;
    if (auto label = schema::try_parse_label(reply.content, level)) {
      out.outcome = Outcome::Succeeded;
      out.label = *label;
      out.created_at = reply.created_at;
      return out;
    }
    req.messages.push_back({"assistant", reply.content});
    req.messages.push_back({"user", schema::format_reminder(level)});
  }
  out.outcome = Outcome::Unparsed;
  return out;
}

json to_json(const AnnotationRunReport& r) {
  json outcomes = json::array();
  for (const auto& o : r.outcomes) {
    json j = {{"unit_ref", to_string(o.unit)}, {"outcome", to_string(o.outcome)}, {"requests", o.requests}};
    if (o.label) j["label"] = to_string(*o.label);
    if (o.outcome == Outcome::Unparsed) j["last_reply"] = o.last_reply;
    if (!o.cause.empty()) j["cause"] = o.cause;
    outcomes.push_back(std::move(j));
  }
  json out = {{"set_name", r.set_name},
              {"counts",
               {{"succeeded", r.counts.succeeded},
                {"retried", r.counts.retried},
                {"unparsed", r.counts.unparsed},
                {"transport_failed", r.counts.transport_failed}}},
              {"network_calls", r.network_calls},
              {"config", r.config},
              {"prompt_variant", to_string(r.variant)},
              {"outcomes", outcomes}};
  out["guidebook_version"] = r.guidebook_version ? json(*r.guidebook_version) : json(nullptr);
  return out;
}

RunResult annotate_corpus(ChatClient& client, const AnnotatedCorpus& corpus, const AnnotatorClientConfig& config,
                          const AnnotateOptions& options, const ResponseCache* cache) {
  config.validate();
  schema::validate_template(options.template_text);
  const Level level = options.level;
  const auto units = corpus.units(level);

  const auto pool = schema::example_pool(corpus, options.example_labels, level);
  const auto* guide = options.guidebook_override ? &*options.guidebook_override : nullptr;
  const auto* para = options.paragraph_labels.empty() ? nullptr : &options.paragraph_labels;
  std::vector<schema::RenderedPrompt> prompts;
  prompts.reserve(units.size());
  for (const auto& u : units) {
    prompts.push_back(
        schema::render(schema::build_bundle(corpus, u, pool, options.prompt, para, guide), options.template_text));
  }

  std::vector<UnitOutcome> outcomes(units.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < units.size(); i = next++) {
      outcomes[i] = annotate_unit(client, config, prompts[i], level, cache);
      outcomes[i].unit = units[i];
    }
  };
  const std::size_t n_threads = std::min(config.max_parallel, std::max<std::size_t>(units.size(), 1));
  std::vector<std::jthread> threads;
  for (std::size_t t = 1; t < n_threads; ++t) threads.emplace_back(worker);
  worker();
  threads.clear();  // joins

  RunResult result{AnnotationSet(options.set_name), {}};
  auto& report = result.report;
  report.set_name = options.set_name;
  report.config = config.to_json();
  report.variant = options.prompt.variant;
  if (options.prompt.variant == PromptVariant::Guidebook || options.prompt.variant == PromptVariant::ExGuide) {
    report.guidebook_version = guide ? guide->version : schema::guidebook(level).version;
  }
  for (auto& o : outcomes) {
    report.network_calls += static_cast<std::size_t>(o.network_calls);
    if (o.requests > 1 && o.outcome != Outcome::TransportFailed) ++report.counts.retried;
    switch (o.outcome) {
      case Outcome::Succeeded: {
        ++report.counts.succeeded;
        Annotation a;
        a.unit = o.unit;
        a.label = *o.label;
        a.annotator_id = config.model_id;
        a.source = Source::Llm;
        a.model_id = config.model_id;
        a.prompt_variant = options.prompt.variant;
        a.timestamp = o.created_at;
        result.set.append(std::move(a));
        break;
      }
      case Outcome::Unparsed: ++report.counts.unparsed; break;
      case Outcome::TransportFailed: ++report.counts.transport_failed; break;
    }
  }
  report.outcomes = std::move(outcomes);
  return result;
}

}  // namespace episodekit::llm
