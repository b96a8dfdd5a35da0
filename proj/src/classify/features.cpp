#include "episodekit/classify/features.hpp"

#include <algorithm>
#include <filesystem>

#include <nlohmann/json.hpp>

#include "episodekit/corpus_io.hpp"
#include "episodekit/error.hpp"
#include "episodekit/fileutil.hpp"
#include "episodekit/hash.hpp"
#include "episodekit/http_client.hpp"

namespace episodekit::classify {

using nlohmann::json;

const EmbeddingVector* FeatureSet::find(const UnitRef& unit) const {
  for (const auto& v : vectors) {
    if (v.unit == unit) return &v;
  }
  return nullptr;
}

namespace {

UnitRef parse_unit(const json& j) {
  if (j.is_string()) {
    auto ref = unit_ref_from_string(j.get<std::string>());
    if (!ref) throw InvariantError("unit_ref", "malformed '" + j.get<std::string>() + "'");
    return *ref;
  }
  return unit_ref_from_json(j);
}

}  // namespace

FeatureSet load_vectors_file(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  FeatureSet out;
  for (const auto& [line, s] : split_lines(text)) {
    EmbeddingVector v;
    try {
      const json j = json::parse(s);
      v.unit = parse_unit(j.at("unit_ref"));
      v.values = j.at("values").get<std::vector<double>>();
      v.dim = j.contains("dim") ? j.at("dim").get<std::size_t>() : v.values.size();
      v.provider_id = j.value("provider_id", std::string());
      v.content_hash = j.value("content_hash", std::string());
    } catch (const json::exception& e) {
      throw ParseError(path.string(), line, e.what());
    } catch (const InvariantError& e) {
      throw ParseError(path.string(), line, e.what());
    }
    const std::string unit = to_string(v.unit);
    if (v.values.size() != v.dim) {
      throw ParseError(path.string(), line,
                       "unit " + unit + ": " + std::to_string(v.values.size()) + " values but dim " +
                           std::to_string(v.dim));
    }
    if (v.dim == 0) throw ParseError(path.string(), line, "unit " + unit + ": dim must be >= 1");
    if (out.vectors.empty()) {
      out.dim = v.dim;
    } else if (v.dim != out.dim) {
      throw ParseError(path.string(), line,
                       "unit " + unit + ": dim " + std::to_string(v.dim) + " differs from " +
                           std::to_string(out.dim));
    }
    if (out.find(v.unit)) throw ParseError(path.string(), line, "unit " + unit + " listed twice");
    out.vectors.push_back(std::move(v));
  }
  return out;
}

void save_vectors_file(const FeatureSet& features, const std::filesystem::path& path) {
  std::string out;
  for (const auto& v : features.vectors) {
    json j = {{"unit_ref", to_json(v.unit)}, {"dim", v.dim}, {"values", v.values}};
    if (!v.provider_id.empty()) j["provider_id"] = v.provider_id;
    if (!v.content_hash.empty()) j["content_hash"] = v.content_hash;
    out += j.dump() + "\n";
  }
  write_file_atomic(path, out);
}

FileEmbeddingProvider::FileEmbeddingProvider(std::string id, std::map<std::string, std::vector<double>> by_hash)
    : id_(std::move(id)), by_hash_(std::move(by_hash)) {}

std::vector<std::vector<double>> FileEmbeddingProvider::embed(const std::vector<std::string>& texts) {
  std::vector<std::vector<double>> out;
  out.reserve(texts.size());
  for (const auto& t : texts) {
    const auto it = by_hash_.find(sha256_hex(t));
    if (it == by_hash_.end()) throw Error("no precomputed vector for text hash " + sha256_hex(t));
    out.push_back(it->second);
  }
  return out;
}

std::vector<std::vector<double>> HttpEmbeddingProvider::embed(const std::vector<std::string>& texts) {
  std::map<std::string, std::string> headers;
  const std::string key = http::env_or_empty(config_.api_key_env);
  if (!key.empty()) headers["Authorization"] = "Bearer " + key;
  const json body = {{"model", config_.model_id}, {"input", texts}};
  const auto res = http::post_json(config_.base_url, "/embeddings", body.dump(), headers, config_.timeout);
  if (res.status != 200) throw Error("embeddings endpoint returned HTTP " + std::to_string(res.status));
  std::vector<std::vector<double>> out;
  try {
    const json j = json::parse(res.body);
    for (const auto& d : j.at("data")) out.push_back(d.at("embedding").get<std::vector<double>>());
  } catch (const json::exception& e) {
    throw Error(std::string("malformed embeddings response: ") + e.what());
  }
  if (out.size() != texts.size()) {
    throw Error("embeddings endpoint returned " + std::to_string(out.size()) + " vectors for " +
                std::to_string(texts.size()) + " texts");
  }
  return out;
}

namespace {

std::filesystem::path cache_file(const std::filesystem::path& dir, const std::string& provider,
                                 const std::string& content_hash) {
  return dir / (sha256_hex(provider + "\n" + content_hash) + ".json");
}

std::vector<std::vector<double>> embed_with_retry(EmbeddingProvider& provider,
                                                  const std::vector<std::string>& texts, int retry_limit) {
  for (int attempt = 0;; ++attempt) {
    try {
      auto v = provider.embed(texts);
      if (v.size() != texts.size()) throw Error("provider returned the wrong number of vectors");
      return v;
    } catch (const Error&) {
      if (attempt >= retry_limit) throw;
    }
  }
}

}  // namespace

FeatureSet embed_units(EmbeddingProvider& provider, const std::vector<EmbedUnit>& units,
                       const EmbedOptions& options) {
  if (options.batch_size == 0) throw InvariantError("batch_size", "must be >= 1");
  const std::string pid = provider.id();

  std::vector<std::string> hashes;
  hashes.reserve(units.size());
  std::map<std::string, std::vector<double>> by_hash;
  std::vector<std::string> pending_hashes;
  std::vector<std::string> pending_texts;
  for (const auto& u : units) {
    const std::string h = sha256_hex(u.text);
    hashes.push_back(h);
    if (by_hash.count(h) || std::find(pending_hashes.begin(), pending_hashes.end(), h) != pending_hashes.end()) {
      continue;
    }
    if (!options.cache_dir.empty()) {
      const auto f = cache_file(options.cache_dir, pid, h);
      if (std::filesystem::exists(f)) {
        by_hash[h] = json::parse(read_file(f)).at("values").get<std::vector<double>>();
        continue;
      }
    }
    pending_hashes.push_back(h);
    pending_texts.push_back(u.text);
  }

  for (std::size_t start = 0; start < pending_texts.size(); start += options.batch_size) {
    const std::size_t stop = std::min(pending_texts.size(), start + options.batch_size);
    std::vector<std::string> batch(pending_texts.begin() + static_cast<std::ptrdiff_t>(start),
                                   pending_texts.begin() + static_cast<std::ptrdiff_t>(stop));
    auto vectors = embed_with_retry(provider, batch, options.retry_limit);
    for (std::size_t i = 0; i < vectors.size(); ++i) {
      const std::string& h = pending_hashes[start + i];
      if (!options.cache_dir.empty()) {
        const json entry = {{"provider_id", pid}, {"content_hash", h}, {"values", vectors[i]}};
        write_file_atomic(cache_file(options.cache_dir, pid, h), entry.dump());
      }
      by_hash[h] = std::move(vectors[i]);
    }
  }

  FeatureSet out;
  for (std::size_t i = 0; i < units.size(); ++i) {
    EmbeddingVector v;
    v.unit = units[i].unit;
    v.values = by_hash.at(hashes[i]);
    v.dim = v.values.size();
    v.provider_id = pid;
    v.content_hash = hashes[i];
    if (v.dim == 0) throw Error("unit " + to_string(v.unit) + ": provider returned an empty vector");
    if (i == 0) {
      out.dim = v.dim;
    } else if (v.dim != out.dim) {
      throw Error("unit " + to_string(v.unit) + ": dim " + std::to_string(v.dim) + " differs from " +
                  std::to_string(out.dim));
    }
    out.vectors.push_back(std::move(v));
  }
  return out;
}

}  // namespace episodekit::classify
