#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "episodekit/labels.hpp"

namespace episodekit::classify {

struct EmbeddingVector {
  UnitRef unit;
  std::size_t dim = 0;
  std::vector<double> values;
  std::string provider_id;
  std::string content_hash;  // sha256 of the unit text; empty for file vectors without text

  bool operator==(const EmbeddingVector&) const = default;
};

struct FeatureSet {
  std::size_t dim = 0;
  std::vector<EmbeddingVector> vectors;

  const EmbeddingVector* find(const UnitRef& unit) const;
  bool operator==(const FeatureSet&) const = default;
};

// Precomputed vectors: JSONL of {unit_ref, dim, values[, provider_id, content_hash]}.
// Throws ParseError naming the unit when a vector's length differs from its
// dim or from the first vector's dim.
FeatureSet load_vectors_file(const std::filesystem::path& path);
void save_vectors_file(const FeatureSet& features, const std::filesystem::path& path);

// Source of embeddings for batches of texts.
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual std::string id() const = 0;
  // One vector per text, in order. Throws episodekit::Error on failure.
  virtual std::vector<std::vector<double>> embed(const std::vector<std::string>& texts) = 0;
};

// Serves vectors from a precomputed file, looked up by content hash.
class FileEmbeddingProvider : public EmbeddingProvider {
 public:
  FileEmbeddingProvider(std::string id, std::map<std::string, std::vector<double>> by_hash);
  std::string id() const override { return id_; }
  std::vector<std::vector<double>> embed(const std::vector<std::string>& texts) override;

 private:
  std::string id_;
  std::map<std::string, std::vector<double>> by_hash_;
};

// OpenAI-style embeddings endpoint: POST {base_url}/embeddings with
// {model, input: [texts]}, reading data[i].embedding.
struct HttpEmbeddingConfig {
  std::string base_url;
  std::string model_id;
  std::string api_key_env;  // name of the variable holding the key
  std::chrono::milliseconds timeout{60000};
};

class HttpEmbeddingProvider : public EmbeddingProvider {
 public:
  explicit HttpEmbeddingProvider(HttpEmbeddingConfig config) : config_(std::move(config)) {}
  std::string id() const override { return config_.model_id; }
  std::vector<std::vector<double>> embed(const std::vector<std::string>& texts) override;

 private:
  HttpEmbeddingConfig config_;
};

struct EmbedUnit {
  UnitRef unit;
  std::string text;
};

struct EmbedOptions {
  std::size_t batch_size = 64;
  int retry_limit = 3;
  // Optional on-disk cache directory (files named by content hash + provider).
  std::filesystem::path cache_dir;
};

// One vector per unit. Texts are deduplicated by content hash, so repeated
// text costs one provider request; vectors come from the cache when present.
FeatureSet embed_units(EmbeddingProvider& provider, const std::vector<EmbedUnit>& units,
                       const EmbedOptions& options = {});

}  // namespace episodekit::classify
