#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "episodekit/classify/matrix.hpp"
#include "episodekit/labels.hpp"

namespace episodekit::classify {

enum class ClassifierKind { Knn, Centroid, SvmLinear, Softmax, Mlp1 };

std::string_view to_string(ClassifierKind kind);
std::optional<ClassifierKind> classifier_kind_from_string(std::string_view s);

struct Hyperparameters {
  double learning_rate = 0.1;
  double decay_factor = 0.5;
  int decay_every = 20;  // epochs
  int epochs = 100;
  double l2 = 1e-4;
  std::size_t batch_size = 32;
  std::size_t hidden_width = 64;
  std::size_t knn_k = 5;

  void validate() const;
  nlohmann::json to_json() const;
  static Hyperparameters from_json(const nlohmann::json& j);

  bool operator==(const Hyperparameters&) const = default;
};

struct KnnParams {
  std::size_t k = 5;
  std::string metric = "cosine";
  Matrix vectors;                // one training vector per row
  std::vector<std::size_t> labels;  // label index per row
  bool operator==(const KnnParams&) const = default;
};

struct CentroidParams {
  Matrix centroids;  // one row per label
  bool operator==(const CentroidParams&) const = default;
};

// svm_linear and softmax: scores = weights * x + bias.
struct LinearParams {
  Matrix weights;  // labels x dim
  std::vector<double> bias;
  bool operator==(const LinearParams&) const = default;
};

// One tanh hidden layer.
struct MlpParams {
  Matrix w1;  // hidden x dim
  std::vector<double> b1;
  Matrix w2;  // labels x hidden
  std::vector<double> b2;
  bool operator==(const MlpParams&) const = default;
};

using Parameters = std::variant<KnnParams, CentroidParams, LinearParams, MlpParams>;

struct ClassifierModel {
  ClassifierKind kind = ClassifierKind::Softmax;
  Level level = Level::Sentence;
  std::vector<std::string> label_order;  // canonical names at train time
  std::size_t feature_dim = 0;
  std::uint64_t train_seed = 0;
  Hyperparameters hyperparameters;
  Parameters parameters;

  bool operator==(const ClassifierModel&) const = default;
};

// `labels` holds label indices in the canonical order of `level`.
// Throws InvariantError naming the label when a class has no example (all
// kinds but knn), or when feature rows disagree in dimension.
ClassifierModel train(ClassifierKind kind, Level level, const Matrix& features,
                      const std::vector<std::size_t>& labels, const Hyperparameters& hp,
                      std::uint64_t seed);

// Per-label scores (higher is better). For knn: vote counts among the k
// nearest neighbours by cosine distance.
std::vector<double> scores(const ClassifierModel& model, std::span<const double> x);

// Argmax of scores; ties go to the earliest label in canonical order.
// Throws InvariantError when x.size() != feature_dim.
std::size_t predict(const ClassifierModel& model, std::span<const double> x);

AnyLabel predict_label(const ClassifierModel& model, std::span<const double> x);

nlohmann::json to_json(const ClassifierModel& model);
ClassifierModel model_from_json(const nlohmann::json& j);
void save_model(const ClassifierModel& model, const std::filesystem::path& path);
ClassifierModel load_model(const std::filesystem::path& path);

// Compares the analytic gradient of the full-batch training objective
// (mean cross-entropy + l2/2 * |W|^2) against central finite differences at a
// seeded random parameter point. Returns the largest relative discrepancy
// |a - n| / max(|a|, |n|, 1e-8) over all parameters. Only softmax and mlp1.
// Throws std::invalid_argument for dim 0, empty input, or other kinds.
double gradient_check(ClassifierKind kind, const Matrix& features, const std::vector<std::size_t>& labels,
                      std::size_t label_count, double eps = 1e-5, const Hyperparameters& hp = {},
                      std::uint64_t seed = 0);

}  // namespace episodekit::classify
