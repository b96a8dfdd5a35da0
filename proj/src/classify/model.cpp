#include "episodekit/classify/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "episodekit/error.hpp"
#include "episodekit/kernels.hpp"
#include "episodekit/rng.hpp"

namespace episodekit::classify {

using nlohmann::json;

std::string_view to_string(ClassifierKind kind) {
  switch (kind) {
    case ClassifierKind::Knn: return "knn";
    case ClassifierKind::Centroid: return "centroid";
    case ClassifierKind::SvmLinear: return "svm_linear";
    case ClassifierKind::Softmax: return "softmax";
    case ClassifierKind::Mlp1: return "mlp1";
  }
  return "softmax";
}

std::optional<ClassifierKind> classifier_kind_from_string(std::string_view s) {
  for (auto k : {ClassifierKind::Knn, ClassifierKind::Centroid, ClassifierKind::SvmLinear,
                 ClassifierKind::Softmax, ClassifierKind::Mlp1}) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

void Hyperparameters::validate() const {
  if (!(learning_rate > 0)) throw InvariantError("learning_rate", "must be > 0");
  if (!(decay_factor > 0 && decay_factor <= 1)) throw InvariantError("decay_factor", "must be in (0, 1]");
  if (decay_every < 1) throw InvariantError("decay_every", "must be >= 1");
  if (epochs < 1) throw InvariantError("epochs", "must be >= 1");
  if (!(l2 >= 0)) throw InvariantError("l2", "must be >= 0");
  if (batch_size < 1) throw InvariantError("batch_size", "must be >= 1");
  if (hidden_width < 1) throw InvariantError("hidden_width", "must be >= 1");
  if (knn_k < 1) throw InvariantError("knn_k", "must be >= 1");
}

json Hyperparameters::to_json() const {
  return {{"learning_rate", learning_rate}, {"decay_factor", decay_factor},
          {"decay_every", decay_every},     {"epochs", epochs},
          {"l2", l2},                       {"batch_size", batch_size},
          {"hidden_width", hidden_width},   {"knn_k", knn_k}};
}

Hyperparameters Hyperparameters::from_json(const json& j) {
  Hyperparameters hp;
  hp.learning_rate = j.value("learning_rate", hp.learning_rate);
  hp.decay_factor = j.value("decay_factor", hp.decay_factor);
  hp.decay_every = j.value("decay_every", hp.decay_every);
  hp.epochs = j.value("epochs", hp.epochs);
  hp.l2 = j.value("l2", hp.l2);
  hp.batch_size = j.value("batch_size", hp.batch_size);
  hp.hidden_width = j.value("hidden_width", hp.hidden_width);
  hp.knn_k = j.value("knn_k", hp.knn_k);
  hp.validate();
  return hp;
}

namespace {

std::size_t argmax_first(std::span<const double> v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] > v[best]) best = i;
  }
  return best;
}

// In-place numerically stable softmax.
void softmax_inplace(std::span<double> v) {
  const double m = *std::max_element(v.begin(), v.end());
  double sum = 0.0;
  for (double& x : v) {
    x = std::exp(x - m);
    sum += x;
  }
  for (double& x : v) x /= sum;
}

double learning_rate_at(const Hyperparameters& hp, int epoch) {
  return hp.learning_rate * std::pow(hp.decay_factor, epoch / hp.decay_every);
}

void linear_forward(const Matrix& w, const std::vector<double>& b, std::span<const double> x,
                    std::span<double> out) {
  for (std::size_t r = 0; r < w.rows; ++r) out[r] = kernels::dot(w.row(r), x) + b[r];
}

void check_training_input(ClassifierKind kind, Level level, const Matrix& features,
                          const std::vector<std::size_t>& labels) {
  const std::size_t n_labels = label_count(level);
  if (features.cols == 0) throw InvariantError("feature_dim", "must be >= 1");
  if (features.rows == 0) throw InvariantError("features", "no training examples");
  if (labels.size() != features.rows) throw InvariantError("labels", "one label per feature row required");
  std::vector<std::size_t> counts(n_labels, 0);
  for (std::size_t y : labels) {
    if (y >= n_labels) throw InvariantError("labels", "label index out of range");
    ++counts[y];
  }
  if (kind == ClassifierKind::Knn) return;
  for (std::size_t c = 0; c < n_labels; ++c) {
    if (counts[c] == 0) {
      throw InvariantError("labels", "no training example for label " +
                                         std::string(label_name(level, c)));
    }
  }
}

// Xavier-uniform initialisation.
Matrix init_weights(std::size_t rows, std::size_t cols, Rng& rng) {
  Matrix m(rows, cols);
  const double a = std::sqrt(6.0 / static_cast<double>(rows + cols));
  for (double& v : m.data) v = rng.uniform(-a, a);
  return m;
}

struct MlpWork {
  std::vector<double> hidden, logits, grad_hidden;
};

void mlp_forward(const MlpParams& p, std::span<const double> x, MlpWork& w) {
  w.hidden.resize(p.w1.rows);
  w.logits.resize(p.w2.rows);
  linear_forward(p.w1, p.b1, x, w.hidden);
  for (double& h : w.hidden) h = std::tanh(h);
  linear_forward(p.w2, p.b2, w.hidden, w.logits);
}

// Accumulates the cross-entropy gradient of one example into `g` and
// returns the example loss.
double mlp_accumulate(const MlpParams& p, std::span<const double> x, std::size_t y, MlpWork& w,
                      MlpParams& g) {
  mlp_forward(p, x, w);
  softmax_inplace(w.logits);
  const double loss = -std::log(std::max(w.logits[y], std::numeric_limits<double>::min()));
  w.logits[y] -= 1.0;  // now dL/dlogits
  w.grad_hidden.assign(p.w1.rows, 0.0);
  for (std::size_t c = 0; c < p.w2.rows; ++c) {
    kernels::axpy(w.logits[c], w.hidden, g.w2.row(c));
    g.b2[c] += w.logits[c];
    kernels::axpy(w.logits[c], p.w2.row(c), w.grad_hidden);
  }
  for (std::size_t j = 0; j < p.w1.rows; ++j) {
    const double dz = w.grad_hidden[j] * (1.0 - w.hidden[j] * w.hidden[j]);
    kernels::axpy(dz, x, g.w1.row(j));
    g.b1[j] += dz;
  }
  return loss;
}

double linear_accumulate_softmax(const LinearParams& p, std::span<const double> x, std::size_t y,
                                 std::vector<double>& logits, LinearParams& g) {
  logits.resize(p.weights.rows);
  linear_forward(p.weights, p.bias, x, logits);
  softmax_inplace(logits);
  const double loss = -std::log(std::max(logits[y], std::numeric_limits<double>::min()));
  logits[y] -= 1.0;
  for (std::size_t c = 0; c < p.weights.rows; ++c) {
    kernels::axpy(logits[c], x, g.weights.row(c));
    g.bias[c] += logits[c];
  }
  return loss;
}

void linear_accumulate_hinge(const LinearParams& p, std::span<const double> x, std::size_t y,
                             std::vector<double>& scores_buf, LinearParams& g) {
  scores_buf.resize(p.weights.rows);
  linear_forward(p.weights, p.bias, x, scores_buf);
  for (std::size_t c = 0; c < p.weights.rows; ++c) {
    const double target = c == y ? 1.0 : -1.0;
    if (target * scores_buf[c] < 1.0) {
      kernels::axpy(-target, x, g.weights.row(c));
      g.bias[c] -= target;
    }
  }
}

// w <- (1 - lr*l2) w - (lr/B) g
void apply_update(Matrix& w, const Matrix& g, double lr, double l2, double batch) {
  kernels::scale(1.0 - lr * l2, w.data);
  kernels::axpy(-lr / batch, g.data, w.data);
}

void apply_update(std::vector<double>& b, const std::vector<double>& g, double lr, double batch) {
  kernels::axpy(-lr / batch, g, b);
}

template <typename Params, typename Accumulate>
void run_minibatch(Params& params, Params grad_template, const Matrix& features,
                   const std::vector<std::size_t>& labels, const Hyperparameters& hp, std::uint64_t seed,
                   Accumulate accumulate, void (*update)(Params&, const Params&, double, double, double)) {
  Rng rng(seed);
  std::vector<std::size_t> order(features.rows);
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (int epoch = 0; epoch < hp.epochs; ++epoch) {
    const double lr = learning_rate_at(hp, epoch);
    rng.shuffle(std::span<std::size_t>(order));
    for (std::size_t start = 0; start < order.size(); start += hp.batch_size) {
      const std::size_t stop = std::min(order.size(), start + hp.batch_size);
      Params grad = grad_template;
      for (std::size_t k = start; k < stop; ++k) {
        accumulate(params, features.row(order[k]), labels[order[k]], grad);
      }
      update(params, grad, lr, hp.l2, static_cast<double>(stop - start));
    }
  }
}

void update_linear(LinearParams& p, const LinearParams& g, double lr, double l2, double batch) {
  apply_update(p.weights, g.weights, lr, l2, batch);
  apply_update(p.bias, g.bias, lr, batch);
}

void update_mlp(MlpParams& p, const MlpParams& g, double lr, double l2, double batch) {
  apply_update(p.w1, g.w1, lr, l2, batch);
  apply_update(p.b1, g.b1, lr, batch);
  apply_update(p.w2, g.w2, lr, l2, batch);
  apply_update(p.b2, g.b2, lr, batch);
}

LinearParams zero_linear(std::size_t n_labels, std::size_t dim) {
  return {Matrix(n_labels, dim), std::vector<double>(n_labels, 0.0)};
}

MlpParams zero_mlp(std::size_t n_labels, std::size_t hidden, std::size_t dim) {
  return {Matrix(hidden, dim), std::vector<double>(hidden, 0.0), Matrix(n_labels, hidden),
          std::vector<double>(n_labels, 0.0)};
}

MlpParams init_mlp(std::size_t n_labels, std::size_t hidden, std::size_t dim, Rng& rng) {
  MlpParams p = zero_mlp(n_labels, hidden, dim);
  p.w1 = init_weights(hidden, dim, rng);
  p.w2 = init_weights(n_labels, hidden, rng);
  return p;
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  const double na = kernels::dot(a, a);
  const double nb = kernels::dot(b, b);
  if (na == 0.0 || nb == 0.0) return 0.0;
  return kernels::dot(a, b) / (std::sqrt(na) * std::sqrt(nb));
}

}  // namespace

ClassifierModel train(ClassifierKind kind, Level level, const Matrix& features,
                      const std::vector<std::size_t>& labels, const Hyperparameters& hp,
                      std::uint64_t seed) {
  hp.validate();
  check_training_input(kind, level, features, labels);
  const std::size_t n_labels = label_count(level);
  const std::size_t dim = features.cols;

  ClassifierModel model;
  model.kind = kind;
  model.level = level;
  for (std::size_t c = 0; c < n_labels; ++c) model.label_order.emplace_back(label_name(level, c));
  model.feature_dim = dim;
  model.train_seed = seed;
  model.hyperparameters = hp;

  switch (kind) {
    case ClassifierKind::Knn: {
      model.parameters = KnnParams{hp.knn_k, "cosine", features, labels};
      break;
    }
    case ClassifierKind::Centroid: {
      CentroidParams p{Matrix(n_labels, dim)};
      std::vector<double> counts(n_labels, 0.0);
      for (std::size_t i = 0; i < features.rows; ++i) {
        kernels::axpy(1.0, features.row(i), p.centroids.row(labels[i]));
        counts[labels[i]] += 1.0;
      }
      for (std::size_t c = 0; c < n_labels; ++c) kernels::scale(1.0 / counts[c], p.centroids.row(c));
      model.parameters = std::move(p);
      break;
    }
    case ClassifierKind::Softmax: {
      LinearParams p = zero_linear(n_labels, dim);
      std::vector<double> buf;
      run_minibatch<LinearParams>(
          p, zero_linear(n_labels, dim), features, labels, hp, seed,
          [&](const LinearParams& cur, std::span<const double> x, std::size_t y, LinearParams& g) {
            linear_accumulate_softmax(cur, x, y, buf, g);
          },
          update_linear);
      model.parameters = std::move(p);
      break;
    }
    case ClassifierKind::SvmLinear: {
      LinearParams p = zero_linear(n_labels, dim);
      std::vector<double> buf;
      run_minibatch<LinearParams>(
          p, zero_linear(n_labels, dim), features, labels, hp, seed,
          [&](const LinearParams& cur, std::span<const double> x, std::size_t y, LinearParams& g) {
            linear_accumulate_hinge(cur, x, y, buf, g);
          },
          update_linear);
      model.parameters = std::move(p);
      break;
    }
    case ClassifierKind::Mlp1: {
      Rng init_rng(seed ^ 0x9E3779B97F4A7C15ULL);
      MlpParams p = init_mlp(n_labels, hp.hidden_width, dim, init_rng);
      MlpWork work;
      run_minibatch<MlpParams>(
          p, zero_mlp(n_labels, hp.hidden_width, dim), features, labels, hp, seed,
          [&](const MlpParams& cur, std::span<const double> x, std::size_t y, MlpParams& g) {
            mlp_accumulate(cur, x, y, work, g);
          },
          update_mlp);
      model.parameters = std::move(p);
      break;
    }
  }
  return model;
}

std::vector<double> scores(const ClassifierModel& model, std::span<const double> x) {
  if (x.size() != model.feature_dim) {
    throw InvariantError("vector", "dimension " + std::to_string(x.size()) + " does not match model dimension " +
                                       std::to_string(model.feature_dim));
  }
  const std::size_t n_labels = model.label_order.size();
  std::vector<double> out(n_labels, 0.0);
  std::visit(
      [&](const auto& p) {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, KnnParams>) {
          std::vector<std::pair<double, std::size_t>> dist;
          dist.reserve(p.vectors.rows);
          for (std::size_t i = 0; i < p.vectors.rows; ++i) {
            dist.emplace_back(1.0 - cosine_similarity(x, p.vectors.row(i)), i);
          }
          const std::size_t k = std::min(p.k, dist.size());
          std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
          for (std::size_t i = 0; i < k; ++i) out[p.labels[dist[i].second]] += 1.0;
        } else if constexpr (std::is_same_v<P, CentroidParams>) {
          for (std::size_t c = 0; c < n_labels; ++c) {
            out[c] = -kernels::squared_distance(x, p.centroids.row(c));
          }
        } else if constexpr (std::is_same_v<P, LinearParams>) {
          linear_forward(p.weights, p.bias, x, out);
        } else {
          MlpWork work;
          mlp_forward(p, x, work);
          out = work.logits;
        }
      },
      model.parameters);
  return out;
}

std::size_t predict(const ClassifierModel& model, std::span<const double> x) {
  return argmax_first(scores(model, x));
}

AnyLabel predict_label(const ClassifierModel& model, std::span<const double> x) {
  return label_at(model.level, predict(model, x));
}

namespace {

json matrix_json(const Matrix& m) { return {{"rows", m.rows}, {"cols", m.cols}, {"data", m.data}}; }

Matrix matrix_from(const json& j) {
  Matrix m;
  m.rows = j.at("rows").get<std::size_t>();
  m.cols = j.at("cols").get<std::size_t>();
  m.data = j.at("data").get<std::vector<double>>();
  if (m.data.size() != m.rows * m.cols) throw InvariantError("parameters", "matrix data size mismatch");
  return m;
}

}  // namespace

json to_json(const ClassifierModel& model) {
  json params = std::visit(
      [](const auto& p) -> json {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, KnnParams>) {
          return {{"k", p.k}, {"metric", p.metric}, {"vectors", matrix_json(p.vectors)}, {"labels", p.labels}};
        } else if constexpr (std::is_same_v<P, CentroidParams>) {
          return {{"centroids", matrix_json(p.centroids)}};
        } else if constexpr (std::is_same_v<P, LinearParams>) {
          return {{"weights", matrix_json(p.weights)}, {"bias", p.bias}};
        } else {
          return {{"w1", matrix_json(p.w1)}, {"b1", p.b1}, {"w2", matrix_json(p.w2)}, {"b2", p.b2},
                  {"hidden_width", p.w1.rows}, {"activation", "tanh"}};
        }
      },
      model.parameters);
  return {{"format", "episodekit.model"},
          {"kind", to_string(model.kind)},
          {"level", to_string(model.level)},
          {"label_order", model.label_order},
          {"feature_dim", model.feature_dim},
          {"seed", model.train_seed},
          {"hyperparameters", model.hyperparameters.to_json()},
          {"parameters", std::move(params)}};
}

ClassifierModel model_from_json(const json& j) {
  ClassifierModel m;
  try {
    const auto kind = classifier_kind_from_string(j.at("kind").get<std::string>());
    if (!kind) throw InvariantError("kind", "unknown classifier kind");
    m.kind = *kind;
    const auto level = level_from_string(j.at("level").get<std::string>());
    if (!level) throw InvariantError("level", "unknown level");
    m.level = *level;
    m.label_order = j.at("label_order").get<std::vector<std::string>>();
    for (std::size_t c = 0; c < m.label_order.size(); ++c) {
      if (m.label_order.size() != label_count(m.level) || m.label_order[c] != label_name(m.level, c)) {
        throw InvariantError("label_order", "does not match the canonical label order");
      }
    }
    m.feature_dim = j.at("feature_dim").get<std::size_t>();
    m.train_seed = j.at("seed").get<std::uint64_t>();
    m.hyperparameters = Hyperparameters::from_json(j.value("hyperparameters", json::object()));
    const json& p = j.at("parameters");
    switch (m.kind) {
      case ClassifierKind::Knn:
        m.parameters = KnnParams{p.at("k").get<std::size_t>(), p.at("metric").get<std::string>(),
                                 matrix_from(p.at("vectors")), p.at("labels").get<std::vector<std::size_t>>()};
        break;
      case ClassifierKind::Centroid: m.parameters = CentroidParams{matrix_from(p.at("centroids"))}; break;
      case ClassifierKind::SvmLinear:
      case ClassifierKind::Softmax:
        m.parameters = LinearParams{matrix_from(p.at("weights")), p.at("bias").get<std::vector<double>>()};
        break;
      case ClassifierKind::Mlp1:
        m.parameters = MlpParams{matrix_from(p.at("w1")), p.at("b1").get<std::vector<double>>(),
                                 matrix_from(p.at("w2")), p.at("b2").get<std::vector<double>>()};
        break;
    }
  } catch (const json::exception& e) {
    throw InvariantError("model", e.what());
  }
  return m;
}

void save_model(const ClassifierModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << to_json(model).dump(2) << "\n";
}

ClassifierModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path.string(), 0, e.what());
  }
  return model_from_json(j);
}

namespace {

// Flat views over every trainable scalar, in a fixed order.
std::vector<double*> flatten(LinearParams& p) {
  std::vector<double*> out;
  for (double& v : p.weights.data) out.push_back(&v);
  for (double& v : p.bias) out.push_back(&v);
  return out;
}

std::vector<double*> flatten(MlpParams& p) {
  std::vector<double*> out;
  for (double& v : p.w1.data) out.push_back(&v);
  for (double& v : p.b1) out.push_back(&v);
  for (double& v : p.w2.data) out.push_back(&v);
  for (double& v : p.b2) out.push_back(&v);
  return out;
}

double squared_norm(const Matrix& m) { return kernels::dot(m.data, m.data); }

template <typename Params, typename Accumulate>
double objective(const Params& p, const Matrix& x, const std::vector<std::size_t>& y, double l2,
                 Params grad, Accumulate accumulate, double reg_norm) {
  double loss = 0.0;
  for (std::size_t i = 0; i < x.rows; ++i) loss += accumulate(p, x.row(i), y[i], grad);
  return loss / static_cast<double>(x.rows) + 0.5 * l2 * reg_norm;
}

}  // namespace

double gradient_check(ClassifierKind kind, const Matrix& features, const std::vector<std::size_t>& labels,
                      std::size_t label_count_, double eps, const Hyperparameters& hp, std::uint64_t seed) {
  if (kind != ClassifierKind::Softmax && kind != ClassifierKind::Mlp1) {
    throw std::invalid_argument("gradient_check supports softmax and mlp1 only");
  }
  if (features.cols == 0) throw std::invalid_argument("gradient_check needs feature dimension >= 1");
  if (features.rows == 0 || labels.size() != features.rows) {
    throw std::invalid_argument("gradient_check needs one label per example and at least one example");
  }
  if (label_count_ < 2) throw std::invalid_argument("gradient_check needs at least two labels");
  for (std::size_t y : labels) {
    if (y >= label_count_) throw std::invalid_argument("label index out of range");
  }
  if (!(eps > 0)) throw std::invalid_argument("eps must be > 0");

  const std::size_t n = features.rows;
  const std::size_t dim = features.cols;
  Rng rng(seed);

  auto compare = [&](auto& params, auto zero, auto accumulate, auto reg) {
    // Analytic gradient of the objective.
    auto grad = zero;
    double unused = 0.0;
    for (std::size_t i = 0; i < n; ++i) unused += accumulate(params, features.row(i), labels[i], grad);
    (void)unused;
    auto gflat = flatten(grad);
    for (double* g : gflat) *g /= static_cast<double>(n);
    {
      // l2 term on weight matrices only; weights come first in each block.
      auto copy = params;
      auto pflat = flatten(copy);
      auto is_weight = reg.second;
      for (std::size_t k = 0; k < gflat.size(); ++k) {
        if (is_weight(k)) *gflat[k] += hp.l2 * *pflat[k];
      }
    }
    auto pflat = flatten(params);
    double worst = 0.0;
    for (std::size_t k = 0; k < pflat.size(); ++k) {
      const double saved = *pflat[k];
      *pflat[k] = saved + eps;
      const double up = objective(params, features, labels, hp.l2, zero, accumulate, reg.first(params));
      *pflat[k] = saved - eps;
      const double down = objective(params, features, labels, hp.l2, zero, accumulate, reg.first(params));
      *pflat[k] = saved;
      const double numeric = (up - down) / (2.0 * eps);
      const double analytic = *gflat[k];
      const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
      worst = std::max(worst, std::abs(analytic - numeric) / denom);
    }
    return worst;
  };

  if (kind == ClassifierKind::Softmax) {
    LinearParams p = zero_linear(label_count_, dim);
    for (double& v : p.weights.data) v = rng.uniform(-0.5, 0.5);
    for (double& v : p.bias) v = rng.uniform(-0.5, 0.5);
    std::vector<double> buf;
    auto accumulate = [&](const LinearParams& cur, std::span<const double> x, std::size_t y,
                          LinearParams& g) { return linear_accumulate_softmax(cur, x, y, buf, g); };
    const std::size_t n_weights = p.weights.data.size();
    auto reg = std::make_pair([](const LinearParams& q) { return squared_norm(q.weights); },
                              [n_weights](std::size_t k) { return k < n_weights; });
    return compare(p, zero_linear(label_count_, dim), accumulate, reg);
  }

  MlpParams p = init_mlp(label_count_, hp.hidden_width, dim, rng);
  for (double& v : p.b1) v = rng.uniform(-0.1, 0.1);
  for (double& v : p.b2) v = rng.uniform(-0.1, 0.1);
  MlpWork work;
  auto accumulate = [&](const MlpParams& cur, std::span<const double> x, std::size_t y, MlpParams& g) {
    return mlp_accumulate(cur, x, y, work, g);
  };
  const std::size_t w1n = p.w1.data.size();
  const std::size_t b1n = p.b1.size();
  const std::size_t w2n = p.w2.data.size();
  auto reg = std::make_pair(
      [](const MlpParams& q) { return squared_norm(q.w1) + squared_norm(q.w2); },
      [=](std::size_t k) { return k < w1n || (k >= w1n + b1n && k < w1n + b1n + w2n); });
  return compare(p, zero_mlp(label_count_, hp.hidden_width, dim), accumulate, reg);
}

}  // namespace episodekit::classify
