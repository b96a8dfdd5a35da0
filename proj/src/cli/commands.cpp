#include "episodekit/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <fstream>
#include <functional>
#include <map>
#include <optional>

#include "episodekit/classify/features.hpp"
#include "episodekit/classify/model.hpp"
#include "episodekit/classify/split.hpp"
#include "episodekit/corpus_io.hpp"
#include "episodekit/dynamics.hpp"
#include "episodekit/error.hpp"
#include "episodekit/fileutil.hpp"
#include "episodekit/hash.hpp"
#include "episodekit/llm/annotator.hpp"
#include "episodekit/metrics.hpp"
#include "episodekit/schema.hpp"
#include "episodekit/segmenter.hpp"
#include "episodekit/service/service.hpp"
#include "episodekit/timeutil.hpp"

namespace episodekit::cli {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

constexpr std::string_view kToolVersion = "episodekit 0.1.0";

// Bad flag combinations found after parsing; exit code 2 like parse errors.
class UsageError : public Error {
 public:
  using Error::Error;
};

const std::vector<std::string> kLevels{"paragraph", "sentence"};

Level level_of(const std::string& s) { return *level_from_string(s); }

// Records what a mutating command read and wrote, beside its main output.
class Manifest {
 public:
  Manifest(std::string command, std::vector<std::string> argv)
      : command_(std::move(command)), argv_(std::move(argv)), start_(std::chrono::steady_clock::now()) {}

  json config = json::object();
  std::optional<std::uint64_t> seed;

  void input(const fs::path& p) { inputs_.push_back(p); }
  void output(const fs::path& p) { outputs_.push_back(p); }

  void write(const fs::path& primary) const {
    json in = json::object(), out = json::object();
    for (const auto& p : inputs_)
      if (fs::is_regular_file(p)) in[p.string()] = sha256_file(p);
    for (const auto& p : outputs_)
      if (fs::is_regular_file(p)) out[p.string()] = sha256_file(p);
    const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start_);
    json j{{"command", command_},
           {"argv", argv_},
           {"config", config},
           {"inputs", in},
           {"outputs", out},
           {"tool_version", kToolVersion},
           {"seed", seed ? json(*seed) : json(nullptr)},
           {"duration_ms", ms.count()}};
    write_file_atomic(primary.string() + ".manifest.json", j.dump(2) + "\n");
  }

 private:
  std::string command_;
  std::vector<std::string> argv_;
  std::chrono::steady_clock::time_point start_;
  std::vector<fs::path> inputs_;
  std::vector<fs::path> outputs_;
};

// "corpus" names the labels stored on the units; other names are sets in
// the corpus header, annotations.<name>.jsonl beside it, or a file path.
AnnotationSet resolve_set(const std::optional<AnnotatedCorpus>& corpus, const std::string& corpus_path,
                          const std::string& name, Manifest* manifest = nullptr) {
  if (name == "corpus") {
    if (!corpus) throw UsageError("set 'corpus' needs --corpus");
    return embedded_labels(*corpus, "corpus");
  }
  if (corpus) {
    if (auto it = corpus->annotation_sets.find(name); it != corpus->annotation_sets.end()) return it->second;
    const auto p = annotation_set_path(corpus_path, name);
    if (fs::exists(p)) {
      if (manifest) manifest->input(p);
      return load_annotation_set(p);
    }
  }
  if (fs::is_regular_file(name)) {
    if (manifest) manifest->input(name);
    return load_annotation_set(name);
  }
  throw Error("no annotation set '" + name + "'" + (corpus ? "" : " (pass --corpus to look up set names)"));
}

std::optional<AnnotatedCorpus> maybe_load(const std::string& path, Manifest* manifest = nullptr) {
  if (path.empty()) return std::nullopt;
  if (manifest) manifest->input(path);
  return load_corpus(path);
}

void write_or_print(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << text;
  } else {
    write_file_atomic(path, text);
  }
}

// Units of one part of a split file, or nullopt when no split was given.
std::optional<std::set<UnitRef>> split_part(const std::string& path, const std::string& part, Manifest& m) {
  if (path.empty()) return std::nullopt;
  m.input(path);
  const auto j = json::parse(read_file(path));
  if (!j.contains(part)) throw Error(path + ": no '" + part + "' list");
  std::set<UnitRef> units;
  for (const auto& u : j.at(part)) {
    const auto ref = unit_ref_from_string(u.get<std::string>());
    if (!ref) throw ParseError(path, 0, "bad unit reference " + u.dump());
    units.insert(*ref);
  }
  return units;
}

// --- segment ----------------------------------------------------------------

struct SegmentArgs {
  std::vector<std::string> inputs;
  std::string out;
  std::string config;
  std::string trace_id;
  std::string question_id;
  std::string items;
};

void add_segment(CLI::App& app, SegmentArgs& a) {
  auto* c = app.add_subcommand("segment", "Split raw trace text into paragraphs and sentences");
  c->add_option("--in", a.inputs, "Trace text file (repeatable); the trace id defaults to the file stem")->required();
  c->add_option("--out", a.out, "Corpus file to create or update")->required();
  c->add_option("--config", a.config, "Segmentation config JSON");
  c->add_option("--trace-id", a.trace_id, "Trace id (single --in only)");
  c->add_option("--question-id", a.question_id, "SAT question id the trace answers (single --in only)");
  c->add_option("--items", a.items, "SAT items (JSON array or JSONL) to add to the corpus");
}

int run_segment(const SegmentArgs& a, Manifest& m, std::ostream& out, std::ostream& err) {
  if (a.inputs.size() > 1 && (!a.trace_id.empty() || !a.question_id.empty())) {
    throw UsageError("--trace-id and --question-id need exactly one --in");
  }
  segment::SegmentationConfig cfg;
  if (!a.config.empty()) {
    m.input(a.config);
    cfg = segment::SegmentationConfig::from_json(json::parse(read_file(a.config)));
  }
  m.config = {{"segmentation", cfg.to_json()}};

  AnnotatedCorpus corpus;
  if (fs::exists(a.out)) {
    m.input(a.out);
    corpus = load_corpus(a.out);
  }
  if (!a.items.empty()) {
    m.input(a.items);
    for (auto& item : ingest_sat_items(a.items)) {
      auto it = std::find_if(corpus.items.begin(), corpus.items.end(),
                             [&](const SatItem& x) { return x.question_id == item.question_id; });
      if (it != corpus.items.end()) *it = std::move(item);
      else corpus.items.push_back(std::move(item));
    }
  }
  for (const auto& in : a.inputs) {
    m.input(in);
    const std::string id = a.trace_id.empty() ? fs::path(in).stem().string() : a.trace_id;
    auto result = segment::segment_trace(id, read_file(in), cfg);
    for (const auto& w : result.warnings) err << "warning: " << id << ": offset " << w.offset << ": " << w.message << "\n";
    if (!a.question_id.empty()) result.trace.question_id = a.question_id;
    auto it = std::find_if(corpus.traces.begin(), corpus.traces.end(),
                           [&](const Trace& t) { return t.trace_id == id; });
    if (it != corpus.traces.end()) *it = std::move(result.trace);
    else corpus.traces.push_back(std::move(result.trace));
  }
  save_corpus(corpus, a.out);
  m.output(a.out);
  const auto report = validate_corpus(corpus);
  for (const auto& f : report.findings) {
    err << (f.severity == Severity::Error ? "error: " : "warning: ") << f.where << ": " << f.message << "\n";
  }
  out << report.traces << " traces, " << report.paragraphs << " paragraphs, " << report.sentences
      << " sentences -> " << a.out << "\n";
  m.write(a.out);
  return 0;
}

// --- annotate-llm -------------------------------------------------------------

struct AnnotateArgs {
  std::string corpus;
  std::string level = "sentence";
  std::string variant = "Base";
  std::size_t k = 7;
  std::uint64_t seed = 0;
  std::string set = "llm";
  std::string model = "gpt-4.1";
  std::string base_url = "https://api.openai.com/v1";
  std::string api_key_env = "OPENAI_API_KEY";
  double temperature = 0.0;
  std::size_t max_parallel = 4;
  int retry_limit = 3;
  long timeout_ms = 60000;
  std::string cache_dir = ".cache/llm";
  bool no_cache = false;
  std::string template_path;
  std::string guidebook_path;
  std::string examples = "corpus";
  std::string paragraph_labels;
  bool no_paragraph_context = false;
  std::string report;
};

void add_annotate(CLI::App& app, AnnotateArgs& a) {
  auto* c = app.add_subcommand("annotate-llm", "Label every unit with a chat-completion model");
  c->add_option("--corpus", a.corpus, "Corpus file")->required();
  c->add_option("--level", a.level, "paragraph or sentence")->check(CLI::IsMember(kLevels))->capture_default_str();
  c->add_option("--variant", a.variant, "Base, Example, Guidebook or ExGuide")
      ->check(CLI::IsMember({"Base", "Example", "Guidebook", "ExGuide"}))
      ->capture_default_str();
  c->add_option("--k", a.k, "Number of in-context examples")->capture_default_str();
  c->add_option("--seed", a.seed, "Seed for example selection")->capture_default_str();
  c->add_option("--set", a.set, "Name of the output annotation set")->capture_default_str();
  c->add_option("--model", a.model, "Model id sent to the endpoint")->capture_default_str();
  c->add_option("--base-url", a.base_url, "Chat-completions base URL")->capture_default_str();
  c->add_option("--api-key-env", a.api_key_env, "Environment variable holding the API key")->capture_default_str();
  c->add_option("--temperature", a.temperature)->capture_default_str();
  c->add_option("--max-parallel", a.max_parallel, "Requests in flight")->capture_default_str();
  c->add_option("--retry-limit", a.retry_limit, "Re-asks after an unparseable reply")->capture_default_str();
  c->add_option("--timeout-ms", a.timeout_ms)->capture_default_str();
  c->add_option("--cache-dir", a.cache_dir, "Response cache directory")->capture_default_str();
  c->add_flag("--no-cache", a.no_cache, "Do not read or write the response cache");
  c->add_option("--template", a.template_path, "Prompt template file");
  c->add_option("--guidebook", a.guidebook_path, "Guidebook markdown replacing the built-in one");
  c->add_option("--examples", a.examples, "Set to draw in-context examples from")->capture_default_str();
  c->add_option("--paragraph-labels", a.paragraph_labels,
                "Set whose paragraph labels are shown in sentence prompts (default: corpus labels when present)");
  c->add_flag("--no-paragraph-context", a.no_paragraph_context, "Leave paragraph labels out of sentence prompts");
  c->add_option("--report", a.report, "Run report path (default: beside the output set)");
}

int run_annotate(const AnnotateArgs& a, Manifest& m, std::ostream& out, std::ostream& err) {
  const auto corpus = maybe_load(a.corpus, &m);
  llm::AnnotatorClientConfig config;
  config.base_url = a.base_url;
  config.model_id = a.model;
  config.api_key_env = a.api_key_env;
  config.temperature = a.temperature;
  config.max_parallel = a.max_parallel;
  config.retry_limit = a.retry_limit;
  config.timeout = std::chrono::milliseconds(a.timeout_ms);
  config.validate();
  if (!is_valid_set_name(a.set)) throw UsageError("invalid set name '" + a.set + "'");

  llm::AnnotateOptions opts;
  opts.set_name = a.set;
  opts.level = level_of(a.level);
  opts.prompt.variant = *prompt_variant_from_string(a.variant);
  opts.prompt.k_examples = a.k;
  opts.prompt.seed = a.seed;
  opts.prompt.paragraph_label_context = !a.no_paragraph_context;
  if (!a.template_path.empty()) {
    m.input(a.template_path);
    opts.template_text = read_file(a.template_path);
    schema::validate_template(opts.template_text);
  }
  if (!a.guidebook_path.empty()) {
    m.input(a.guidebook_path);
    opts.guidebook_override = schema::load_guidebook(opts.level, a.guidebook_path);
  }
  const bool needs_examples =
      opts.prompt.variant == PromptVariant::Example || opts.prompt.variant == PromptVariant::ExGuide;
  if (needs_examples) opts.example_labels = resolve_set(corpus, a.corpus, a.examples, &m).unit_labels(opts.level);
  if (opts.level == Level::Sentence && !a.no_paragraph_context) {
    const std::string source = a.paragraph_labels.empty() ? "corpus" : a.paragraph_labels;
    opts.paragraph_labels = resolve_set(corpus, a.corpus, source, &m).unit_labels(Level::Paragraph);
  }

  m.seed = a.seed;
  m.config = {{"client", config.to_json()},
              {"level", a.level},
              {"variant", a.variant},
              {"k", a.k},
              {"set", a.set},
              {"examples", needs_examples ? json(a.examples) : json(nullptr)},
              {"paragraph_context", !a.no_paragraph_context},
              {"cache_dir", a.no_cache ? json(nullptr) : json(a.cache_dir)}};

  llm::HttpChatClient client(config);
  std::optional<llm::ResponseCache> cache;
  if (!a.no_cache) cache.emplace(a.cache_dir);
  const auto result = llm::annotate_corpus(client, *corpus, config, opts, cache ? &*cache : nullptr);

  const auto set_path = annotation_set_path(a.corpus, a.set);
  save_annotation_set(result.set, set_path);
  const std::string report_path = a.report.empty() ? set_path.string() + ".report.json" : a.report;
  write_file_atomic(report_path, llm::to_json(result.report).dump(2) + "\n");
  m.output(set_path);
  m.output(report_path);

  const auto& c = result.report.counts;
  out << "succeeded " << c.succeeded << ", retried " << c.retried << ", unparsed " << c.unparsed
      << ", transport_failed " << c.transport_failed << " (" << result.report.network_calls << " network calls)\n";
  out << "set " << a.set << " -> " << set_path.string() << "\n";
  if (c.transport_failed > 0) {
    for (const auto& o : result.report.outcomes) {
      if (o.outcome == llm::Outcome::TransportFailed) {
        err << "warning: " << to_string(o.unit) << ": " << o.cause << "\n";
        break;
      }
    }
  }
  m.write(set_path);
  return 0;
}

// --- embed ----------------------------------------------------------------------

struct EmbedArgs {
  std::string corpus;
  std::string level = "sentence";
  std::string out;
  std::string provider = "http";
  std::string from;
  std::string base_url = "https://api.openai.com/v1";
  std::string model;
  std::string api_key_env = "OPENAI_API_KEY";
  std::size_t batch = 64;
  int retry_limit = 3;
  std::string cache_dir = ".cache/embeddings";
  bool no_cache = false;
};

void add_embed(CLI::App& app, EmbedArgs& a) {
  auto* c = app.add_subcommand("embed", "Fetch or load one embedding vector per unit");
  c->add_option("--corpus", a.corpus, "Corpus file")->required();
  c->add_option("--level", a.level)->check(CLI::IsMember(kLevels))->capture_default_str();
  c->add_option("--out", a.out, "Vectors file (JSONL)")->required();
  c->add_option("--provider", a.provider, "http or file")->check(CLI::IsMember({"http", "file"}))->capture_default_str();
  c->add_option("--from", a.from, "Precomputed vectors file (provider file)");
  c->add_option("--base-url", a.base_url, "Embeddings base URL")->capture_default_str();
  c->add_option("--model", a.model, "Embedding model id (provider http)");
  c->add_option("--api-key-env", a.api_key_env)->capture_default_str();
  c->add_option("--batch", a.batch, "Texts per request")->capture_default_str();
  c->add_option("--retry-limit", a.retry_limit)->capture_default_str();
  c->add_option("--cache-dir", a.cache_dir)->capture_default_str();
  c->add_flag("--no-cache", a.no_cache);
}

int run_embed(const EmbedArgs& a, Manifest& m, std::ostream& out, std::ostream&) {
  const auto corpus = maybe_load(a.corpus, &m);
  const Level level = level_of(a.level);
  std::vector<classify::EmbedUnit> units;
  for (const auto& u : corpus->units(level)) units.push_back({u, *corpus->unit_text(u)});

  std::unique_ptr<classify::EmbeddingProvider> provider;
  if (a.provider == "file") {
    if (a.from.empty()) throw UsageError("--provider file needs --from");
    m.input(a.from);
    const auto given = classify::load_vectors_file(a.from);
    std::map<std::string, std::vector<double>> by_hash;
    for (const auto& v : given.vectors) {
      std::string h = v.content_hash;
      if (h.empty()) {
        const auto text = corpus->unit_text(v.unit);
        if (!text) continue;
        h = sha256_hex(*text);
      }
      by_hash[h] = v.values;
    }
    provider = std::make_unique<classify::FileEmbeddingProvider>("file:" + fs::path(a.from).filename().string(),
                                                                 std::move(by_hash));
  } else {
    if (a.model.empty()) throw UsageError("--provider http needs --model");
    provider = std::make_unique<classify::HttpEmbeddingProvider>(
        classify::HttpEmbeddingConfig{a.base_url, a.model, a.api_key_env, std::chrono::milliseconds(60000)});
  }
  classify::EmbedOptions opts;
  opts.batch_size = a.batch;
  opts.retry_limit = a.retry_limit;
  if (!a.no_cache) opts.cache_dir = a.cache_dir;
  m.config = {{"level", a.level}, {"provider", provider->id()}, {"batch", a.batch}};

  const auto features = classify::embed_units(*provider, units, opts);
  classify::save_vectors_file(features, a.out);
  m.output(a.out);
  out << features.vectors.size() << " vectors of dim " << features.dim << " -> " << a.out << "\n";
  m.write(a.out);
  return 0;
}

// --- split ------------------------------------------------------------------------

struct SplitArgs {
  std::string corpus;
  std::string gold = "corpus";
  std::string level = "sentence";
  double fraction = 0.7;
  std::uint64_t seed = 0;
  std::string out;
};

void add_split(CLI::App& app, SplitArgs& a) {
  auto* c = app.add_subcommand("split", "Stratified train/test split of labeled units");
  c->add_option("--corpus", a.corpus, "Corpus file")->required();
  c->add_option("--gold", a.gold, "Set providing the labels")->capture_default_str();
  c->add_option("--level", a.level)->check(CLI::IsMember(kLevels))->capture_default_str();
  c->add_option("--fraction", a.fraction, "Training fraction")->capture_default_str();
  c->add_option("--seed", a.seed)->capture_default_str();
  c->add_option("--out", a.out, "Split file (JSON)")->required();
}

int run_split(const SplitArgs& a, Manifest& m, std::ostream& out, std::ostream& err) {
  const auto corpus = maybe_load(a.corpus, &m);
  const Level level = level_of(a.level);
  const auto labels = resolve_set(corpus, a.corpus, a.gold, &m).unit_labels(level);
  const std::vector<std::pair<UnitRef, AnyLabel>> units(labels.begin(), labels.end());
  const classify::SplitSpec spec{a.fraction, a.seed};
  const auto split = classify::split_train_test(units, spec);
  for (const auto& w : split.warnings) err << "warning: " << w << "\n";

  json train = json::array(), test = json::array();
  for (const auto& u : split.train) train.push_back(to_string(u));
  for (const auto& u : split.test) test.push_back(to_string(u));
  const json j{{"level", a.level}, {"train_fraction", a.fraction}, {"seed", a.seed}, {"gold", a.gold},
               {"train", train},   {"test", test},                 {"warnings", split.warnings}};
  write_file_atomic(a.out, j.dump(2) + "\n");
  m.seed = a.seed;
  m.config = {{"level", a.level}, {"fraction", a.fraction}, {"gold", a.gold}};
  m.output(a.out);
  out << "train " << split.train.size() << ", test " << split.test.size() << " -> " << a.out << "\n";
  m.write(a.out);
  return 0;
}

// --- train / predict ----------------------------------------------------------------

struct TrainArgs {
  std::string features;
  std::string corpus;
  std::string gold = "corpus";
  std::string level = "sentence";
  std::string kind = "softmax";
  std::uint64_t seed = 0;
  std::string split;
  std::string part = "train";
  std::string out;
  classify::Hyperparameters hp;
};

void add_hyperparameters(CLI::App* c, classify::Hyperparameters& hp) {
  c->add_option("--epochs", hp.epochs)->capture_default_str();
  c->add_option("--learning-rate", hp.learning_rate)->capture_default_str();
  c->add_option("--decay-factor", hp.decay_factor)->capture_default_str();
  c->add_option("--decay-every", hp.decay_every, "Epochs between learning-rate decays")->capture_default_str();
  c->add_option("--l2", hp.l2)->capture_default_str();
  c->add_option("--batch-size", hp.batch_size)->capture_default_str();
  c->add_option("--hidden-width", hp.hidden_width, "mlp1 hidden units")->capture_default_str();
  c->add_option("--knn-k", hp.knn_k, "Neighbours for knn")->capture_default_str();
}

void add_train(CLI::App& app, TrainArgs& a) {
  auto* c = app.add_subcommand("train", "Train a classifier on embedded units");
  c->add_option("--features", a.features, "Vectors file")->required();
  c->add_option("--corpus", a.corpus, "Corpus file (for set lookup)");
  c->add_option("--gold", a.gold, "Set providing the labels")->capture_default_str();
  c->add_option("--level", a.level)->check(CLI::IsMember(kLevels))->capture_default_str();
  c->add_option("--kind", a.kind, "knn, centroid, svm_linear, softmax or mlp1")
      ->check(CLI::IsMember({"knn", "centroid", "svm_linear", "softmax", "mlp1"}))
      ->capture_default_str();
  c->add_option("--seed", a.seed)->capture_default_str();
  c->add_option("--split", a.split, "Split file; only units of --part are used");
  c->add_option("--part", a.part, "train or test")->check(CLI::IsMember({"train", "test"}))->capture_default_str();
  c->add_option("--out", a.out, "Model file (JSON)")->required();
  add_hyperparameters(c, a.hp);
}

int run_train(const TrainArgs& a, Manifest& m, std::ostream& out, std::ostream&) {
  const auto corpus = maybe_load(a.corpus, &m);
  const Level level = level_of(a.level);
  m.input(a.features);
  const auto features = classify::load_vectors_file(a.features);
  const auto labels = resolve_set(corpus, a.corpus, a.gold, &m).unit_labels(level);
  const auto part = split_part(a.split, a.part, m);
  a.hp.validate();

  classify::Matrix x;
  std::vector<std::size_t> y;
  std::vector<const classify::EmbeddingVector*> rows;
  for (const auto& v : features.vectors) {
    if (v.unit.level != level || (part && !part->count(v.unit))) continue;
    if (auto it = labels.find(v.unit); it != labels.end()) {
      rows.push_back(&v);
      y.push_back(label_index(it->second));
    }
  }
  if (rows.empty()) throw Error("no labeled vectors to train on");
  x = classify::Matrix(rows.size(), features.dim);
  for (std::size_t r = 0; r < rows.size(); ++r) std::copy(rows[r]->values.begin(), rows[r]->values.end(), x.row(r).begin());

  const auto kind = *classify::classifier_kind_from_string(a.kind);
  const auto model = classify::train(kind, level, x, y, a.hp, a.seed);
  classify::save_model(model, a.out);
  m.seed = a.seed;
  m.config = {{"kind", a.kind}, {"level", a.level}, {"gold", a.gold}, {"hyperparameters", a.hp.to_json()},
              {"part", part ? json(a.part) : json(nullptr)}};
  m.output(a.out);

  std::size_t correct = 0;
  for (std::size_t r = 0; r < x.rows; ++r) correct += classify::predict(model, x.row(r)) == y[r];
  out << a.kind << " trained on " << x.rows << " units, training accuracy "
      << metrics::format_score(static_cast<double>(correct) / static_cast<double>(x.rows)) << " -> " << a.out << "\n";
  m.write(a.out);
  return 0;
}

struct PredictArgs {
  std::string model;
  std::string features;
  std::string corpus;
  std::string set = "classifier";
  std::string out;
  std::string split;
  std::string part = "test";
  std::string timestamp;
};

void add_predict(CLI::App& app, PredictArgs& a) {
  auto* c = app.add_subcommand("predict", "Label embedded units with a trained model");
  c->add_option("--model", a.model, "Model file")->required();
  c->add_option("--features", a.features, "Vectors file")->required();
  c->add_option("--corpus", a.corpus, "Corpus file; the set is written beside it");
  c->add_option("--set", a.set, "Output set name")->capture_default_str();
  c->add_option("--out", a.out, "Output annotation file (instead of beside --corpus)");
  c->add_option("--split", a.split, "Split file; only units of --part are labeled");
  c->add_option("--part", a.part)->check(CLI::IsMember({"train", "test"}))->capture_default_str();
  c->add_option("--timestamp", a.timestamp, "Annotation timestamp (default: now)");
}

int run_predict(const PredictArgs& a, Manifest& m, std::ostream& out, std::ostream&) {
  if (a.out.empty() && a.corpus.empty()) throw UsageError("predict needs --out or --corpus");
  if (!is_valid_set_name(a.set)) throw UsageError("invalid set name '" + a.set + "'");
  const std::string ts = a.timestamp.empty() ? utc_now() : a.timestamp;
  if (!is_utc_timestamp(ts)) throw UsageError("--timestamp must look like 2025-01-31T12:00:00Z");
  m.input(a.model);
  m.input(a.features);
  const auto model = classify::load_model(a.model);
  const auto features = classify::load_vectors_file(a.features);
  const auto part = split_part(a.split, a.part, m);

  AnnotationSet set(a.set);
  const std::string annotator = "classifier:" + std::string(classify::to_string(model.kind));
  for (const auto& v : features.vectors) {
    if (v.unit.level != model.level || (part && !part->count(v.unit))) continue;
    Annotation ann;
    ann.unit = v.unit;
    ann.label = classify::predict_label(model, v.values);
    ann.annotator_id = annotator;
    ann.source = Source::Classifier;
    ann.model_id = std::string(classify::to_string(model.kind));
    ann.timestamp = ts;
    set.append(std::move(ann));
  }
  const fs::path path = a.out.empty() ? annotation_set_path(a.corpus, a.set) : fs::path(a.out);
  save_annotation_set(set, path);
  m.config = {{"set", a.set}, {"timestamp", ts}, {"part", part ? json(a.part) : json(nullptr)}};
  m.output(path);
  out << set.events().size() << " predictions -> " << path.string() << "\n";
  m.write(path);
  return 0;
}

// --- eval / agree -----------------------------------------------------------------

struct EvalArgs {
  std::string gold;
  std::string pred;
  std::string corpus;
  std::string level = "sentence";
  bool missing_as_wrong = false;
  std::string format = "text";
  std::string normalize = "counts";
  std::string out;
  std::string confusion;
  std::string given = "counts";
  std::string reference_name = "reference";
  std::optional<double> reference_accuracy;
  std::optional<double> reference_kappa;
};

const std::map<std::string, metrics::Normalization> kNormalizations{
    {"counts", metrics::Normalization::Counts},
    {"percent_of_total", metrics::Normalization::PercentOfTotal},
    {"percent_of_row", metrics::Normalization::PercentOfRow}};

void add_eval(CLI::App& app, EvalArgs& a) {
  auto* c = app.add_subcommand("eval", "Accuracy, Cohen's kappa and confusion matrix of predictions against gold");
  c->add_option("--gold", a.gold, "Reference set name or annotation file");
  c->add_option("--pred", a.pred, "Predicted set name or annotation file");
  c->add_option("--corpus", a.corpus, "Corpus file (set lookup; with --missing-as-wrong every unit counts)");
  c->add_option("--level", a.level)->check(CLI::IsMember(kLevels))->capture_default_str();
  c->add_flag("--missing-as-wrong", a.missing_as_wrong, "Score units without a prediction as wrong");
  c->add_option("--format", a.format, "text, json, csv or markdown")
      ->check(CLI::IsMember({"text", "json", "csv", "markdown"}))
      ->capture_default_str();
  c->add_option("--normalize", a.normalize, "Matrix cells: counts, percent_of_total or percent_of_row")
      ->check(CLI::IsMember({"counts", "percent_of_total", "percent_of_row"}))
      ->capture_default_str();
  c->add_option("--out", a.out, "Write the report here instead of stdout");
  c->add_option("--confusion", a.confusion, "Score a confusion matrix CSV instead of two sets");
  c->add_option("--given", a.given, "What the --confusion cells are: counts or percent_of_total")
      ->check(CLI::IsMember({"counts", "percent_of_total"}))
      ->capture_default_str();
  c->add_option("--reference-name", a.reference_name)->capture_default_str();
  c->add_option("--reference-accuracy", a.reference_accuracy, "Published accuracy to reconcile against");
  c->add_option("--reference-kappa", a.reference_kappa, "Published kappa to reconcile against");
}

std::string render_report(const metrics::AgreementReport& r, const std::string& format, metrics::Normalization n) {
  if (format == "json") return metrics::to_json(r).dump(2) + "\n";
  if (format == "csv") return metrics::confusion_csv(r.confusion, n);
  std::string s;
  if (format == "text") {
    s += "level: " + std::string(to_string(r.level)) + "\n";
    if (r.n_units_total > 0) {
      s += "units compared: " + std::to_string(r.n_units_compared) + " of " + std::to_string(r.n_units_total) +
           " (excluded " + std::to_string(r.n_missing_excluded) +
           (r.missing_as_wrong ? ", missing scored wrong" : "") + ")\n";
    }
    s += "accuracy: " + metrics::format_score(r.accuracy) + "\n";
    s += "kappa: " + metrics::format_score(r.kappa) + "\n\n";
  } else {
    s += metrics::score_table_markdown({{"result", r.accuracy, r.kappa}}) + "\n";
  }
  s += metrics::confusion_markdown(r.confusion, n);
  for (const auto& note : r.notes) s += "\nnote: " + note + "\n";
  return s;
}

int run_eval(const EvalArgs& a, Manifest& m, std::ostream& out, std::ostream&) {
  const Level level = level_of(a.level);
  metrics::AgreementReport report;
  if (!a.confusion.empty()) {
    if (!a.gold.empty() || !a.pred.empty()) throw UsageError("--confusion replaces --gold/--pred");
    m.input(a.confusion);
    const auto matrix = metrics::load_confusion_csv(a.confusion, level, kNormalizations.at(a.given));
    std::optional<metrics::Reference> ref;
    if (a.reference_accuracy || a.reference_kappa) ref = metrics::Reference{a.reference_name, a.reference_accuracy, a.reference_kappa};
    report = metrics::report_from_matrix(matrix, ref);
  } else {
    if (a.gold.empty() || a.pred.empty()) throw UsageError("eval needs --gold and --pred (or --confusion)");
    const auto corpus = maybe_load(a.corpus, &m);
    const auto gold = resolve_set(corpus, a.corpus, a.gold, &m).unit_labels(level);
    const auto pred = resolve_set(corpus, a.corpus, a.pred, &m).unit_labels(level);
    metrics::CompareOptions opts;
    opts.missing_as_wrong = a.missing_as_wrong;
    if (corpus && a.missing_as_wrong) opts.universe = corpus->units(level);
    report = metrics::agreement_report(gold, pred, level, opts);
  }
  const std::string text = render_report(report, a.format, kNormalizations.at(a.normalize));
  write_or_print(a.out, text, out);
  if (!a.out.empty() && a.out != "-") {
    m.config = {{"level", a.level}, {"missing_as_wrong", a.missing_as_wrong}, {"format", a.format}};
    m.output(a.out);
    m.write(a.out);
  }
  return 0;
}

struct AgreeArgs {
  std::string corpus;
  std::string a;
  std::string b;
  std::string level = "sentence";
  bool list = false;
  bool open_only = false;
  std::string format = "text";
};

void add_agree(CLI::App& app, AgreeArgs& a) {
  auto* c = app.add_subcommand("agree", "Inter-annotator agreement between two sets");
  c->add_option("--corpus", a.corpus, "Corpus file")->required();
  c->add_option("--a", a.a, "First set")->required();
  c->add_option("--b", a.b, "Second set")->required();
  c->add_option("--level", a.level)->check(CLI::IsMember(kLevels))->capture_default_str();
  c->add_flag("--disagreements", a.list, "List the units the sets label differently");
  c->add_flag("--open", a.open_only, "With --disagreements: only units not yet adjudicated");
  c->add_option("--format", a.format, "text or json")->check(CLI::IsMember({"text", "json"}))->capture_default_str();
}

int run_agree(const AgreeArgs& a, Manifest& m, std::ostream& out, std::ostream&) {
  auto corpus = maybe_load(a.corpus, &m);
  const Level level = level_of(a.level);
  const auto sa = resolve_set(corpus, a.corpus, a.a, &m);
  const auto sb = resolve_set(corpus, a.corpus, a.b, &m);
  const auto report = metrics::agreement_report(sa.unit_labels(level), sb.unit_labels(level), level);
  json disagreements;
  if (a.list) {
    AnnotatedCorpus view = *corpus;
    view.annotation_sets[a.a] = sa;
    view.annotation_sets[a.b] = sb;
    const auto adj = service::adjudication_set_name(a.a, a.b);
    if (!view.annotation_sets.count(adj) && fs::exists(annotation_set_path(a.corpus, adj))) {
      view.annotation_sets[adj] = load_annotation_set(annotation_set_path(a.corpus, adj));
    }
    service::AnnotationService svc(std::move(view), a.corpus, {});
    disagreements = svc.disagreements(a.a, a.b, level, a.open_only)["disagreements"];
  }
  if (a.format == "json") {
    json j = metrics::to_json(report);
    j["a"] = a.a;
    j["b"] = a.b;
    if (a.list) j["disagreements"] = disagreements;
    out << j.dump(2) << "\n";
    return 0;
  }
  out << a.a << " vs " << a.b << " (" << a.level << "): " << report.n_units_compared << " shared units, accuracy "
      << metrics::format_score(report.accuracy) << ", kappa " << metrics::format_score(report.kappa) << "\n";
  if (a.list) {
    for (const auto& d : disagreements) {
      out << d["unit_ref"].get<std::string>() << "  " << a.a << "=" << d["labels_by_annotator"][a.a].get<std::string>()
          << "  " << a.b << "=" << d["labels_by_annotator"][a.b].get<std::string>() << "  "
          << d["status"].get<std::string>();
      if (!d["final_label"].is_null()) out << " -> " << d["final_label"].get<std::string>();
      out << "\n";
    }
  }
  return 0;
}

// --- transitions --------------------------------------------------------------------

struct TransitionsArgs {
  std::string corpus;
  std::string set = "corpus";
  std::string level = "sentence";
  double alpha = 0.0;
  std::size_t top = 0;
  bool include_diagonal = false;
  std::string out;
  std::string json_out;
  std::string stratify;
};

void add_transitions(CLI::App& app, TransitionsArgs& a) {
  auto* c = app.add_subcommand("transitions", "Episode transition matrix of a label set");
  c->add_option("--corpus", a.corpus, "Corpus file")->required();
  c->add_option("--set", a.set, "Set to analyse")->capture_default_str();
  c->add_option("--level", a.level)->check(CLI::IsMember(kLevels))->capture_default_str();
  c->add_option("--alpha", a.alpha, "Additive smoothing")->capture_default_str();
  c->add_option("--top", a.top, "Print the N most likely transitions");
  c->add_flag("--include-diagonal", a.include_diagonal, "Let --top list self-transitions");
  c->add_option("--out", a.out, "Heatmap CSV");
  c->add_option("--json", a.json_out, "Matrix as JSON");
  c->add_option("--stratify", a.stratify, "difficulty or skill: one matrix per stratum")
      ->check(CLI::IsMember({"difficulty", "skill"}));
}

// Stratum values become file name parts.
std::string file_safe(const std::string& s) {
  std::string out;
  for (char ch : s) out += std::isalnum(static_cast<unsigned char>(ch)) ? ch : '_';
  return out;
}

int run_transitions(const TransitionsArgs& a, Manifest& m, std::ostream& out, std::ostream& err) {
  const auto corpus = maybe_load(a.corpus, &m);
  const Level level = level_of(a.level);
  const auto labels = resolve_set(corpus, a.corpus, a.set, &m).unit_labels(level);
  m.config = {{"set", a.set}, {"level", a.level}, {"alpha", a.alpha}};

  auto report = [&](const std::string& name, const dynamics::TransitionMatrix& tm) {
    out << (name.empty() ? "" : "[" + name + "] ") << tm.total() << " transitions\n";
    if (a.top == 0) return;
    for (const auto& t : dynamics::top_transitions(tm, a.top, !a.include_diagonal)) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.3f", t.probability);
      out << "  " << label_name(level, t.from) << " -> " << label_name(level, t.to) << "  " << buf << "\n";
    }
  };

  if (!a.stratify.empty()) {
    const auto by = a.stratify == "skill" ? dynamics::Stratifier::Skill : dynamics::Stratifier::Difficulty;
    const auto s = dynamics::stratified_dynamics(labels, *corpus, by, level, a.alpha);
    for (const auto& n : s.notices) err << "notice: " << n << "\n";
    for (const auto& [name, tm] : s.strata) {
      report(name, tm);
      if (!a.out.empty()) {
        const fs::path p = fs::path(a.out).replace_extension("").string() + "." + file_safe(name) + ".csv";
        write_file_atomic(p, dynamics::heatmap_csv(tm));
        m.output(p);
      }
    }
  } else {
    const auto tm = dynamics::transition_matrix(labels, *corpus, level, a.alpha);
    report("", tm);
    if (!a.out.empty()) {
      write_file_atomic(a.out, dynamics::heatmap_csv(tm));
      m.output(a.out);
    }
    if (!a.json_out.empty()) {
      write_file_atomic(a.json_out, dynamics::to_json(tm).dump(2) + "\n");
      m.output(a.json_out);
    }
  }
  if (!a.out.empty()) m.write(a.out);
  else if (!a.json_out.empty()) m.write(a.json_out);
  return 0;
}

// --- serve / export -------------------------------------------------------------------

struct ServeArgs {
  std::string corpus;
  std::string tokens;
  std::string host = "127.0.0.1";
  int port = 8080;
};

void add_serve(CLI::App& app, ServeArgs& a) {
  auto* c = app.add_subcommand("serve", "Run the annotation HTTP service");
  c->add_option("--corpus", a.corpus, "Corpus file; annotation logs live beside it")->required();
  c->add_option("--tokens", a.tokens, "JSON object mapping bearer tokens to annotator ids")->required();
  c->add_option("--host", a.host)->capture_default_str();
  c->add_option("--port", a.port)->capture_default_str();
}

int run_serve(const ServeArgs& a, std::ostream& out) {
  auto svc = service::AnnotationService::open(a.corpus, service::load_tokens(a.tokens));
  service::HttpServer server(*svc);
  out << "serving " << a.corpus << " on http://" << a.host << ":" << a.port << std::endl;
  server.run(a.host, a.port);
  return 0;
}

struct ExportArgs {
  std::string corpus;
  std::string set;
  std::string out;
  std::string format = "jsonl";
};

void add_export(CLI::App& app, ExportArgs& a) {
  auto* c = app.add_subcommand("export", "Write an annotation set as JSONL events or a CSV of latest labels");
  c->add_option("--corpus", a.corpus, "Corpus file")->required();
  c->add_option("--set", a.set, "Set to export")->required();
  c->add_option("--out", a.out, "Output file (default stdout)");
  c->add_option("--format", a.format, "jsonl or csv")->check(CLI::IsMember({"jsonl", "csv"}))->capture_default_str();
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char ch : s) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
  return q + "\"";
}

int run_export(const ExportArgs& a, Manifest& m, std::ostream& out, std::ostream&) {
  const auto corpus = maybe_load(a.corpus, &m);
  const auto set = resolve_set(corpus, a.corpus, a.set, &m);
  std::string text;
  if (a.format == "jsonl") {
    text = serialize_annotation_set(set);
  } else {
    text = "unit_ref,level,label,annotator_id,source,model_id,prompt_variant,timestamp\n";
    for (const auto& ann : set.latest()) {
      text += csv_field(to_string(ann.unit)) + "," + std::string(to_string(ann.unit.level)) + "," +
              to_string(ann.label) + "," + csv_field(ann.annotator_id) + "," + std::string(to_string(ann.source)) +
              "," + csv_field(ann.model_id.value_or("")) + "," +
              (ann.prompt_variant ? std::string(to_string(*ann.prompt_variant)) : "") + "," + ann.timestamp + "\n";
    }
  }
  write_or_print(a.out, text, out);
  if (!a.out.empty() && a.out != "-") {
    m.config = {{"set", a.set}, {"format", a.format}};
    m.output(a.out);
    m.write(a.out);
  }
  return 0;
}

// --- usage hints ------------------------------------------------------------------------

std::optional<std::string> nearest(const std::string& word, const std::vector<std::string>& candidates) {
  std::optional<std::string> best;
  std::size_t best_d = std::max<std::size_t>(2, word.size() / 3) + 1;
  for (const auto& c : candidates) {
    const auto d = edit_distance(word, c);
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

std::vector<std::string> long_flags(const CLI::App* app) {
  std::vector<std::string> out;
  for (const auto* opt : app->get_options()) {
    for (const auto& n : opt->get_lnames()) out.push_back("--" + n);
  }
  return out;
}

// "did you mean" lines for unknown flags or an unknown subcommand.
std::string suggestions(const CLI::App& app, const std::vector<std::string>& args) {
  std::vector<std::string> commands;
  for (const auto* sub : app.get_subcommands([](const CLI::App*) { return true; })) commands.push_back(sub->get_name());
  std::string out;
  if (args.empty()) return out;
  const CLI::App* sub = nullptr;
  if (std::find(commands.begin(), commands.end(), args[0]) != commands.end()) {
    sub = app.get_subcommand(args[0]);
  } else if (args[0].rfind("-", 0) != 0) {
    if (auto n = nearest(args[0], commands)) out += "did you mean '" + *n + "'?\n";
    return out;
  }
  const auto flags = long_flags(sub ? sub : &app);
  for (std::size_t i = sub ? 1 : 0; i < args.size(); ++i) {
    std::string flag = args[i];
    if (flag.rfind("--", 0) != 0) continue;
    if (const auto eq = flag.find('='); eq != std::string::npos) flag.resize(eq);
    if (std::find(flags.begin(), flags.end(), flag) != flags.end()) continue;
    if (auto n = nearest(flag, flags)) out += "unknown flag " + flag + "; did you mean " + *n + "?\n";
  }
  return out;
}

}  // namespace

std::size_t edit_distance(std::string_view a, std::string_view b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Annotate reasoning traces with episode labels, train classifiers and measure agreement",
               "episodekit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kToolVersion));

  SegmentArgs segment_args;
  AnnotateArgs annotate_args;
  EmbedArgs embed_args;
  SplitArgs split_args;
  TrainArgs train_args;
  PredictArgs predict_args;
  EvalArgs eval_args;
  AgreeArgs agree_args;
  TransitionsArgs transitions_args;
  ServeArgs serve_args;
  ExportArgs export_args;
  add_segment(app, segment_args);
  add_annotate(app, annotate_args);
  add_embed(app, embed_args);
  add_train(app, train_args);
  add_predict(app, predict_args);
  add_eval(app, eval_args);
  add_transitions(app, transitions_args);
  add_agree(app, agree_args);
  add_split(app, split_args);
  add_serve(app, serve_args);
  add_export(app, export_args);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::Success& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    err << suggestions(app, args);
    return 2;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  Manifest manifest(command, args);
  try {
    if (command == "segment") return run_segment(segment_args, manifest, out, err);
    if (command == "annotate-llm") return run_annotate(annotate_args, manifest, out, err);
    if (command == "embed") return run_embed(embed_args, manifest, out, err);
    if (command == "split") return run_split(split_args, manifest, out, err);
    if (command == "train") return run_train(train_args, manifest, out, err);
    if (command == "predict") return run_predict(predict_args, manifest, out, err);
    if (command == "eval") return run_eval(eval_args, manifest, out, err);
    if (command == "agree") return run_agree(agree_args, manifest, out, err);
    if (command == "transitions") return run_transitions(transitions_args, manifest, out, err);
    if (command == "serve") return run_serve(serve_args, out);
    if (command == "export") return run_export(export_args, manifest, out, err);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace episodekit::cli
