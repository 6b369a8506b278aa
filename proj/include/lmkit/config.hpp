#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "lmkit/common.hpp"
#include "lmkit/corpus.hpp"
#include "lmkit/factory.hpp"

namespace lmkit {

using nlohmann::json;

/// One run, fully specified. Serialized as a flat JSON object with dotted
/// key names; the emitted echo carries every key explicitly so a run can be
/// replayed from its artifact alone. The seed has no default — a config
/// without one is rejected.
struct RunConfig {
  std::uint64_t seed = 0;
  std::string corpus;  // path; one document per line

  // context.*
  std::string context_direction = "forward";  // forward | backward
  std::size_t context_k = 2;

  // embedding.* — the fixed input/target representations
  std::string embedding_source = "random";  // file | svd | random
  std::string embedding_path;               // file source: text vectors
  std::string embedding_buckets_path;       // file source: optional binary buckets
  std::size_t embedding_dim = 16;           // svd / random sources
  std::size_t embedding_buckets = 2048;     // subword hash buckets (random source)
  double svd_alpha = 0.5;                   // singular-value weighting exponent
  bool svd_sweep = false;                   // embed-svd: emit alpha in {0, 0.5, 1}
  bool embedding_compose = true;            // blend word row with subword n-grams

  // encoder.*
  std::size_t encoder_hidden = 32;
  std::size_t encoder_m = 0;  // 0 = match the embedding dimension

  // output.*
  OutputSpec output;  // v is filled from the corpus at run time

  // train.*
  std::size_t train_steps = 500;
  std::size_t train_batch = 16;
  double train_lr = 0.1;
  std::size_t train_warmup = 0;

  // eval.* / analysis.*
  bool eval_perplexity = false;
  bool analysis_direct = true;        // also run the encoder-free optimization
  std::size_t analysis_max_contexts = 100'000;
  std::string analysis_metric = "cosine";  // nn-decode metric: cosine | l2

  // bench.*
  std::vector<std::string> bench_layers = {"semfit", "adaptive", "softmax"};
  std::vector<std::size_t> bench_vocab = {40'000, 200'000, 1'000'000};
  std::size_t bench_m = 300;
  std::size_t bench_batch = 16;
  std::size_t bench_reps = 5;

  std::string out = "runs";  // artifact root; run dir = out/<config hash>

  ContextSpec context_spec() const {
    if (context_direction != "forward" && context_direction != "backward")
      throw UsageError("context.direction must be \"forward\" or \"backward\"");
    return {context_direction == "forward" ? Direction::Forward : Direction::Backward,
            context_k};
  }
};

namespace detail {

inline const std::vector<std::string>& known_config_keys() {
  static const std::vector<std::string> keys = {
      "seed",
      "corpus",
      "context.direction",
      "context.k",
      "embedding.source",
      "embedding.path",
      "embedding.buckets_path",
      "embedding.dim",
      "embedding.buckets",
      "embedding.svd_alpha",
      "embedding.svd_sweep",
      "embedding.compose",
      "encoder.hidden",
      "encoder.m",
      "output.kind",
      "output.distance",
      "output.negatives",
      "output.lambda1",
      "output.lambda2",
      "output.cutoffs",
      "output.divisors",
      "output.seed",
      "train.steps",
      "train.batch",
      "train.lr",
      "train.warmup",
      "eval.perplexity",
      "analysis.direct",
      "analysis.max_contexts",
      "analysis.metric",
      "bench.layers",
      "bench.vocab",
      "bench.m",
      "bench.batch",
      "bench.reps",
      "out",
  };
  return keys;
}

template <class T>
void read_key(const json& j, const char* key, T& dst) {
  if (!j.contains(key)) return;
  try {
    j.at(key).get_to(dst);
  } catch (const json::exception& e) {
    throw UsageError(std::string("config key \"") + key + "\": " + e.what());
  }
}

}  // namespace detail

/// Parse a flat config object. Unknown keys are usage errors (they are
/// almost always typos and would otherwise silently fall back to defaults);
/// a missing seed is too.
inline RunConfig config_from_json(const json& j) {
  if (!j.is_object()) throw UsageError("config must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    const auto& known = detail::known_config_keys();
    bool ok = false;
    for (const auto& k : known)
      if (k == key) {
        ok = true;
        break;
      }
    if (!ok) throw UsageError("unknown config key \"" + key + "\"");
  }
  if (!j.contains("seed")) throw UsageError("config requires a seed");

  RunConfig c;
  detail::read_key(j, "seed", c.seed);
  detail::read_key(j, "corpus", c.corpus);
  detail::read_key(j, "context.direction", c.context_direction);
  detail::read_key(j, "context.k", c.context_k);
  detail::read_key(j, "embedding.source", c.embedding_source);
  detail::read_key(j, "embedding.path", c.embedding_path);
  detail::read_key(j, "embedding.buckets_path", c.embedding_buckets_path);
  detail::read_key(j, "embedding.dim", c.embedding_dim);
  detail::read_key(j, "embedding.buckets", c.embedding_buckets);
  detail::read_key(j, "embedding.svd_alpha", c.svd_alpha);
  detail::read_key(j, "embedding.svd_sweep", c.svd_sweep);
  detail::read_key(j, "embedding.compose", c.embedding_compose);
  detail::read_key(j, "encoder.hidden", c.encoder_hidden);
  detail::read_key(j, "encoder.m", c.encoder_m);
  detail::read_key(j, "output.kind", c.output.kind);
  detail::read_key(j, "output.distance", c.output.distance);
  detail::read_key(j, "output.negatives", c.output.negatives);
  detail::read_key(j, "output.lambda1", c.output.lambda1);
  detail::read_key(j, "output.lambda2", c.output.lambda2);
  detail::read_key(j, "output.cutoffs", c.output.cutoffs);
  detail::read_key(j, "output.divisors", c.output.divisors);
  detail::read_key(j, "output.seed", c.output.seed);
  detail::read_key(j, "train.steps", c.train_steps);
  detail::read_key(j, "train.batch", c.train_batch);
  detail::read_key(j, "train.lr", c.train_lr);
  detail::read_key(j, "train.warmup", c.train_warmup);
  detail::read_key(j, "eval.perplexity", c.eval_perplexity);
  detail::read_key(j, "analysis.direct", c.analysis_direct);
  detail::read_key(j, "analysis.max_contexts", c.analysis_max_contexts);
  detail::read_key(j, "analysis.metric", c.analysis_metric);
  detail::read_key(j, "bench.layers", c.bench_layers);
  detail::read_key(j, "bench.vocab", c.bench_vocab);
  detail::read_key(j, "bench.m", c.bench_m);
  detail::read_key(j, "bench.batch", c.bench_batch);
  detail::read_key(j, "bench.reps", c.bench_reps);
  detail::read_key(j, "out", c.out);
  return c;
}

/// Every key, explicit — nlohmann objects iterate sorted, so dump() is a
/// canonical form and its hash identifies the run.
inline json resolved_json(const RunConfig& c) {
  json j;
  j["seed"] = c.seed;
  j["corpus"] = c.corpus;
  j["context.direction"] = c.context_direction;
  j["context.k"] = c.context_k;
  j["embedding.source"] = c.embedding_source;
  j["embedding.path"] = c.embedding_path;
  j["embedding.buckets_path"] = c.embedding_buckets_path;
  j["embedding.dim"] = c.embedding_dim;
  j["embedding.buckets"] = c.embedding_buckets;
  j["embedding.svd_alpha"] = c.svd_alpha;
  j["embedding.svd_sweep"] = c.svd_sweep;
  j["embedding.compose"] = c.embedding_compose;
  j["encoder.hidden"] = c.encoder_hidden;
  j["encoder.m"] = c.encoder_m;
  j["output.kind"] = c.output.kind;
  j["output.distance"] = c.output.distance;
  j["output.negatives"] = c.output.negatives;
  j["output.lambda1"] = c.output.lambda1;
  j["output.lambda2"] = c.output.lambda2;
  j["output.cutoffs"] = c.output.cutoffs;
  j["output.divisors"] = c.output.divisors;
  j["output.seed"] = c.output.seed;
  j["train.steps"] = c.train_steps;
  j["train.batch"] = c.train_batch;
  j["train.lr"] = c.train_lr;
  j["train.warmup"] = c.train_warmup;
  j["eval.perplexity"] = c.eval_perplexity;
  j["analysis.direct"] = c.analysis_direct;
  j["analysis.max_contexts"] = c.analysis_max_contexts;
  j["analysis.metric"] = c.analysis_metric;
  j["bench.layers"] = c.bench_layers;
  j["bench.vocab"] = c.bench_vocab;
  j["bench.m"] = c.bench_m;
  j["bench.batch"] = c.bench_batch;
  j["bench.reps"] = c.bench_reps;
  j["out"] = c.out;
  return j;
}

inline std::string config_hash(const RunConfig& c) {
  const std::uint64_t h = fnv1a64(resolved_json(c).dump());
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << h;
  return os.str();
}

inline json load_config_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open config file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw UsageError("config file " + path + ": " + e.what());
  }
  return j;
}

/// out/<hash>/ — created on demand; the resolved echo lands inside.
inline std::filesystem::path make_run_dir(const RunConfig& c) {
  const std::filesystem::path dir = std::filesystem::path(c.out) / config_hash(c);
  std::filesystem::create_directories(dir);
  return dir;
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UsageError("cannot write file: " + path.string());
  out << text;
}

}  // namespace lmkit
