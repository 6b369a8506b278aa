// Command-line front end: train / eval / analyze / bench / embed-svd / pairs.
//
// Every command resolves a full config (JSON file keys overridden by flags),
// echoes it as resolved_config.json inside a run directory named by the
// config hash, and writes its artifacts there. Exit codes: 0 success,
// 2 usage error, 3 contract violation, 4 numeric failure.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "lmkit/analysis.hpp"
#include "lmkit/bench.hpp"
#include "lmkit/checkpoint.hpp"
#include "lmkit/config.hpp"
#include "lmkit/reports.hpp"
#include "lmkit/train.hpp"

namespace {

using lmkit::json;

// Registers options on subcommands and remembers which dotted config key
// each one overrides; only flags the user actually passed reach the config.
class FlagMap {
 public:
  template <class T>
  void opt(CLI::App* cmd, const std::string& names, const char* key, T& storage,
           const std::string& desc) {
    auto* o = cmd->add_option(names, storage, desc);
    if constexpr (std::is_same_v<T, std::vector<std::string>> ||
                  std::is_same_v<T, std::vector<std::size_t>>) {
      o->delimiter(',');
    }
    appliers_.push_back([o, key, &storage](json& j) {
      if (o->count() > 0) j[key] = storage;
    });
  }

  void flag(CLI::App* cmd, const std::string& names, const char* key, bool& storage,
            const std::string& desc) {
    auto* o = cmd->add_flag(names, storage, desc);
    appliers_.push_back([o, key, &storage](json& j) {
      if (o->count() > 0) j[key] = storage;
    });
  }

  json overrides() const {
    json j = json::object();
    for (const auto& f : appliers_) f(j);
    return j;
  }

 private:
  std::vector<std::function<void(json&)>> appliers_;
};

// One storage slot per flag, shared across subcommands (only the parsed
// subcommand's options carry counts).
struct FlagStore {
  std::string config_path;
  std::uint64_t seed = 0;
  std::string corpus, out, direction;
  std::size_t window = 0;
  std::string source, vectors, buckets_file;
  std::size_t dim = 0, hash_buckets = 0;
  double alpha = 0.0;
  bool sweep = false, compose = true;
  std::size_t hidden = 0, encoder_m = 0;
  std::string kind, distance;
  std::size_t negatives = 0;
  double lambda1 = 0.0, lambda2 = 0.0;
  std::vector<std::size_t> cutoffs, divisors;
  std::uint64_t output_seed = 0;
  std::size_t steps = 0, batch = 0, warmup = 0;
  double lr = 0.0;
  std::string checkpoint;
  bool perplexity = false, direct = true;
  std::size_t max_contexts = 0;
  std::string metric;
  std::vector<std::string> bench_layers;
  std::vector<std::size_t> bench_vocab;
  std::size_t bench_m = 0, bench_batch = 0, bench_reps = 0;
};

struct Command {
  CLI::App* app = nullptr;
  FlagMap flags;
};

void add_common(Command& c, FlagStore& s) {
  c.app->add_option("--config", s.config_path, "JSON config file (flags override its keys)");
  c.flags.opt(c.app, "--seed", "seed", s.seed, "master RNG seed (required)");
  c.flags.opt(c.app, "--out", "out", s.out, "artifact root directory");
}

void add_corpus(Command& c, FlagStore& s) {
  c.flags.opt(c.app, "--corpus", "corpus", s.corpus, "corpus file, one document per line");
  c.flags.opt(c.app, "--direction", "context.direction", s.direction,
              "context side: forward | backward");
  c.flags.opt(c.app, "--window", "context.k", s.window, "context window length");
}

void add_model(Command& c, FlagStore& s) {
  c.flags.opt(c.app, "--source", "embedding.source", s.source,
              "input embeddings: file | svd | random");
  c.flags.opt(c.app, "--vectors", "embedding.path", s.vectors, "text vector file");
  c.flags.opt(c.app, "--buckets-file", "embedding.buckets_path", s.buckets_file,
              "binary subword-bucket file");
  c.flags.opt(c.app, "--dim", "embedding.dim", s.dim, "embedding dimension (svd/random)");
  c.flags.opt(c.app, "--hash-buckets", "embedding.buckets", s.hash_buckets,
              "subword hash bucket count");
  c.flags.flag(c.app, "--compose,!--no-compose", "embedding.compose", s.compose,
               "blend word rows with subword n-grams");
  c.flags.opt(c.app, "--hidden", "encoder.hidden", s.hidden, "encoder hidden width");
  c.flags.opt(c.app, "--encoder-m", "encoder.m", s.encoder_m,
              "context vector dimension (0 = embedding dim)");
  c.flags.opt(c.app, "--kind", "output.kind", s.kind,
              "output layer: softmax | sampled | adaptive | semfit");
  c.flags.opt(c.app, "--distance", "output.distance", s.distance,
              "semfit distance: l2 | cosine | nllvmf");
  c.flags.opt(c.app, "--negatives", "output.negatives", s.negatives,
              "sampled softmax negatives per batch");
  c.flags.opt(c.app, "--lambda1", "output.lambda1", s.lambda1, "vMF norm regularizer");
  c.flags.opt(c.app, "--lambda2", "output.lambda2", s.lambda2, "vMF dot-term weight");
  c.flags.opt(c.app, "--cutoffs", "output.cutoffs", s.cutoffs,
              "adaptive cluster boundaries (last = V)");
  c.flags.opt(c.app, "--divisors", "output.divisors", s.divisors,
              "adaptive per-cluster projection divisors");
  c.flags.opt(c.app, "--output-seed", "output.seed", s.output_seed,
              "output layer init seed");
}

json resolve_config_json(const FlagStore& s, const Command& c) {
  json file = s.config_path.empty() ? json::object() : lmkit::load_config_file(s.config_path);
  file.update(c.flags.overrides());
  return file;
}

std::filesystem::path open_run_dir(const lmkit::RunConfig& cfg) {
  const auto dir = lmkit::make_run_dir(cfg);
  lmkit::write_text_file(dir / "resolved_config.json", lmkit::resolved_json(cfg).dump(2) + "\n");
  return dir;
}

lmkit::DecodeMetric parse_metric(const std::string& name) {
  if (name == "cosine") return lmkit::DecodeMetric::Cosine;
  if (name == "l2") return lmkit::DecodeMetric::L2;
  throw lmkit::UsageError("analysis.metric must be \"cosine\" or \"l2\"");
}

// Dense contexts x vocab matrices back the analyses; past this entry count
// the corpus has to be sampled down first.
constexpr std::size_t kMaxDenseEntries = 32u * 1024 * 1024;

lmkit::ConditionalProbMatrix dense_conditional(const lmkit::RunAssets& a) {
  const std::size_t n = a.counts.pairs.context_rows.size();
  const std::size_t v = a.counts.vocab.size();
  if (n * v > kMaxDenseEntries)
    throw lmkit::ContractError(
        "analysis needs a dense contexts x vocab matrix (" + std::to_string(n) + " x " +
        std::to_string(v) + " is too large); sample the corpus down before analyzing");
  return lmkit::conditional_matrix(a.counts.pairs, a.counts.vocab);
}

lmkit::Vec context_weights(const lmkit::RunAssets& a,
                           const lmkit::ConditionalProbMatrix& pm) {
  lmkit::Vec w(pm.contexts.size(), 0.0);
  for (const auto& [key, n] : a.counts.pairs.counts)
    w[a.counts.pairs.context_index.at(key.first)] += static_cast<double>(n);
  const double total = static_cast<double>(a.counts.pairs.total);
  for (double& x : w) x /= total;
  return w;
}

std::vector<lmkit::Vec> encode_context_keys(const lmkit::RunAssets& a,
                                            const lmkit::EncoderParams& params,
                                            const std::vector<std::string>& keys) {
  std::vector<lmkit::Vec> out;
  out.reserve(keys.size());
  for (const auto& key : keys)
    out.push_back(lmkit::encode(lmkit::tokenize(key), params, a.input_table));
  return out;
}

int cmd_train(const lmkit::RunConfig& cfg) {
  lmkit::RunAssets assets = lmkit::assemble_run(cfg);
  lmkit::EncoderParams params = lmkit::init_params(cfg.seed + 1, assets.dims);
  const lmkit::TrainMetrics metrics = lmkit::train_loop(cfg, assets, params);

  const auto dir = open_run_dir(cfg);
  {
    std::ostringstream csv;
    lmkit::write_metrics_csv(csv, metrics);
    lmkit::write_text_file(dir / "metrics.csv", csv.str());
  }
  const auto ckpt_path = dir / "checkpoint.bin";
  lmkit::write_checkpoint_file(ckpt_path.string(), lmkit::snapshot(params, *assets.layer));

  const lmkit::ParamBreakdown breakdown =
      lmkit::count_params(params, *assets.layer, assets.input_table);
  json summary;
  summary["kind"] = "train";
  summary["config_hash"] = lmkit::config_hash(cfg);
  summary["vocab"] = assets.counts.vocab.size();
  summary["pairs"] = assets.pairs.size();
  summary["steps_run"] = metrics.steps_run;
  summary["initial_loss"] = metrics.initial_loss;
  summary["final_loss"] = metrics.final_loss;
  summary["encoder_params"] = breakdown.encoder_params;
  summary["output_params"] = breakdown.output_params;
  summary["fixed_embedding_params"] = breakdown.fixed_embedding_params;
  summary["aborted"] = metrics.aborted;
  if (metrics.aborted) summary["abort_reason"] = metrics.abort_reason;
  lmkit::write_text_file(dir / "train_summary.json", summary.dump(2) + "\n");

  std::cout << "run dir: " << dir.string() << "\n"
            << "vocab " << assets.counts.vocab.size() << ", pairs " << assets.pairs.size()
            << ", layer " << assets.layer->kind() << "\n"
            << "loss " << metrics.initial_loss << " -> " << metrics.final_loss << " over "
            << metrics.steps_run << " steps\n";
  if (metrics.aborted)
    throw lmkit::NumericError(metrics.abort_reason + "; last-good checkpoint written to " +
                              ckpt_path.string());
  return 0;
}

struct RestoredModel {
  lmkit::RunAssets assets;
  lmkit::EncoderParams params;
};

RestoredModel load_model(const lmkit::RunConfig& cfg, const std::string& ckpt_path) {
  RestoredModel m{lmkit::assemble_run(cfg), {}};
  m.params = lmkit::init_params(cfg.seed + 1, m.assets.dims);
  lmkit::restore(lmkit::read_checkpoint_file(ckpt_path), m.params, *m.assets.layer);
  return m;
}

int cmd_eval(const lmkit::RunConfig& cfg, const std::string& ckpt_path) {
  RestoredModel m = load_model(cfg, ckpt_path);
  const auto idx = lmkit::detail::eval_sample_indices(m.assets.pairs.size(),
                                                      cfg.seed + 0x5eed, 4096);
  std::vector<lmkit::Vec> contexts;
  std::vector<std::size_t> targets;
  contexts.reserve(idx.size());
  for (std::size_t i : idx) {
    contexts.push_back(lmkit::encode(m.assets.pairs[i].context, m.params, m.assets.input_table));
    targets.push_back(m.assets.pairs[i].target);
  }

  json out;
  out["kind"] = "eval";
  out["layer"] = m.assets.layer->kind();
  out["pairs"] = idx.size();

  const bool is_semfit = m.assets.layer->kind().rfind("semfit", 0) == 0;
  if (is_semfit && !cfg.eval_perplexity) {
    double total = 0.0;
    for (std::size_t i = 0; i < contexts.size(); ++i)
      total += m.assets.layer->loss_and_grad(contexts[i], targets[i]).loss;
    out["mean_loss"] = total / static_cast<double>(contexts.size());

    const lmkit::DMat rows = lmkit::semfit_target_matrix(m.assets);
    const lmkit::DecodeMetric metric = parse_metric(cfg.analysis_metric);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < contexts.size(); ++i)
      if (lmkit::nn_decode(contexts[i], rows, metric) == targets[i]) ++hits;
    out["decode_accuracy"] = static_cast<double>(hits) / static_cast<double>(contexts.size());
  } else {
    // Softmax family — or perplexity explicitly requested, in which case a
    // SemFit layer raises its documented contract error here.
    out["perplexity"] = lmkit::perplexity(*m.assets.layer, contexts, targets);
  }

  const auto dir = open_run_dir(cfg);
  lmkit::write_text_file(dir / "eval.json", out.dump(2) + "\n");
  std::cout << out.dump(2) << "\n";
  return 0;
}

int cmd_analyze(const lmkit::RunConfig& cfg, const std::string& ckpt_path) {
  RestoredModel m = load_model(cfg, ckpt_path);
  const lmkit::ConditionalProbMatrix pm = dense_conditional(m.assets);
  const lmkit::DMat targets = lmkit::semfit_target_matrix(m.assets);
  const lmkit::Vec weights = context_weights(m.assets, pm);
  const auto dir = open_run_dir(cfg);

  // How close the trained encoder comes to each context's optimal direction.
  const auto ctx_vecs = encode_context_keys(m.assets, m.params, pm.contexts);
  const lmkit::GlobalObjectiveReport enc_rep =
      lmkit::direction_report(pm, targets, ctx_vecs, weights);
  lmkit::write_text_file(dir / "direction_check.json", to_json(enc_rep).dump(2) + "\n");
  std::cout << to_text(enc_rep) << "\n";

  // The same check with free per-context vectors (encoder out of the loop).
  if (cfg.analysis_direct) {
    lmkit::DirectionOptions opt;
    opt.max_contexts = cfg.analysis_max_contexts;
    opt.seed = cfg.seed + 11;
    const lmkit::GlobalObjectiveReport direct_rep =
        lmkit::optimal_direction_check(pm, targets, weights, opt);
    lmkit::write_text_file(dir / "direction_check_direct.json",
                           to_json(direct_rep).dump(2) + "\n");
    std::cout << to_text(direct_rep) << "\n";
  }

  // SVD projection against random projections of the same rank.
  const std::size_t rank =
      std::min(m.assets.dims.m, std::min(pm.p.rows, pm.p.cols));
  std::vector<lmkit::ProjectionCandidate> candidates;
  candidates.push_back({"svd", lmkit::svd_projection(pm.p, rank)});
  lmkit::Rng rng(cfg.seed + 7);
  for (int i = 1; i <= 5; ++i) {
    lmkit::DMat w(pm.p.cols, rank);
    w.fill_gaussian(rng);
    candidates.push_back({"random-" + std::to_string(i), std::move(w)});
  }
  const lmkit::ProjectionStudy study = lmkit::svd_projection_study(pm.p, candidates);
  lmkit::write_text_file(dir / "projection_study.json", to_json(study).dump(2) + "\n");
  std::cout << to_text(study) << "\n";

  // Nearest-neighbor decode vs argmax, with the disagreeing contexts on disk.
  const lmkit::DecodeMetric metric = parse_metric(cfg.analysis_metric);
  const lmkit::DecodeReport decode = lmkit::decode_agreement(pm.p, targets, metric);
  lmkit::write_text_file(dir / "decode_agreement.json",
                         to_json(decode, pm.contexts, m.assets.counts.vocab.words).dump(2) +
                             "\n");
  {
    std::ofstream tsv(dir / "disagreements.tsv", std::ios::binary);
    lmkit::write_disagreements_tsv(tsv, decode, pm.contexts, m.assets.counts.vocab.words);
  }
  std::cout << to_text(decode, pm.contexts, m.assets.counts.vocab.words) << "\n";

  std::cout << "run dir: " << dir.string() << "\n";
  return 0;
}

int cmd_bench(const lmkit::RunConfig& cfg) {
  lmkit::SweepConfig sc;
  sc.layers = cfg.bench_layers;
  sc.vocab_sizes = cfg.bench_vocab;
  sc.m = cfg.bench_m;
  sc.batch = cfg.bench_batch;
  sc.reps = cfg.bench_reps;
  sc.negatives = cfg.output.negatives;
  sc.distance = cfg.output.distance;
  sc.seed = cfg.seed;

  const std::vector<lmkit::BenchRecord> records = lmkit::vocab_sweep(sc);
  const auto dir = open_run_dir(cfg);
  {
    std::ostringstream csv;
    lmkit::write_sweep_csv(csv, records);
    lmkit::write_text_file(dir / "bench.csv", csv.str());
    std::cout << csv.str();
  }
  lmkit::write_text_file(dir / "bench_summary.json",
                         lmkit::sweep_summary_json(sc, records).dump(2) + "\n");
  std::cout << "run dir: " << dir.string() << "\n";
  return 0;
}

int cmd_embed_svd(const lmkit::RunConfig& cfg) {
  if (cfg.corpus.empty()) throw lmkit::UsageError("config requires a corpus path");
  const lmkit::CorpusCounts counts =
      lmkit::count_corpus_file(cfg.corpus, cfg.context_spec());
  if (counts.vocab.size() > lmkit::detail::kSvdMaxVocab ||
      counts.pairs.context_rows.size() > lmkit::detail::kSvdMaxContexts)
    throw lmkit::ContractError(
        "corpus too large for dense SVD (vocab <= " +
        std::to_string(lmkit::detail::kSvdMaxVocab) + ", contexts <= " +
        std::to_string(lmkit::detail::kSvdMaxContexts) + "); sample the corpus down");
  const lmkit::ConditionalProbMatrix pm =
      lmkit::conditional_matrix(counts.pairs, counts.vocab);
  const std::size_t dim =
      std::min(cfg.embedding_dim, std::min(pm.p.rows, pm.p.cols));

  std::vector<double> alphas =
      cfg.svd_sweep ? std::vector<double>{0.0, 0.5, 1.0} : std::vector<double>{cfg.svd_alpha};
  const auto dir = open_run_dir(cfg);
  json out;
  out["kind"] = "embed_svd";
  out["vocab"] = counts.vocab.size();
  out["contexts"] = pm.contexts.size();
  out["dim"] = dim;
  out["results"] = json::array();
  for (double alpha : alphas) {
    const lmkit::SvdTrainResult r = lmkit::train_svd_embedding(
        pm.p, counts.vocab.words, dim, alpha, cfg.embedding_buckets, cfg.seed);
    std::ostringstream name;
    name << "embeddings";
    if (alphas.size() > 1) name << "_a" << alpha;
    const auto path = dir / (name.str() + ".txt");
    const auto bucket_path = dir / (name.str() + ".buckets");
    lmkit::save_text_embeddings_file(path.string(), r.table);
    // Companion subword buckets so file-source runs can represent boundary
    // and out-of-vocabulary tokens (text vectors alone load zero buckets).
    lmkit::save_buckets_file(bucket_path.string(), r.table);
    json item;
    item["alpha"] = alpha;
    item["rank"] = r.rank;
    item["rank_limited"] = r.rank_limited;
    item["file"] = path.string();
    item["buckets_file"] = bucket_path.string();
    out["results"].push_back(item);
  }
  lmkit::write_text_file(dir / "embed_svd.json", out.dump(2) + "\n");
  std::cout << out.dump(2) << "\n";
  return 0;
}

int cmd_pairs(const lmkit::RunConfig& cfg) {
  if (cfg.corpus.empty()) throw lmkit::UsageError("config requires a corpus path");
  const lmkit::CorpusCounts counts =
      lmkit::count_corpus_file(cfg.corpus, cfg.context_spec());
  const auto dir = open_run_dir(cfg);
  const auto path = dir / "pairs.tsv";
  {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw lmkit::UsageError("cannot write file: " + path.string());
    lmkit::write_pairs_tsv(out, counts.pairs, counts.vocab);
  }
  std::cout << "vocab " << counts.vocab.size() << ", distinct contexts "
            << counts.pairs.context_rows.size() << ", total pairs " << counts.pairs.total
            << "\n"
            << "pairs tsv: " << path.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"language-model output layer toolkit"};
  app.require_subcommand(1);
  FlagStore s;

  Command train{app.add_subcommand("train", "train an encoder with a chosen output layer")};
  add_common(train, s);
  add_corpus(train, s);
  add_model(train, s);
  train.flags.opt(train.app, "--steps", "train.steps", s.steps, "SGD steps");
  train.flags.opt(train.app, "--batch", "train.batch", s.batch, "batch size");
  train.flags.opt(train.app, "--lr", "train.lr", s.lr, "base learning rate");
  train.flags.opt(train.app, "--warmup", "train.warmup", s.warmup, "linear warmup steps");

  Command eval{app.add_subcommand("eval", "evaluate a checkpoint on its corpus")};
  add_common(eval, s);
  add_corpus(eval, s);
  add_model(eval, s);
  eval.app->add_option("--checkpoint", s.checkpoint, "checkpoint file")->required();
  eval.flags.flag(eval.app, "--perplexity", "eval.perplexity", s.perplexity,
                  "force perplexity (contract error on SemFit)");
  eval.flags.opt(eval.app, "--metric", "analysis.metric", s.metric,
                 "decode metric: cosine | l2");

  Command analyze{app.add_subcommand("analyze", "direction / projection / decode reports")};
  add_common(analyze, s);
  add_corpus(analyze, s);
  add_model(analyze, s);
  analyze.app->add_option("--checkpoint", s.checkpoint, "checkpoint file")->required();
  analyze.flags.flag(analyze.app, "--direct,!--no-direct", "analysis.direct", s.direct,
                     "also optimize per-context directions directly");
  analyze.flags.opt(analyze.app, "--max-contexts", "analysis.max_contexts", s.max_contexts,
                    "direct-optimization context cap");
  analyze.flags.opt(analyze.app, "--metric", "analysis.metric", s.metric,
                    "decode metric: cosine | l2");

  Command bench{app.add_subcommand("bench", "vocabulary scaling sweep")};
  add_common(bench, s);
  bench.flags.opt(bench.app, "--layers", "bench.layers", s.bench_layers,
                  "comma-separated layer kinds");
  bench.flags.opt(bench.app, "--vocab", "bench.vocab", s.bench_vocab,
                  "comma-separated vocabulary sizes");
  bench.flags.opt(bench.app, "--m", "bench.m", s.bench_m, "context dimension");
  bench.flags.opt(bench.app, "--batch", "bench.batch", s.bench_batch, "batch size");
  bench.flags.opt(bench.app, "--reps", "bench.reps", s.bench_reps, "timed repetitions");
  bench.flags.opt(bench.app, "--negatives", "output.negatives", s.negatives,
                  "sampled softmax negatives");
  bench.flags.opt(bench.app, "--distance", "output.distance", s.distance,
                  "semfit distance for the sweep");

  Command embed{app.add_subcommand("embed-svd", "train SVD word vectors from a corpus")};
  add_common(embed, s);
  add_corpus(embed, s);
  embed.flags.opt(embed.app, "--dim", "embedding.dim", s.dim, "vector dimension");
  embed.flags.opt(embed.app, "--hash-buckets", "embedding.buckets", s.hash_buckets,
                  "subword hash bucket count for the companion bucket file");
  embed.flags.opt(embed.app, "--alpha", "embedding.svd_alpha", s.alpha,
                  "singular-value weighting exponent");
  embed.flags.flag(embed.app, "--sweep,!--no-sweep", "embedding.svd_sweep", s.sweep,
                   "emit vectors for alpha in {0, 0.5, 1}");

  Command pairs{app.add_subcommand("pairs", "export context/target pair counts as TSV")};
  add_common(pairs, s);
  add_corpus(pairs, s);

  try {
    app.parse(argc, argv);

    const Command* cmd = nullptr;
    for (const Command* c : {&train, &eval, &analyze, &bench, &embed, &pairs})
      if (c->app->parsed()) cmd = c;
    if (cmd == nullptr) return 2;  // unreachable: require_subcommand(1)

    const lmkit::RunConfig cfg = lmkit::config_from_json(resolve_config_json(s, *cmd));
    if (train.app->parsed()) return cmd_train(cfg);
    if (eval.app->parsed()) return cmd_eval(cfg, s.checkpoint);
    if (analyze.app->parsed()) return cmd_analyze(cfg, s.checkpoint);
    if (bench.app->parsed()) return cmd_bench(cfg);
    if (embed.app->parsed()) return cmd_embed_svd(cfg);
    return cmd_pairs(cfg);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;  // help/version exit clean; bad flags are usage errors
  } catch (const lmkit::UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const lmkit::ContractError& e) {
    std::cerr << "contract error: " << e.what() << "\n";
    return 3;
  } catch (const lmkit::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 4;
  }
}
