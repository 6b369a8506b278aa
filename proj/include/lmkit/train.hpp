#pragma once

#include <cmath>
#include <cstdint>
#include <iomanip>
#include <limits>
#include <memory>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "lmkit/checkpoint.hpp"
#include "lmkit/config.hpp"
#include "lmkit/corpus.hpp"
#include "lmkit/embedding.hpp"
#include "lmkit/encoder.hpp"
#include "lmkit/factory.hpp"
#include "lmkit/semfit_layers.hpp"
#include "lmkit/softmax_layers.hpp"
#include "lmkit/svd.hpp"

namespace lmkit {

struct TrainPair {
  std::vector<std::string> context;
  std::size_t target = 0;
};

/// Everything a run needs, derived deterministically from the config:
/// corpus statistics, the fixed input representations, encoder shape, and
/// the output head (with embedding-derived targets for SemFit).
struct RunAssets {
  CorpusCounts counts;
  std::vector<TrainPair> pairs;
  EmbeddingTable input_table;
  EncoderDims dims;
  OutputSpec resolved_output;  // v/m filled in
  std::unique_ptr<OutputLayer> layer;
};

namespace detail {

// Jacobi SVD cost grows too fast to run silently inside a training command;
// past these sizes the corpus must be sampled down first.
inline constexpr std::size_t kSvdMaxVocab = 512;
inline constexpr std::size_t kSvdMaxContexts = 4096;

inline EmbeddingTable build_input_table(const RunConfig& cfg, const CorpusCounts& counts) {
  if (cfg.embedding_source == "random") {
    EmbeddingTable t = random_embedding_table(counts.vocab.words, cfg.embedding_dim,
                                              cfg.embedding_buckets, cfg.seed);
    t.compose_in_vocab = cfg.embedding_compose;
    return t;
  }
  if (cfg.embedding_source == "file") {
    if (cfg.embedding_path.empty())
      throw UsageError("embedding.source=file requires embedding.path");
    EmbeddingTable t =
        load_text_embeddings_file(cfg.embedding_path, cfg.embedding_buckets);
    if (!cfg.embedding_buckets_path.empty()) load_buckets_file(cfg.embedding_buckets_path, t);
    t.compose_in_vocab = cfg.embedding_compose;
    return t;
  }
  if (cfg.embedding_source == "svd") {
    if (counts.vocab.size() > kSvdMaxVocab ||
        counts.pairs.context_rows.size() > kSvdMaxContexts)
      throw ContractError(
          "embedding.source=svd is for small corpora (vocab <= " +
          std::to_string(kSvdMaxVocab) + ", contexts <= " + std::to_string(kSvdMaxContexts) +
          "); train vectors offline with embed-svd and switch to embedding.source=file");
    const ConditionalProbMatrix pm = conditional_matrix(counts.pairs, counts.vocab);
    const std::size_t dim =
        std::min(cfg.embedding_dim, std::min(pm.p.rows, pm.p.cols));
    // Gaussian buckets give boundary/OOV tokens nonzero input vectors;
    // embedding.compose is ignored here (trained rows stay pure).
    return train_svd_embedding(pm.p, counts.vocab.words, dim, cfg.svd_alpha,
                               cfg.embedding_buckets, cfg.seed)
        .table;
  }
  throw UsageError("unknown embedding.source \"" + cfg.embedding_source +
                   "\" (expected file, svd, or random)");
}

}  // namespace detail

inline RunAssets assemble_run(const RunConfig& cfg) {
  if (cfg.corpus.empty()) throw UsageError("config requires a corpus path");
  RunAssets a;
  const ContextSpec spec = cfg.context_spec();
  const auto lines = read_lines(cfg.corpus);
  for (const auto& line : lines)
    count_document(line, spec, a.counts.vocab, a.counts.pairs);
  if (a.counts.vocab.size() == 0) throw UsageError("corpus is empty: " + cfg.corpus);
  for (const auto& line : lines) {
    extract_pairs(tokenize(line), spec,
                  [&](const std::vector<std::string>& ctx, const std::string& target) {
                    a.pairs.push_back({ctx, *a.counts.vocab.id(target)});
                  });
  }
  if (a.pairs.empty())
    throw UsageError("corpus has no context/target pairs (every line is a single token?)");

  a.input_table = detail::build_input_table(cfg, a.counts);

  a.dims = EncoderDims{cfg.context_k, a.input_table.m, cfg.encoder_hidden,
                       cfg.encoder_m == 0 ? a.input_table.m : cfg.encoder_m};

  a.resolved_output = cfg.output;
  a.resolved_output.v = a.counts.vocab.size();
  a.resolved_output.m = a.dims.m;
  if (a.resolved_output.kind == "semfit") {
    if (a.dims.m != a.input_table.m)
      throw UsageError("semfit needs encoder.m equal to the embedding dimension (got " +
                       std::to_string(a.dims.m) + " vs " + std::to_string(a.input_table.m) +
                       ")");
    const TargetTable targets = TargetTable::from_embeddings(
        a.input_table, a.counts.vocab.words, a.resolved_output.wants_normalized_targets());
    a.layer = make_output_layer(a.resolved_output, &targets);
  } else {
    a.layer = make_output_layer(a.resolved_output);
  }
  return a;
}

/// Target rows as doubles, for the decode/direction analyses.
inline DMat semfit_target_matrix(const RunAssets& a) {
  const bool normalize = a.resolved_output.wants_normalized_targets();
  const TargetTable t = TargetTable::from_embeddings(a.input_table, a.counts.vocab.words,
                                                     normalize);
  DMat out(t.v(), t.m());
  for (std::size_t r = 0; r < t.v(); ++r) {
    const float* src = t.rows[r];
    for (std::size_t c = 0; c < t.m(); ++c) out.at(r, c) = static_cast<double>(src[c]);
  }
  return out;
}

struct TrainMetrics {
  std::vector<double> losses;  // mean batch loss per step
  std::vector<double> lrs;
  double initial_loss = 0.0;  // mean loss over the fixed eval sample
  double final_loss = 0.0;
  std::size_t steps_run = 0;
  bool aborted = false;
  std::string abort_reason;
};

namespace detail {

inline std::vector<std::size_t> eval_sample_indices(std::size_t n_pairs, std::uint64_t seed,
                                                    std::size_t cap = 512) {
  Rng rng(seed);
  const std::size_t n = std::min(n_pairs, cap);
  std::vector<std::size_t> idx(n);
  for (auto& i : idx) i = static_cast<std::size_t>(rng.below(n_pairs));
  return idx;
}

inline double mean_eval_loss(const RunAssets& a, const EncoderParams& params,
                             const std::vector<std::size_t>& idx, std::uint64_t seed) {
  // Sampled softmax draws fresh negatives per batch; pin one draw so the
  // before/after numbers share a candidate set.
  if (auto* s = dynamic_cast<SampledSoftmax*>(a.layer.get())) {
    Rng rng(seed);
    s->begin_batch(rng);
  }
  double total = 0.0;
  for (std::size_t i : idx) {
    const TrainPair& ex = a.pairs[i];
    const Vec c = encode(ex.context, params, a.input_table);
    total += a.layer->loss_and_grad(c, ex.target).loss;
  }
  return total / static_cast<double>(idx.size());
}

// Checkpoints store float32, so a state only counts as rescuable if every
// value survives the narrowing cast. Doubles can ride out a divergence to
// ~1e308 while float32 overflows at 3.4e38; snapshotting such a state would
// write inf into the "last good" checkpoint.
inline bool f32_finite(const Vec& v) {
  for (double x : v)
    if (!std::isfinite(static_cast<float>(x))) return false;
  return true;
}

inline bool all_finite(const Vec& v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

}  // namespace detail

/// Mini-batch SGD with mean-of-batch gradients. On a non-finite loss or
/// gradient the loop stops *before* applying that step's update, so the
/// parameters passed in remain the last good state.
inline TrainMetrics train_loop(const RunConfig& cfg, RunAssets& assets,
                               EncoderParams& params) {
  if (cfg.train_batch == 0) throw UsageError("train.batch must be >= 1");
  TrainMetrics m;
  const auto eval_idx =
      detail::eval_sample_indices(assets.pairs.size(), cfg.seed + 0x5eed);
  m.initial_loss = detail::mean_eval_loss(assets, params, eval_idx, cfg.seed + 1);

  Rng rng(cfg.seed + 2);
  const LrSchedule schedule{cfg.train_lr, cfg.train_warmup};
  auto* sampled = dynamic_cast<SampledSoftmax*>(assets.layer.get());
  EncoderGrads grads = EncoderGrads::zeros(assets.dims);
  Vec out_grad(assets.layer->trainable_param_count(), 0.0);
  Vec example_grad;
  ForwardTape tape;
  const double inv_b = 1.0 / static_cast<double>(cfg.train_batch);

  // Snapshot of the newest parameters that produced a finite batch loss and
  // fit in a float32 checkpoint; any abort rolls back to it.
  bool have_good = false;
  Vec good_enc, good_out;
  const auto rollback = [&] {
    if (!have_good) return;  // initialization never produced a finite loss
    params.set_flat(good_enc);
    assets.layer->set_flat_params(good_out);
  };

  for (std::size_t t = 1; t <= cfg.train_steps; ++t) {
    const double lr = schedule.lr(t);
    grads.clear();
    out_grad.assign(out_grad.size(), 0.0);
    if (sampled) sampled->begin_batch(rng);

    double batch_loss = 0.0;
    for (std::size_t b = 0; b < cfg.train_batch; ++b) {
      const TrainPair& ex = assets.pairs[rng.below(assets.pairs.size())];
      const Vec c = encode(ex.context, params, assets.input_table, &tape);
      LossGrad lg = assets.layer->loss_and_grad(c, ex.target, &example_grad);
      batch_loss += lg.loss;
      for (double& g : lg.dc) g *= inv_b;
      encoder_backward(params, tape, lg.dc, grads);
      axpy(inv_b, example_grad, out_grad);
    }
    batch_loss *= inv_b;

    if (!std::isfinite(batch_loss)) {
      rollback();
      m.aborted = true;
      m.abort_reason = "non-finite loss at step " + std::to_string(t);
      break;
    }
    {
      Vec enc_flat = params.flat();
      Vec out_flat = assets.layer->flat_params();
      if (detail::f32_finite(enc_flat) && detail::f32_finite(out_flat)) {
        have_good = true;
        good_enc = std::move(enc_flat);
        good_out = std::move(out_flat);
      }
    }

    if (!detail::all_finite(out_grad)) {
      rollback();
      m.aborted = true;
      m.abort_reason = "non-finite output-layer gradient at step " + std::to_string(t);
      break;
    }
    try {
      sgd_step(params, grads, lr);  // validates encoder grads before mutating
    } catch (const NumericError& e) {
      rollback();
      m.aborted = true;
      m.abort_reason = std::string(e.what()) + " at step " + std::to_string(t);
      break;
    }
    assets.layer->apply_grad(out_grad, lr);

    m.losses.push_back(batch_loss);
    m.lrs.push_back(lr);
    m.steps_run = t;
  }

  m.final_loss = detail::mean_eval_loss(assets, params, eval_idx, cfg.seed + 1);
  return m;
}

inline void write_metrics_csv(std::ostream& out, const TrainMetrics& m) {
  out << "step,loss,lr\n";
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (std::size_t i = 0; i < m.losses.size(); ++i)
    out << (i + 1) << ',' << m.losses[i] << ',' << m.lrs[i] << '\n';
}

}  // namespace lmkit
