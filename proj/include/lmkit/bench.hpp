#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <exception>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "lmkit/common.hpp"
#include "lmkit/encoder.hpp"
#include "lmkit/factory.hpp"
#include "lmkit/output_layer.hpp"
#include "lmkit/semfit_layers.hpp"
#include "lmkit/softmax_layers.hpp"

namespace lmkit {

// ---------------------------------------------------------------------------
// Parameter accounting

/// Exact integer parameter counts per component. Fixed embedding tables are
/// reported separately and never counted as trainable.
struct ParamBreakdown {
  std::size_t encoder_params = 0;
  std::size_t output_params = 0;           // trainable
  std::size_t fixed_embedding_params = 0;  // word rows + hash buckets

  std::size_t total_trainable() const { return encoder_params + output_params; }
};

inline ParamBreakdown count_params(const EncoderParams& encoder, const OutputLayer& output,
                                   const EmbeddingTable& input_table) {
  ParamBreakdown b;
  b.encoder_params = encoder.param_count();
  b.output_params = output.trainable_param_count();
  b.fixed_embedding_params = input_table.words.size() + input_table.buckets.size();
  return b;
}

// ---------------------------------------------------------------------------
// Records and timing

struct BenchRecord {
  std::string layer;
  std::size_t v = 0;
  std::size_t m = 0;
  std::size_t batch = 0;
  std::uint64_t median_ns = 0;
  std::uint64_t flops = 0;
  std::size_t trainable_params = 0;
  std::uint64_t grad_payload_bytes = 0;
  std::uint64_t peak_bytes = 0;
  std::string error;  // nonempty: the cell failed and the numbers are void
};

/// Deterministic resident-footprint estimate by allocation accounting of
/// what the layer owns and what one batch touches: parameter storage
/// (float64), fixed target tables (float32), per-call logits scratch, the
/// batch of context vectors, and one dc buffer. Deliberately not OS
/// introspection.
inline std::uint64_t resident_bytes_estimate(const OutputLayer& layer, std::size_t batch) {
  const std::uint64_t v = layer.vocab_size();
  const std::uint64_t m = layer.dim();
  std::uint64_t bytes = 8ull * layer.trainable_param_count();  // owned weights
  if (layer.kind().rfind("semfit", 0) == 0) bytes += 4ull * v * m;  // fixed targets
  if (layer.kind() == "softmax" || layer.kind() == "sampled") bytes += 8ull * v;  // logits
  if (layer.kind() == "adaptive") bytes += 8ull * v;  // head + largest cluster bound
  bytes += 8ull * batch * m;  // pre-generated inputs
  bytes += 8ull * m;          // dc
  return bytes;
}

/// Median wall time of `reps` timed passes over a pre-generated batch,
/// after two untimed warmup passes. Only loss_and_grad is inside the timed
/// region; negative sampling, input generation and gradient buffers are all
/// prepared up front.
inline BenchRecord time_output_layer(OutputLayer& layer, std::size_t batch, std::size_t reps,
                                     std::uint64_t seed = 9001) {
  if (reps < 5) throw ContractError("timing needs at least 5 reps");
  if (batch == 0) throw ContractError("timing needs a nonempty batch");

  BenchRecord rec;
  rec.layer = layer.kind();
  rec.v = layer.vocab_size();
  rec.m = layer.dim();
  rec.batch = batch;
  rec.flops = layer.flop_count(batch);
  rec.trainable_params = layer.trainable_param_count();
  rec.grad_payload_bytes = layer.grad_payload_bytes(batch);
  rec.peak_bytes = resident_bytes_estimate(layer, batch);

  Rng rng(seed);
  if (auto* sampled = dynamic_cast<SampledSoftmax*>(&layer)) sampled->begin_batch(rng);

  std::vector<Vec> inputs(batch, Vec(layer.dim()));
  std::vector<std::size_t> targets(batch);
  for (std::size_t i = 0; i < batch; ++i) {
    for (auto& x : inputs[i]) x = rng.gaussian();
    targets[i] = static_cast<std::size_t>(rng.below(layer.vocab_size()));
  }

  volatile double sink = 0.0;  // defeat dead-code elimination
  auto pass = [&]() {
    double acc = 0.0;
    for (std::size_t i = 0; i < batch; ++i)
      acc += layer.loss_and_grad(inputs[i], targets[i]).loss;
    sink = sink + acc;
  };

  pass();
  pass();  // warmups

  std::vector<std::uint64_t> times(reps);
  for (std::size_t r = 0; r < reps; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    pass();
    const auto t1 = std::chrono::steady_clock::now();
    times[r] = static_cast<std::uint64_t>(
        std::chrono::duration_cast<std::chrono::nanoseconds>(t1 - t0).count());
  }
  std::nth_element(times.begin(), times.begin() + static_cast<std::ptrdiff_t>(reps / 2),
                   times.end());
  rec.median_ns = std::max<std::uint64_t>(1, times[reps / 2]);
  return rec;
}

// ---------------------------------------------------------------------------
// Vocabulary sweep

struct SweepConfig {
  std::vector<std::string> layers{"semfit", "adaptive", "softmax"};
  std::vector<std::size_t> vocab_sizes{40'000, 200'000, 1'000'000};
  std::size_t m = 300;
  std::size_t batch = 16;
  std::size_t reps = 5;
  std::size_t negatives = 64;       // sampled cells
  std::string distance = "cosine";  // semfit cells
  std::uint64_t seed = 1;

  nlohmann::json to_json() const {
    return {{"layers", layers},   {"vocab_sizes", vocab_sizes}, {"m", m},
            {"batch", batch},     {"reps", reps},               {"negatives", negatives},
            {"distance", distance}, {"seed", seed}};
  }
};

/// One record per (layer, V) cell, row-major over layers then vocabularies.
/// A failing cell carries its error message and the sweep continues.
inline std::vector<BenchRecord> vocab_sweep(const SweepConfig& cfg) {
  if (cfg.layers.empty() || cfg.vocab_sizes.empty())
    throw ContractError("sweep grid must name at least one layer and one vocabulary size");
  std::vector<BenchRecord> records;
  for (const auto& kind : cfg.layers) {
    for (const std::size_t v : cfg.vocab_sizes) {
      OutputSpec spec;
      spec.kind = kind;
      spec.distance = cfg.distance;
      spec.v = v;
      spec.m = cfg.m;
      spec.seed = cfg.seed;
      spec.negatives = cfg.negatives;
      try {
        auto layer = make_output_layer(spec);
        records.push_back(time_output_layer(*layer, cfg.batch, cfg.reps, cfg.seed));
      } catch (const std::exception& e) {
        BenchRecord rec;
        rec.layer = kind;
        rec.v = v;
        rec.m = cfg.m;
        rec.batch = cfg.batch;
        rec.error = e.what();
        records.push_back(rec);
      }
    }
  }
  return records;
}

/// Fixed schema; a failed cell keeps the schema columns (zeros) and appends
/// its error message as one extra trailing field so downstream parsers can
/// both keep rectangular reads and spot failures.
inline void write_sweep_csv(std::ostream& out, const std::vector<BenchRecord>& records) {
  out << "layer,V,m,batch,median_ns,flops,trainable_params,grad_payload_bytes\n";
  for (const auto& r : records) {
    out << r.layer << ',' << r.v << ',' << r.m << ',' << r.batch << ',' << r.median_ns << ','
        << r.flops << ',' << r.trainable_params << ',' << r.grad_payload_bytes;
    if (!r.error.empty()) {
      std::string sanitized = r.error;
      for (auto& c : sanitized)
        if (c == ',' || c == '\n') c = ';';
      out << ',' << sanitized;
    }
    out << '\n';
  }
}

/// Machine summary: the config, a stable hash of its canonical dump, and
/// every record.
inline nlohmann::json sweep_summary_json(const SweepConfig& cfg,
                                         const std::vector<BenchRecord>& records) {
  const std::string canonical = cfg.to_json().dump();
  nlohmann::json recs = nlohmann::json::array();
  for (const auto& r : records) {
    nlohmann::json jr = {{"layer", r.layer},
                         {"V", r.v},
                         {"m", r.m},
                         {"batch", r.batch},
                         {"median_ns", r.median_ns},
                         {"flops", r.flops},
                         {"trainable_params", r.trainable_params},
                         {"grad_payload_bytes", r.grad_payload_bytes},
                         {"peak_bytes", r.peak_bytes}};
    if (!r.error.empty()) jr["error"] = r.error;
    recs.push_back(jr);
  }
  std::ostringstream hash;
  hash << std::hex << fnv1a64(canonical);
  return {{"config", cfg.to_json()}, {"config_hash", hash.str()}, {"records", recs}};
}

}  // namespace lmkit
