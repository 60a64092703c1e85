#include "mref/dar/kernel.hpp"

#include <algorithm>
#include <cmath>

#include "mref/errors.hpp"

namespace mref::dar {

namespace {

bool in_unit_interval(double x) { return x >= 0.0 && x <= 1.0; }

void check_compatible(const HeadedTensor& queries, const HeadedTensor& keys) {
  if (queries.n_heads() != keys.n_heads() || queries.head_dim() != keys.head_dim()) {
    throw ShapeError("query tensor " + queries.shape().to_string() +
                     " is incompatible with key tensor " + keys.shape().to_string() +
                     " (heads and head_dim must match)");
  }
}

}  // namespace

void RebalanceConfig::validate() const {
  if (!in_unit_interval(gamma)) {
    throw ConfigError("gamma must lie in [0,1], got " + std::to_string(gamma));
  }
  if (m < 2) {
    throw ConfigError("m must be at least 2, got " + std::to_string(m));
  }
  if (!in_unit_interval(tau_low) || !in_unit_interval(tau_high) || !(tau_low < tau_high)) {
    throw ConfigError("thresholds must satisfy 0 <= tau_low < tau_high <= 1, got tau_low=" +
                      std::to_string(tau_low) + " tau_high=" + std::to_string(tau_high));
  }
  if (!in_unit_interval(degenerate_score)) {
    throw ConfigError("degenerate_score must lie in [0,1], got " +
                      std::to_string(degenerate_score));
  }
}

std::vector<std::size_t> sample_query_indices(std::size_t n_queries, std::size_t m) {
  if (n_queries == 0) {
    throw ShapeError("cannot sample from zero query tokens");
  }
  if (n_queries == 1) {
    return {0};
  }
  if (m < 2) {
    throw ConfigError("m must be at least 2, got " + std::to_string(m));
  }
  // When m exceeds the query count the floor formula repeats indices; keep
  // each query once so it is not double-counted in the scores.
  std::vector<std::size_t> out;
  out.reserve(std::min(m, n_queries));
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t idx = i * (n_queries - 1) / (m - 1);
    if (out.empty() || out.back() != idx) out.push_back(idx);
  }
  return out;
}

LogitMap attention_logits(const HeadedTensor& queries, const HeadedTensor& keys,
                          std::span<const double> key_weights) {
  check_compatible(queries, keys);
  if (!key_weights.empty() && key_weights.size() != keys.n_tokens()) {
    throw ShapeError("weight vector has " + std::to_string(key_weights.size()) +
                     " entries, keys have " + std::to_string(keys.n_tokens()) + " tokens");
  }
  const std::size_t n_q = queries.n_tokens();
  const std::size_t n_h = queries.n_heads();
  const std::size_t n_k = keys.n_tokens();
  const std::size_t d = queries.head_dim();
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));

  LogitMap logits(n_q, n_h, n_k);
  std::vector<double> scaled_key(d);
  for (std::size_t h = 0; h < n_h; ++h) {
    for (std::size_t k = 0; k < n_k; ++k) {
      const auto key = keys.vec(k, h);
      const double w = key_weights.empty() ? 1.0 : key_weights[k];
      for (std::size_t j = 0; j < d; ++j) scaled_key[j] = w * key[j];
      for (std::size_t i = 0; i < n_q; ++i) {
        const auto q = queries.vec(i, h);
        double dot = 0.0;
        for (std::size_t j = 0; j < d; ++j) dot += q[j] * scaled_key[j];
        logits.at(i, h, k) = dot * scale;
      }
    }
  }
  return logits;
}

AttentionMap softmax_rows(const LogitMap& logits) {
  AttentionMap out(logits.n_queries(), logits.n_heads(), logits.n_keys());
  for (std::size_t i = 0; i < logits.n_queries(); ++i) {
    for (std::size_t h = 0; h < logits.n_heads(); ++h) {
      const auto in = logits.row(i, h);
      auto row = out.row(i, h);
      const double peak = *std::max_element(in.begin(), in.end());
      double total = 0.0;
      for (std::size_t k = 0; k < in.size(); ++k) {
        row[k] = std::exp(in[k] - peak);
        total += row[k];
      }
      for (double& v : row) v /= total;
    }
  }
  return out;
}

AttentionMap baseline_attention(const HeadedTensor& queries, const HeadedTensor& keys) {
  return softmax_rows(attention_logits(queries, keys));
}

AttentionMap probe_attention(const HeadedTensor& sampled_queries,
                             const HeadedTensor& reference_keys) {
  return softmax_rows(attention_logits(sampled_queries, reference_keys));
}

std::vector<double> aggregate_scores(const AttentionMap& probe) {
  std::vector<double> r(probe.n_keys(), 0.0);
  for (std::size_t i = 0; i < probe.n_queries(); ++i) {
    for (std::size_t h = 0; h < probe.n_heads(); ++h) {
      const auto row = probe.row(i, h);
      for (std::size_t k = 0; k < row.size(); ++k) r[k] += row[k];
    }
  }
  return r;
}

std::vector<double> normalize_minmax(std::span<const double> raw, double degenerate_score) {
  if (raw.empty()) {
    throw ShapeError("cannot normalize an empty score vector");
  }
  const auto [lo_it, hi_it] = std::minmax_element(raw.begin(), raw.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  if (hi == lo) {
    return std::vector<double>(raw.size(), degenerate_score);
  }
  std::vector<double> out(raw.size());
  for (std::size_t k = 0; k < raw.size(); ++k) out[k] = (raw[k] - lo) / (hi - lo);
  return out;
}

std::vector<double> compute_weights(std::span<const double> normalized_scores,
                                    const RebalanceConfig& cfg, const KeySegments& segments) {
  cfg.validate();
  const auto positions = segments.reference_positions();
  if (normalized_scores.size() != positions.size()) {
    throw ShapeError("got " + std::to_string(normalized_scores.size()) +
                     " normalized scores for " + std::to_string(positions.size()) +
                     " reference tokens");
  }
  std::vector<double> w(segments.total_tokens(), 1.0);
  for (std::size_t k = 0; k < positions.size(); ++k) {
    const double s = normalized_scores[k];
    // Both thresholds are inclusive.
    if (s >= cfg.tau_high) {
      w[positions[k]] = 1.0 + cfg.gamma;
    } else if (s <= cfg.tau_low) {
      w[positions[k]] = 1.0 - cfg.gamma;
    }
  }
  return w;
}

AttentionMap rebalanced_attention(const HeadedTensor& queries, const HeadedTensor& keys,
                                  std::span<const double> weights,
                                  const KeySegments& segments) {
  segments.check_covers(keys.n_tokens());
  if (weights.size() != keys.n_tokens()) {
    throw ShapeError("weight vector has " + std::to_string(weights.size()) +
                     " entries, keys have " + std::to_string(keys.n_tokens()) + " tokens");
  }
  return softmax_rows(attention_logits(queries, keys, weights));
}

RebalanceResult rebalance(const HeadedTensor& queries, const HeadedTensor& keys,
                          const KeySegments& segments, const RebalanceConfig& cfg) {
  cfg.validate();
  check_compatible(queries, keys);
  segments.check_covers(keys.n_tokens());
  segments.check_has_reference();

  RebalanceResult result;
  result.sampled_queries = sample_query_indices(queries.n_tokens(), cfg.m);
  const HeadedTensor sampled = queries.gather(result.sampled_queries);
  const HeadedTensor reference_keys = keys.gather(segments.reference_positions());

  AttentionStats& stats = result.stats;
  stats.raw_scores = aggregate_scores(probe_attention(sampled, reference_keys));
  if (cfg.joint_normalization) {
    stats.normalized_scores = normalize_minmax(stats.raw_scores, cfg.degenerate_score);
  } else {
    stats.normalized_scores.reserve(stats.raw_scores.size());
    std::size_t offset = 0;
    for (const Segment& seg : segments.reference_segments()) {
      const auto slice = std::span<const double>(stats.raw_scores).subspan(offset, seg.length);
      const auto part = normalize_minmax(slice, cfg.degenerate_score);
      stats.normalized_scores.insert(stats.normalized_scores.end(), part.begin(), part.end());
      offset += seg.length;
    }
  }
  stats.weights = compute_weights(stats.normalized_scores, cfg, segments);
  result.attention = rebalanced_attention(queries, keys, stats.weights, segments);
  return result;
}

}  // namespace mref::dar
