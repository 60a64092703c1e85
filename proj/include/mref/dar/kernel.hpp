#pragma once

// Dynamic attention rebalancing over reference-image key tokens.
//
// A handful of uniformly spaced queries probe the reference keys; the summed
// probe attention ranks every reference token, min-max scaling maps the ranks
// to [0,1], and two thresholds split the tokens into amplified, neutral and
// suppressed bands. The final attention is recomputed for every query with the
// reference keys multiplied by their band weight.
//
// Everything here is a pure function of its arguments.

#include <cstddef>
#include <span>
#include <vector>

#include "mref/dar/headed_tensor.hpp"
#include "mref/dar/key_segments.hpp"

namespace mref::dar {

struct RebalanceConfig {
  double gamma = 0.15;
  std::size_t m = 64;
  double tau_high = 0.7;
  double tau_low = 0.3;
  /// Normalized score assigned to every reference token when all raw scores tie.
  double degenerate_score = 0.5;
  /// Min-max over all reference segments together, or separately per segment.
  bool joint_normalization = true;

  /// Throws ConfigError on out-of-range values.
  void validate() const;
};

struct AttentionStats {
  std::vector<double> raw_scores;         // one per reference token
  std::vector<double> normalized_scores;  // one per reference token, in [0,1]
  std::vector<double> weights;            // one per key token
};

struct RebalanceResult {
  AttentionMap attention;
  AttentionStats stats;
  std::vector<std::size_t> sampled_queries;
};

/// Uniformly spaced query indices floor(i (L_q-1) / (m-1)), de-duplicated.
std::vector<std::size_t> sample_query_indices(std::size_t n_queries, std::size_t m);

/// q.k / sqrt(d) for every (query, head, key). Optional per-key weights scale
/// the key vectors before the dot product.
LogitMap attention_logits(const HeadedTensor& queries, const HeadedTensor& keys,
                          std::span<const double> key_weights = {});

/// Row-wise softmax with max subtraction.
AttentionMap softmax_rows(const LogitMap& logits);

/// Plain scaled dot-product attention, softmax(QK^T / sqrt(d)).
AttentionMap baseline_attention(const HeadedTensor& queries, const HeadedTensor& keys);

/// Probe attention of sampled queries over the reference keys only.
AttentionMap probe_attention(const HeadedTensor& sampled_queries,
                             const HeadedTensor& reference_keys);

/// r_k: probe attention summed over sampled queries and heads.
std::vector<double> aggregate_scores(const AttentionMap& probe);

/// Min-max scaling into [0,1]; all entries become degenerate_score on a tie.
std::vector<double> normalize_minmax(std::span<const double> raw, double degenerate_score);

/// Band weights for the whole key sequence. normalized_scores lists reference
/// tokens in key order; non-reference keys get exactly 1.
std::vector<double> compute_weights(std::span<const double> normalized_scores,
                                    const RebalanceConfig& cfg,
                                    const KeySegments& segments);

/// softmax(Q (w . K)^T / sqrt(d)) over the full key sequence.
AttentionMap rebalanced_attention(const HeadedTensor& queries, const HeadedTensor& keys,
                                  std::span<const double> weights,
                                  const KeySegments& segments);

/// Full pipeline: sample, probe, aggregate, normalize, weight, recompute.
RebalanceResult rebalance(const HeadedTensor& queries, const HeadedTensor& keys,
                          const KeySegments& segments, const RebalanceConfig& cfg);

}  // namespace mref::dar
