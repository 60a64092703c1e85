#pragma once

// Brute-force reference for scaled dot-product attention. Deliberately shares
// no code with mref::dar: plain nested vectors, long double accumulation and a
// log-sum-exp softmax.

#include <cmath>
#include <cstddef>
#include <random>
#include <vector>

#include "mref/dar/headed_tensor.hpp"
#include "mref/dar/key_segments.hpp"

namespace oracle {

using Grid = std::vector<std::vector<std::vector<double>>>;  // [query][head][key]

inline Grid logits(const mref::dar::HeadedTensor& q, const mref::dar::HeadedTensor& k,
                   const std::vector<double>& key_weights = {}) {
  const std::size_t nq = q.n_tokens(), nh = q.n_heads(), nk = k.n_tokens(), d = q.head_dim();
  Grid out(nq, std::vector<std::vector<double>>(nh, std::vector<double>(nk)));
  for (std::size_t i = 0; i < nq; ++i)
    for (std::size_t h = 0; h < nh; ++h)
      for (std::size_t t = 0; t < nk; ++t) {
        long double dot = 0;
        for (std::size_t j = 0; j < d; ++j) dot += static_cast<long double>(q.at(i, h, j)) * k.at(t, h, j);
        const long double w = key_weights.empty() ? 1.0L : key_weights[t];
        out[i][h][t] = static_cast<double>(w * dot / std::sqrt(static_cast<long double>(d)));
      }
  return out;
}

inline Grid softmax(const Grid& z) {
  Grid out = z;
  for (std::size_t i = 0; i < z.size(); ++i)
    for (std::size_t h = 0; h < z[i].size(); ++h) {
      long double peak = z[i][h][0];
      for (double v : z[i][h]) peak = std::max<long double>(peak, v);
      long double lse = 0;
      for (double v : z[i][h]) lse += std::exp(static_cast<long double>(v) - peak);
      lse = peak + std::log(lse);
      for (std::size_t t = 0; t < z[i][h].size(); ++t)
        out[i][h][t] = static_cast<double>(std::exp(static_cast<long double>(z[i][h][t]) - lse));
    }
  return out;
}

/// Column sums of a probe grid.
inline std::vector<double> column_sums(const Grid& a) {
  std::vector<double> r(a.at(0).at(0).size(), 0.0);
  for (const auto& per_query : a)
    for (const auto& row : per_query)
      for (std::size_t t = 0; t < row.size(); ++t) r[t] += row[t];
  return r;
}

/// Mean over (query, head) rows of the attention mass landing on key positions.
inline double mass_share(const Grid& a, const std::vector<std::size_t>& positions) {
  long double total = 0;
  std::size_t rows = 0;
  for (const auto& per_query : a)
    for (const auto& row : per_query) {
      for (std::size_t p : positions) total += row[p];
      ++rows;
    }
  return static_cast<double>(total / rows);
}

}  // namespace oracle

namespace gen {

inline mref::dar::HeadedTensor tensor(std::mt19937_64& rng, std::size_t tokens, std::size_t heads,
                                      std::size_t dim, double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, scale);
  std::vector<double> data(tokens * heads * dim);
  for (double& v : data) v = normal(rng);
  return mref::dar::HeadedTensor({tokens, heads, dim}, std::move(data));
}

inline std::size_t between(std::mt19937_64& rng, std::size_t lo, std::size_t hi) {
  return lo + static_cast<std::size_t>(rng() % (hi - lo + 1));
}

/// Random layout: optional text prefix, 1-3 reference slices, optional noise tail.
inline mref::dar::KeySegments segments(std::mt19937_64& rng) {
  using mref::dar::Segment;
  using mref::dar::SegmentKind;
  std::vector<Segment> segs;
  std::size_t cursor = 0;
  auto push = [&](SegmentKind kind, std::size_t idx, std::size_t len) {
    segs.push_back({kind, idx, cursor, len});
    cursor += len;
  };
  if (rng() % 2) push(SegmentKind::Text, 0, between(rng, 1, 4));
  const std::size_t refs = between(rng, 1, 3);
  for (std::size_t r = 0; r < refs; ++r) push(SegmentKind::Reference, r, between(rng, 2, 8));
  if (rng() % 2) push(SegmentKind::Noise, 0, between(rng, 1, 6));
  return mref::dar::KeySegments(std::move(segs));
}

}  // namespace gen
