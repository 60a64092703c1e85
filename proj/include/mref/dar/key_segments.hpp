#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <json.hpp>

namespace mref::dar {

enum class SegmentKind { Text, Reference, Noise };

struct Segment {
  SegmentKind kind = SegmentKind::Text;
  /// Which reference image this slice encodes; meaningful for Reference only.
  std::size_t ref_index = 0;
  std::size_t start = 0;
  std::size_t length = 0;

  bool operator==(const Segment&) const = default;
};

/// Labelled partition of a key sequence into text, reference-image and noise
/// slices. Tells the kernel which keys form K_ref.
class KeySegments {
public:
  KeySegments() = default;
  explicit KeySegments(std::vector<Segment> segments);

  const std::vector<Segment>& segments() const noexcept { return segments_; }

  /// Throws ShapeError unless the segments tile [0, n_tokens) in order.
  void check_covers(std::size_t n_tokens) const;

  /// Throws ShapeError when no reference segment exists.
  void check_has_reference() const;

  std::size_t total_tokens() const noexcept;

  /// Key positions of all reference tokens, ascending.
  std::vector<std::size_t> reference_positions() const;

  /// Reference segments in key order.
  std::vector<Segment> reference_segments() const;

  std::size_t reference_token_count() const noexcept;

  bool operator==(const KeySegments&) const = default;

private:
  std::vector<Segment> segments_;
};

const char* to_string(SegmentKind kind) noexcept;

// JSON sidecar: {"segments":[{"label":"reference","index":0,"start":4,"length":16}, ...]}
nlohmann::json to_json(const KeySegments& segments);
KeySegments key_segments_from_json(const nlohmann::json& j);

}  // namespace mref::dar
