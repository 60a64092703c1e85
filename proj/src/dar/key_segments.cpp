#include "mref/dar/key_segments.hpp"

#include "mref/errors.hpp"

namespace mref::dar {

KeySegments::KeySegments(std::vector<Segment> segments) : segments_(std::move(segments)) {}

void KeySegments::check_covers(std::size_t n_tokens) const {
  std::size_t cursor = 0;
  for (std::size_t s = 0; s < segments_.size(); ++s) {
    const Segment& seg = segments_[s];
    if (seg.length == 0) {
      throw ShapeError("segment " + std::to_string(s) + " is empty");
    }
    if (seg.start != cursor) {
      throw ShapeError("segment " + std::to_string(s) + " starts at " + std::to_string(seg.start) +
                       ", expected " + std::to_string(cursor) + " (segments must be contiguous)");
    }
    cursor += seg.length;
  }
  if (cursor != n_tokens) {
    throw ShapeError("segments cover " + std::to_string(cursor) + " key tokens, keys have " +
                     std::to_string(n_tokens));
  }
}

void KeySegments::check_has_reference() const {
  for (const Segment& seg : segments_) {
    if (seg.kind == SegmentKind::Reference) return;
  }
  throw ShapeError("key segments contain no reference-image segment");
}

std::size_t KeySegments::total_tokens() const noexcept {
  std::size_t n = 0;
  for (const Segment& seg : segments_) n += seg.length;
  return n;
}

std::vector<std::size_t> KeySegments::reference_positions() const {
  std::vector<std::size_t> out;
  for (const Segment& seg : segments_) {
    if (seg.kind != SegmentKind::Reference) continue;
    for (std::size_t k = 0; k < seg.length; ++k) out.push_back(seg.start + k);
  }
  return out;
}

std::vector<Segment> KeySegments::reference_segments() const {
  std::vector<Segment> out;
  for (const Segment& seg : segments_) {
    if (seg.kind == SegmentKind::Reference) out.push_back(seg);
  }
  return out;
}

std::size_t KeySegments::reference_token_count() const noexcept {
  std::size_t n = 0;
  for (const Segment& seg : segments_) {
    if (seg.kind == SegmentKind::Reference) n += seg.length;
  }
  return n;
}

const char* to_string(SegmentKind kind) noexcept {
  switch (kind) {
    case SegmentKind::Text: return "text";
    case SegmentKind::Reference: return "reference";
    case SegmentKind::Noise: return "noise";
  }
  return "?";
}

nlohmann::json to_json(const KeySegments& segments) {
  nlohmann::json arr = nlohmann::json::array();
  for (const Segment& seg : segments.segments()) {
    nlohmann::json j = {{"label", to_string(seg.kind)}, {"start", seg.start}, {"length", seg.length}};
    if (seg.kind == SegmentKind::Reference) j["index"] = seg.ref_index;
    arr.push_back(std::move(j));
  }
  return {{"segments", std::move(arr)}};
}

KeySegments key_segments_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("segments") || !j["segments"].is_array()) {
    throw FormatError("segment sidecar must be an object with a 'segments' array");
  }
  std::vector<Segment> out;
  for (const auto& item : j["segments"]) {
    Segment seg;
    try {
      const std::string label = item.at("label").get<std::string>();
      if (label == "text") {
        seg.kind = SegmentKind::Text;
      } else if (label == "reference") {
        seg.kind = SegmentKind::Reference;
        seg.ref_index = item.value("index", std::size_t{0});
      } else if (label == "noise") {
        seg.kind = SegmentKind::Noise;
      } else {
        throw FormatError("unknown segment label '" + label + "'");
      }
      seg.start = item.at("start").get<std::size_t>();
      seg.length = item.at("length").get<std::size_t>();
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(std::string("bad segment entry: ") + e.what());
    }
    out.push_back(seg);
  }
  return KeySegments(std::move(out));
}

}  // namespace mref::dar
