#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <random>

#include "mref/dar/tensor_io.hpp"
#include "mref/errors.hpp"
#include "support/attention_oracle.hpp"

using namespace mref::dar;

TEST_CASE("DART1 layout is bit exact") {
  const HeadedTensor t({1, 1, 2}, {1.0, -2.5});
  const std::string bytes = encode_tensor(t);
  REQUIRE(bytes.size() == 5 + 12 + 16);
  CHECK(bytes.substr(0, 5) == "DART1");
  // tokens=1 heads=1 dim=2, little endian
  CHECK(bytes.substr(5, 12) == std::string("\x01\0\0\0\x01\0\0\0\x02\0\0\0", 12));
  // 1.0 = 0x3FF0000000000000
  CHECK(bytes.substr(17, 8) == std::string("\0\0\0\0\0\0\xF0\x3F", 8));
  // -2.5 = 0xC004000000000000
  CHECK(bytes.substr(25, 8) == std::string("\0\0\0\0\0\0\x04\xC0", 8));
}

TEST_CASE("encode/decode preserves every bit") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 25; ++trial) {
    const auto t = gen::tensor(rng, gen::between(rng, 1, 9), gen::between(rng, 1, 4),
                               gen::between(rng, 1, 6), 1e3);
    CHECK(decode_tensor(encode_tensor(t)) == t);
  }
}

TEST_CASE("malformed tensors") {
  CHECK_THROWS_AS(decode_tensor("DART2\x01\0\0\0"), mref::FormatError);
  CHECK_THROWS_AS(decode_tensor("DA"), mref::FormatError);
  std::string truncated = encode_tensor(HeadedTensor({2, 1, 1}, {1.0, 2.0}));
  truncated.pop_back();
  CHECK_THROWS_AS(decode_tensor(truncated), mref::FormatError);
}

TEST_CASE("files and segment sidecar") {
  const auto dir = std::filesystem::temp_directory_path() / "mref_dar_io_test";
  std::filesystem::create_directories(dir);
  const HeadedTensor t({3, 2, 1}, {1, 2, 3, 4, 5, 6});
  write_tensor(dir / "k.dart", t);
  CHECK(read_tensor(dir / "k.dart") == t);

  const KeySegments segs({{SegmentKind::Text, 0, 0, 1},
                          {SegmentKind::Reference, 0, 1, 1},
                          {SegmentKind::Reference, 1, 2, 1}});
  write_segments(dir / "segments.json", segs);
  CHECK(read_segments(dir / "segments.json") == segs);

  CHECK_THROWS_AS(read_tensor(dir / "absent.dart"), mref::IoError);
  CHECK_THROWS_AS(key_segments_from_json(nlohmann::json::parse(R"({"segments":[{"label":"pixels","start":0,"length":1}]})")),
                  mref::FormatError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("diagnostics JSON") {
  const AttentionStats s{{1.5, 0.5}, {1.0, 0.0}, {1.0, 1.15, 0.85}};
  const auto j = stats_to_json(s);
  CHECK(j.size() == 3);
  CHECK(j.contains("raw_scores"));
  CHECK(j.contains("normalized_scores"));
  CHECK(j.contains("weights"));
  const auto back = stats_from_json(nlohmann::json::parse(j.dump()));
  CHECK(back.raw_scores == s.raw_scores);
  CHECK(back.weights == s.weights);
}
