#include <gtest/gtest.h>

#include <cstring>
#include <filesystem>

#include "c2f/checkpoint.hpp"
#include "c2f/model.hpp"
#include "support/fixtures.hpp"

namespace c2f {
namespace {

using nn::Adam;
using nn::Metadata;
using nn::ParameterStore;

std::uint64_t Fnv(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

void PutU32(std::string& s, std::size_t at, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) s[at + static_cast<std::size_t>(i)] = static_cast<char>((v >> (8 * i)) & 0xff);
}

void Reseal(std::string& s) {
  const std::uint64_t h = Fnv(std::string_view(s).substr(0, s.size() - 8));
  for (int i = 0; i < 8; ++i) s[s.size() - 8 + static_cast<std::size_t>(i)] = static_cast<char>((h >> (8 * i)) & 0xff);
}

/// Minimal reader following the documented layout, independent of the
/// library's own decoder.
struct LayoutReader {
  std::string_view b;
  std::size_t p = 0;
  std::uint64_t U(int n) {
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(b[p + static_cast<std::size_t>(i)])) << (8 * i);
    p += static_cast<std::size_t>(n);
    return v;
  }
  std::string S() {
    const auto n = static_cast<std::size_t>(U(4));
    std::string s(b.substr(p, n));
    p += n;
    return s;
  }
  double D() {
    const std::uint64_t bits = U(8);
    double d;
    std::memcpy(&d, &bits, 8);
    return d;
  }
};

ParameterStore SmallStore(std::uint64_t seed) {
  ParameterStore s;
  s.Add("w", 2, 3);
  s.Add("b", 2, 1, true);
  Rng rng(seed);
  s.InitUniform(rng, 1.0);
  s.Get("b").value << 0.25, -0.5;
  return s;
}

TEST(Checkpoint, LayoutMatchesDocumentation) {
  ParameterStore s = SmallStore(1);
  const std::string bytes = nn::EncodeCheckpoint(s, nullptr, {{"k", "v"}});
  LayoutReader r{bytes};
  EXPECT_EQ(std::string(bytes.data(), 7), "C2FCKPT");
  EXPECT_EQ(bytes[7], '\0');
  r.p = 8;
  EXPECT_EQ(r.U(4), nn::kCheckpointVersion);
  ASSERT_EQ(r.U(4), 1u);
  EXPECT_EQ(r.S(), "k");
  EXPECT_EQ(r.S(), "v");
  ASSERT_EQ(r.U(4), 2u);
  EXPECT_EQ(r.S(), "w");
  EXPECT_EQ(r.U(4), 2u);
  EXPECT_EQ(r.U(4), 3u);
  EXPECT_EQ(r.U(1), 1u);
  EXPECT_EQ(r.U(1), 0u);
  const auto& w = s.Get("w").value;
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 3; ++j) EXPECT_EQ(r.D(), w(i, j));
  }
  EXPECT_EQ(r.S(), "b");
  r.U(4);
  r.U(4);
  r.U(1);
  EXPECT_EQ(r.U(1), 1u);
  EXPECT_EQ(r.D(), 0.25);
  EXPECT_EQ(r.D(), -0.5);
  EXPECT_EQ(r.U(4), 0u);
  const std::uint64_t sum = r.U(8);
  EXPECT_EQ(r.p, bytes.size());
  EXPECT_EQ(sum, Fnv(std::string_view(bytes).substr(0, bytes.size() - 8)));
}

TEST(Checkpoint, ModelRoundTripIsBitExact) {
  ReviewModel model = testing::RandomModel(testing::TinyDims(), 3);
  Adam adam;
  auto params = model.Trainable();
  for (auto* p : params) p->grad = p->value.array().cos().matrix();
  adam.Step(params, 0.01);
  const std::string first = model.Encode(&adam, {{"note", "x"}});
  Adam adam2;
  Metadata meta;
  ReviewModel back = ReviewModel::Decode(first, &adam2, &meta);
  EXPECT_EQ(meta.at("note"), "x");
  EXPECT_EQ(back.Encode(&adam2, {{"note", "x"}}), first);
  for (const auto& p : model.store().all()) {
    EXPECT_EQ(back.store().Get(p->name).value, p->value) << p->name;
  }
  EXPECT_EQ(adam2.slots().size(), adam.slots().size());
}

TEST(Checkpoint, SaveLoadThroughFile) {
  ReviewModel model = testing::RandomModel(testing::TinyDims(), 4);
  const auto path = (std::filesystem::temp_directory_path() / "c2f_ckpt_test.bin").string();
  model.Save(path, nullptr);
  ReviewModel back = ReviewModel::Load(path);
  EXPECT_EQ(back.Encode(nullptr), model.Encode(nullptr));
  std::filesystem::remove(path);
  EXPECT_THROW(ReviewModel::Load(path), Error);
}

TEST(Checkpoint, TruncationReportsOffset) {
  ParameterStore s = SmallStore(2);
  const std::string bytes = nn::EncodeCheckpoint(s, nullptr, {});
  for (std::size_t cut : {std::size_t{3}, std::size_t{20}, bytes.size() - 1}) {
    ParameterStore target = SmallStore(9);
    try {
      nn::DecodeCheckpoint(std::string_view(bytes).substr(0, cut), target, nullptr, nullptr);
      FAIL() << "cut at " << cut;
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::kData);
      EXPECT_NE(std::string(e.what()).find("offset"), std::string::npos);
    }
  }
}

TEST(Checkpoint, ShapeMismatchIsReported) {
  ParameterStore s = SmallStore(2);
  const std::string bytes = nn::EncodeCheckpoint(s, nullptr, {});
  ParameterStore other;
  other.Add("w", 2, 4);
  other.Add("b", 2, 1, true);
  try {
    nn::DecodeCheckpoint(bytes, other, nullptr, nullptr);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("w"), std::string::npos);
  }
  ParameterStore missing;
  missing.Add("w", 2, 3);
  EXPECT_THROW(nn::DecodeCheckpoint(bytes, missing, nullptr, nullptr), Error);
}

TEST(Checkpoint, DifferentVocabularyIsRejected) {
  ReviewModel model = testing::RandomModel(testing::TinyDims(), 4);
  const std::string bytes = model.Encode(nullptr);
  ModelDims dims = testing::TinyDims();
  dims.word_vocab = 11;
  ReviewModel other = testing::RandomModel(dims, 4);
  EXPECT_THROW(nn::DecodeCheckpoint(bytes, other.store(), nullptr, nullptr), Error);
}

TEST(Checkpoint, VersionMismatch) {
  ParameterStore s = SmallStore(2);
  std::string bytes = nn::EncodeCheckpoint(s, nullptr, {});
  PutU32(bytes, 8, nn::kCheckpointVersion + 1);
  Reseal(bytes);
  try {
    nn::DecodeCheckpoint(bytes, s, nullptr, nullptr);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("version"), std::string::npos);
  }
}

TEST(Checkpoint, FlippedByteFailsChecksum) {
  ParameterStore s = SmallStore(2);
  std::string bytes = nn::EncodeCheckpoint(s, nullptr, {});
  bytes[30] = static_cast<char>(bytes[30] ^ 0x40);
  EXPECT_THROW(nn::DecodeCheckpoint(bytes, s, nullptr, nullptr), Error);
  EXPECT_THROW(nn::PeekCheckpointMetadata("not a checkpoint at all"), Error);
}

}  // namespace
}  // namespace c2f
