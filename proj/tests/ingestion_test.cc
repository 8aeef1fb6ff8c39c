// Copyright (c) 2026 The leakmeter Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "leakmeter/ingestion.h"

#include <bit>
#include <cmath>
#include <cstring>

#include "leakmeter/rng.h"
#include "leakmeter/synthsim.h"
#include "test_util.h"

namespace leakmeter {
namespace {

using testing::Deid;
using testing::Orig;
using testing::TempDir;

// Independent little-endian writer for hand-built files.
struct Bytes {
  std::string s;
  Bytes& Raw(std::string_view v) {
    s.append(v);
    return *this;
  }
  Bytes& U16(uint16_t v) {
    s.push_back(static_cast<char>(v & 0xff));
    s.push_back(static_cast<char>(v >> 8));
    return *this;
  }
  Bytes& U32(uint32_t v) {
    for (int i = 0; i < 4; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
    return *this;
  }
  Bytes& Str(std::string_view v) {
    U32(static_cast<uint32_t>(v.size()));
    return Raw(v);
  }
  Bytes& F32(float v) { return U32(std::bit_cast<uint32_t>(v)); }
};

std::string OneRowFile() {
  return Bytes()
      .Raw("XVEC")
      .U16(1)
      .U32(2)
      .U32(1)
      .Str("")
      .Str("a")
      .F32(1.0f)
      .F32(0.0f)
      .s;
}

TEST(XvecTest, DecodesHandBuiltFile) {
  auto emb = DecodeXvec(OneRowFile());
  EXPECT_EQ(emb.dim, 2u);
  EXPECT_EQ(emb.ids, (std::vector<std::string>{"a"}));
  EXPECT_EQ(emb.values, (std::vector<double>{1.0, 0.0}));
  EXPECT_EQ(EncodeXvec(emb), OneRowFile());
}

TEST(XvecTest, TruncatedAnywhere) {
  const std::string full = OneRowFile();
  for (size_t n = 0; n < full.size(); ++n) {
    try {
      DecodeXvec(std::string_view(full).substr(0, n));
      ADD_FAILURE() << "prefix " << n << " decoded";
    } catch (const Error& e) {
      // A prefix shorter than the magic cannot be told apart from a bad magic.
      if (n >= 4) {
        EXPECT_EQ(e.code(), ErrorCode::kTruncatedFile) << n;
      }
    }
  }
}

TEST(XvecTest, HeaderErrors) {
  std::string f = OneRowFile();
  f[0] = 'Y';
  EXPECT_LEAKMETER_ERROR(DecodeXvec(f), ErrorCode::kBadMagic);
  f = OneRowFile();
  f[4] = 2;
  EXPECT_LEAKMETER_ERROR(DecodeXvec(f), ErrorCode::kUnsupportedVersion);
  auto zero_dim = Bytes().Raw("XVEC").U16(1).U32(0).U32(1).Str("").s;
  EXPECT_LEAKMETER_ERROR(DecodeXvec(zero_dim), ErrorCode::kBadHeader);
  auto zero_count = Bytes().Raw("XVEC").U16(1).U32(2).U32(0).Str("").s;
  EXPECT_LEAKMETER_ERROR(DecodeXvec(zero_count), ErrorCode::kBadHeader);
  EXPECT_LEAKMETER_ERROR(DecodeXvec(OneRowFile() + "x"),
                         ErrorCode::kTrailingData);
}

TEST(XvecTest, NonFiniteValue) {
  auto f = Bytes()
               .Raw("XVEC")
               .U16(1)
               .U32(1)
               .U32(1)
               .Str("")
               .Str("a")
               .F32(std::numeric_limits<float>::infinity())
               .s;
  EXPECT_LEAKMETER_ERROR(DecodeXvec(f), ErrorCode::kNonFiniteValue);
}

TEST(XvecTest, DuplicateIds) {
  auto f = Bytes()
               .Raw("XVEC")
               .U16(1)
               .U32(1)
               .U32(2)
               .Str("")
               .Str("a")
               .F32(1)
               .Str("a")
               .F32(2)
               .s;
  EXPECT_LEAKMETER_ERROR(DecodeXvec(f), ErrorCode::kDuplicateSegmentId);
}

// Random valid files assembled byte by byte.
std::string RandomFile(Rng* rng) {
  const uint32_t dim = 1 + static_cast<uint32_t>(rng->UniformIndex(16));
  const uint32_t count = 1 + static_cast<uint32_t>(rng->UniformIndex(40));
  Bytes b;
  b.Raw("XVEC").U16(1).U32(dim).U32(count);
  std::string tag;
  for (size_t i = rng->UniformIndex(12); i > 0; --i)
    tag.push_back(static_cast<char>('a' + rng->UniformIndex(26)));
  b.Str(tag);
  for (uint32_t r = 0; r < count; ++r) {
    b.Str("seg" + std::to_string(r) + "_" + std::to_string(rng->Next() % 1000));
    for (uint32_t c = 0; c < dim; ++c) {
      uint32_t bits;
      do {
        bits = static_cast<uint32_t>(rng->Next());
      } while (!std::isfinite(std::bit_cast<float>(bits)));
      b.U32(bits);
    }
  }
  return b.s;
}

TEST(XvecTest, ByteRoundTripProperty) {
  Rng rng(20260101);
  for (int i = 0; i < 200; ++i) {
    const std::string f = RandomFile(&rng);
    EXPECT_EQ(EncodeXvec(DecodeXvec(f)), f) << "file " << i;
  }
}

TEST(XvecTest, FileRoundTrip) {
  TempDir dir;
  auto sim = Simulate(Preset("tiny"));
  WriteEmbeddings(sim.orig, dir / "o.xvec");
  auto back = ReadEmbeddings(dir / "o.xvec");
  EXPECT_EQ(back, sim.orig);
  EXPECT_EQ(ReadFileBytes(dir / "o.xvec"), EncodeXvec(sim.orig));
  EXPECT_LEAKMETER_ERROR(ReadEmbeddings(dir / "missing.xvec"),
                         ErrorCode::kIoFailure);
}

TEST(XvecTest, EmptyTagThreeRows) {
  EmbeddingMatrix e{"", 1, {"a", "b", "c"}, {1, 2, 3}};
  auto bytes = EncodeXvec(e);
  uint32_t count = 0;
  std::memcpy(&count, bytes.data() + 10, 4);
  EXPECT_EQ(count, 3u);
  EXPECT_EQ(DecodeXvec(bytes).rows(), 3u);
}

TEST(XvecTest, RejectsEmptyMatrix) {
  EmbeddingMatrix e{"t", 4, {}, {}};
  EXPECT_LEAKMETER_ERROR(EncodeXvec(e), ErrorCode::kBadHeader);
}

TEST(XvecTest, EncodedSizeArithmetic) {
  const size_t d = 192;
  EmbeddingMatrix e;
  e.sid_model_tag = "ecapa";
  e.dim = d;
  size_t id_bytes = 0;
  for (int i = 0; i < 2983; ++i) {
    e.ids.push_back("segment_" + std::to_string(i));
    id_bytes += e.ids.back().size();
  }
  e.values.assign(2983 * d, 0.25);
  const size_t header = 4 + 2 + 4 + 4 + 4 + e.sid_model_tag.size();
  const size_t expected = header + 2983 * 4 + id_bytes + 2983 * d * 4;
  EXPECT_EQ(XvecEncodedSize(e), expected);
  EXPECT_EQ(EncodeXvec(e).size(), expected);
}

TEST(CsvTest, SingleRow) {
  auto e = ParseEmbeddingsCsv("segment_id,v0,v1\na,1.0,0.0\n", 2);
  EXPECT_EQ(e.ids, (std::vector<std::string>{"a"}));
  EXPECT_EQ(e.values, (std::vector<double>{1.0, 0.0}));
}

TEST(CsvTest, Errors) {
  EXPECT_LEAKMETER_ERROR(ParseEmbeddingsCsv("segment_id,v0,v1\na,1,0,3\n", 2),
                         ErrorCode::kDimensionMismatch);
  EXPECT_LEAKMETER_ERROR(ParseEmbeddingsCsv("segment_id,v0,v1\na,1,zz\n", 2),
                         ErrorCode::kParseFailure);
  EXPECT_LEAKMETER_ERROR(ParseEmbeddingsCsv("segment_id,v0\na,1\n", 2),
                         ErrorCode::kDimensionMismatch);
  EXPECT_LEAKMETER_ERROR(ParseEmbeddingsCsv("", 2), ErrorCode::kParseFailure);
  EXPECT_LEAKMETER_ERROR(ParseEmbeddingsCsv("segment_id,v0\na,1e400\n", 1),
                         ErrorCode::kNonFiniteValue);
}

TEST(CsvTest, CrossFormatEquality) {
  TempDir dir;
  Rng rng(77);
  for (int i = 0; i < 30; ++i) {
    EmbeddingMatrix e;
    e.sid_model_tag = "m";
    e.dim = 1 + rng.UniformIndex(10);
    const size_t n = 1 + rng.UniformIndex(30);
    for (size_t r = 0; r < n; ++r) {
      e.ids.push_back("r" + std::to_string(r));
      for (size_t c = 0; c < e.dim; ++c)
        e.values.push_back(rng.Normal() * std::pow(10.0, rng.Normal() * 3));
    }
    WriteEmbeddings(e, dir / "e.xvec");
    WriteEmbeddingsCsv(e, dir / "e.csv");
    auto bin = ReadEmbeddings(dir / "e.xvec");
    auto csv = ReadEmbeddingsCsv(dir / "e.csv", e.dim, "m");
    EXPECT_EQ(bin, csv) << "matrix " << i;
  }
}

TEST(ManifestJsonlTest, RoundTrip) {
  auto sim = Simulate(Preset("tiny"));
  auto text = EncodeManifestJsonl(sim.manifest);
  EXPECT_EQ(ParseManifestJsonl(text), sim.manifest);
  EXPECT_EQ(EncodeManifestJsonl(ParseManifestJsonl(text)), text);
}

TEST(ManifestJsonlTest, FieldNames) {
  auto m = BuildManifest({Deid("x_p1", "s", "ses", 1)}, true);
  EXPECT_EQ(EncodeManifestJsonl(m),
            "{\"segment_id\":\"x_p1\",\"speaker_id\":\"s\",\"session_id\":"
            "\"ses\",\"condition\":\"deid\",\"profile_id\":1,"
            "\"duration_class\":\"s10\"}\n");
  auto o = BuildManifest({Orig("y", "s", "ses")});
  EXPECT_NE(EncodeManifestJsonl(o).find("\"profile_id\":null"),
            std::string::npos);
}

TEST(ManifestJsonlTest, Errors) {
  EXPECT_LEAKMETER_ERROR(ParseManifestJsonl("{not json}\n"),
                         ErrorCode::kParseFailure);
  EXPECT_LEAKMETER_ERROR(ParseManifestJsonl("{\"segment_id\":\"a\"}\n"),
                         ErrorCode::kParseFailure);
  EXPECT_LEAKMETER_ERROR(
      ParseManifestJsonl(
          "{\"segment_id\":\"a\",\"speaker_id\":\"s\",\"session_id\":\"x\","
          "\"condition\":\"orig\",\"profile_id\":2,\"duration_class\":\"s10\"}"),
      ErrorCode::kProfileOnOriginal);
}

}  // namespace
}  // namespace leakmeter
