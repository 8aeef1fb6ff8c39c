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

#ifndef LEAKMETER_INGESTION_H_
#define LEAKMETER_INGESTION_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "leakmeter/corpus.h"

namespace leakmeter {

// XVEC container, all integers little-endian:
//
//   "XVEC"            4 bytes
//   version           u16 (= 1)
//   dim               u32 (>= 1)
//   count             u32 (>= 1)
//   tag length        u32, followed by that many UTF-8 bytes
//   count rows of:
//     id length       u32, followed by that many UTF-8 bytes
//     dim x f32       IEEE-754 binary32
inline constexpr char kXvecMagic[4] = {'X', 'V', 'E', 'C'};
inline constexpr uint16_t kXvecVersion = 1;

struct EmbeddingFileHeader {
  uint16_t version = kXvecVersion;
  uint32_t dim = 0;
  uint32_t count = 0;
  std::string sid_model_tag;
};

// Byte size of the encoded file for the given matrix.
size_t XvecEncodedSize(const EmbeddingMatrix& emb);

std::string EncodeXvec(const EmbeddingMatrix& emb);
EmbeddingMatrix DecodeXvec(std::string_view bytes);

EmbeddingMatrix ReadEmbeddings(const std::filesystem::path& path);
void WriteEmbeddings(const EmbeddingMatrix& emb,
                     const std::filesystem::path& path);

// CSV fallback: header "segment_id,v0,...,v{d-1}". Values are rounded to
// binary32 so that both encodings of one matrix parse identically.
EmbeddingMatrix ParseEmbeddingsCsv(std::string_view text, size_t dim,
                                   std::string sid_model_tag = "");
EmbeddingMatrix ReadEmbeddingsCsv(const std::filesystem::path& path,
                                  size_t dim, std::string sid_model_tag = "");
void WriteEmbeddingsCsv(const EmbeddingMatrix& emb,
                        const std::filesystem::path& path);

// Manifest as JSON Lines, one SegmentRecord object per line.
std::string EncodeManifestJsonl(const CorpusManifest& manifest);
CorpusManifest ParseManifestJsonl(std::string_view text,
                                  bool deid_only = false);
CorpusManifest ReadManifest(const std::filesystem::path& path,
                            bool deid_only = false);
void WriteManifest(const CorpusManifest& manifest,
                   const std::filesystem::path& path);

std::string ReadFileBytes(const std::filesystem::path& path);
void WriteFileBytes(const std::filesystem::path& path, std::string_view bytes);

}  // namespace leakmeter

#endif  // LEAKMETER_INGESTION_H_
