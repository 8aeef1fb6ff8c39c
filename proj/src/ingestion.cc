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
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

#include "json.hpp"
#include "leakmeter/error.h"

namespace leakmeter {
namespace {

void PutU16(std::string* out, uint16_t v) {
  out->push_back(static_cast<char>(v & 0xff));
  out->push_back(static_cast<char>(v >> 8));
}

void PutU32(std::string* out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out->push_back(static_cast<char>(v >> (8 * i)));
}

void PutString(std::string* out, std::string_view s) {
  if (s.size() > std::numeric_limits<uint32_t>::max())
    throw Error(ErrorCode::kIoFailure, "string too long for XVEC");
  PutU32(out, static_cast<uint32_t>(s.size()));
  out->append(s);
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  void Need(size_t n, const char* what) const {
    if (bytes_.size() - pos_ < n)
      throw Error(ErrorCode::kTruncatedFile,
                  std::string("file ends inside ") + what + " at byte " +
                      std::to_string(pos_));
  }
  uint16_t U16(const char* what) {
    Need(2, what);
    auto b = reinterpret_cast<const unsigned char*>(bytes_.data() + pos_);
    pos_ += 2;
    return static_cast<uint16_t>(b[0] | (b[1] << 8));
  }
  uint32_t U32(const char* what) {
    Need(4, what);
    auto b = reinterpret_cast<const unsigned char*>(bytes_.data() + pos_);
    pos_ += 4;
    return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
           (static_cast<uint32_t>(b[2]) << 16) |
           (static_cast<uint32_t>(b[3]) << 24);
  }
  std::string_view Bytes(size_t n, const char* what) {
    Need(n, what);
    auto s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::string String(const char* what) {
    uint32_t n = U32(what);
    return std::string(Bytes(n, what));
  }
  bool AtEnd() const { return pos_ == bytes_.size(); }
  size_t pos() const { return pos_; }

 private:
  std::string_view bytes_;
  size_t pos_ = 0;
};

void RequireValid(const EmbeddingMatrix& emb) {
  auto report = CheckEmbeddings(emb);
  if (!report.dimension_issues.empty())
    throw Error(ErrorCode::kDimensionMismatch,
                report.dimension_issues.front());
  if (emb.rows() == 0)
    throw Error(ErrorCode::kBadHeader, "embedding matrix has no rows");
  if (!report.duplicate_ids.empty())
    throw Error(ErrorCode::kDuplicateSegmentId, report.duplicate_ids.front());
  if (!report.non_finite.empty())
    throw Error(ErrorCode::kNonFiniteValue, report.non_finite.front());
}

std::string_view Trim(std::string_view s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.remove_suffix(1);
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  return s;
}

std::vector<std::string_view> SplitCommas(std::string_view line) {
  std::vector<std::string_view> out;
  size_t start = 0;
  while (true) {
    size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(Trim(line.substr(start)));
      return out;
    }
    out.push_back(Trim(line.substr(start, comma - start)));
    start = comma + 1;
  }
}

}  // namespace

size_t XvecEncodedSize(const EmbeddingMatrix& emb) {
  size_t size = 4 + 2 + 4 + 4 + 4 + emb.sid_model_tag.size();
  for (const auto& id : emb.ids) size += 4 + id.size();
  return size + emb.rows() * emb.dim * sizeof(float);
}

std::string EncodeXvec(const EmbeddingMatrix& emb) {
  RequireValid(emb);
  if (emb.dim > std::numeric_limits<uint32_t>::max() ||
      emb.rows() > std::numeric_limits<uint32_t>::max())
    throw Error(ErrorCode::kBadHeader, "matrix too large for XVEC");
  std::string out;
  out.reserve(XvecEncodedSize(emb));
  out.append(kXvecMagic, 4);
  PutU16(&out, kXvecVersion);
  PutU32(&out, static_cast<uint32_t>(emb.dim));
  PutU32(&out, static_cast<uint32_t>(emb.rows()));
  PutString(&out, emb.sid_model_tag);
  for (size_t r = 0; r < emb.rows(); ++r) {
    PutString(&out, emb.ids[r]);
    for (double v : emb.row(r)) {
      const float f = static_cast<float>(v);
      if (!std::isfinite(f))
        throw Error(ErrorCode::kNonFiniteValue,
                    emb.ids[r] + " does not fit in binary32");
      PutU32(&out, std::bit_cast<uint32_t>(f));
    }
  }
  return out;
}

EmbeddingMatrix DecodeXvec(std::string_view bytes) {
  Reader in(bytes);
  auto magic = in.Bytes(4, "magic");
  if (std::memcmp(magic.data(), kXvecMagic, 4) != 0)
    throw Error(ErrorCode::kBadMagic, "expected \"XVEC\"");
  EmbeddingFileHeader header;
  header.version = in.U16("version");
  if (header.version != kXvecVersion)
    throw Error(ErrorCode::kUnsupportedVersion,
                "version " + std::to_string(header.version));
  header.dim = in.U32("dim");
  header.count = in.U32("count");
  if (header.dim == 0 || header.count == 0)
    throw Error(ErrorCode::kBadHeader, "dim and count must be >= 1");
  header.sid_model_tag = in.String("model tag");

  EmbeddingMatrix emb;
  emb.sid_model_tag = std::move(header.sid_model_tag);
  emb.dim = header.dim;
  emb.ids.reserve(header.count);
  // Guard the reservation against a bogus count in a short file.
  if (static_cast<uint64_t>(header.count) * header.dim * 4 <= bytes.size())
    emb.values.reserve(static_cast<size_t>(header.count) * header.dim);
  for (uint32_t r = 0; r < header.count; ++r) {
    emb.ids.push_back(in.String("row id"));
    in.Need(static_cast<size_t>(header.dim) * 4, "row values");
    for (uint32_t c = 0; c < header.dim; ++c) {
      const float f = std::bit_cast<float>(in.U32("row values"));
      if (!std::isfinite(f))
        throw Error(ErrorCode::kNonFiniteValue,
                    "row '" + emb.ids.back() + "' column " + std::to_string(c));
      emb.values.push_back(f);
    }
  }
  if (!in.AtEnd())
    throw Error(ErrorCode::kTrailingData,
                std::to_string(bytes.size() - in.pos()) +
                    " bytes after last row");
  auto report = CheckEmbeddings(emb);
  if (!report.duplicate_ids.empty())
    throw Error(ErrorCode::kDuplicateSegmentId, report.duplicate_ids.front());
  return emb;
}

std::string ReadFileBytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw Error(ErrorCode::kIoFailure, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return std::move(ss).str();
}

void WriteFileBytes(const std::filesystem::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out)
    throw Error(ErrorCode::kIoFailure, "cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out)
    throw Error(ErrorCode::kIoFailure, "short write to " + path.string());
}

EmbeddingMatrix ReadEmbeddings(const std::filesystem::path& path) {
  return DecodeXvec(ReadFileBytes(path));
}

void WriteEmbeddings(const EmbeddingMatrix& emb,
                     const std::filesystem::path& path) {
  WriteFileBytes(path, EncodeXvec(emb));
}

EmbeddingMatrix ParseEmbeddingsCsv(std::string_view text, size_t dim,
                                   std::string sid_model_tag) {
  if (dim == 0) throw Error(ErrorCode::kBadHeader, "dim must be >= 1");
  EmbeddingMatrix emb;
  emb.sid_model_tag = std::move(sid_model_tag);
  emb.dim = dim;
  bool header_seen = false;
  size_t line_no = 0;
  size_t start = 0;
  while (start <= text.size()) {
    size_t nl = text.find('\n', start);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = Trim(text.substr(start, nl - start));
    start = nl + 1;
    ++line_no;
    if (line.empty()) continue;
    auto fields = SplitCommas(line);
    if (!header_seen) {
      header_seen = true;
      if (fields.size() != dim + 1 || fields[0] != "segment_id")
        throw Error(ErrorCode::kDimensionMismatch,
                    "header has " + std::to_string(fields.size() - 1) +
                        " value columns, expected " + std::to_string(dim));
      for (size_t c = 0; c < dim; ++c) {
        if (fields[c + 1] != "v" + std::to_string(c))
          throw Error(ErrorCode::kParseFailure,
                      "header column " + std::to_string(c + 1) + " is '" +
                          std::string(fields[c + 1]) + "'");
      }
      continue;
    }
    if (fields.size() != dim + 1)
      throw Error(ErrorCode::kDimensionMismatch,
                  "line " + std::to_string(line_no) + " has " +
                      std::to_string(fields.size() - 1) + " values, expected " +
                      std::to_string(dim));
    if (fields[0].empty())
      throw Error(ErrorCode::kParseFailure,
                  "line " + std::to_string(line_no) + ": empty segment_id");
    emb.ids.emplace_back(fields[0]);
    for (size_t c = 0; c < dim; ++c) {
      auto f = fields[c + 1];
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
      // Overflow and underflow: let strtod pick inf or a tiny value.
      if (ec == std::errc::result_out_of_range && ptr == f.data() + f.size()) {
        v = std::strtod(std::string(f).c_str(), nullptr);
        ec = std::errc();
      }
      if (ec != std::errc() || ptr != f.data() + f.size())
        throw Error(ErrorCode::kParseFailure,
                    "line " + std::to_string(line_no) + ": bad value '" +
                        std::string(f) + "'");
      const float rounded = static_cast<float>(v);
      if (!std::isfinite(rounded))
        throw Error(ErrorCode::kNonFiniteValue,
                    "line " + std::to_string(line_no));
      emb.values.push_back(rounded);
    }
  }
  if (!header_seen) throw Error(ErrorCode::kParseFailure, "missing header");
  if (emb.rows() == 0) throw Error(ErrorCode::kBadHeader, "no rows");
  auto report = CheckEmbeddings(emb);
  if (!report.duplicate_ids.empty())
    throw Error(ErrorCode::kDuplicateSegmentId, report.duplicate_ids.front());
  return emb;
}

EmbeddingMatrix ReadEmbeddingsCsv(const std::filesystem::path& path,
                                  size_t dim, std::string sid_model_tag) {
  return ParseEmbeddingsCsv(ReadFileBytes(path), dim, std::move(sid_model_tag));
}

void WriteEmbeddingsCsv(const EmbeddingMatrix& emb,
                        const std::filesystem::path& path) {
  RequireValid(emb);
  std::string out = "segment_id";
  for (size_t c = 0; c < emb.dim; ++c) out += ",v" + std::to_string(c);
  out += '\n';
  char buf[64];
  for (size_t r = 0; r < emb.rows(); ++r) {
    out += emb.ids[r];
    for (double v : emb.row(r)) {
      // Shortest representation that round-trips the binary32 value.
      auto res = std::to_chars(buf, buf + sizeof(buf), static_cast<float>(v));
      out += ',';
      out.append(buf, res.ptr);
    }
    out += '\n';
  }
  WriteFileBytes(path, out);
}

std::string EncodeManifestJsonl(const CorpusManifest& manifest) {
  std::string out;
  for (const auto& r : manifest.segments()) {
    nlohmann::ordered_json j;
    j["segment_id"] = r.segment_id;
    j["speaker_id"] = r.speaker_id;
    j["session_id"] = r.session_id;
    j["condition"] = ConditionName(r.condition);
    if (r.profile_id) j["profile_id"] = *r.profile_id;
    else j["profile_id"] = nullptr;
    j["duration_class"] = DurationClassName(r.duration_class);
    out += j.dump();
    out += '\n';
  }
  return out;
}

CorpusManifest ParseManifestJsonl(std::string_view text, bool deid_only) {
  std::vector<SegmentRecord> records;
  size_t start = 0, line_no = 0;
  while (start < text.size()) {
    size_t nl = text.find('\n', start);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = Trim(text.substr(start, nl - start));
    start = nl + 1;
    ++line_no;
    if (line.empty()) continue;
    const std::string where = "manifest line " + std::to_string(line_no);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kParseFailure, where + ": " + e.what());
    }
    try {
      SegmentRecord r;
      r.segment_id = j.at("segment_id").get<std::string>();
      r.speaker_id = j.at("speaker_id").get<std::string>();
      r.session_id = j.at("session_id").get<std::string>();
      r.condition = ParseCondition(j.at("condition").get<std::string>());
      const auto& p = j.at("profile_id");
      if (!p.is_null()) r.profile_id = p.get<int>();
      r.duration_class =
          ParseDurationClass(j.at("duration_class").get<std::string>());
      records.push_back(std::move(r));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kParseFailure, where + ": " + e.what());
    } catch (const Error& e) {
      throw Error(e.code(), where + ": " + e.what());
    }
  }
  return BuildManifest(std::move(records), deid_only);
}

CorpusManifest ReadManifest(const std::filesystem::path& path, bool deid_only) {
  return ParseManifestJsonl(ReadFileBytes(path), deid_only);
}

void WriteManifest(const CorpusManifest& manifest,
                   const std::filesystem::path& path) {
  WriteFileBytes(path, EncodeManifestJsonl(manifest));
}

}  // namespace leakmeter
