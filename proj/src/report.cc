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

#include "leakmeter/report.h"

#include <charconv>
#include <cstdio>
#include <system_error>

#include "json.hpp"
#include "leakmeter/error.h"
#include "leakmeter/ingestion.h"

namespace leakmeter {

using Json = nlohmann::ordered_json;

std::string_view ReportFormatName(ReportFormat f) {
  switch (f) {
    case ReportFormat::kJson: return "json";
    case ReportFormat::kCsvTables: return "csv_tables";
    case ReportFormat::kPlotCsv: return "plot_csv";
  }
  return "?";
}

ReportFormat ParseReportFormat(std::string_view s) {
  for (auto f : {ReportFormat::kJson, ReportFormat::kCsvTables, ReportFormat::kPlotCsv})
    if (s == ReportFormatName(f)) return f;
  throw Error(ErrorCode::kInvalidConfig,
              "unknown report format '" + std::string(s) +
                  "' (json, csv_tables, plot_csv)");
}

namespace {

Json ErrorJson(const std::optional<std::string>& e) {
  return e ? Json(*e) : Json(nullptr);
}

Json OptJson(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

Json ChanceJson(const ChanceLevels& c) {
  return {{"rank1", c.rank1}, {"mean_rank", c.mean_rank}, {"auc_cmc", c.auc_cmc}};
}

Json HitAtJson(const std::vector<double>& hits) {
  Json j = Json::object();
  for (size_t k : kReportRanks)
    if (k <= hits.size()) j[std::to_string(k)] = hits[k - 1];
  return j;
}

std::optional<std::string> ReadError(const Json& j) {
  if (!j.contains("error") || j.at("error").is_null()) return std::nullopt;
  return j.at("error").get<std::string>();
}

std::optional<double> ReadOpt(const Json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<double>();
}

template <typename T>
void Read(const Json& j, const char* key, T* dst) {
  if (j.contains(key)) j.at(key).get_to(*dst);
}

ChanceLevels ReadChance(const Json& j) {
  return {j.at("rank1").get<double>(), j.at("mean_rank").get<double>(),
          j.at("auc_cmc").get<double>()};
}

}  // namespace

std::string EncodeReportJson(const EvalReport& r) {
  Json j;
  j["provenance"] = {{"tool", r.provenance.tool},
                     {"version", r.provenance.version},
                     {"seed", r.provenance.seed},
                     {"config_hash", r.provenance.config_hash}};
  j["models"] = r.models;
  j["profiles"] = r.profiles;

  auto ver = Json::array();
  for (const auto& c : r.verification) {
    Json cell = {{"model", c.model},
                 {"scenario", ScenarioName(c.scenario)},
                 {"profiles", c.profiles},
                 {"error", ErrorJson(c.error)}};
    if (!c.error) {
      cell["n_target"] = c.n_target;
      cell["n_nontarget"] = c.n_nontarget;
      cell["eer"] = c.eer;
      cell["threshold"] = c.threshold;
      auto roc = Json::array();
      for (const auto& p : c.roc) roc.push_back({p.far, p.frr, p.threshold});
      cell["roc"] = roc;
    }
    ver.push_back(cell);
  }
  j["verification"] = ver;

  auto ident = Json::array();
  for (const auto& c : r.identification) {
    Json cell = {{"model", c.model}, {"profile", c.profile}, {"error", ErrorJson(c.error)}};
    if (!c.error) {
      cell["G"] = c.gallery_size;
      cell["n_probes"] = c.n_probes;
      cell["hit_at"] = HitAtJson(c.hits);
      cell["auc_cmc"] = c.auc_cmc;
      cell["mean_rank"] = c.mean_rank;
      cell["chance"] = ChanceJson(c.chance);
      cell["hits"] = c.hits;
    }
    ident.push_back(cell);
  }
  j["identification"] = ident;

  auto sub = Json::array();
  for (const auto& c : r.subspace) {
    Json cell = {{"model", c.model}, {"profile", c.profile}, {"error", ErrorJson(c.error)}};
    if (!c.error) {
      cell["n"] = c.n;
      cell["d1"] = c.d1;
      cell["d2"] = c.d2;
      cell["pairing"] = c.pairing;
      cell["ridge"] = c.ridge;
      cell["cca_mean_top10"] = c.cca_mean_top10;
      cell["p_mse"] = OptJson(c.p_mse);
      cell["p_cosine"] = OptJson(c.p_cosine);
    }
    sub.push_back(cell);
  }
  j["subspace"] = sub;

  const ReportSummary& s = r.summary;
  Json sum;
  sum["mean_eer"] = s.mean_eer;
  Json si = Json::object();
  if (s.cmc) {
    si["G"] = s.cmc->gallery_size;
    si["n_probes"] = s.cmc->n_probes;
    si["hit_at"] = HitAtJson(s.cmc->hits);
  }
  si["auc_cmc"] = OptJson(s.auc_cmc);
  si["mean_rank"] = OptJson(s.mean_rank);
  si["chance"] = s.chance ? ChanceJson(*s.chance) : Json(nullptr);
  if (s.cmc) si["hits"] = s.cmc->hits;
  sum["identification"] = si;
  sum["subspace"] = {{"cca_mean_top10", OptJson(s.cca_mean_top10)},
                     {"p_mse", OptJson(s.p_mse)},
                     {"p_cosine", OptJson(s.p_cosine)}};
  j["summary"] = sum;
  return j.dump(2) + "\n";
}

EvalReport ParseReportJson(std::string_view text) {
  EvalReport r;
  try {
    Json j = Json::parse(text);
    const Json& p = j.at("provenance");
    r.provenance.tool = p.at("tool").get<std::string>();
    r.provenance.version = p.at("version").get<std::string>();
    r.provenance.seed = p.at("seed").get<uint64_t>();
    r.provenance.config_hash = p.at("config_hash").get<std::string>();
    j.at("models").get_to(r.models);
    j.at("profiles").get_to(r.profiles);

    for (const auto& cj : j.at("verification")) {
      VerificationCell c;
      c.model = cj.at("model").get<std::string>();
      c.scenario = ParseScenario(cj.at("scenario").get<std::string>());
      cj.at("profiles").get_to(c.profiles);
      c.error = ReadError(cj);
      Read(cj, "n_target", &c.n_target);
      Read(cj, "n_nontarget", &c.n_nontarget);
      Read(cj, "eer", &c.eer);
      Read(cj, "threshold", &c.threshold);
      if (cj.contains("roc"))
        for (const auto& pt : cj.at("roc"))
          c.roc.push_back({pt.at(0).get<double>(), pt.at(1).get<double>(),
                           pt.at(2).get<double>()});
      r.verification.push_back(std::move(c));
    }
    for (const auto& cj : j.at("identification")) {
      IdentificationCell c;
      c.model = cj.at("model").get<std::string>();
      c.profile = cj.at("profile").get<int>();
      c.error = ReadError(cj);
      Read(cj, "G", &c.gallery_size);
      Read(cj, "n_probes", &c.n_probes);
      Read(cj, "hits", &c.hits);
      Read(cj, "auc_cmc", &c.auc_cmc);
      Read(cj, "mean_rank", &c.mean_rank);
      if (cj.contains("chance")) c.chance = ReadChance(cj.at("chance"));
      r.identification.push_back(std::move(c));
    }
    for (const auto& cj : j.at("subspace")) {
      SubspaceCell c;
      c.model = cj.at("model").get<std::string>();
      c.profile = cj.at("profile").get<int>();
      c.error = ReadError(cj);
      Read(cj, "n", &c.n);
      Read(cj, "d1", &c.d1);
      Read(cj, "d2", &c.d2);
      Read(cj, "pairing", &c.pairing);
      Read(cj, "ridge", &c.ridge);
      Read(cj, "cca_mean_top10", &c.cca_mean_top10);
      c.p_mse = ReadOpt(cj, "p_mse");
      c.p_cosine = ReadOpt(cj, "p_cosine");
      r.subspace.push_back(std::move(c));
    }

    const Json& s = j.at("summary");
    s.at("mean_eer").get_to(r.summary.mean_eer);
    const Json& si = s.at("identification");
    if (si.contains("hits")) {
      CmcCurve curve;
      si.at("hits").get_to(curve.hits);
      curve.gallery_size = si.at("G").get<size_t>();
      curve.n_probes = si.at("n_probes").get<size_t>();
      r.summary.cmc = std::move(curve);
    }
    r.summary.auc_cmc = ReadOpt(si, "auc_cmc");
    r.summary.mean_rank = ReadOpt(si, "mean_rank");
    if (!si.at("chance").is_null()) r.summary.chance = ReadChance(si.at("chance"));
    const Json& ss = s.at("subspace");
    r.summary.cca_mean_top10 = ReadOpt(ss, "cca_mean_top10");
    r.summary.p_mse = ReadOpt(ss, "p_mse");
    r.summary.p_cosine = ReadOpt(ss, "p_cosine");
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kParseFailure, std::string("report: ") + e.what());
  } catch (const Error& e) {
    throw Error(ErrorCode::kParseFailure, std::string("report: ") + e.what());
  }
  return r;
}

namespace {

std::string Fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
  return buf;
}

std::string Shortest(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string Percent(double v) { return Fixed(100.0 * v, 4); }

std::string Quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string SafeName(const std::string& s) {
  std::string out;
  for (char c : s) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                    (c >= '0' && c <= '9') || c == '-' || c == '_' || c == '.';
    out += ok ? c : '_';
  }
  return out;
}

std::string JoinProfiles(const std::vector<int>& p, const char* sep) {
  std::string out;
  for (size_t i = 0; i < p.size(); ++i)
    out += (i ? sep : "") + std::to_string(p[i]);
  return out;
}

std::string CellLabel(const std::string& model, int profile) {
  return model + ":p" + std::to_string(profile);
}

void RenderTables(const EvalReport& r, std::map<std::string, std::string>* out) {
  for (Scenario s : {Scenario::kSet1, Scenario::kSet2, Scenario::kXprof}) {
    const std::string name(ScenarioName(s));
    std::string csv = "model,profiles,n_target,n_nontarget,eer_percent,error\n";
    bool any = false;
    for (const auto& c : r.verification) {
      if (c.scenario != s) continue;
      any = true;
      csv += Quote(c.model) + "," + JoinProfiles(c.profiles, "-") + ",";
      if (c.error) {
        csv += ",,," + Quote(*c.error) + "\n";
      } else {
        csv += std::to_string(c.n_target) + "," + std::to_string(c.n_nontarget) +
               "," + Percent(c.eer) + ",\n";
      }
    }
    if (!any) continue;
    auto it = r.summary.mean_eer.find(name);
    if (it != r.summary.mean_eer.end())
      csv += "average,,,," + Percent(it->second) + ",\n";
    (*out)["eer_" + name + ".csv"] = csv;
  }

  if (!r.identification.empty()) {
    std::string csv = "k";
    for (const auto& c : r.identification) csv += "," + Quote(CellLabel(c.model, c.profile));
    csv += ",average\n";
    for (size_t k : kReportRanks) {
      csv += std::to_string(k);
      for (const auto& c : r.identification)
        csv += "," + (!c.error && k <= c.hits.size() ? Percent(c.hits[k - 1]) : "");
      const auto& avg = r.summary.cmc;
      csv += "," + (avg && k <= avg->hits.size() ? Percent(avg->hits[k - 1]) : "");
      csv += "\n";
    }
    (*out)["cmc_hit_rate.csv"] = csv;

    std::string sys =
        "model,profile,gallery_size,n_probes,auc_cmc,mean_rank,chance_rank1_percent,"
        "chance_auc_cmc,chance_mean_rank,error\n";
    for (const auto& c : r.identification) {
      sys += Quote(c.model) + "," + std::to_string(c.profile) + ",";
      if (c.error) {
        sys += ",,,,,,," + Quote(*c.error) + "\n";
        continue;
      }
      sys += std::to_string(c.gallery_size) + "," + std::to_string(c.n_probes) + "," +
             Fixed(c.auc_cmc, 4) + "," + Fixed(c.mean_rank, 2) + "," +
             Percent(c.chance.rank1) + "," + Fixed(c.chance.auc_cmc, 4) + "," +
             Fixed(c.chance.mean_rank, 2) + ",\n";
    }
    const auto& s = r.summary;
    if (s.auc_cmc && s.mean_rank && s.chance)
      sys += "average,,,," + Fixed(*s.auc_cmc, 4) + "," + Fixed(*s.mean_rank, 2) + "," +
             Percent(s.chance->rank1) + "," + Fixed(s.chance->auc_cmc, 4) + "," +
             Fixed(s.chance->mean_rank, 2) + ",\n";
    (*out)["system_level.csv"] = sys;
  }

  if (!r.subspace.empty()) {
    std::string csv = "model,profile,n,pairing,cca_mean_top10,p_mse,p_cosine,error\n";
    auto opt = [](const std::optional<double>& v, int d) {
      return v ? Fixed(*v, d) : std::string();
    };
    for (const auto& c : r.subspace) {
      csv += Quote(c.model) + "," + std::to_string(c.profile) + ",";
      if (c.error) {
        csv += ",,,,," + Quote(*c.error) + "\n";
        continue;
      }
      csv += std::to_string(c.n) + "," + c.pairing + "," + Fixed(c.cca_mean_top10, 4) +
             "," + opt(c.p_mse, 6) + "," + opt(c.p_cosine, 4) + ",\n";
    }
    const auto& s = r.summary;
    if (s.cca_mean_top10)
      csv += "average,,,," + Fixed(*s.cca_mean_top10, 4) + "," + opt(s.p_mse, 6) + "," +
             opt(s.p_cosine, 4) + ",\n";
    (*out)["embedding_similarity.csv"] = csv;
  }
}

std::string CmcCsv(const std::vector<double>& hits) {
  std::string csv = "k,hit_rate\n";
  for (size_t k = 1; k <= hits.size(); ++k)
    csv += std::to_string(k) + "," + Shortest(hits[k - 1]) + "\n";
  return csv;
}

void RenderPlots(const EvalReport& r, std::map<std::string, std::string>* out) {
  for (const auto& c : r.identification) {
    if (c.error) continue;
    (*out)["cmc_" + SafeName(c.model) + "_p" + std::to_string(c.profile) + ".csv"] =
        CmcCsv(c.hits);
  }
  if (r.summary.cmc) (*out)["cmc_average.csv"] = CmcCsv(r.summary.cmc->hits);
  for (const auto& c : r.verification) {
    if (c.error) continue;
    std::string csv = "far,frr,threshold\n";
    for (const auto& p : c.roc)
      csv += Shortest(p.far) + "," + Shortest(p.frr) + "," + Shortest(p.threshold) + "\n";
    (*out)["roc_" + std::string(ScenarioName(c.scenario)) + "_" + SafeName(c.model) +
           "_p" + JoinProfiles(c.profiles, "_") + ".csv"] = csv;
  }
}

}  // namespace

std::map<std::string, std::string> RenderReport(const EvalReport& report,
                                                ReportFormat format) {
  std::map<std::string, std::string> out;
  switch (format) {
    case ReportFormat::kJson:
      out["report.json"] = EncodeReportJson(report);
      break;
    case ReportFormat::kCsvTables:
      RenderTables(report, &out);
      break;
    case ReportFormat::kPlotCsv:
      RenderPlots(report, &out);
      break;
  }
  return out;
}

std::vector<std::filesystem::path> EmitReport(const EvalReport& report,
                                              ReportFormat format,
                                              const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec)
    throw Error(ErrorCode::kIoFailure, "cannot create " + dir.string() + ": " + ec.message());
  std::vector<std::filesystem::path> written;
  for (const auto& [name, text] : RenderReport(report, format)) {
    written.push_back(dir / name);
    WriteFileBytes(written.back(), text);
  }
  return written;
}

}  // namespace leakmeter
