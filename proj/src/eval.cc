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

#include "leakmeter/eval.h"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cstdio>
#include <functional>
#include <set>
#include <thread>

#include "json.hpp"
#include "leakmeter/error.h"
#include "leakmeter/ingestion.h"
#include "leakmeter/log.h"
#include "leakmeter/rng.h"
#include "leakmeter/subspace.h"

namespace leakmeter {

using Json = nlohmann::ordered_json;

EmbeddingSource ParseEmbeddingSource(std::string_view spec) {
  auto bad = [&](const std::string& why) {
    return Error(ErrorCode::kConfigInvalid,
                 "embedding spec '" + std::string(spec) + "': " + why +
                     " (want model:condition[:profile]=path)");
  };
  const size_t eq = spec.find('=');
  if (eq == std::string_view::npos || eq + 1 == spec.size())
    throw bad("missing path");
  EmbeddingSource src;
  src.path = std::string(spec.substr(eq + 1));
  std::vector<std::string_view> parts;
  std::string_view key = spec.substr(0, eq);
  for (size_t start = 0;;) {
    const size_t colon = key.find(':', start);
    parts.push_back(key.substr(start, colon - start));
    if (colon == std::string_view::npos) break;
    start = colon + 1;
  }
  if (parts.size() < 2 || parts.size() > 3) throw bad("wrong number of fields");
  if (parts[0].empty()) throw bad("empty model name");
  src.model = std::string(parts[0]);
  try {
    src.condition = ParseCondition(parts[1]);
  } catch (const Error&) {
    throw bad("unknown condition");
  }
  if (parts.size() == 3) {
    int p = 0;
    auto [ptr, ec] =
        std::from_chars(parts[2].data(), parts[2].data() + parts[2].size(), p);
    if (ec != std::errc() || ptr != parts[2].data() + parts[2].size())
      throw bad("profile is not an integer");
    src.profile = p;
  }
  if (src.condition == Condition::kOrig && src.profile)
    throw bad("orig embeddings take no profile");
  return src;
}

std::string FormatEmbeddingSource(const EmbeddingSource& s) {
  std::string out = s.model + ":" + std::string(ConditionName(s.condition));
  if (s.profile) out += ":" + std::to_string(*s.profile);
  return out + "=" + s.path;
}

namespace {

Json OptionalJson(const std::optional<double>& v) {
  return v ? Json(*v) : Json(nullptr);
}

template <typename T>
void Take(const Json& j, const char* key, T* dst) {
  if (j.contains(key)) j.at(key).get_to(*dst);
}

void TakeRatio(const Json& j, const char* key, std::optional<double>* dst) {
  if (!j.contains(key)) return;
  if (j.at(key).is_null())
    dst->reset();
  else
    *dst = j.at(key).get<double>();
}

std::string Hex64(uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace

std::string EncodeEvalConfigJson(const EvalConfig& c) {
  Json j;
  j["manifest"] = c.manifest;
  auto emb = Json::array();
  for (const auto& s : c.embeddings) emb.push_back(FormatEmbeddingSource(s));
  j["embeddings"] = emb;
  j["trials"] = c.trials;
  auto scen = Json::array();
  for (auto s : c.scenarios) scen.push_back(ScenarioName(s));
  j["scenarios"] = scen;
  j["profiles"] = c.profiles;
  j["metrics"] = {{"verification", c.metrics.verification},
                  {"identification", c.metrics.identification},
                  {"subspace", c.metrics.subspace}};
  j["out"] = c.out;
  j["seed"] = c.seed;
  j["nontarget_ratio"] = OptionalJson(c.nontarget_ratio);
  j["xprof_ratio"] = OptionalJson(c.xprof_ratio);
  j["include_cross_speaker"] = c.include_cross_speaker;
  j["cca_ridge"] = c.cca_ridge;
  j["deid_only"] = c.deid_only;
  j["jobs"] = c.jobs;
  return j.dump(2) + "\n";
}

EvalConfig ParseEvalConfigJson(std::string_view text, EvalConfig base) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw Error(ErrorCode::kConfigInvalid, std::string("config: ") + e.what());
  }
  if (!j.is_object())
    throw Error(ErrorCode::kConfigInvalid, "config must be a JSON object");
  static const std::set<std::string> kKnown = {
      "manifest", "embeddings", "trials", "scenarios", "profiles",
      "metrics", "out", "seed", "nontarget_ratio", "xprof_ratio",
      "include_cross_speaker", "cca_ridge", "deid_only", "jobs"};
  for (const auto& [key, value] : j.items())
    if (!kKnown.count(key))
      throw Error(ErrorCode::kConfigInvalid, "config: unknown field '" + key + "'");
  try {
    Take(j, "manifest", &base.manifest);
    if (j.contains("embeddings")) {
      base.embeddings.clear();
      for (const auto& e : j.at("embeddings"))
        base.embeddings.push_back(ParseEmbeddingSource(e.get<std::string>()));
    }
    Take(j, "trials", &base.trials);
    if (j.contains("scenarios")) {
      base.scenarios.clear();
      for (const auto& s : j.at("scenarios"))
        base.scenarios.push_back(ParseScenario(s.get<std::string>()));
    }
    Take(j, "profiles", &base.profiles);
    if (j.contains("metrics")) {
      const Json& m = j.at("metrics");
      Take(m, "verification", &base.metrics.verification);
      Take(m, "identification", &base.metrics.identification);
      Take(m, "subspace", &base.metrics.subspace);
    }
    Take(j, "out", &base.out);
    Take(j, "seed", &base.seed);
    TakeRatio(j, "nontarget_ratio", &base.nontarget_ratio);
    TakeRatio(j, "xprof_ratio", &base.xprof_ratio);
    Take(j, "include_cross_speaker", &base.include_cross_speaker);
    Take(j, "cca_ridge", &base.cca_ridge);
    Take(j, "deid_only", &base.deid_only);
    Take(j, "jobs", &base.jobs);
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kConfigInvalid, std::string("config: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kConfigInvalid) throw;
    throw Error(ErrorCode::kConfigInvalid, std::string("config: ") + e.what());
  }
  return base;
}

uint64_t DigestInputs(const EvalInputs& inputs) {
  uint64_t h = Fnv1a64(EncodeManifestJsonl(inputs.manifest));
  for (const auto& [model, emb] : inputs.models) {
    h = Fnv1a64(model, h);
    // Row order depends on how the files were listed; hash in id order.
    std::vector<size_t> order(emb.rows());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](size_t a, size_t b) { return emb.ids[a] < emb.ids[b]; });
    EmbeddingMatrix sorted;
    sorted.sid_model_tag = emb.sid_model_tag;
    sorted.dim = emb.dim;
    for (size_t i : order) {
      sorted.ids.push_back(emb.ids[i]);
      auto row = emb.row(i);
      sorted.values.insert(sorted.values.end(), row.begin(), row.end());
    }
    h = Fnv1a64(EncodeXvec(sorted), h);
  }
  if (inputs.trials) h = Fnv1a64(EncodeTrialsCsv(*inputs.trials, inputs.manifest), h);
  return h;
}

EvalInputs LoadEvalInputs(const EvalConfig& config) {
  if (config.manifest.empty())
    throw Error(ErrorCode::kConfigInvalid, "no manifest given");
  if (config.embeddings.empty())
    throw Error(ErrorCode::kConfigInvalid, "no embeddings given");
  EvalInputs in;
  Log(LogLevel::kInfo, "reading manifest " + config.manifest);
  in.manifest = ReadManifest(config.manifest, config.deid_only);

  std::map<std::string, std::vector<EmbeddingMatrix>> parts;
  for (const auto& src : config.embeddings) {
    Log(LogLevel::kInfo, "reading " + FormatEmbeddingSource(src));
    EmbeddingMatrix emb = ReadEmbeddings(src.path);
    for (const auto& id : emb.ids) {
      auto pos = in.manifest.Find(id);
      if (!pos) continue;  // reported as an orphan by validation
      const SegmentRecord& r = in.manifest.at(*pos);
      if (r.condition != src.condition ||
          (src.profile && r.profile_id != src.profile))
        throw Error(ErrorCode::kCorpusInvalid,
                    src.path + ": segment " + id + " is not " +
                        std::string(ConditionName(src.condition)) +
                        (src.profile ? " profile " + std::to_string(*src.profile)
                                     : std::string()));
    }
    parts[src.model].push_back(std::move(emb));
  }
  for (auto& [model, list] : parts) {
    try {
      in.models[model] = ConcatEmbeddings(list);
    } catch (const Error& e) {
      throw Error(ErrorCode::kCorpusInvalid, model + ": " + e.what());
    }
  }
  if (!config.trials.empty())
    in.trials = ParseTrialsCsv(ReadFileBytes(config.trials), in.manifest);
  in.digest = DigestInputs(in);
  return in;
}

namespace {

void RunParallel(size_t n, int jobs, const std::function<void(size_t)>& fn) {
  const size_t workers = std::min<size_t>(std::max(jobs, 1), std::max<size_t>(n, 1));
  std::atomic<size_t> next{0};
  auto loop = [&] {
    for (size_t i = next++; i < n; i = next++) fn(i);
  };
  if (workers <= 1) {
    loop();
    return;
  }
  std::vector<std::thread> pool;
  for (size_t w = 0; w < workers; ++w) pool.emplace_back(loop);
  for (auto& t : pool) t.join();
}

std::string DescribeFailure() {
  try {
    throw;
  } catch (const std::exception& e) {
    return e.what();
  } catch (...) {
    return "unknown failure";
  }
}

std::string Summarize(const ValidationReport& v) {
  std::string out;
  auto add = [&](const char* what, const std::vector<std::string>& items) {
    if (items.empty()) return;
    if (!out.empty()) out += "; ";
    out += std::to_string(items.size()) + " " + what + " (first: " +
           items.front() + ")";
  };
  add("missing embeddings", v.missing_embeddings);
  add("orphan embeddings", v.orphan_embeddings);
  add("non-finite rows", v.non_finite);
  add("duplicate ids", v.duplicate_ids);
  add("dimension issues", v.dimension_issues);
  add("speakers without original", v.speakers_without_original);
  return out;
}

std::string ConfigHash(const EvalConfig& config, const std::vector<int>& profiles,
                       uint64_t digest) {
  EvalConfig c = config;
  c.manifest.clear();
  c.trials.clear();
  c.out.clear();
  c.jobs = 1;
  c.profiles = profiles;
  for (auto& s : c.embeddings) s.path.clear();
  std::sort(c.embeddings.begin(), c.embeddings.end(),
            [](const EmbeddingSource& a, const EmbeddingSource& b) {
              return FormatEmbeddingSource(a) < FormatEmbeddingSource(b);
            });
  return Hex64(Fnv1a64(EncodeEvalConfigJson(c) + Hex64(digest)));
}

template <typename Cell>
Cell KeyOnly(const std::string& model, int profile,
             std::optional<std::string> error = std::nullopt) {
  Cell cell;
  cell.model = model;
  cell.profile = profile;
  cell.error = std::move(error);
  return cell;
}

struct TrialJob {
  Scenario scenario;
  std::vector<int> profiles;
  std::optional<TrialList> list;
  std::optional<std::string> error;
};

}  // namespace

ReportSummary Summarize(const EvalReport& report) {
  ReportSummary s;
  std::map<std::string, std::pair<double, size_t>> eer;
  for (const auto& c : report.verification) {
    if (c.error) continue;
    auto& acc = eer[std::string(ScenarioName(c.scenario))];
    acc.first += c.eer;
    ++acc.second;
  }
  for (const auto& [name, acc] : eer) s.mean_eer[name] = acc.first / acc.second;

  std::vector<CmcCurve> curves;
  double auc = 0.0, rank = 0.0;
  ChanceLevels chance;
  for (const auto& c : report.identification) {
    if (c.error) continue;
    curves.push_back({c.hits, c.n_probes, c.gallery_size});
    auc += c.auc_cmc;
    rank += c.mean_rank;
    chance.rank1 += c.chance.rank1;
    chance.mean_rank += c.chance.mean_rank;
    chance.auc_cmc += c.chance.auc_cmc;
  }
  if (!curves.empty()) {
    const double n = static_cast<double>(curves.size());
    s.auc_cmc = auc / n;
    s.mean_rank = rank / n;
    s.chance = ChanceLevels{chance.rank1 / n, chance.mean_rank / n,
                            chance.auc_cmc / n};
    const bool same_g = std::all_of(curves.begin(), curves.end(), [&](const auto& c) {
      return c.gallery_size == curves.front().gallery_size;
    });
    if (same_g) s.cmc = AverageCurves(curves);
  }

  double cca = 0.0, mse = 0.0, cosine = 0.0;
  size_t n_cca = 0, n_proc = 0;
  for (const auto& c : report.subspace) {
    if (c.error) continue;
    cca += c.cca_mean_top10;
    ++n_cca;
    if (c.p_mse && c.p_cosine) {
      mse += *c.p_mse;
      cosine += *c.p_cosine;
      ++n_proc;
    }
  }
  if (n_cca) s.cca_mean_top10 = cca / n_cca;
  if (n_proc) {
    s.p_mse = mse / n_proc;
    s.p_cosine = cosine / n_proc;
  }
  return s;
}

EvalReport RunEval(const EvalInputs& inputs, const EvalConfig& config) {
  if (inputs.models.empty())
    throw Error(ErrorCode::kConfigInvalid, "no embeddings given");
  if (config.jobs < 1) throw Error(ErrorCode::kConfigInvalid, "jobs must be >= 1");
  if (config.cca_ridge < 0.0)
    throw Error(ErrorCode::kConfigInvalid, "cca_ridge must be >= 0");
  if (!inputs.trials && config.metrics.verification && config.scenarios.empty())
    throw Error(ErrorCode::kConfigInvalid, "no scenarios requested");
  for (auto ratio : {config.nontarget_ratio, config.xprof_ratio})
    if (ratio && !(*ratio > 0.0))
      throw Error(ErrorCode::kConfigInvalid, "trial ratios must be > 0");

  const std::vector<int> available = inputs.manifest.ProfileIds();
  std::vector<int> profiles = config.profiles;
  if (profiles.empty())
    profiles.assign(available.begin(),
                    available.begin() + std::min<size_t>(2, available.size()));
  for (int p : profiles) {
    if (!std::binary_search(available.begin(), available.end(), p)) {
      std::string have;
      for (int a : available) have += (have.empty() ? "" : ",") + std::to_string(a);
      throw Error(ErrorCode::kConfigInvalid,
                  "profile " + std::to_string(p) + " not in manifest (has " +
                      (have.empty() ? "none" : have) + ")");
    }
  }
  if (std::set<int>(profiles.begin(), profiles.end()).size() != profiles.size())
    throw Error(ErrorCode::kConfigInvalid, "profiles listed twice");

  for (const auto& [model, emb] : inputs.models) {
    ValidationReport v = ValidateCorpus(inputs.manifest, emb);
    if (!v.ok())
      throw Error(ErrorCode::kCorpusInvalid, model + ": " + Summarize(v));
  }

  EvalReport report;
  report.provenance.seed = config.seed;
  report.provenance.config_hash = ConfigHash(config, profiles, inputs.digest);
  report.profiles = profiles;
  for (const auto& [model, emb] : inputs.models) report.models.push_back(model);

  // Trial lists are shared by all models.
  std::vector<TrialJob> trial_jobs;
  if (config.metrics.verification) {
    if (inputs.trials) {
      for (const auto& list : *inputs.trials) {
        if (std::find(config.scenarios.begin(), config.scenarios.end(),
                      list.scenario) == config.scenarios.end())
          continue;
        trial_jobs.push_back({list.scenario, list.profiles, list, std::nullopt});
      }
    } else {
      TrialOptions opts;
      opts.seed = config.seed;
      opts.max_nontarget_ratio = config.nontarget_ratio;
      opts.xprof_ratio = config.xprof_ratio;
      opts.include_cross_speaker = config.include_cross_speaker;
      for (Scenario s : config.scenarios) {
        if (s == Scenario::kXprof) {
          TrialJob job{s, profiles, std::nullopt, std::nullopt};
          if (profiles.size() < 2) {
            job.error = std::string(ErrorCodeName(ErrorCode::kEmptyScenario)) +
                        ": cross-profile needs two profiles";
            job.profiles = profiles;
          } else {
            job.profiles = {profiles[0], profiles[1]};
          }
          trial_jobs.push_back(std::move(job));
        } else {
          for (int p : profiles) trial_jobs.push_back({s, {p}, std::nullopt, std::nullopt});
        }
      }
      RunParallel(trial_jobs.size(), config.jobs, [&](size_t i) {
        TrialJob& job = trial_jobs[i];
        if (job.error) return;
        try {
          switch (job.scenario) {
            case Scenario::kSet1:
              job.list = GenerateSet1(inputs.manifest, job.profiles[0], opts);
              break;
            case Scenario::kSet2:
              job.list = GenerateSet2(inputs.manifest, job.profiles[0], opts);
              break;
            case Scenario::kXprof:
              job.list = GenerateCrossProfile(inputs.manifest, job.profiles[0],
                                              job.profiles[1], opts);
              break;
          }
        } catch (...) {
          job.error = DescribeFailure();
        }
      });
    }
  }

  for (const auto& model : report.models) {
    for (const auto& job : trial_jobs) {
      VerificationCell cell;
      cell.model = model;
      cell.scenario = job.scenario;
      cell.profiles = job.profiles;
      cell.error = job.error;
      report.verification.push_back(std::move(cell));
    }
    if (config.metrics.identification)
      for (int p : profiles) report.identification.push_back(KeyOnly<IdentificationCell>(model, p));
    if (config.metrics.subspace)
      for (int p : profiles) report.subspace.push_back(KeyOnly<SubspaceCell>(model, p));
  }

  std::vector<std::function<void()>> tasks;
  for (size_t i = 0; i < report.verification.size(); ++i) {
    if (report.verification[i].error) continue;
    tasks.push_back([&, i] {
      VerificationCell& cell = report.verification[i];
      const TrialList& list = *trial_jobs[i % trial_jobs.size()].list;
      const EmbeddingMatrix& emb = inputs.models.at(cell.model);
      ScoreSet scores = ScoreTrials(list, inputs.manifest, emb, 1);
      EerResult eer = ComputeEer(scores);
      cell.n_target = eer.n_target;
      cell.n_nontarget = eer.n_nontarget;
      cell.eer = eer.eer;
      cell.threshold = eer.threshold;
      cell.roc = DecimateRoc(eer.roc, kMaxRocPoints);
    });
  }
  for (auto& cell : report.identification) {
    tasks.push_back([&] {
      const EmbeddingMatrix& emb = inputs.models.at(cell.model);
      GalleryAndProbes gp = BuildGallery(inputs.manifest, emb,
                                         {Condition::kOrig, std::nullopt},
                                         {Condition::kDeid, cell.profile});
      std::vector<size_t> ranks = RankProbes(gp.gallery, gp.probes, 1);
      CmcCurve curve = CmcFromRanks(ranks, gp.gallery.size());
      cell.gallery_size = curve.gallery_size;
      cell.n_probes = curve.n_probes;
      cell.auc_cmc = AucCmc(curve);
      cell.mean_rank = MeanRank(ranks);
      cell.chance = ChanceLevelsFor(gp.gallery, gp.probes);
      cell.hits = std::move(curve.hits);
    });
  }
  for (auto& cell : report.subspace) {
    tasks.push_back([&] {
      const EmbeddingMatrix& emb = inputs.models.at(cell.model);
      PairedEmbeddings pairs = PairEmbeddings(inputs.manifest, emb, cell.profile);
      SubspaceReport sub = ComputeSubspaceReport(pairs, {10, config.cca_ridge});
      cell.n = sub.n;
      cell.d1 = sub.d1;
      cell.d2 = sub.d2;
      cell.pairing = std::string(PairingModeName(sub.pairing));
      cell.ridge = sub.ridge;
      cell.cca_mean_top10 = sub.cca_mean_top10;
      cell.p_mse = sub.p_mse;
      cell.p_cosine = sub.p_cosine;
    });
  }
  // Error capture goes through a per-task slot so cells stay isolated.
  std::vector<std::optional<std::string>> failures(tasks.size());
  RunParallel(tasks.size(), config.jobs, [&](size_t i) {
    try {
      tasks[i]();
    } catch (...) {
      failures[i] = DescribeFailure();
    }
  });
  // Map failures back onto the cells in task order.
  size_t t = 0;
  for (auto& cell : report.verification)
    if (!cell.error) {
      if (failures[t]) {
        VerificationCell fresh;
        fresh.model = cell.model;
        fresh.scenario = cell.scenario;
        fresh.profiles = cell.profiles;
        fresh.error = failures[t];
        cell = std::move(fresh);
      }
      ++t;
    }
  for (auto& cell : report.identification) {
    if (failures[t]) cell = KeyOnly<IdentificationCell>(cell.model, cell.profile, failures[t]);
    ++t;
  }
  for (auto& cell : report.subspace) {
    if (failures[t]) cell = KeyOnly<SubspaceCell>(cell.model, cell.profile, failures[t]);
    ++t;
  }
  for (const auto& c : report.verification)
    if (c.error)
      Log(LogLevel::kWarn,
          c.model + "/" + std::string(ScenarioName(c.scenario)) + ": " + *c.error);
  for (const auto& c : report.identification)
    if (c.error)
      Log(LogLevel::kWarn, c.model + "/cmc/p" + std::to_string(c.profile) + ": " + *c.error);
  for (const auto& c : report.subspace)
    if (c.error)
      Log(LogLevel::kWarn,
          c.model + "/subspace/p" + std::to_string(c.profile) + ": " + *c.error);

  report.summary = Summarize(report);
  return report;
}

EvalReport RunEval(const EvalConfig& config) {
  return RunEval(LoadEvalInputs(config), config);
}

}  // namespace leakmeter
