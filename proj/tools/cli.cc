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

#include "cli.h"

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "leakmeter/error.h"
#include "leakmeter/eval.h"
#include "leakmeter/ingestion.h"
#include "leakmeter/log.h"
#include "leakmeter/report.h"
#include "leakmeter/synthsim.h"
#include "leakmeter/trialgen.h"
#include "leakmeter/verify.h"

namespace leakmeter {
namespace {

namespace fs = std::filesystem;

// Flag values that parse but make no sense.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::vector<int> ParseProfiles(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      size_t used = 0;
      int p = std::stoi(item, &used);
      if (used != item.size()) throw std::invalid_argument(item);
      out.push_back(p);
    } catch (const std::exception&) {
      throw UsageError("--profiles: '" + item + "' is not an integer");
    }
  }
  if (out.empty()) throw UsageError("--profiles is empty");
  return out;
}

std::optional<double> ParseRatio(const std::string& text, const char* flag) {
  if (text == "none" || text == "exhaustive") return std::nullopt;
  if (text == "reference") return kReferenceNontargetRatio;
  try {
    size_t used = 0;
    double v = std::stod(text, &used);
    if (used != text.size() || !(v > 0.0)) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw UsageError(std::string(flag) + ": want a positive number, 'reference' or 'none'");
  }
}

std::vector<Scenario> ParseScenarios(const std::vector<std::string>& names) {
  std::vector<Scenario> out;
  for (const auto& n : names) {
    try {
      out.push_back(ParseScenario(n));
    } catch (const Error&) {
      throw UsageError("--scenario: unknown scenario '" + n + "' (set1, set2, xprof)");
    }
  }
  return out;
}

std::vector<EmbeddingSource> ParseSources(const std::vector<std::string>& specs) {
  std::vector<EmbeddingSource> out;
  for (const auto& s : specs) {
    try {
      out.push_back(ParseEmbeddingSource(s));
    } catch (const Error& e) {
      throw UsageError(std::string("--emb: ") + e.what());
    }
  }
  return out;
}

std::map<std::string, EmbeddingMatrix> LoadModels(
    const std::vector<EmbeddingSource>& sources) {
  std::map<std::string, std::vector<EmbeddingMatrix>> parts;
  for (const auto& s : sources) parts[s.model].push_back(ReadEmbeddings(s.path));
  std::map<std::string, EmbeddingMatrix> out;
  for (auto& [model, list] : parts) out[model] = ConcatEmbeddings(list);
  return out;
}

void PrintList(std::ostream& out, const char* what, const std::vector<std::string>& items) {
  if (items.empty()) return;
  out << "  " << what << ": " << items.size();
  for (size_t i = 0; i < std::min<size_t>(items.size(), 5); ++i)
    out << (i ? ", " : " (") << items[i];
  out << (items.size() > 5 ? ", ...)" : ")") << "\n";
}

std::vector<TrialList> GenerateLists(const CorpusManifest& manifest,
                                     const std::vector<Scenario>& scenarios,
                                     const std::vector<int>& profiles,
                                     const TrialOptions& opts) {
  std::vector<TrialList> lists;
  for (Scenario s : scenarios) {
    switch (s) {
      case Scenario::kSet1:
        for (int p : profiles) lists.push_back(GenerateSet1(manifest, p, opts));
        break;
      case Scenario::kSet2:
        for (int p : profiles) lists.push_back(GenerateSet2(manifest, p, opts));
        break;
      case Scenario::kXprof:
        if (profiles.size() < 2)
          throw Error(ErrorCode::kConfigInvalid, "xprof needs two profiles");
        lists.push_back(GenerateCrossProfile(manifest, profiles[0], profiles[1], opts));
        break;
    }
  }
  return lists;
}

std::string ProfileLabel(const std::vector<int>& profiles) {
  std::string out;
  for (int p : profiles) out += (out.empty() ? "P" : "-P") + std::to_string(p);
  return out;
}

}  // namespace

int RunCli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Identity-leakage evaluation for de-identified speaker embeddings",
               args.empty() ? "leakmeter" : args.front()};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kToolVersion));

  // validate
  auto* validate = app.add_subcommand("validate", "Check a manifest against embedding files");
  std::string v_manifest;
  std::vector<std::string> v_emb;
  bool v_deid_only = false;
  validate->add_option("--manifest", v_manifest, "Manifest (JSON Lines)")->required();
  validate->add_option("--emb", v_emb, "model:condition[:profile]=path (repeatable)");
  validate->add_flag("--deid-only", v_deid_only, "Allow speakers without original segments");

  // simulate
  auto* simulate = app.add_subcommand("simulate", "Write a synthetic corpus");
  std::string s_preset = "tiny", s_out;
  std::optional<uint64_t> s_seed;
  std::optional<size_t> s_speakers, s_dim;
  std::optional<double> s_leak, s_noise, s_instability, s_spread;
  std::optional<bool> s_rotate;
  bool s_shuffle = false;
  simulate->add_option("--preset", s_preset, "paper_shape, tiny, decoupling_a, decoupling_b")
      ->capture_default_str();
  simulate->add_option("--out", s_out, "Output directory")->required();
  simulate->add_option("--seed", s_seed, "Master seed (default: the preset's)");
  simulate->add_option("--speakers", s_speakers, "Number of speakers");
  simulate->add_option("--dim", s_dim, "Embedding dimension");
  simulate->add_option("--leak", s_leak, "Identity leak lambda in [0,1]");
  simulate->add_option("--noise", s_noise, "Within-speaker noise");
  simulate->add_option("--instability", s_instability, "Per-segment profile drift");
  simulate->add_option("--spread", s_spread, "Pseudo-profile spread");
  simulate->add_flag("--rotate,!--no-rotate", s_rotate, "Rotate the de-identified space");
  simulate->add_flag("--shuffle-labels", s_shuffle,
                     "Permute de-identified speaker labels (random baseline)");

  // trials
  auto* trials = app.add_subcommand("trials", "Generate trial lists");
  std::string t_manifest, t_out, t_profiles, t_ratio = "none", t_xratio = "2";
  std::vector<std::string> t_scen;
  uint64_t t_seed = 0;
  bool t_cross = false, t_deid_only = false;
  trials->add_option("--manifest", t_manifest, "Manifest (JSON Lines)")->required();
  trials->add_option("--out", t_out, "Trial CSV (default: stdout)");
  trials->add_option("--scenario", t_scen, "set1, set2, xprof (repeatable; default all)");
  trials->add_option("--profiles", t_profiles, "Profiles, e.g. 1,2 (default: first two)");
  trials->add_option("--seed", t_seed, "Seed for non-target sampling");
  trials->add_option("--nontarget-ratio", t_ratio, "Cap per target: number, 'reference' or 'none'")
      ->capture_default_str();
  trials->add_option("--xprof-ratio", t_xratio, "Cross-profile non-targets per target")
      ->capture_default_str();
  trials->add_flag("--cross-speaker", t_cross, "Cross-profile: add cross-speaker non-targets");
  trials->add_flag("--deid-only", t_deid_only, "Allow speakers without original segments");

  // score
  auto* score = app.add_subcommand("score", "Cosine-score a trial file");
  std::string c_manifest, c_trials, c_out;
  std::vector<std::string> c_emb;
  int c_jobs = 1;
  bool c_deid_only = false;
  score->add_option("--manifest", c_manifest, "Manifest (JSON Lines)")->required();
  score->add_option("--trials", c_trials, "Trial CSV")->required();
  score->add_option("--emb", c_emb, "model:condition[:profile]=path (one model)")->required();
  score->add_option("--out", c_out, "Score CSV (default: stdout)");
  score->add_option("--jobs", c_jobs, "Worker threads")->check(CLI::PositiveNumber);
  score->add_flag("--deid-only", c_deid_only, "Allow speakers without original segments");

  // eval
  auto* eval = app.add_subcommand("eval", "Run the full metric suite");
  std::string e_config, e_manifest, e_trials, e_out, e_profiles, e_ratio, e_xratio;
  std::vector<std::string> e_emb, e_scen, e_format;
  std::optional<uint64_t> e_seed;
  std::optional<int> e_jobs;
  std::optional<double> e_ridge;
  bool e_cross = false, e_no_ver = false, e_no_ident = false, e_no_sub = false;
  bool e_deid_only = false;
  eval->add_option("--config", e_config, "JSON config; flags override it");
  eval->add_option("--manifest", e_manifest, "Manifest (JSON Lines)");
  eval->add_option("--emb", e_emb, "model:condition[:profile]=path (repeatable)");
  eval->add_option("--trials", e_trials, "Use this trial CSV instead of generating");
  eval->add_option("--scenario", e_scen, "set1, set2, xprof (repeatable)");
  eval->add_option("--profiles", e_profiles, "Profiles, e.g. 1,2");
  eval->add_option("--seed", e_seed, "Seed");
  eval->add_option("--jobs", e_jobs, "Concurrent cells")->check(CLI::PositiveNumber);
  eval->add_option("--out", e_out, "Output directory (default: JSON on stdout)");
  eval->add_option("--format", e_format, "json, csv_tables, plot_csv (repeatable)");
  eval->add_option("--nontarget-ratio", e_ratio, "Number, 'reference' or 'none'");
  eval->add_option("--xprof-ratio", e_xratio, "Number or 'none'");
  eval->add_option("--ridge", e_ridge, "Relative CCA ridge");
  eval->add_flag("--cross-speaker", e_cross, "Cross-profile: add cross-speaker non-targets");
  eval->add_flag("--no-verification", e_no_ver, "Skip EER cells");
  eval->add_flag("--no-identification", e_no_ident, "Skip CMC cells");
  eval->add_flag("--no-subspace", e_no_sub, "Skip CCA/Procrustes cells");
  eval->add_flag("--deid-only", e_deid_only, "Allow speakers without original segments");

  // report
  auto* report = app.add_subcommand("report", "Render a report JSON");
  std::string r_in, r_out;
  std::vector<std::string> r_format;
  report->add_option("--in", r_in, "report.json")->required();
  report->add_option("--out", r_out, "Output directory")->required();
  report->add_option("--format", r_format, "json, csv_tables, plot_csv (repeatable)");

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    if (!rev.empty()) rev.pop_back();
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsageError;
  }

  try {
    if (validate->parsed()) {
      CorpusManifest manifest = ReadManifest(v_manifest, v_deid_only);
      out << "segments: " << manifest.size() << " (orig "
          << manifest.CountCondition(Condition::kOrig) << ", deid "
          << manifest.CountCondition(Condition::kDeid) << ")\n"
          << "speakers: " << manifest.speakers().size() << "\n"
          << "profiles:";
      for (int p : manifest.ProfileIds()) out << " " << p;
      out << "\n";
      bool ok = true;
      auto sources = ParseSources(v_emb);
      for (const auto& [model, emb] : LoadModels(sources)) {
        ValidationReport v = ValidateCorpus(manifest, emb);
        out << "model " << model << " (dim " << emb.dim << ", " << emb.rows()
            << " rows): " << (v.ok() ? "ok" : "INVALID") << "\n";
        PrintList(out, "missing embeddings", v.missing_embeddings);
        PrintList(out, "orphan embeddings", v.orphan_embeddings);
        PrintList(out, "non-finite rows", v.non_finite);
        PrintList(out, "duplicate ids", v.duplicate_ids);
        PrintList(out, "dimension issues", v.dimension_issues);
        PrintList(out, "speakers without original", v.speakers_without_original);
        ok = ok && v.ok();
      }
      if (sources.empty() && !v_deid_only) {
        auto orphans = manifest.SpeakersWithoutOriginal();
        PrintList(out, "speakers without original", orphans);
        ok = orphans.empty();
      }
      if (!ok) {
        err << "validate: corpus is invalid\n";
        return kExitDomainError;
      }
      return kExitOk;
    }

    if (simulate->parsed()) {
      SimConfig cfg = Preset(s_preset);
      if (s_seed) cfg.seed = *s_seed;
      if (s_speakers) cfg.n_speakers = *s_speakers;
      if (s_dim) cfg.dim = *s_dim;
      if (s_leak) cfg.leak = *s_leak;
      if (s_noise) cfg.within_noise = *s_noise;
      if (s_instability) cfg.profile_instability = *s_instability;
      if (s_spread) cfg.pseudo_spread = *s_spread;
      if (s_rotate) cfg.rotate_manifold = *s_rotate;
      SimOutput sim = Simulate(cfg);
      std::error_code ec;
      fs::create_directories(s_out, ec);
      if (ec) throw Error(ErrorCode::kIoFailure, "cannot create " + s_out);
      const fs::path dir(s_out);
      CorpusManifest manifest =
          s_shuffle ? ShuffleLabels(sim.manifest, cfg.seed)
                    : sim.manifest;
      WriteManifest(manifest, dir / "manifest.jsonl");
      const std::string tag = cfg.sid_model_tag;
      WriteEmbeddings(sim.orig, dir / (tag + "_orig.xvec"));
      std::string emb_flags = "--emb " + tag + ":orig=" + (dir / (tag + "_orig.xvec")).string();
      for (const auto& [p, m] : sim.deid) {
        const std::string name = tag + "_deid_p" + std::to_string(p) + ".xvec";
        WriteEmbeddings(m, dir / name);
        emb_flags += " --emb " + tag + ":deid:" + std::to_string(p) + "=" + (dir / name).string();
      }
      WriteFileBytes(dir / "truth.json", EncodeGroundTruthJson(sim));
      out << "wrote " << manifest.size() << " segments, "
          << manifest.speakers().size() << " speakers to " << s_out << "\n"
          << emb_flags << "\n";
      return kExitOk;
    }

    if (trials->parsed()) {
      std::vector<int> profiles;
      if (!t_profiles.empty()) profiles = ParseProfiles(t_profiles);
      auto scenarios = t_scen.empty()
                           ? std::vector<Scenario>{Scenario::kSet1, Scenario::kSet2,
                                                   Scenario::kXprof}
                           : ParseScenarios(t_scen);
      TrialOptions opts;
      opts.seed = t_seed;
      opts.max_nontarget_ratio = ParseRatio(t_ratio, "--nontarget-ratio");
      opts.xprof_ratio = ParseRatio(t_xratio, "--xprof-ratio");
      opts.include_cross_speaker = t_cross;
      CorpusManifest manifest = ReadManifest(t_manifest, t_deid_only);
      if (profiles.empty()) {
        auto ids = manifest.ProfileIds();
        profiles.assign(ids.begin(), ids.begin() + std::min<size_t>(2, ids.size()));
      }
      auto lists = GenerateLists(manifest, scenarios, profiles, opts);
      for (const auto& l : lists) {
        auto audit = AuditTrials(l, manifest);
        if (!audit.ok())
          throw Error(ErrorCode::kInvalidRecord, "generated list failed audit: " +
                                                     audit.violations.front());
        err << ScenarioName(l.scenario) << " " << ProfileLabel(l.profiles) << ": "
            << l.n_target << " target, " << l.n_nontarget << " nontarget\n";
      }
      const std::string csv = EncodeTrialsCsv(lists, manifest);
      if (t_out.empty())
        out << csv;
      else
        WriteFileBytes(t_out, csv);
      return kExitOk;
    }

    if (score->parsed()) {
      CorpusManifest manifest = ReadManifest(c_manifest, c_deid_only);
      auto sources = ParseSources(c_emb);
      std::set<std::string> names;
      for (const auto& s : sources) names.insert(s.model);
      if (names.size() != 1) throw UsageError("score: --emb must name exactly one model");
      EmbeddingMatrix emb = LoadModels(sources).begin()->second;
      auto lists = ParseTrialsCsv(ReadFileBytes(c_trials), manifest);
      std::string csv;
      for (const auto& l : lists) {
        ScoreSet scores = ScoreTrials(l, manifest, emb, c_jobs);
        std::string part = EncodeScoresCsv(l, manifest, scores);
        csv += csv.empty() ? part : part.substr(part.find('\n') + 1);
        std::ostringstream line;
        line << ScenarioName(l.scenario) << " " << ProfileLabel(l.profiles) << ": ";
        try {
          line << "EER " << 100.0 * ComputeEer(scores).eer << "%";
        } catch (const Error& e) {
          line << e.what();
        }
        err << line.str() << "\n";
      }
      if (c_out.empty())
        out << csv;
      else
        WriteFileBytes(c_out, csv);
      return kExitOk;
    }

    if (eval->parsed()) {
      EvalConfig cfg;
      if (!e_config.empty()) cfg = ParseEvalConfigJson(ReadFileBytes(e_config), cfg);
      if (!e_manifest.empty()) cfg.manifest = e_manifest;
      if (!e_emb.empty()) cfg.embeddings = ParseSources(e_emb);
      if (!e_trials.empty()) cfg.trials = e_trials;
      if (!e_scen.empty()) cfg.scenarios = ParseScenarios(e_scen);
      if (!e_profiles.empty()) cfg.profiles = ParseProfiles(e_profiles);
      if (e_seed) cfg.seed = *e_seed;
      if (e_jobs) cfg.jobs = *e_jobs;
      if (!e_out.empty()) cfg.out = e_out;
      if (!e_ratio.empty()) cfg.nontarget_ratio = ParseRatio(e_ratio, "--nontarget-ratio");
      if (!e_xratio.empty()) cfg.xprof_ratio = ParseRatio(e_xratio, "--xprof-ratio");
      if (e_ridge) cfg.cca_ridge = *e_ridge;
      if (e_cross) cfg.include_cross_speaker = true;
      if (e_no_ver) cfg.metrics.verification = false;
      if (e_no_ident) cfg.metrics.identification = false;
      if (e_no_sub) cfg.metrics.subspace = false;
      if (e_deid_only) cfg.deid_only = true;
      if (cfg.manifest.empty()) throw UsageError("eval: no --manifest (flag or config)");
      if (cfg.embeddings.empty()) throw UsageError("eval: no --emb (flag or config)");
      std::vector<ReportFormat> formats;
      for (const auto& f : e_format) formats.push_back(ParseReportFormat(f));
      if (formats.empty()) formats.push_back(ReportFormat::kJson);

      EvalReport rep = RunEval(cfg);
      if (cfg.out.empty()) {
        out << EncodeReportJson(rep);
      } else {
        for (auto f : formats)
          for (const auto& path : EmitReport(rep, f, cfg.out))
            Log(LogLevel::kInfo, "wrote " + path.string());
      }
      return kExitOk;
    }

    if (report->parsed()) {
      EvalReport rep = ParseReportJson(ReadFileBytes(r_in));
      std::vector<ReportFormat> formats;
      for (const auto& f : r_format) formats.push_back(ParseReportFormat(f));
      if (formats.empty()) formats = {ReportFormat::kCsvTables, ReportFormat::kPlotCsv};
      for (auto f : formats)
        for (const auto& path : EmitReport(rep, f, r_out)) out << path.string() << "\n";
      return kExitOk;
    }
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsageError;
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kInvalidConfig || e.code() == ErrorCode::kConfigInvalid ||
        e.code() == ErrorCode::kUnknownPreset) {
      err << "error: " << e.what() << "\n";
      return kExitUsageError;
    }
    err << "error: " << e.what() << "\n";
    return kExitDomainError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitDomainError;
  }
  return kExitUsageError;
}

}  // namespace leakmeter
