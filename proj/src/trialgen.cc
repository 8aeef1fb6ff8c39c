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

#include "leakmeter/trialgen.h"

#include <algorithm>
#include <memory>
#include <set>
#include <unordered_set>
#include <utility>

#include "leakmeter/error.h"
#include "leakmeter/rng.h"

namespace leakmeter {

std::string_view LabelName(Label l) {
  return l == Label::kTarget ? "target" : "nontarget";
}

Label ParseLabel(std::string_view s) {
  if (s == "target") return Label::kTarget;
  if (s == "nontarget") return Label::kNonTarget;
  throw Error(ErrorCode::kParseFailure, "unknown label '" + std::string(s) + "'");
}

std::string_view ScenarioName(Scenario s) {
  switch (s) {
    case Scenario::kSet1: return "set1";
    case Scenario::kSet2: return "set2";
    case Scenario::kXprof: return "xprof";
  }
  return "set1";
}

Scenario ParseScenario(std::string_view s) {
  if (s == "set1") return Scenario::kSet1;
  if (s == "set2") return Scenario::kSet2;
  if (s == "xprof") return Scenario::kXprof;
  throw Error(ErrorCode::kParseFailure,
              "unknown scenario '" + std::string(s) + "'");
}

namespace {

using SegPair = std::pair<uint32_t, uint32_t>;

// Speaker rank (position in the manifest's ordered speaker index) per segment.
std::vector<uint32_t> SpeakerRanks(const CorpusManifest& manifest) {
  std::vector<uint32_t> rank(manifest.size());
  uint32_t r = 0;
  for (const auto& [_, idx] : manifest.speakers()) {
    for (size_t i : idx) rank[i] = r;
    ++r;
  }
  return rank;
}

// A selection of segments grouped into contiguous per-speaker blocks.
struct Side {
  std::vector<uint32_t> seg;
  std::vector<uint32_t> spk;
  // [begin, end) into seg for each speaker rank; empty when absent.
  std::vector<std::pair<uint32_t, uint32_t>> range;

  size_t size() const { return seg.size(); }
  uint32_t BlockSize(uint32_t s) const { return range[s].second - range[s].first; }
};

template <typename Pred>
Side Select(const CorpusManifest& manifest, const std::vector<uint32_t>& ranks,
            const TrialOptions& options, Pred pred) {
  Side side;
  side.range.assign(manifest.speakers().size(), {0, 0});
  for (const auto& [_, idx] : manifest.speakers()) {
    const auto begin = static_cast<uint32_t>(side.seg.size());
    for (size_t i : idx) {
      const auto& r = manifest.at(i);
      if (!pred(r)) continue;
      if (!options.durations.empty() &&
          std::find(options.durations.begin(), options.durations.end(),
                    r.duration_class) == options.durations.end())
        continue;
      side.seg.push_back(static_cast<uint32_t>(i));
      side.spk.push_back(ranks[i]);
    }
    if (side.seg.size() > begin)
      side.range[ranks[idx.front()]] = {begin,
                                        static_cast<uint32_t>(side.seg.size())};
  }
  return side;
}

// Candidate non-target pairs, addressable by a dense index so that sampling
// never has to materialize the full pair space.
class PairSpace {
 public:
  virtual ~PairSpace() = default;
  virtual uint64_t size() const = 0;
  virtual SegPair At(uint64_t index) const = 0;
  virtual uint64_t CountForSpeaker(uint32_t s) const = 0;
  // Uniform over candidates that involve speaker s. Requires a non-zero count.
  virtual uint64_t PickForSpeaker(uint32_t s, Rng* rng) const = 0;
};

// Pairs (a, b), a from one side, b from the other, different speakers.
class BipartiteSpace : public PairSpace {
 public:
  BipartiteSpace(Side a, Side b) : a_(std::move(a)), b_(std::move(b)) {
    offsets_.resize(a_.size() + 1, 0);
    for (size_t i = 0; i < a_.size(); ++i)
      offsets_[i + 1] = offsets_[i] + (b_.size() - b_.BlockSize(a_.spk[i]));
  }

  uint64_t size() const override { return offsets_.back(); }

  SegPair At(uint64_t index) const override {
    const size_t i = static_cast<size_t>(
        std::upper_bound(offsets_.begin(), offsets_.end(), index) -
        offsets_.begin() - 1);
    const uint64_t j = index - offsets_[i];
    const auto [bs, be] = b_.range[a_.spk[i]];
    const uint64_t bpos = j < bs ? j : j + (be - bs);
    return {a_.seg[i], b_.seg[bpos]};
  }

  uint64_t CountForSpeaker(uint32_t s) const override {
    const auto [as, ae] = a_.range[s];
    const uint64_t on_a = offsets_[ae] - offsets_[as];
    const uint64_t on_b =
        static_cast<uint64_t>(a_.size() - (ae - as)) * b_.BlockSize(s);
    return on_a + on_b;
  }

  uint64_t PickForSpeaker(uint32_t s, Rng* rng) const override {
    const auto [as, ae] = a_.range[s];
    const auto [bs, be] = b_.range[s];
    const uint64_t on_a = offsets_[ae] - offsets_[as];
    uint64_t r = rng->UniformIndex(CountForSpeaker(s));
    if (r < on_a) return offsets_[as] + r;
    r -= on_a;
    const uint64_t width = be - bs;
    const uint64_t other = r / width;
    const size_t ai = static_cast<size_t>(other < as ? other : other + (ae - as));
    const uint64_t bpos = bs + r % width;
    const auto [cs, ce] = b_.range[a_.spk[ai]];
    return offsets_[ai] + (bpos < cs ? bpos : bpos - (ce - cs));
  }

 private:
  Side a_, b_;
  std::vector<uint64_t> offsets_;
};

// Unordered pairs within one side, different speakers.
class WithinSpace : public PairSpace {
 public:
  explicit WithinSpace(Side a) : a_(std::move(a)) {
    offsets_.resize(a_.size() + 1, 0);
    for (size_t i = 0; i < a_.size(); ++i)
      offsets_[i + 1] = offsets_[i] + (a_.size() - BlockEnd(i));
  }

  uint64_t size() const override { return offsets_.back(); }

  SegPair At(uint64_t index) const override {
    const size_t i = static_cast<size_t>(
        std::upper_bound(offsets_.begin(), offsets_.end(), index) -
        offsets_.begin() - 1);
    return {a_.seg[i], a_.seg[BlockEnd(i) + (index - offsets_[i])]};
  }

  uint64_t CountForSpeaker(uint32_t s) const override {
    const auto [ss, se] = a_.range[s];
    return (offsets_[se] - offsets_[ss]) + static_cast<uint64_t>(ss) * (se - ss);
  }

  uint64_t PickForSpeaker(uint32_t s, Rng* rng) const override {
    const auto [ss, se] = a_.range[s];
    const uint64_t later = offsets_[se] - offsets_[ss];
    uint64_t r = rng->UniformIndex(CountForSpeaker(s));
    if (r < later) return offsets_[ss] + r;
    r -= later;
    const uint64_t width = se - ss;
    const size_t earlier = static_cast<size_t>(r / width);
    const uint64_t own = ss + r % width;
    return offsets_[earlier] + (own - BlockEnd(earlier));
  }

 private:
  uint32_t BlockEnd(size_t i) const { return a_.range[a_.spk[i]].second; }

  Side a_;
  std::vector<uint64_t> offsets_;
};

class MaterializedSpace : public PairSpace {
 public:
  MaterializedSpace(std::vector<SegPair> pairs,
                    const std::vector<uint32_t>& ranks, size_t n_speakers)
      : pairs_(std::move(pairs)), by_speaker_(n_speakers) {
    for (uint64_t i = 0; i < pairs_.size(); ++i) {
      const uint32_t s1 = ranks[pairs_[i].first];
      const uint32_t s2 = ranks[pairs_[i].second];
      by_speaker_[s1].push_back(i);
      if (s2 != s1) by_speaker_[s2].push_back(i);
    }
  }

  uint64_t size() const override { return pairs_.size(); }
  SegPair At(uint64_t index) const override { return pairs_[index]; }
  uint64_t CountForSpeaker(uint32_t s) const override {
    return by_speaker_[s].size();
  }
  uint64_t PickForSpeaker(uint32_t s, Rng* rng) const override {
    return by_speaker_[s][rng->UniformIndex(by_speaker_[s].size())];
  }

 private:
  std::vector<SegPair> pairs_;
  std::vector<std::vector<uint64_t>> by_speaker_;
};

class ConcatSpace : public PairSpace {
 public:
  ConcatSpace(std::unique_ptr<PairSpace> first, std::unique_ptr<PairSpace> second)
      : first_(std::move(first)), second_(std::move(second)) {}

  uint64_t size() const override { return first_->size() + second_->size(); }
  SegPair At(uint64_t index) const override {
    return index < first_->size() ? first_->At(index)
                                  : second_->At(index - first_->size());
  }
  uint64_t CountForSpeaker(uint32_t s) const override {
    return first_->CountForSpeaker(s) + second_->CountForSpeaker(s);
  }
  uint64_t PickForSpeaker(uint32_t s, Rng* rng) const override {
    const uint64_t n1 = first_->CountForSpeaker(s);
    if (rng->UniformIndex(CountForSpeaker(s)) < n1)
      return first_->PickForSpeaker(s, rng);
    return first_->size() + second_->PickForSpeaker(s, rng);
  }

 private:
  std::unique_ptr<PairSpace> first_, second_;
};

// Seeded uniform sampling without replacement of `quota` candidates, after
// first reserving one candidate per covered speaker while the quota allows.
// Returns sorted indices.
std::vector<uint64_t> SampleCandidates(const PairSpace& space, uint64_t quota,
                                       const std::vector<uint32_t>& cover,
                                       Rng* rng) {
  const uint64_t n = space.size();
  std::vector<uint64_t> out;
  if (quota >= n) {
    out.resize(n);
    for (uint64_t i = 0; i < n; ++i) out[i] = i;
    return out;
  }
  std::unordered_set<uint64_t> chosen;
  for (uint32_t s : cover) {
    if (out.size() >= quota) break;
    if (space.CountForSpeaker(s) == 0) continue;
    uint64_t idx = space.PickForSpeaker(s, rng);
    if (chosen.insert(idx).second) out.push_back(idx);
  }
  if (quota > chosen.size()) {
    uint64_t remaining = quota - chosen.size();
    if ((chosen.size() + remaining) * 2 <= n) {
      while (remaining > 0) {
        uint64_t idx = rng->UniformIndex(n);
        if (chosen.insert(idx).second) {
          out.push_back(idx);
          --remaining;
        }
      }
    } else {
      std::vector<uint64_t> pool;
      pool.reserve(n - chosen.size());
      for (uint64_t i = 0; i < n; ++i)
        if (!chosen.count(i)) pool.push_back(i);
      for (uint64_t t = 0; t < remaining; ++t) {
        const uint64_t j = t + rng->UniformIndex(pool.size() - t);
        std::swap(pool[t], pool[j]);
        out.push_back(pool[t]);
      }
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

// Enroll side is the smaller (condition, segment_id) tuple; ORIG sorts first.
Trial MakeTrial(const CorpusManifest& manifest, uint32_t x, uint32_t y,
                Label label, Scenario scenario) {
  auto key = [&](uint32_t i) {
    return std::make_pair(manifest.at(i).condition == Condition::kDeid, i);
  };
  if (key(y) < key(x)) std::swap(x, y);
  return Trial{x, y, label, scenario};
}

bool SessionsAllowTarget(const CorpusManifest& manifest,
                         const TrialOptions& options, uint32_t x, uint32_t y) {
  return !options.cross_session_targets ||
         manifest.at(x).session_id != manifest.at(y).session_id;
}

std::vector<uint32_t> SpeakersOf(const std::vector<Trial>& trials,
                                 const std::vector<uint32_t>& ranks) {
  std::set<uint32_t> s;
  for (const auto& t : trials) {
    s.insert(ranks[t.enroll]);
    s.insert(ranks[t.test]);
  }
  return {s.begin(), s.end()};
}

void AppendSampled(const CorpusManifest& manifest, const PairSpace& space,
                   const std::vector<uint64_t>& picks, Scenario scenario,
                   std::vector<Trial>* trials) {
  trials->reserve(trials->size() + picks.size());
  for (uint64_t idx : picks) {
    auto [x, y] = space.At(idx);
    trials->push_back(MakeTrial(manifest, x, y, Label::kNonTarget, scenario));
  }
}

uint64_t NontargetQuota(const std::optional<double>& ratio, size_t n_target,
                        uint64_t available) {
  if (!ratio) return available;
  return static_cast<uint64_t>(*ratio * static_cast<double>(n_target));
}

TrialList Finish(Scenario scenario, std::vector<int> profiles,
                 std::vector<Trial> trials) {
  if (trials.empty())
    throw Error(ErrorCode::kEmptyScenario,
                std::string(ScenarioName(scenario)) + " has no qualifying pairs");
  TrialList list;
  list.scenario = scenario;
  list.profiles = std::move(profiles);
  list.trials = std::move(trials);
  Canonicalize(&list);
  return list;
}

auto DeidOf(int profile) {
  return [profile](const SegmentRecord& r) {
    return r.condition == Condition::kDeid && r.profile_id == profile;
  };
}

}  // namespace

void Canonicalize(TrialList* list) {
  std::sort(list->trials.begin(), list->trials.end(),
            [](const Trial& a, const Trial& b) {
              return std::tie(a.scenario, a.label, a.enroll, a.test) <
                     std::tie(b.scenario, b.label, b.enroll, b.test);
            });
  list->n_target = static_cast<size_t>(
      std::count_if(list->trials.begin(), list->trials.end(),
                    [](const Trial& t) { return t.label == Label::kTarget; }));
  list->n_nontarget = list->trials.size() - list->n_target;
}

TrialList GenerateSet1(const CorpusManifest& manifest, int profile,
                       const TrialOptions& options) {
  const auto ranks = SpeakerRanks(manifest);
  Side orig = Select(manifest, ranks, options, [](const SegmentRecord& r) {
    return r.condition == Condition::kOrig;
  });
  Side deid = Select(manifest, ranks, options, DeidOf(profile));

  std::vector<Trial> trials;
  for (uint32_t s = 0; s < orig.range.size(); ++s) {
    const auto [os, oe] = orig.range[s];
    const auto [ds, de] = deid.range[s];
    for (uint32_t i = os; i < oe; ++i)
      for (uint32_t j = ds; j < de; ++j)
        if (SessionsAllowTarget(manifest, options, orig.seg[i], deid.seg[j]))
          trials.push_back(MakeTrial(manifest, orig.seg[i], deid.seg[j],
                                     Label::kTarget, Scenario::kSet1));
  }
  const size_t n_target = trials.size();
  BipartiteSpace space(std::move(orig), std::move(deid));
  Rng rng(DeriveSeed(options.seed, 0x5e71));
  auto picks = SampleCandidates(
      space, NontargetQuota(options.max_nontarget_ratio, n_target, space.size()),
      SpeakersOf(trials, ranks), &rng);
  AppendSampled(manifest, space, picks, Scenario::kSet1, &trials);
  return Finish(Scenario::kSet1, {profile}, std::move(trials));
}

TrialList GenerateSet2(const CorpusManifest& manifest, int profile,
                       const TrialOptions& options) {
  const auto ranks = SpeakerRanks(manifest);
  Side deid = Select(manifest, ranks, options, DeidOf(profile));

  std::vector<Trial> trials;
  for (uint32_t s = 0; s < deid.range.size(); ++s) {
    const auto [ds, de] = deid.range[s];
    for (uint32_t i = ds; i < de; ++i)
      for (uint32_t j = i + 1; j < de; ++j)
        if (SessionsAllowTarget(manifest, options, deid.seg[i], deid.seg[j]))
          trials.push_back(MakeTrial(manifest, deid.seg[i], deid.seg[j],
                                     Label::kTarget, Scenario::kSet2));
  }
  const size_t n_target = trials.size();
  WithinSpace space(std::move(deid));
  Rng rng(DeriveSeed(options.seed, 0x5e72));
  auto picks = SampleCandidates(
      space, NontargetQuota(options.max_nontarget_ratio, n_target, space.size()),
      SpeakersOf(trials, ranks), &rng);
  AppendSampled(manifest, space, picks, Scenario::kSet2, &trials);
  return Finish(Scenario::kSet2, {profile}, std::move(trials));
}

TrialList GenerateCrossProfile(const CorpusManifest& manifest, int profile_a,
                               int profile_b, const TrialOptions& options) {
  if (profile_a == profile_b)
    throw Error(ErrorCode::kInvalidConfig,
                "cross-profile trials need two distinct profiles");
  const auto ranks = SpeakerRanks(manifest);
  const size_t n_speakers = manifest.speakers().size();
  Side pa = Select(manifest, ranks, options, DeidOf(profile_a));
  Side pb = Select(manifest, ranks, options, DeidOf(profile_b));

  std::vector<Trial> targets;
  for (const Side* side : {&pa, &pb}) {
    for (uint32_t s = 0; s < n_speakers; ++s) {
      const auto [ss, se] = side->range[s];
      for (uint32_t i = ss; i < se; ++i)
        for (uint32_t j = i + 1; j < se; ++j)
          if (SessionsAllowTarget(manifest, options, side->seg[i],
                                  side->seg[j]))
            targets.push_back(MakeTrial(manifest, side->seg[i], side->seg[j],
                                        Label::kTarget, Scenario::kXprof));
    }
  }

  std::vector<SegPair> same_speaker;
  for (uint32_t s = 0; s < n_speakers; ++s) {
    const auto [as, ae] = pa.range[s];
    const auto [bs, be] = pb.range[s];
    for (uint32_t i = as; i < ae; ++i)
      for (uint32_t j = bs; j < be; ++j)
        same_speaker.emplace_back(pa.seg[i], pb.seg[j]);
  }
  std::unique_ptr<PairSpace> space =
      std::make_unique<MaterializedSpace>(std::move(same_speaker), ranks,
                                          n_speakers);
  if (options.include_cross_speaker) {
    space = std::make_unique<ConcatSpace>(
        std::move(space), std::make_unique<BipartiteSpace>(pa, pb));
  }

  Rng rng(DeriveSeed(options.seed, 0x5e73));
  const uint64_t available = space->size();
  uint64_t quota = available;
  if (options.xprof_ratio) {
    const double ratio = *options.xprof_ratio;
    quota = static_cast<uint64_t>(ratio * static_cast<double>(targets.size()));
    if (quota > available) {
      // Too few non-targets: keep them all and thin the targets instead.
      quota = available;
      const auto keep = static_cast<size_t>(
          std::ceil(static_cast<double>(available) / ratio));
      if (keep < targets.size()) {
        rng.Shuffle(targets.begin(), targets.end());
        targets.resize(keep);
      }
    }
  }
  auto picks = SampleCandidates(*space, quota, SpeakersOf(targets, ranks), &rng);
  std::vector<Trial> trials = std::move(targets);
  AppendSampled(manifest, *space, picks, Scenario::kXprof, &trials);
  return Finish(Scenario::kXprof, {profile_a, profile_b}, std::move(trials));
}

TrialList SplitCrossProfile(const TrialList& list,
                            const CorpusManifest& manifest, int profile) {
  TrialList out;
  out.scenario = list.scenario;
  out.profiles = list.profiles;
  for (const auto& t : list.trials) {
    if (t.label == Label::kNonTarget ||
        manifest.at(t.enroll).profile_id == profile)
      out.trials.push_back(t);
  }
  Canonicalize(&out);
  return out;
}

AuditReport AuditTrials(const TrialList& list, const CorpusManifest& manifest) {
  AuditReport report;
  auto fail = [&](size_t i, const std::string& what) {
    report.violations.push_back("trial " + std::to_string(i) + ": " + what);
  };
  auto has_profile = [&](const SegmentRecord& r) {
    return r.profile_id &&
           std::find(list.profiles.begin(), list.profiles.end(),
                     *r.profile_id) != list.profiles.end();
  };
  std::set<SegPair> seen;
  size_t n_target = 0;
  for (size_t i = 0; i < list.trials.size(); ++i) {
    const Trial& t = list.trials[i];
    if (t.enroll >= manifest.size() || t.test >= manifest.size()) {
      fail(i, "segment index out of range");
      continue;
    }
    if (t.label == Label::kTarget) ++n_target;
    if (t.scenario != list.scenario) fail(i, "scenario differs from list");
    if (t.enroll == t.test) {
      fail(i, "self-pair " + manifest.at(t.enroll).segment_id);
      continue;
    }
    const auto& e = manifest.at(t.enroll);
    const auto& s = manifest.at(t.test);
    if (!seen.insert(std::minmax(t.enroll, t.test)).second)
      fail(i, "duplicate pair " + e.segment_id + " / " + s.segment_id);
    const bool same_speaker = e.speaker_id == s.speaker_id;
    const bool target = t.label == Label::kTarget;
    if (!(std::make_pair(e.condition == Condition::kDeid, t.enroll) <
          std::make_pair(s.condition == Condition::kDeid, t.test)))
      fail(i, "enroll/test not in canonical orientation");

    switch (list.scenario) {
      case Scenario::kSet1:
        if (e.condition != Condition::kOrig || s.condition != Condition::kDeid)
          fail(i, "set1 pairs must be orig vs deid");
        else if (!has_profile(s))
          fail(i, "deid segment outside the list's profile");
        if (target && !same_speaker) fail(i, "target across speakers");
        if (!target && same_speaker) fail(i, "non-target within one speaker");
        break;
      case Scenario::kSet2:
        if (e.condition != Condition::kDeid || s.condition != Condition::kDeid)
          fail(i, "set2 pairs must be deid vs deid");
        else if (e.profile_id != s.profile_id || !has_profile(e))
          fail(i, "set2 pairs must share the list's profile");
        if (target && !same_speaker) fail(i, "target across speakers");
        if (!target && same_speaker) fail(i, "non-target within one speaker");
        break;
      case Scenario::kXprof:
        if (e.condition != Condition::kDeid || s.condition != Condition::kDeid) {
          fail(i, "cross-profile pairs must be deid vs deid");
          break;
        }
        if (!has_profile(e) || !has_profile(s))
          fail(i, "segment outside the list's profiles");
        if (target && (!same_speaker || e.profile_id != s.profile_id))
          fail(i, "target must be same speaker and same profile");
        if (!target && e.profile_id == s.profile_id)
          fail(i, "non-target must span two profiles");
        break;
    }
    if (target && e.session_id == s.session_id)
      fail(i, "target pair within one session");
  }
  if (n_target != list.n_target ||
      list.trials.size() - n_target != list.n_nontarget)
    report.violations.push_back("counts do not match list content");
  for (size_t i = 1; i < list.trials.size(); ++i) {
    const Trial& a = list.trials[i - 1];
    const Trial& b = list.trials[i];
    if (std::tie(b.label, b.enroll, b.test) < std::tie(a.label, a.enroll, a.test)) {
      report.violations.push_back("list not in canonical order at trial " +
                                  std::to_string(i));
      break;
    }
  }
  return report;
}

std::string EncodeTrialsCsv(const std::vector<TrialList>& lists,
                            const CorpusManifest& manifest) {
  std::vector<const Trial*> all;
  for (const auto& l : lists)
    for (const auto& t : l.trials) all.push_back(&t);
  std::stable_sort(all.begin(), all.end(), [](const Trial* a, const Trial* b) {
    return std::tie(a->scenario, a->label, a->enroll, a->test) <
           std::tie(b->scenario, b->label, b->enroll, b->test);
  });
  std::string out = "enroll_id,test_id,label,scenario\n";
  for (const Trial* t : all) {
    out += manifest.at(t->enroll).segment_id;
    out += ',';
    out += manifest.at(t->test).segment_id;
    out += ',';
    out += LabelName(t->label);
    out += ',';
    out += ScenarioName(t->scenario);
    out += '\n';
  }
  return out;
}

std::vector<TrialList> ParseTrialsCsv(std::string_view text,
                                      const CorpusManifest& manifest) {
  std::vector<TrialList> lists;
  auto list_for = [&](Scenario s) -> TrialList& {
    for (auto& l : lists)
      if (l.scenario == s) return l;
    lists.emplace_back().scenario = s;
    return lists.back();
  };
  size_t start = 0, line_no = 0;
  bool header = false;
  while (start < text.size()) {
    size_t nl = text.find('\n', start);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(start, nl - start);
    start = nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    if (!header) {
      if (line != "enroll_id,test_id,label,scenario")
        throw Error(ErrorCode::kParseFailure, "unexpected trial list header");
      header = true;
      continue;
    }
    std::vector<std::string_view> f;
    size_t p = 0;
    while (true) {
      size_t c = line.find(',', p);
      f.push_back(line.substr(p, c == std::string_view::npos ? c : c - p));
      if (c == std::string_view::npos) break;
      p = c + 1;
    }
    const std::string where = "trial line " + std::to_string(line_no);
    if (f.size() != 4) throw Error(ErrorCode::kParseFailure, where);
    auto enroll = manifest.Find(f[0]);
    auto test = manifest.Find(f[1]);
    if (!enroll || !test)
      throw Error(ErrorCode::kMissingEmbedding,
                  where + ": unknown segment '" +
                      std::string(enroll ? f[1] : f[0]) + "'");
    Trial t{static_cast<uint32_t>(*enroll), static_cast<uint32_t>(*test),
            ParseLabel(f[2]), ParseScenario(f[3])};
    list_for(t.scenario).trials.push_back(t);
  }
  for (auto& l : lists) {
    std::set<int> profiles;
    for (const auto& t : l.trials)
      for (uint32_t i : {t.enroll, t.test})
        if (manifest.at(i).profile_id) profiles.insert(*manifest.at(i).profile_id);
    l.profiles.assign(profiles.begin(), profiles.end());
    Canonicalize(&l);
  }
  std::sort(lists.begin(), lists.end(),
            [](const TrialList& a, const TrialList& b) {
              return a.scenario < b.scenario;
            });
  return lists;
}

}  // namespace leakmeter
