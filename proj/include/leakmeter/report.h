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

#ifndef LEAKMETER_REPORT_H_
#define LEAKMETER_REPORT_H_

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "leakmeter/eval.h"

namespace leakmeter {

enum class ReportFormat { kJson, kCsvTables, kPlotCsv };
std::string_view ReportFormatName(ReportFormat f);  // json|csv_tables|plot_csv
// Throws kInvalidConfig.
ReportFormat ParseReportFormat(std::string_view s);

// Canonical document: fixed key order, shortest round-trip numbers.
std::string EncodeReportJson(const EvalReport& report);
// Throws kParseFailure.
EvalReport ParseReportJson(std::string_view text);

// File name -> contents, without touching the disk.
//   json:       report.json
//   csv_tables: eer_set1.csv, eer_set2.csv, eer_xprof.csv, cmc_hit_rate.csv,
//               system_level.csv, embedding_similarity.csv
//   plot_csv:   cmc_<model>_p<n>.csv, cmc_average.csv ("k,hit_rate") and
//               roc_<scenario>_<model>_p<n>[_<m>].csv ("far,frr,threshold")
std::map<std::string, std::string> RenderReport(const EvalReport& report,
                                                ReportFormat format);

// Writes RenderReport() into `dir` (created if needed) and returns the paths.
// Throws kIoFailure.
std::vector<std::filesystem::path> EmitReport(const EvalReport& report,
                                              ReportFormat format,
                                              const std::filesystem::path& dir);

}  // namespace leakmeter

#endif  // LEAKMETER_REPORT_H_
