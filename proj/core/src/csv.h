// Copyright 2026 The cfmea Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef CFMEA_SRC_CSV_H_
#define CFMEA_SRC_CSV_H_

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace cfmea::internal {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  // -1 when absent.
  int ColumnIndex(std::string_view name) const;
};

// RFC-4180-ish: commas, optional double quotes, \n or \r\n line endings.
CsvTable ReadCsv(const std::filesystem::path& path);
std::vector<std::string> SplitCsvLine(std::string_view line);

std::string CsvEscape(std::string_view field);

// "%.9g" formatting used for every float written by the library.
std::string FormatDouble(double v);
// Round-trip precision for matrices that must reload bit-exactly.
std::string FormatDoubleExact(double v);

// Strict numeric parse; false on empty or trailing garbage.
bool ParseDouble(std::string_view text, double* out);

}  // namespace cfmea::internal

#endif  // CFMEA_SRC_CSV_H_
