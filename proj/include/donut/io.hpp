// Copyright 2026 The DONUT Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace donut::io {

/// Shortest decimal text that parses back to exactly `v`.
std::string format_double(double v);

/// Strict decimal parse; throws ParseError on junk.
double parse_double(std::string_view text);

std::vector<std::string> split_csv_line(std::string_view line);

/// Reads every line of a text file, stripping a trailing '\r'.
std::vector<std::string> read_lines(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);

/// Writes through a temporary sibling and renames over the target so
/// readers never observe a partial file.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

/// Hex SHA-256 of a byte string / file.
std::string sha256_hex(std::string_view bytes);
std::string file_sha256(const std::filesystem::path& path);

/// A parsed CSV table with a header row.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Column index by name, or throws ParseError.
  std::size_t column(std::string_view name) const;
};

Table read_table(const std::filesystem::path& path);

std::string join(const std::vector<std::string>& cells, char sep = ',');

}  // namespace donut::io
