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

#ifndef NBKD_UTIL_HPP_
#define NBKD_UTIL_HPP_

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace nbkd::detail {

std::string_view trim(std::string_view s);

// Non-negative base-10 integer spanning the whole field.
std::optional<std::size_t> parse_index(std::string_view text);

std::vector<std::string> split(std::string_view s, char sep);

// Decodes UTF-8 into code points. Invalid bytes map to U+FFFD one byte at
// a time so that every input decodes.
std::u32string utf8_decode(std::string_view s);
std::string utf8_encode(std::u32string_view s);

// Python's str.isspace() set, which is what `str.split()` splits on.
bool is_unicode_space(char32_t c);

std::string read_file(const std::filesystem::path &path);

// Writes to a sibling temp file then renames over `path`.
void write_file_atomic(const std::filesystem::path &path, std::string_view content);

}  // namespace nbkd::detail

#endif  // NBKD_UTIL_HPP_
