// SPDX-License-Identifier: Apache-2.0
//
// pathskel - path-skeleton beam tracking simulator for mobile mmWave links
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

// Small helpers shared by the map, trajectory and config readers and the CSV writers.

#ifndef PATHSKEL_TEXT_IO_HPP
#define PATHSKEL_TEXT_IO_HPP

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace pathskel
{

// Input file problem, message formatted as "<source>:<line>: <what>".
class ParseError : public std::runtime_error
{
  public:
    ParseError(const std::string &source, std::size_t line, const std::string &what);

    const std::string &source() const { return source_; }
    std::size_t line() const { return line_; }

  private:
    std::string source_;
    std::size_t line_;
};

// Drops everything from the first '#' and trims surrounding whitespace.
std::string_view strip_comment(std::string_view line);

std::string_view trim(std::string_view s);

std::vector<std::string> split_whitespace(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);

// Strict number parsing; the whole token must be consumed.
bool parse_double(std::string_view token, double &out);
bool parse_int(std::string_view token, long long &out);

// Fixed 15-significant-digit formatting used by every CSV writer.
std::string format_number(double value);

} // namespace pathskel

#endif
