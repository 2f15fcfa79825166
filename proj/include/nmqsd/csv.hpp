// Copyright 2026 The nmqsd Authors
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

#pragma once

#include <charconv>
#include <fstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

namespace nmqsd {

/// Shortest round-trip decimal form; '.' decimal separator regardless of locale.
inline std::string format_number(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    if (res.ec != std::errc()) {
        return "nan";
    }
    return std::string(buf, res.ptr);
}

/// Minimal CSV writer: header row, newline-terminated rows, no quoting.
class CsvWriter {
  public:
    CsvWriter(const std::string &path, const std::vector<std::string> &header) : out_(path) {
        if (!out_) {
            throw std::ios_base::failure("cannot open " + path);
        }
        write_row_strings(header);
    }

    void row(const std::vector<double> &values) {
        std::string line;
        for (std::size_t i = 0; i < values.size(); ++i) {
            if (i) {
                line += ',';
            }
            line += format_number(values[i]);
        }
        line += '\n';
        out_ << line;
    }

    void close() {
        out_.flush();
        if (!out_) {
            throw std::ios_base::failure("write failed");
        }
        out_.close();
    }

  private:
    void write_row_strings(const std::vector<std::string> &cells) {
        std::string line;
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) {
                line += ',';
            }
            line += cells[i];
        }
        line += '\n';
        out_ << line;
    }

    std::ofstream out_;
};

}  // namespace nmqsd
