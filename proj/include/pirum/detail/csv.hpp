#pragma once

#include <istream>
#include <string>
#include <string_view>
#include <vector>

#include "pirum/detail/text.hpp"
#include "pirum/errors.hpp"

namespace pirum::detail {

struct CsvRow {
    std::size_t line;
    std::vector<std::string> fields;
};

/// Plain comma-separated text (no quoting). Checks the header and the field
/// count of every row; blank lines are skipped.
inline std::vector<CsvRow> read_csv(std::istream& in, std::string_view expected_header) {
    std::string text;
    std::size_t line = 0;
    bool have_header = false;
    const auto want = split(expected_header, ',');
    std::vector<CsvRow> rows;
    while (std::getline(in, text)) {
        ++line;
        const auto sv = trim(text);
        if (sv.empty()) continue;
        auto parts = split(sv, ',');
        if (!have_header) {
            if (parts.size() != want.size()) throw ParseError("expected header '" + std::string(expected_header) + "'", line);
            for (std::size_t i = 0; i < parts.size(); ++i)
                if (trim(parts[i]) != want[i]) throw ParseError("expected header '" + std::string(expected_header) + "'", line);
            have_header = true;
            continue;
        }
        if (parts.size() != want.size())
            throw ParseError("expected " + std::to_string(want.size()) + " fields, got " + std::to_string(parts.size()), line);
        CsvRow row{line, {}};
        for (auto p : parts) row.fields.emplace_back(trim(p));
        rows.push_back(std::move(row));
    }
    if (!have_header) throw ParseError("missing header '" + std::string(expected_header) + "'", line + 1);
    return rows;
}

}  // namespace pirum::detail
