#pragma once

#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "safs/error.hpp"

namespace safs::csv {

using row = std::vector<std::string>;

/// Parses RFC-4180 text: comma separated, double-quote quoting with "" escapes,
/// LF or CRLF record ends. A trailing newline does not create an empty record.
inline std::vector<row> parse(std::istream& in) {
    std::vector<row> rows;
    row current;
    std::string field;
    bool in_quotes = false;
    bool field_started = false;
    bool after_quote = false;

    auto end_field = [&] {
        current.push_back(std::move(field));
        field.clear();
        field_started = false;
        after_quote = false;
    };
    auto end_record = [&] {
        end_field();
        rows.push_back(std::move(current));
        current.clear();
    };

    char c;
    while (in.get(c)) {
        if (in_quotes) {
            if (c == '"') {
                if (in.peek() == '"') {
                    in.get(c);
                    field.push_back('"');
                } else {
                    in_quotes = false;
                    after_quote = true;
                }
            } else {
                field.push_back(c);
            }
            continue;
        }
        switch (c) {
        case '"':
            if (field_started || after_quote) throw data_error("csv: stray quote inside unquoted field");
            in_quotes = true;
            field_started = true;
            break;
        case ',':
            end_field();
            break;
        case '\r':
            if (in.peek() == '\n') in.get(c);
            end_record();
            break;
        case '\n':
            end_record();
            break;
        default:
            if (after_quote) throw data_error("csv: characters after closing quote");
            field.push_back(c);
            field_started = true;
        }
    }
    if (in_quotes) throw data_error("csv: unterminated quoted field");
    if (field_started || after_quote || !current.empty()) end_record();
    return rows;
}

inline void write_field(std::ostream& out, std::string_view value) {
    if (value.find_first_of(",\"\r\n") == std::string_view::npos) {
        out << value;
        return;
    }
    out << '"';
    for (char c : value) {
        if (c == '"') out << '"';
        out << c;
    }
    out << '"';
}

inline void write_row(std::ostream& out, const row& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out << ',';
        write_field(out, fields[i]);
    }
    out << '\n';
}

} // namespace safs::csv
