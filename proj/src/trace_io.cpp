#include "resforge/trace_io.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace resforge {

namespace {

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
}

double parse_double(const std::string& token, int line, int column) {
    const std::string t = trim(token);
    if (t.empty()) throw ParseError(line, column, "empty field");
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
    if (ec != std::errc() || ptr != t.data() + t.size())
        throw ParseError(line, column, "not a number: '" + t + "'");
    return value;
}

}  // namespace

ParseError::ParseError(int line, int column, const std::string& reason)
    : std::runtime_error("parse error at line " + std::to_string(line) + ", column " +
                         std::to_string(column) + ": " + reason),
      line_(line),
      column_(column) {}

ComplexTrace ingest_trace(std::istream& in) {
    ComplexTrace trace;
    std::string line;
    int line_no = 0;
    bool header_seen = false;

    while (std::getline(in, line)) {
        ++line_no;
        const std::string stripped = trim(line);
        if (stripped.empty()) continue;

        if (stripped[0] == '#') {
            const std::string meta = trim(stripped.substr(1));
            const auto eq = meta.find('=');
            if (eq != std::string::npos) {
                const std::string key = trim(meta.substr(0, eq));
                const std::string value = meta.substr(eq + 1);
                if (key == "power_dbm") trace.power_dbm = parse_double(value, line_no, 2);
                else if (key == "attenuation_db")
                    trace.attenuation_db = parse_double(value, line_no, 2);
                // other metadata keys pass through untouched
            }
            continue;
        }

        if (!header_seen) {
            std::string header = stripped;
            header.erase(std::remove_if(header.begin(), header.end(),
                                        [](char c) { return c == ' ' || c == '\t'; }),
                         header.end());
            if (header == "freq_hz,re,im") {
                header_seen = true;
                continue;
            }
            // A three-column header with different names declares units
            // this reader does not understand.
            if (std::count(header.begin(), header.end(), ',') == 2 &&
                header.find_first_not_of(
                    "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789_,") ==
                    std::string::npos &&
                header.find_first_of("0123456789") != 0)
                throw UnitError("unsupported trace header '" + stripped +
                                "' (expected freq_hz,re,im)");
            throw ParseError(line_no, 1, "expected header 'freq_hz,re,im'");
        }

        std::stringstream row(stripped);
        std::string field;
        double values[3];
        int column = 1;
        for (int k = 0; k < 3; ++k) {
            if (!std::getline(row, field, ','))
                throw ParseError(line_no, column, "expected 3 comma-separated values");
            values[k] = parse_double(field, line_no, column);
            column += static_cast<int>(field.size()) + 1;
        }
        if (std::getline(row, field, ','))
            throw ParseError(line_no, column, "unexpected extra field");

        if (!trace.freqs.empty() && !(values[0] > trace.freqs.back()))
            throw ParseError(line_no, 1, "frequency not strictly increasing");
        trace.freqs.push_back(values[0]);
        trace.samples.emplace_back(values[1], values[2]);
    }

    if (!header_seen) throw ParseError(line_no, 1, "missing header 'freq_hz,re,im'");
    try {
        trace.validate();
    } catch (const InvalidParameter& e) {
        throw ParseError(line_no, 1, e.what());
    }
    return trace;
}

ComplexTrace ingest_trace_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError(0, 0, "cannot open '" + path + "'");
    return ingest_trace(in);
}

void write_trace(std::ostream& out, const ComplexTrace& trace) {
    char buffer[128];
    std::snprintf(buffer, sizeof buffer, "# power_dbm=%.17g\n# attenuation_db=%.17g\n",
                  trace.power_dbm, trace.attenuation_db);
    out << buffer << "freq_hz,re,im\n";
    for (std::size_t i = 0; i < trace.size(); ++i) {
        std::snprintf(buffer, sizeof buffer, "%.17g,%.17g,%.17g\n", trace.freqs[i],
                      trace.samples[i].real(), trace.samples[i].imag());
        out << buffer;
    }
}

void write_trace_file(const std::string& path, const ComplexTrace& trace) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    write_trace(out, trace);
}

}  // namespace resforge
