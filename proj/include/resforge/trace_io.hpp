#pragma once

#include <iosfwd>
#include <string>

#include "resforge/trace.hpp"

namespace resforge {

/// Malformed trace input; carries the 1-based line and column of the
/// first offending token.
class ParseError : public std::runtime_error {
public:
    ParseError(int line, int column, const std::string& reason);
    int line() const { return line_; }
    int column() const { return column_; }

private:
    int line_;
    int column_;
};

/// Header declares units this reader does not support.
class UnitError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Reads a trace file: optional `# key=value` metadata lines
/// (power_dbm, attenuation_db), a `freq_hz,re,im` header, then one
/// comma-separated row per point with frequencies in decimal Hz.
ComplexTrace ingest_trace(std::istream& in);
ComplexTrace ingest_trace_file(const std::string& path);

/// Writes the same format with 17 significant digits so re-ingestion is
/// bit-identical.
void write_trace(std::ostream& out, const ComplexTrace& trace);
void write_trace_file(const std::string& path, const ComplexTrace& trace);

}  // namespace resforge
