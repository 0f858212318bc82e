#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "posyn/types.hpp"

namespace posyn {

namespace fs = std::filesystem;

/// Shortest decimal representation that parses back to the same double.
std::string format_exact(double v);

/// Fixed-point representation with the given number of decimals.
std::string format_fixed(double v, int decimals);

double parse_double(std::string_view text);

/// Minimal numeric CSV table: one header row followed by rows of numbers.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;

    std::size_t column(std::string_view name) const;
};

/// Reads a numeric CSV. Lines starting with '#' are treated as comments.
CsvTable read_numeric_csv(const fs::path& path);

/// Reads a CSV with arbitrary text cells (comment lines skipped).
std::vector<std::vector<std::string>> read_text_csv(const fs::path& path);

void write_text_file(const fs::path& path, std::string_view content);
std::string read_text_file(const fs::path& path);

/// Loads a cohort manifest (JSON) and every per-trial CSV it references.
/// Every trial invariant is checked; violations raise ValidationError and
/// missing files raise IoError.
Cohort load_cohort(const fs::path& manifest_path);

/// Writes `manifest.json` plus one EMG, plate, and pelvic CSV per trial into
/// `dir`. Numbers are written with round-trip precision, so load_cohort on
/// the result reproduces every stream bit for bit.
fs::path save_cohort(const Cohort& cohort, const fs::path& dir);

}  // namespace posyn
