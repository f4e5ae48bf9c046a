#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace dynbc {

using Json = nlohmann::json;

class ReportError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Doubles as %.17g, non-finite values as null, keys sorted, two-space indent.
std::string dump_json(const Json& j);
std::string format_double(double x);

Json optional_json(const std::optional<double>& v);

void write_text(const std::filesystem::path& path, const std::string& text);
Json read_json(const std::filesystem::path& path);

class CsvWriter {
public:
    explicit CsvWriter(std::vector<std::string> header);
    CsvWriter& row(const std::vector<std::string>& cells);
    std::string str() const { return text_; }

private:
    std::size_t columns_;
    std::string text_;
};

// Per-run artifacts, in the order they appear in a merged report.
const std::vector<std::string>& report_sections();

// Merges whatever run artifacts exist in `dir` into one document; missing
// sections are null. Throws ReportError when none exist.
Json merge_reports(const std::filesystem::path& dir);

}  // namespace dynbc
