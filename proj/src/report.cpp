#include "dynbc/report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace dynbc {

std::string format_double(double x) {
    if (!std::isfinite(x)) return "null";
    if (x == 0.0) return std::signbit(x) ? "-0" : "0";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

namespace {

void dump(const Json& j, std::ostringstream& os, int depth) {
    const std::string pad(2 * (depth + 1), ' ');
    const std::string close(2 * depth, ' ');
    switch (j.type()) {
        case Json::value_t::null: os << "null"; break;
        case Json::value_t::boolean: os << (j.get<bool>() ? "true" : "false"); break;
        case Json::value_t::number_integer: os << j.get<std::int64_t>(); break;
        case Json::value_t::number_unsigned: os << j.get<std::uint64_t>(); break;
        case Json::value_t::number_float: os << format_double(j.get<double>()); break;
        case Json::value_t::string: os << Json(j.get<std::string>()).dump(); break;
        case Json::value_t::array:
            if (j.empty()) {
                os << "[]";
                break;
            }
            os << "[\n";
            for (std::size_t i = 0; i < j.size(); ++i) {
                os << pad;
                dump(j[i], os, depth + 1);
                os << (i + 1 < j.size() ? ",\n" : "\n");
            }
            os << close << "]";
            break;
        case Json::value_t::object: {
            if (j.empty()) {
                os << "{}";
                break;
            }
            os << "{\n";
            std::size_t i = 0;
            // nlohmann::json objects are std::map backed, so iteration is sorted
            for (auto it = j.begin(); it != j.end(); ++it, ++i) {
                os << pad << Json(it.key()).dump() << ": ";
                dump(it.value(), os, depth + 1);
                os << (i + 1 < j.size() ? ",\n" : "\n");
            }
            os << close << "}";
            break;
        }
        default: throw std::invalid_argument("dump_json: unsupported value type");
    }
}

}  // namespace

std::string dump_json(const Json& j) {
    std::ostringstream os;
    dump(j, os, 0);
    os << "\n";
    return os.str();
}

Json optional_json(const std::optional<double>& v) {
    if (v && std::isfinite(*v)) return *v;
    return nullptr;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    out << text;
    if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

Json read_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ReportError("cannot read '" + path.string() + "'");
    try {
        return Json::parse(in);
    } catch (const Json::parse_error& e) {
        throw ReportError("malformed JSON in '" + path.string() + "': " + e.what());
    }
}

CsvWriter::CsvWriter(std::vector<std::string> header) : columns_(header.size()) { row(header); }

CsvWriter& CsvWriter::row(const std::vector<std::string>& cells) {
    if (cells.size() != columns_) throw std::invalid_argument("csv row has the wrong number of cells");
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) text_ += ',';
        text_ += cells[i];
    }
    text_ += '\n';
    return *this;
}

const std::vector<std::string>& report_sections() {
    static const std::vector<std::string> names = {"simulate", "observe", "commutator", "control", "cost_study"};
    return names;
}

Json merge_reports(const std::filesystem::path& dir) {
    Json out = Json::object();
    Json flags = Json::object();
    bool any = false, all = true;
    for (const auto& name : report_sections()) {
        const auto path = dir / (name + ".json");
        if (!std::filesystem::exists(path)) {
            out[name] = nullptr;
            flags[name] = nullptr;
            continue;
        }
        Json j = read_json(path);
        any = true;
        const bool passed = j.contains("passed") && j["passed"].is_boolean() && j["passed"].get<bool>();
        flags[name] = passed;
        all = all && passed;
        out[name] = std::move(j);
    }
    const auto constants = dir / "constants.json";
    out["constants"] = std::filesystem::exists(constants) ? read_json(constants) : Json(nullptr);
    if (!any) {
        std::string msg = "no run artifacts in '" + dir.string() + "'; expected at least one of:";
        for (const auto& name : report_sections()) msg += " " + name + ".json";
        throw ReportError(msg);
    }
    out["flags"] = flags;
    out["all_passed"] = all;
    return out;
}

}  // namespace dynbc
