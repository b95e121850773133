#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "soh/errors.hpp"
#include "soh/fusion.hpp"
#include "soh/synth.hpp"
#include "soh/text.hpp"
#include "soh/trajectory.hpp"

namespace soh {

inline constexpr const char* kTelemetryHeader = "cell_id,t_s,current_a,voltage_v,temperature_c";
inline constexpr const char* kTruthHeader = "cell_id,ah,q_true,group_label";

inline std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_text_file(const std::filesystem::path& path, const std::string& body) {
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << body;
    if (!out) throw IoError("short write to " + path.string());
}

// ---- telemetry -------------------------------------------------------------

inline std::string telemetry_to_csv(const std::string& cell_id,
                                    std::span<const TimeSample> samples) {
    std::string out = std::string(kTelemetryHeader) + "\n";
    for (const auto& s : samples) {
        out += cell_id;
        out += ',';
        out += text::fmt(s.t_s);
        out += ',';
        out += text::fmt(s.current_a);
        out += ',';
        out += text::fmt(s.voltage_v);
        out += ',';
        out += text::fmt(s.temperature_c);
        out += '\n';
    }
    return out;
}

// Parses one telemetry CSV body into per-cell streams. Rows may arrive
// unsorted; each stream is sorted by time. Row numbers in diagnostics are
// 1-based and count the header.
inline void parse_telemetry_csv(const std::string& body, const std::string& source_name,
                                std::map<std::string, std::vector<TimeSample>>& streams) {
    auto lines = text::split(body, '\n');
    if (lines.empty() || text::trim(lines[0]) != kTelemetryHeader)
        throw SchemaError(source_name + ": expected header '" + kTelemetryHeader + "'");

    bool any = false;
    for (std::size_t li = 1; li < lines.size(); ++li) {
        std::string row = text::trim(lines[li]);
        if (row.empty()) continue;
        std::string where = source_name + " row " + std::to_string(li + 1);
        auto fields = text::split(row, ',');
        if (fields.size() != 5)
            throw SchemaError(where + ": expected 5 fields, got " +
                              std::to_string(fields.size()));
        std::string id = text::trim(fields[0]);
        if (id.empty()) throw SchemaError(where + ": empty cell_id");
        TimeSample s;
        if (!text::parse_double(fields[1], s.t_s) ||
            !text::parse_double(fields[2], s.current_a) ||
            !text::parse_double(fields[3], s.voltage_v) ||
            !text::parse_double(fields[4], s.temperature_c))
            throw SchemaError(where + ": non-numeric or non-finite value");
        streams[id].push_back(s);
        any = true;
    }
    if (!any) throw EmptyFile(source_name + ": no data rows");
}

// Reads a telemetry file or every telemetry CSV in a directory (truth files
// are recognized by header and skipped). Streams are sorted by time;
// duplicate timestamps within a cell are rejected.
inline std::map<std::string, std::vector<TimeSample>> ingest(
    const std::filesystem::path& path) {
    namespace fs = std::filesystem;
    std::map<std::string, std::vector<TimeSample>> streams;

    std::vector<fs::path> files;
    if (fs::is_directory(path)) {
        for (const auto& e : fs::directory_iterator(path))
            if (e.is_regular_file() && e.path().extension() == ".csv")
                files.push_back(e.path());
        std::sort(files.begin(), files.end());
    } else if (fs::exists(path)) {
        files.push_back(path);
    } else {
        throw IoError("no such file or directory: " + path.string());
    }

    bool saw_telemetry = false;
    for (const auto& f : files) {
        std::string body = read_text_file(f);
        auto nl = body.find('\n');
        std::string header = text::trim(nl == std::string::npos ? body : body.substr(0, nl));
        if (header == kTruthHeader) continue;
        parse_telemetry_csv(body, f.filename().string(), streams);
        saw_telemetry = true;
    }
    if (!saw_telemetry) throw EmptyFile("no telemetry CSV found under " + path.string());

    for (auto& [id, samples] : streams) {
        std::stable_sort(samples.begin(), samples.end(),
                         [](const TimeSample& a, const TimeSample& b) { return a.t_s < b.t_s; });
        for (std::size_t i = 0; i + 1 < samples.size(); ++i)
            if (samples[i].t_s == samples[i + 1].t_s)
                throw DuplicateTimestamp("cell " + id + ": t_s=" +
                                         text::fmt(samples[i].t_s) + " appears twice");
    }
    return streams;
}

// ---- ground truth ----------------------------------------------------------

struct TruthRow {
    std::string cell_id;
    double ah = 0.0;
    double q_true = 0.0;
    int group_label = 0;
};

inline std::string truth_to_csv(const Fleet& fleet) {
    std::string out = std::string(kTruthHeader) + "\n";
    for (const auto& c : fleet.cells)
        for (std::size_t i = 0; i < c.truth_ah.size(); ++i) {
            out += c.cell_id;
            out += ',';
            out += text::fmt(c.truth_ah[i]);
            out += ',';
            out += text::fmt(c.truth_q[i]);
            out += ',';
            out += std::to_string(c.group_label);
            out += '\n';
        }
    return out;
}

inline std::vector<TruthRow> truth_from_csv(const std::string& body,
                                            const std::string& source_name) {
    auto lines = text::split(body, '\n');
    if (lines.empty() || text::trim(lines[0]) != kTruthHeader)
        throw SchemaError(source_name + ": expected header '" + kTruthHeader + "'");
    std::vector<TruthRow> rows;
    for (std::size_t li = 1; li < lines.size(); ++li) {
        std::string row = text::trim(lines[li]);
        if (row.empty()) continue;
        std::string where = source_name + " row " + std::to_string(li + 1);
        auto fields = text::split(row, ',');
        if (fields.size() != 4)
            throw SchemaError(where + ": expected 4 fields, got " +
                              std::to_string(fields.size()));
        TruthRow r;
        r.cell_id = text::trim(fields[0]);
        long grp;
        if (r.cell_id.empty() || !text::parse_double(fields[1], r.ah) ||
            !text::parse_double(fields[2], r.q_true) || !text::parse_long(fields[3], grp))
            throw SchemaError(where + ": malformed value");
        r.group_label = static_cast<int>(grp);
        rows.push_back(r);
    }
    if (rows.empty()) throw EmptyFile(source_name + ": no data rows");
    return rows;
}

// ---- estimate log ----------------------------------------------------------

inline std::string estimate_log_header(std::size_t k) {
    std::string h = "ah,q_rg,q_ct,w1,w2,q_hat,s_n";
    for (std::size_t j = 1; j <= k; ++j) h += ",lambda_" + std::to_string(j);
    return h;
}

inline std::string estimate_log_to_csv(std::span<const FusionEstimate> log, std::size_t k) {
    std::string out = estimate_log_header(k) + "\n";
    for (const auto& e : log) {
        if (e.lambda.size() != k)
            throw DimensionMismatch("estimate carries " + std::to_string(e.lambda.size()) +
                                    " lambdas, expected " + std::to_string(k));
        out += text::fmt(e.ah);
        out += ',';
        out += text::fmt(e.q_rg);
        out += ',';
        out += text::fmt(e.q_ct);
        out += ',';
        out += text::fmt(e.w1);
        out += ',';
        out += text::fmt(e.w2);
        out += ',';
        out += text::fmt(e.q_hat);
        out += ',';
        out += std::to_string(e.s_n);
        for (double l : e.lambda) {
            out += ',';
            out += text::fmt(l);
        }
        out += '\n';
    }
    return out;
}

inline std::vector<FusionEstimate> estimate_log_from_csv(const std::string& body,
                                                         const std::string& source_name) {
    auto lines = text::split(body, '\n');
    if (lines.empty() || text::trim(lines[0]).rfind("ah,q_rg,q_ct,w1,w2,q_hat,s_n", 0) != 0)
        throw SchemaError(source_name + ": not an estimate log");
    auto head = text::split(text::trim(lines[0]), ',');
    std::size_t k = head.size() - 7;
    std::vector<FusionEstimate> out;
    for (std::size_t li = 1; li < lines.size(); ++li) {
        std::string row = text::trim(lines[li]);
        if (row.empty()) continue;
        std::string where = source_name + " row " + std::to_string(li + 1);
        auto fields = text::split(row, ',');
        if (fields.size() != 7 + k)
            throw SchemaError(where + ": expected " + std::to_string(7 + k) + " fields");
        FusionEstimate e;
        long sn;
        if (!text::parse_double(fields[0], e.ah) || !text::parse_double(fields[1], e.q_rg) ||
            !text::parse_double(fields[2], e.q_ct) || !text::parse_double(fields[3], e.w1) ||
            !text::parse_double(fields[4], e.w2) || !text::parse_double(fields[5], e.q_hat) ||
            !text::parse_long(fields[6], sn))
            throw SchemaError(where + ": malformed value");
        e.s_n = static_cast<int>(sn);
        for (std::size_t j = 0; j < k; ++j) {
            double l;
            if (!text::parse_double(fields[7 + j], l))
                throw SchemaError(where + ": malformed lambda");
            e.lambda.push_back(l);
        }
        out.push_back(e);
    }
    if (out.empty()) throw EmptyFile(source_name + ": no data rows");
    return out;
}

// Writes a generated fleet as one telemetry CSV per cell plus truth.csv.
inline void write_fleet(const Fleet& fleet, const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    for (const auto& c : fleet.cells)
        write_text_file(dir / (c.cell_id + ".csv"), telemetry_to_csv(c.cell_id, c.samples));
    write_text_file(dir / "truth.csv", truth_to_csv(fleet));
}

}  // namespace soh
