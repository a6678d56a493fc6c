#include "ecgforge/signal_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace ecgforge {
namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) {
        if (!cell.empty() && cell.back() == '\r') cell.pop_back();
        out.push_back(cell);
    }
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

std::string format_double(double v) {
    char buf[40];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

}  // namespace

EcgRecord load_record(const std::filesystem::path& csv_path) {
    std::ifstream csv(csv_path);
    if (!csv) throw IoError("cannot open " + csv_path.string());

    std::string line;
    if (!std::getline(csv, line)) throw MalformedInput("empty CSV: " + csv_path.string());
    const auto header = split_csv_line(line);
    if (header.empty()) throw MalformedInput("CSV header has no columns");
    for (const auto& name : header) {
        if (canonical_lead_index(name) < 0) {
            throw UnknownLead("unknown lead name '" + name + "' in " + csv_path.string());
        }
    }

    std::vector<std::vector<double>> columns(header.size());
    size_t row = 1;
    while (std::getline(csv, line)) {
        ++row;
        if (line.empty()) continue;
        const auto cells = split_csv_line(line);
        if (cells.size() != header.size()) {
            throw MalformedInput(csv_path.string() + ": row " + std::to_string(row) +
                                 " has " + std::to_string(cells.size()) + " cells, expected " +
                                 std::to_string(header.size()));
        }
        for (size_t c = 0; c < cells.size(); ++c) {
            double v = 0.0;
            const char* first = cells[c].data();
            const char* last = first + cells[c].size();
            auto res = std::from_chars(first, last, v);
            if (res.ec != std::errc{} || res.ptr != last) {
                throw MalformedInput(csv_path.string() + ": unparseable cell '" + cells[c] +
                                     "' at row " + std::to_string(row));
            }
            if (!std::isfinite(v)) {
                throw NonFiniteSample(csv_path.string() + ": non-finite sample at row " +
                                      std::to_string(row) + ", lead " + header[c]);
            }
            columns[c].push_back(v);
        }
    }

    std::filesystem::path sidecar = csv_path;
    sidecar.replace_extension(".json");
    std::ifstream meta(sidecar);
    if (!meta) throw IoError("missing sidecar " + sidecar.string());
    nlohmann::json j;
    try {
        meta >> j;
    } catch (const nlohmann::json::exception& e) {
        throw MalformedInput("sidecar " + sidecar.string() + ": " + e.what());
    }
    if (!j.contains("record_id") || !j.contains("sample_rate_hz")) {
        throw MalformedInput("sidecar " + sidecar.string() +
                             " must carry record_id and sample_rate_hz");
    }

    EcgRecord record;
    record.record_id = j.at("record_id").get<std::string>();
    record.sample_rate_hz = j.at("sample_rate_hz").get<double>();
    if (j.contains("report") && !j.at("report").is_null()) {
        record.report_text = j.at("report").get<std::string>();
    }
    if (j.contains("labels") && !j.at("labels").is_null()) {
        record.labels = j.at("labels").get<std::vector<std::string>>();
    }

    // Reorder columns into canonical lead order regardless of file order.
    std::vector<size_t> order(header.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        return canonical_lead_index(header[a]) < canonical_lead_index(header[b]);
    });
    for (size_t i : order) {
        Lead lead;
        lead.name = header[i];
        lead.samples = Eigen::Map<const Eigen::VectorXd>(columns[i].data(),
                                                         static_cast<Eigen::Index>(columns[i].size()));
        record.leads.push_back(std::move(lead));
    }

    record.validate();
    return record;
}

void write_record(const EcgRecord& record, const std::filesystem::path& csv_path) {
    record.validate();
    std::ofstream csv(csv_path, std::ios::binary);
    if (!csv) throw IoError("cannot write " + csv_path.string());
    for (size_t i = 0; i < record.leads.size(); ++i) {
        csv << (i ? "," : "") << record.leads[i].name;
    }
    csv << "\n";
    const Eigen::Index n = record.sample_count();
    for (Eigen::Index r = 0; r < n; ++r) {
        for (size_t c = 0; c < record.leads.size(); ++c) {
            csv << (c ? "," : "") << format_double(record.leads[c].samples[r]);
        }
        csv << "\n";
    }

    nlohmann::ordered_json j;
    j["record_id"] = record.record_id;
    j["sample_rate_hz"] = record.sample_rate_hz;
    j["report"] = record.report_text ? nlohmann::json(*record.report_text) : nlohmann::json(nullptr);
    j["labels"] = record.labels ? nlohmann::json(*record.labels) : nlohmann::json(nullptr);
    std::filesystem::path sidecar = csv_path;
    sidecar.replace_extension(".json");
    std::ofstream meta(sidecar, std::ios::binary);
    if (!meta) throw IoError("cannot write " + sidecar.string());
    meta << j.dump(2) << "\n";
}

EcgRecord resample(const EcgRecord& record, double target_hz) {
    if (target_hz <= 0.0 || !std::isfinite(target_hz)) {
        throw InvalidArgument("target_hz must be positive");
    }
    if (target_hz == record.sample_rate_hz) return record;

    const Eigen::Index n = record.sample_count();
    const double ratio = record.sample_rate_hz / target_hz;
    const auto m = static_cast<Eigen::Index>(
        std::floor(static_cast<double>(n - 1) / ratio)) + 1;

    EcgRecord out = record;
    out.sample_rate_hz = target_hz;
    for (auto& lead : out.leads) {
        const Eigen::VectorXd& src = record.find_lead(lead.name)->samples;
        Eigen::VectorXd dst(m);
        for (Eigen::Index i = 0; i < m; ++i) {
            const double t = static_cast<double>(i) * ratio;
            const auto lo = static_cast<Eigen::Index>(std::floor(t));
            if (lo >= n - 1) {
                dst[i] = src[n - 1];
            } else {
                const double frac = t - static_cast<double>(lo);
                dst[i] = src[lo] * (1.0 - frac) + src[lo + 1] * frac;
            }
        }
        lead.samples = std::move(dst);
    }
    return out;
}

EcgRecord remove_baseline(const EcgRecord& record) {
    const auto half = static_cast<Eigen::Index>(std::round(0.3 * record.sample_rate_hz));
    EcgRecord out = record;
    const Eigen::Index n = record.sample_count();
    std::vector<double> window;
    for (auto& lead : out.leads) {
        const Eigen::VectorXd src = lead.samples;
        for (Eigen::Index i = 0; i < n; ++i) {
            const Eigen::Index lo = std::max<Eigen::Index>(0, i - half);
            const Eigen::Index hi = std::min(n - 1, i + half);
            window.assign(src.data() + lo, src.data() + hi + 1);
            auto mid = window.begin() + window.size() / 2;
            std::nth_element(window.begin(), mid, window.end());
            lead.samples[i] = src[i] - *mid;
        }
    }
    return out;
}

}  // namespace ecgforge
