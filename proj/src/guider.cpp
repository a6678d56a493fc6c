#include "ecgforge/guider.hpp"

#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>

namespace ecgforge {

#ifndef ECGFORGE_RESOURCE_DIR
#define ECGFORGE_RESOURCE_DIR "resources"
#endif

std::filesystem::path resource_dir() {
    if (const char* env = std::getenv("ECGFORGE_RESOURCES")) return env;
    return ECGFORGE_RESOURCE_DIR;
}

std::string load_template(const std::string& file_name) {
    const auto path = resource_dir() / file_name;
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open template " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string substitute_placeholder(const std::string& tmpl, const std::string& placeholder,
                                   const std::string& value) {
    const std::string needle = "{{" + placeholder + "}}";
    const size_t pos = tmpl.find(needle);
    if (pos == std::string::npos) {
        throw ProtocolError("template lacks placeholder " + needle);
    }
    std::string out = tmpl;
    out.replace(pos, needle.size(), value);
    return out;
}

namespace {

std::string one_decimal(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.1f", v);
    std::string s(buf);
    if (s == "-0.0") s = "0.0";
    return s;
}

void append_sequence(std::ostringstream& out, const std::string& name,
                     const std::vector<BeatFeatures>& rows, size_t max_beats,
                     const std::function<std::string(const BeatFeatures&)>& cell) {
    out << "  " << name << ": [";
    const size_t n = max_beats ? std::min(max_beats, rows.size()) : rows.size();
    for (size_t i = 0; i < n; ++i) {
        if (i) out << ", ";
        out << cell(rows[i]);
    }
    out << "]\n";
}

std::string num_cell(const std::optional<double>& v) {
    return v ? one_decimal(*v) : "null";
}

}  // namespace

std::string serialize_measurements(const FeatureSequences& features, size_t max_beats) {
    std::ostringstream out;
    bool first = true;
    for (const auto& lead : canonical_lead_names()) {
        auto it = features.leads.find(lead);
        if (it == features.leads.end()) continue;
        if (!first) out << "\n";
        first = false;
        out << "Lead " << lead << ":\n";
        const auto& rows = it->second;
        auto emit = [&](const std::string& name, auto field) {
            append_sequence(out, name, rows, max_beats,
                            [field](const BeatFeatures& r) { return num_cell(r.*field); });
        };
        emit("HeartRate", &BeatFeatures::heart_rate_bpm);
        emit("RRInterval1", &BeatFeatures::rr_interval1_ms);
        emit("RRInterval2", &BeatFeatures::rr_interval2_ms);
        emit("PAmplitude", &BeatFeatures::p_amplitude_mv);
        emit("PDuration", &BeatFeatures::p_duration_ms);
        emit("PRInterval", &BeatFeatures::pr_interval_ms);
        emit("QRSAmplitude", &BeatFeatures::qrs_amplitude_mv);
        emit("QRSDuration", &BeatFeatures::qrs_duration_ms);
        emit("TAmplitude", &BeatFeatures::t_amplitude_mv);
        emit("TDuration", &BeatFeatures::t_duration_ms);
        emit("STDuration", &BeatFeatures::st_duration_ms);
        append_sequence(out, "STForm", rows, max_beats, [](const BeatFeatures& r) {
            return r.st_form ? std::string(to_string(*r.st_form)) : std::string("null");
        });
        emit("QTInterval", &BeatFeatures::qt_interval_ms);
        emit("QTcInterval", &BeatFeatures::qtc_interval_ms);
    }
    return out.str();
}

GuiderPrompt build_guider_prompt(const std::string& report,
                                 const std::string& measurements_text) {
    if (report.empty()) throw MissingReport("guider requires a non-empty report");
    GuiderPrompt prompt;
    prompt.template_version = "guider.v1";
    prompt.report_text = report;
    prompt.measurements_text = measurements_text;
    std::string rendered = load_template("guider.v1.txt");
    rendered = substitute_placeholder(rendered, "report", report);
    rendered = substitute_placeholder(rendered, "machine_measurements", measurements_text);
    prompt.rendered = std::move(rendered);
    return prompt;
}

}  // namespace ecgforge
