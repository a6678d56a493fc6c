#include "ecgforge/features.hpp"

#include <cmath>

#include <json.hpp>

namespace ecgforge {

double correct_qt(double qt_ms, double rr_ms) {
    if (qt_ms <= 0.0 || rr_ms <= 0.0) {
        throw InvalidArgument("correct_qt requires positive QT and RR");
    }
    return qt_ms / std::sqrt(rr_ms / 1000.0);
}

namespace {

std::optional<double> interval_ms(std::optional<Eigen::Index> from,
                                  std::optional<Eigen::Index> to, double fs) {
    if (!from || !to) return std::nullopt;
    const double ms = static_cast<double>(*to - *from) * 1000.0 / fs;
    if (ms <= 0.0) return std::nullopt;
    return ms;
}

}  // namespace

BeatFeatures compute_beat_features(const BeatFiducials& f,
                                   std::optional<Eigen::Index> prev_r,
                                   std::optional<Eigen::Index> next_r,
                                   double sample_rate_hz,
                                   const Eigen::VectorXd& samples) {
    const double fs = sample_rate_hz;
    BeatFeatures out;

    out.rr_interval1_ms = interval_ms(prev_r, f.r_peak, fs);
    out.rr_interval2_ms = interval_ms(f.r_peak, next_r, fs);
    if (out.rr_interval1_ms) out.heart_rate_bpm = 60000.0 / *out.rr_interval1_ms;

    out.p_duration_ms = interval_ms(f.p_onset, f.p_offset, fs);
    out.pr_interval_ms = interval_ms(f.p_onset, f.qrs_onset, fs);
    out.qrs_duration_ms = interval_ms(f.qrs_onset, f.qrs_offset, fs);
    out.t_duration_ms = interval_ms(f.t_onset, f.t_offset, fs);
    out.st_duration_ms = interval_ms(f.qrs_offset, f.t_onset, fs);
    out.qt_interval_ms = interval_ms(f.qrs_onset, f.t_offset, fs);

    if (f.p_peak) out.p_amplitude_mv = samples[*f.p_peak] - f.pr_baseline;
    out.qrs_amplitude_mv = samples[f.r_peak] - f.pr_baseline;
    if (f.t_peak) out.t_amplitude_mv = samples[*f.t_peak] - f.pr_baseline;

    if (out.qt_interval_ms && out.rr_interval1_ms) {
        out.qtc_interval_ms = correct_qt(*out.qt_interval_ms, *out.rr_interval1_ms);
    }
    out.st_form = f.st_form;
    return out;
}

FeatureSequences extract_features(const EcgRecord& record, const DelineationConfig& cfg) {
    record.validate();
    FeatureSequences out;
    for (const auto& lead : record.leads) {
        std::vector<BeatFeatures>& rows = out.leads[lead.name];
        std::vector<Eigen::Index> peaks;
        try {
            peaks = detect_r_peaks(lead.samples, record.sample_rate_hz, cfg);
        } catch (const TooShort&) {
            out.warnings.push_back("lead " + lead.name + ": too short, no beats extracted");
            continue;
        }
        if (peaks.empty()) {
            out.warnings.push_back("lead " + lead.name + ": no beats detected");
            continue;
        }
        for (size_t i = 0; i < peaks.size(); ++i) {
            std::optional<Eigen::Index> prev_r =
                i > 0 ? std::optional<Eigen::Index>(peaks[i - 1]) : std::nullopt;
            std::optional<Eigen::Index> next_r =
                i + 1 < peaks.size() ? std::optional<Eigen::Index>(peaks[i + 1]) : std::nullopt;
            const BeatFiducials fid =
                delineate_beat(lead.samples, record.sample_rate_hz, peaks[i], prev_r, next_r, cfg);
            rows.push_back(compute_beat_features(fid, prev_r, next_r,
                                                 record.sample_rate_hz, lead.samples));
        }
    }
    return out;
}

std::string FeatureSequences::to_json() const {
    nlohmann::ordered_json j;
    auto number_or_null = [](const std::optional<double>& v) {
        return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
    };
    for (const auto& name : canonical_lead_names()) {
        auto it = leads.find(name);
        if (it == leads.end()) continue;
        const auto& rows = it->second;
        nlohmann::ordered_json lead_obj;
        for (const auto& feature : feature_names()) {
            lead_obj[feature] = nlohmann::ordered_json::array();
        }
        for (const auto& row : rows) {
            lead_obj["HeartRate"].push_back(number_or_null(row.heart_rate_bpm));
            lead_obj["RRInterval1"].push_back(number_or_null(row.rr_interval1_ms));
            lead_obj["RRInterval2"].push_back(number_or_null(row.rr_interval2_ms));
            lead_obj["PAmplitude"].push_back(number_or_null(row.p_amplitude_mv));
            lead_obj["PDuration"].push_back(number_or_null(row.p_duration_ms));
            lead_obj["PRInterval"].push_back(number_or_null(row.pr_interval_ms));
            lead_obj["QRSAmplitude"].push_back(number_or_null(row.qrs_amplitude_mv));
            lead_obj["QRSDuration"].push_back(number_or_null(row.qrs_duration_ms));
            lead_obj["TAmplitude"].push_back(number_or_null(row.t_amplitude_mv));
            lead_obj["TDuration"].push_back(number_or_null(row.t_duration_ms));
            lead_obj["STDuration"].push_back(number_or_null(row.st_duration_ms));
            lead_obj["STForm"].push_back(row.st_form
                                             ? nlohmann::ordered_json(to_string(*row.st_form))
                                             : nlohmann::ordered_json(nullptr));
            lead_obj["QTInterval"].push_back(number_or_null(row.qt_interval_ms));
            lead_obj["QTcInterval"].push_back(number_or_null(row.qtc_interval_ms));
        }
        j[name] = std::move(lead_obj);
    }
    return j.dump(2);
}

}  // namespace ecgforge
