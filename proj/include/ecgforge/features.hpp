#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ecgforge/delineation.hpp"
#include "ecgforge/record.hpp"

namespace ecgforge {

/// The 14 feature names in catalogue order. This order is the
/// serialization contract everywhere downstream.
inline const std::array<std::string, 14>& feature_names() {
    static const std::array<std::string, 14> names = {
        "HeartRate",   "RRInterval1", "RRInterval2", "PAmplitude",
        "PDuration",   "PRInterval",  "QRSAmplitude", "QRSDuration",
        "TAmplitude",  "TDuration",   "STDuration",  "STForm",
        "QTInterval",  "QTcInterval"};
    return names;
}

/// One beat's worth of measurements. Units: ms for intervals and
/// durations, mV for amplitudes, bpm for heart rate.
struct BeatFeatures {
    std::optional<double> heart_rate_bpm;
    std::optional<double> rr_interval1_ms;  // preceding RR
    std::optional<double> rr_interval2_ms;  // following RR
    std::optional<double> p_amplitude_mv;
    std::optional<double> p_duration_ms;
    std::optional<double> pr_interval_ms;
    std::optional<double> qrs_amplitude_mv;
    std::optional<double> qrs_duration_ms;
    std::optional<double> t_amplitude_mv;
    std::optional<double> t_duration_ms;
    std::optional<double> st_duration_ms;
    std::optional<StForm> st_form;
    std::optional<double> qt_interval_ms;
    std::optional<double> qtc_interval_ms;
};

/// Per-lead beat-ordered feature rows plus per-lead warnings for leads
/// that could not be delineated (their rows are empty).
struct FeatureSequences {
    std::map<std::string, std::vector<BeatFeatures>> leads;  // key: lead name
    std::vector<std::string> warnings;

    /// JSON per the on-disk contract: {"lead": {"FeatureName": [...]}}.
    std::string to_json() const;
};

/// Bazett correction: QTc = QT / sqrt(RR / 1000).
double correct_qt(double qt_ms, double rr_ms);

/// Measures one beat from its fiducials. Missing landmarks yield nulls.
BeatFeatures compute_beat_features(const BeatFiducials& fiducials,
                                   std::optional<Eigen::Index> prev_r,
                                   std::optional<Eigen::Index> next_r,
                                   double sample_rate_hz,
                                   const Eigen::VectorXd& samples);

/// Detection + delineation + per-beat measurement for every lead.
/// Stateless; leads shorter than the detector's minimum become all-null
/// entries with a warning instead of failing the record.
FeatureSequences extract_features(const EcgRecord& record,
                                  const DelineationConfig& cfg = {});

}  // namespace ecgforge
