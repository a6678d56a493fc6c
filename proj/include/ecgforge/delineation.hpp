#pragma once

#include <Eigen/Core>
#include <optional>
#include <string>
#include <vector>

#include "ecgforge/errors.hpp"

namespace ecgforge {

enum class StForm { normal, elevated, depressed, upsloping, downsloping, unknown };

const char* to_string(StForm form);
StForm st_form_from_string(const std::string& s);

/// Wave landmarks for one heartbeat on one lead. Sample indices, all
/// optional except r_peak; present indices are nondecreasing in the order
/// p_onset..t_offset.
struct BeatFiducials {
    std::optional<Eigen::Index> p_onset, p_peak, p_offset;
    std::optional<Eigen::Index> qrs_onset;
    Eigen::Index r_peak = 0;
    std::optional<Eigen::Index> qrs_offset;
    std::optional<Eigen::Index> t_onset, t_peak, t_offset;
    StForm st_form = StForm::unknown;
    double pr_baseline = 0.0;  // local isoelectric level, mV

    bool ordering_valid() const;
};

/// Every tunable constant of the delineator, centralized so the choices
/// stay auditable.
struct DelineationConfig {
    double refractory_s = 0.200;
    double integration_window_s = 0.150;
    double threshold_fraction = 0.5;     // of running mean peak height
    double seed_threshold_fraction = 0.25;  // of global envelope max
    int running_peak_count = 8;
    double wave_absence_mv = 0.05;       // min |peak - baseline| for P/T
    double wave_bound_fraction = 0.025;  // onset/offset amplitude crossing
    double delineation_smooth_s = 0.030; // box smoothing before crossing search
    double p_window_before_r_s[2] = {0.300, 0.070};  // [far, near]
    double t_window_after_r_s[2] = {0.120, 0.500};   // [near, far]
    double t_rr_fraction = 0.7;
    double qrs_halfwidth_max_s = 0.120;
    double st_measure_after_j_s[2] = {0.020, 0.080};
    double st_deviation_mv = 0.05;
    double st_slope_mv_per_s = 0.5;
};

/// Pan-Tompkins-style R peak detection: moving-average band-pass,
/// squaring, moving-window integration, adaptive ratio-based threshold
/// with a refractory period. Returns strictly increasing sample indices.
std::vector<Eigen::Index> detect_r_peaks(const Eigen::VectorXd& samples,
                                         double sample_rate_hz,
                                         const DelineationConfig& cfg = {});

/// Delineates one beat around r_peak via windowed extremum search with
/// amplitude-fraction onset/offset crossings. Degenerate inputs yield
/// absent waves, never a violated ordering.
BeatFiducials delineate_beat(const Eigen::VectorXd& samples,
                             double sample_rate_hz,
                             Eigen::Index r_peak,
                             std::optional<Eigen::Index> prev_r,
                             std::optional<Eigen::Index> next_r,
                             const DelineationConfig& cfg = {});

/// ST deviation at J+20..J+80 ms against the PR baseline.
StForm classify_st_form(const Eigen::VectorXd& samples,
                        const BeatFiducials& fiducials,
                        double sample_rate_hz,
                        const DelineationConfig& cfg = {});

}  // namespace ecgforge
