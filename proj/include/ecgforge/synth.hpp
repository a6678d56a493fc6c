#pragma once

#include <limits>
#include <random>
#include <utility>
#include <vector>

#include "ecgforge/record.hpp"

namespace ecgforge {

/// Ground-truth beat description for the Gaussian-wave generator.
/// Fiducial truth convention: wave onset/offset = center -/+ 3 sigma.
struct SynthBeat {
    double r_time_s = 0.0;
    double p_amp_mv = 0.15, p_sigma_s = 0.025, p_lead_s = 0.160;  // P center at r - p_lead
    double qrs_amp_mv = 1.0, qrs_sigma_s = 0.015;
    double t_amp_mv = 0.30, t_sigma_s = 0.050, t_lag_s = 0.280;   // T center at r + t_lag
};

struct SynthConfig {
    double sample_rate_hz = 500.0;
    double duration_s = 10.0;
    double rr_s = 0.800;
    double first_r_s = 0.500;
    double snr_db = std::numeric_limits<double>::infinity();  // white noise level
    int lead_count = 12;
    std::uint64_t seed = 0;
    SynthBeat beat;  // per-beat template
};

struct SynthTruth {
    std::vector<SynthBeat> beats;  // one per heartbeat, shared across leads

    std::vector<Eigen::Index> r_indices(double fs) const;
};

/// Deterministic synthetic multi-lead record with known fiducials.
/// Every lead carries the same waveform scaled by a per-lead gain in
/// [0.6, 1.0] so detection sees realistic amplitude spread.
std::pair<EcgRecord, SynthTruth> make_synthetic_record(const SynthConfig& cfg,
                                                       const std::string& record_id);

}  // namespace ecgforge
