#include "ecgforge/synth.hpp"

#include <cmath>

namespace ecgforge {

std::vector<Eigen::Index> SynthTruth::r_indices(double fs) const {
    std::vector<Eigen::Index> out;
    out.reserve(beats.size());
    for (const auto& b : beats) {
        out.push_back(static_cast<Eigen::Index>(std::round(b.r_time_s * fs)));
    }
    return out;
}

namespace {

void add_gaussian(Eigen::VectorXd& x, double fs, double center_s, double amp, double sigma_s) {
    if (amp == 0.0) return;
    const double lo_s = center_s - 5.0 * sigma_s;
    const double hi_s = center_s + 5.0 * sigma_s;
    const auto lo = std::max<Eigen::Index>(0, static_cast<Eigen::Index>(std::floor(lo_s * fs)));
    const auto hi = std::min<Eigen::Index>(x.size() - 1,
                                           static_cast<Eigen::Index>(std::ceil(hi_s * fs)));
    for (Eigen::Index i = lo; i <= hi; ++i) {
        const double t = static_cast<double>(i) / fs - center_s;
        x[i] += amp * std::exp(-0.5 * (t / sigma_s) * (t / sigma_s));
    }
}

}  // namespace

std::pair<EcgRecord, SynthTruth> make_synthetic_record(const SynthConfig& cfg,
                                                       const std::string& record_id) {
    const double fs = cfg.sample_rate_hz;
    const auto n = static_cast<Eigen::Index>(std::round(cfg.duration_s * fs));

    SynthTruth truth;
    for (double t = cfg.first_r_s; t + 0.55 < cfg.duration_s; t += cfg.rr_s) {
        SynthBeat b = cfg.beat;
        b.r_time_s = t;
        truth.beats.push_back(b);
    }

    Eigen::VectorXd clean = Eigen::VectorXd::Zero(n);
    for (const auto& b : truth.beats) {
        add_gaussian(clean, fs, b.r_time_s - b.p_lead_s, b.p_amp_mv, b.p_sigma_s);
        add_gaussian(clean, fs, b.r_time_s, b.qrs_amp_mv, b.qrs_sigma_s);
        add_gaussian(clean, fs, b.r_time_s + b.t_lag_s, b.t_amp_mv, b.t_sigma_s);
    }

    double noise_sigma = 0.0;
    if (std::isfinite(cfg.snr_db)) {
        const double signal_power = clean.squaredNorm() / static_cast<double>(n);
        noise_sigma = std::sqrt(signal_power / std::pow(10.0, cfg.snr_db / 10.0));
    }

    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> gain_dist(0.6, 1.0);

    EcgRecord record;
    record.record_id = record_id;
    record.sample_rate_hz = fs;
    const auto& names = canonical_lead_names();
    for (int c = 0; c < cfg.lead_count; ++c) {
        const double gain = (c == 0) ? 1.0 : gain_dist(rng);
        Lead lead;
        lead.name = names[static_cast<size_t>(c)];
        lead.samples = clean * gain;
        if (noise_sigma > 0.0) {
            for (Eigen::Index i = 0; i < n; ++i) {
                lead.samples[i] += noise_sigma * gain * gauss(rng);
            }
        }
        record.leads.push_back(std::move(lead));
    }
    record.validate();
    return {std::move(record), std::move(truth)};
}

}  // namespace ecgforge
