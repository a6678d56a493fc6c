#include "ecgforge/delineation.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>

namespace ecgforge {

const char* to_string(StForm form) {
    switch (form) {
        case StForm::normal: return "normal";
        case StForm::elevated: return "elevated";
        case StForm::depressed: return "depressed";
        case StForm::upsloping: return "upsloping";
        case StForm::downsloping: return "downsloping";
        case StForm::unknown: return "unknown";
    }
    return "unknown";
}

StForm st_form_from_string(const std::string& s) {
    if (s == "normal") return StForm::normal;
    if (s == "elevated") return StForm::elevated;
    if (s == "depressed") return StForm::depressed;
    if (s == "upsloping") return StForm::upsloping;
    if (s == "downsloping") return StForm::downsloping;
    if (s == "unknown") return StForm::unknown;
    throw InvalidArgument("not an ST form: '" + s + "'");
}

bool BeatFiducials::ordering_valid() const {
    Eigen::Index prev = -1;
    const std::optional<Eigen::Index> chain[] = {
        p_onset, p_peak, p_offset, qrs_onset, r_peak,
        qrs_offset, t_onset, t_peak, t_offset};
    for (const auto& v : chain) {
        if (!v) continue;
        if (*v < prev) return false;
        prev = *v;
    }
    if (!p_peak && (p_onset || p_offset)) return false;
    if (!t_peak && (t_onset || t_offset)) return false;
    return true;
}

namespace {

// Centered moving average with edge clipping; zero group delay.
Eigen::VectorXd moving_average(const Eigen::VectorXd& x, Eigen::Index window) {
    const Eigen::Index n = x.size();
    const Eigen::Index half = std::max<Eigen::Index>(1, window) / 2;
    Eigen::VectorXd prefix(n + 1);
    prefix[0] = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + x[i];
    Eigen::VectorXd out(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const Eigen::Index lo = std::max<Eigen::Index>(0, i - half);
        const Eigen::Index hi = std::min(n - 1, i + half);
        out[i] = (prefix[hi + 1] - prefix[lo]) / static_cast<double>(hi - lo + 1);
    }
    return out;
}

double median_of(const Eigen::VectorXd& x, Eigen::Index lo, Eigen::Index hi) {
    lo = std::max<Eigen::Index>(0, lo);
    hi = std::min(x.size() - 1, hi);
    if (hi < lo) return 0.0;
    std::vector<double> w(x.data() + lo, x.data() + hi + 1);
    auto mid = w.begin() + w.size() / 2;
    std::nth_element(w.begin(), mid, w.end());
    return *mid;
}

Eigen::Index to_samples(double seconds, double fs) {
    return static_cast<Eigen::Index>(std::round(seconds * fs));
}

}  // namespace

std::vector<Eigen::Index> detect_r_peaks(const Eigen::VectorXd& samples,
                                         double sample_rate_hz,
                                         const DelineationConfig& cfg) {
    const Eigen::Index n = samples.size();
    if (sample_rate_hz <= 0.0) throw InvalidArgument("sample_rate_hz must be positive");
    if (static_cast<double>(n) < 2.0 * sample_rate_hz) {
        throw TooShort("detect_r_peaks needs at least 2 s of signal");
    }
    // A constant signal has no beats; bail before float noise in the
    // band-pass gets mistaken for an envelope.
    if (samples.maxCoeff() == samples.minCoeff()) return {};

    // Band-pass ~5-15 Hz as a difference of two centered moving averages.
    const auto w_hi = std::max<Eigen::Index>(1, to_samples(1.0 / 15.0, sample_rate_hz));
    const auto w_lo = std::max<Eigen::Index>(3, to_samples(1.0 / 5.0, sample_rate_hz));
    const Eigen::VectorXd band = moving_average(samples, w_hi) - moving_average(samples, w_lo);

    const Eigen::VectorXd squared = band.array().square();
    const auto w_int = std::max<Eigen::Index>(1, to_samples(cfg.integration_window_s, sample_rate_hz));
    const Eigen::VectorXd envelope = moving_average(squared, w_int);

    const double seed = cfg.seed_threshold_fraction * envelope.maxCoeff();
    const auto refractory = to_samples(cfg.refractory_s, sample_rate_hz);
    const auto search_half = to_samples(0.10, sample_rate_hz);

    std::deque<double> recent_heights;
    std::vector<Eigen::Index> peaks;
    std::vector<double> peak_env;

    for (Eigen::Index i = 1; i + 1 < n; ++i) {
        const double z = envelope[i];
        if (z <= 0.0) continue;
        if (!(z >= envelope[i - 1] && z > envelope[i + 1])) continue;
        double threshold = seed;
        if (!recent_heights.empty()) {
            const double mean = std::accumulate(recent_heights.begin(), recent_heights.end(), 0.0) /
                                static_cast<double>(recent_heights.size());
            threshold = cfg.threshold_fraction * mean;
        }
        if (z <= threshold) continue;

        // Refine to the band-passed extremum near the envelope peak.
        const Eigen::Index lo = std::max<Eigen::Index>(0, i - search_half);
        const Eigen::Index hi = std::min(n - 1, i + search_half);
        Eigen::Index r = lo;
        for (Eigen::Index j = lo + 1; j <= hi; ++j) {
            if (std::abs(band[j]) > std::abs(band[r])) r = j;
        }

        if (!peaks.empty() && r - peaks.back() < refractory) {
            if (z > peak_env.back()) {  // stronger peak wins within refractory
                peaks.back() = r;
                peak_env.back() = z;
                recent_heights.back() = z;
            }
            continue;
        }
        peaks.push_back(r);
        peak_env.push_back(z);
        recent_heights.push_back(z);
        if (static_cast<int>(recent_heights.size()) > cfg.running_peak_count) {
            recent_heights.pop_front();
        }
    }
    return peaks;
}

namespace {

struct Wave {
    Eigen::Index onset, peak, offset;
};

// Extremum-plus-crossing search for a P or T wave inside [lo, hi].
std::optional<Wave> find_wave(const Eigen::VectorXd& x, double baseline,
                              Eigen::Index lo, Eigen::Index hi,
                              const DelineationConfig& cfg) {
    lo = std::max<Eigen::Index>(0, lo);
    hi = std::min(x.size() - 1, hi);
    if (hi - lo < 2) return std::nullopt;
    Eigen::Index peak = lo;
    for (Eigen::Index j = lo; j <= hi; ++j) {
        if (std::abs(x[j] - baseline) > std::abs(x[peak] - baseline)) peak = j;
    }
    const double amp = std::abs(x[peak] - baseline);
    if (amp < cfg.wave_absence_mv) return std::nullopt;
    const double bound = cfg.wave_bound_fraction * amp;
    Eigen::Index onset = peak;
    while (onset > lo && std::abs(x[onset - 1] - baseline) >= bound) --onset;
    Eigen::Index offset = peak;
    while (offset < hi && std::abs(x[offset + 1] - baseline) >= bound) ++offset;
    return Wave{onset, peak, offset};
}

}  // namespace

BeatFiducials delineate_beat(const Eigen::VectorXd& raw_samples,
                             double sample_rate_hz,
                             Eigen::Index r_peak,
                             std::optional<Eigen::Index> prev_r,
                             std::optional<Eigen::Index> next_r,
                             const DelineationConfig& cfg) {
    const Eigen::Index n = raw_samples.size();
    if (r_peak < 0 || r_peak >= n) throw InvalidArgument("r_peak out of range");
    const double fs = sample_rate_hz;

    BeatFiducials f;
    f.r_peak = r_peak;

    // Amplitude crossings are fragile against sample-level noise, so all
    // landmark searches run on a lightly box-smoothed copy. The ~30 ms
    // window is narrow against every wave of interest.
    const Eigen::VectorXd smoothed =
        moving_average(raw_samples, std::max<Eigen::Index>(1, to_samples(cfg.delineation_smooth_s, fs)));
    const Eigen::VectorXd& samples = smoothed;

    // Provisional baseline from a wide pre-R window; the median is robust
    // to the P wave sitting inside it.
    double baseline = median_of(samples, r_peak - to_samples(0.30, fs),
                                r_peak - to_samples(0.04, fs));

    const double r_amp = std::abs(samples[r_peak] - baseline);
    const auto qrs_half_max = to_samples(cfg.qrs_halfwidth_max_s, fs);
    if (r_amp > 0.0) {
        const double bound = cfg.wave_bound_fraction * r_amp;
        Eigen::Index on = r_peak;
        const Eigen::Index on_lo = std::max<Eigen::Index>(0, r_peak - qrs_half_max);
        while (on > on_lo && std::abs(samples[on - 1] - baseline) >= bound) --on;
        Eigen::Index off = r_peak;
        const Eigen::Index off_hi = std::min(n - 1, r_peak + qrs_half_max);
        while (off < off_hi && std::abs(samples[off + 1] - baseline) >= bound) ++off;
        if (on < r_peak) f.qrs_onset = on;
        if (off > r_peak) f.qrs_offset = off;
    }

    // Refine baseline against the PR segment once the QRS onset is known.
    if (f.qrs_onset) {
        const double refined = median_of(samples, *f.qrs_onset - to_samples(0.040, fs),
                                         *f.qrs_onset - to_samples(0.008, fs));
        if (*f.qrs_onset - to_samples(0.040, fs) >= 0) baseline = refined;
    }
    f.pr_baseline = baseline;

    // P wave: search window before the QRS, optionally bounded by prev_r.
    {
        Eigen::Index lo = r_peak - to_samples(cfg.p_window_before_r_s[0], fs);
        Eigen::Index hi = r_peak - to_samples(cfg.p_window_before_r_s[1], fs);
        if (f.qrs_onset) hi = std::min(hi, *f.qrs_onset - 1);
        if (prev_r) lo = std::max(lo, *prev_r + 1);
        if (auto w = find_wave(samples, baseline, lo, hi, cfg)) {
            f.p_onset = w->onset;
            f.p_peak = w->peak;
            f.p_offset = w->offset;
        }
    }

    // T wave: after the QRS, capped by a fraction of the next RR interval.
    {
        Eigen::Index lo = r_peak + to_samples(cfg.t_window_after_r_s[0], fs);
        double far_s = cfg.t_window_after_r_s[1];
        if (next_r) {
            const double rr_s = static_cast<double>(*next_r - r_peak) / fs;
            far_s = std::min(far_s, cfg.t_rr_fraction * rr_s);
        }
        Eigen::Index hi = r_peak + to_samples(far_s, fs);
        if (f.qrs_offset) lo = std::max(lo, *f.qrs_offset + 1);
        if (auto w = find_wave(samples, baseline, lo, hi, cfg)) {
            f.t_onset = w->onset;
            f.t_peak = w->peak;
            f.t_offset = w->offset;
        }
    }

    // Drop any wave that would break the ordering invariant.
    if (f.p_peak) {
        const Eigen::Index limit = f.qrs_onset.value_or(r_peak);
        if (!(*f.p_onset <= *f.p_peak && *f.p_peak <= *f.p_offset && *f.p_offset <= limit)) {
            f.p_onset.reset();
            f.p_peak.reset();
            f.p_offset.reset();
        }
    }
    if (f.t_peak) {
        const Eigen::Index limit = f.qrs_offset.value_or(r_peak);
        if (!(limit <= *f.t_onset && *f.t_onset <= *f.t_peak && *f.t_peak <= *f.t_offset)) {
            f.t_onset.reset();
            f.t_peak.reset();
            f.t_offset.reset();
        }
    }

    f.st_form = classify_st_form(samples, f, sample_rate_hz, cfg);
    return f;
}

StForm classify_st_form(const Eigen::VectorXd& samples,
                        const BeatFiducials& fiducials,
                        double sample_rate_hz,
                        const DelineationConfig& cfg) {
    if (!fiducials.qrs_offset || !fiducials.t_onset) return StForm::unknown;
    const Eigen::Index n = samples.size();
    const Eigen::Index j_point = *fiducials.qrs_offset;
    const Eigen::Index lo = j_point + to_samples(cfg.st_measure_after_j_s[0], sample_rate_hz);
    const Eigen::Index hi = j_point + to_samples(cfg.st_measure_after_j_s[1], sample_rate_hz);
    if (lo < 0 || hi >= n || hi <= lo) return StForm::unknown;

    const Eigen::Index len = hi - lo + 1;
    const auto segment = samples.segment(lo, len);
    const double dev = segment.mean() - fiducials.pr_baseline;

    if (dev > cfg.st_deviation_mv) return StForm::elevated;
    if (dev < -cfg.st_deviation_mv) return StForm::depressed;

    // Least-squares slope of the segment, mV/s.
    const double m = static_cast<double>(len);
    Eigen::VectorXd t(len);
    for (Eigen::Index i = 0; i < len; ++i) t[i] = static_cast<double>(i) / sample_rate_hz;
    const double t_mean = t.mean();
    const double y_mean = segment.mean();
    const double denom = (t.array() - t_mean).square().sum();
    if (denom <= 0.0 || m < 2) return StForm::normal;
    const double slope = ((t.array() - t_mean) * (segment.array() - y_mean)).sum() / denom;
    if (slope > cfg.st_slope_mv_per_s) return StForm::upsloping;
    if (slope < -cfg.st_slope_mv_per_s) return StForm::downsloping;
    return StForm::normal;
}

}  // namespace ecgforge
