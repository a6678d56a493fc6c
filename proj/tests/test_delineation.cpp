#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "ecgforge/delineation.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "ecgforge/synth.hpp"

using namespace ecgforge;

namespace {

/// Lead II of a clean (noise-free unless snr set) synthetic record.
std::pair<Eigen::VectorXd, SynthTruth> synth_lead(std::uint64_t seed, double snr_db) {
    SynthConfig cfg;
    cfg.seed = seed;
    cfg.snr_db = snr_db;
    auto [record, truth] = make_synthetic_record(cfg, "delin");
    return {record.leads[1].samples, truth};
}

bool peaks_match(const std::vector<Eigen::Index>& detected,
                 const std::vector<Eigen::Index>& truth, Eigen::Index tol) {
    if (detected.size() != truth.size()) return false;
    for (size_t i = 0; i < truth.size(); ++i) {
        if (std::abs(detected[i] - truth[i]) > tol) return false;
    }
    return true;
}

}  // namespace

TEST_CASE("R peaks recovered on a clean synthetic lead") {
    const auto [samples, truth] = synth_lead(1, std::numeric_limits<double>::infinity());
    const auto peaks = detect_r_peaks(samples, 500.0);
    const auto expected = truth.r_indices(500.0);
    REQUIRE(peaks.size() == expected.size());
    CHECK(peaks_match(peaks, expected, 2));  // ±4 ms on a clean signal
    CHECK(std::is_sorted(peaks.begin(), peaks.end()));
}

TEST_CASE("detection survives 10 dB noise") {
    const auto [samples, truth] = synth_lead(2, 10.0);
    const auto peaks = detect_r_peaks(samples, 500.0);
    const auto expected = truth.r_indices(500.0);
    REQUIRE(peaks.size() == expected.size());
    CHECK(peaks_match(peaks, expected, 5));  // ±10 ms
}

TEST_CASE("detection is amplitude-scale invariant") {
    const auto [samples, truth] = synth_lead(3, 20.0);
    const auto base = detect_r_peaks(samples, 500.0);
    for (double scale : {0.05, 0.5, 10.0, 400.0}) {
        const auto scaled = detect_r_peaks((samples * scale).eval(), 500.0);
        CHECK(scaled == base);
    }
}

TEST_CASE("detection is translation equivariant") {
    const auto [samples, truth] = synth_lead(4, std::numeric_limits<double>::infinity());
    const auto base = detect_r_peaks(samples, 500.0);
    const Eigen::Index shift = 137;
    Eigen::VectorXd shifted = Eigen::VectorXd::Zero(samples.size());
    shifted.tail(samples.size() - shift) = samples.head(samples.size() - shift);
    const auto moved = detect_r_peaks(shifted, 500.0);
    // every unclipped truth peak moves by exactly `shift`
    REQUIRE(moved.size() >= base.size() - 1);
    for (size_t i = 0; i < moved.size(); ++i) {
        CHECK(moved[i] == base[i] + shift);
    }
}

TEST_CASE("flat and degenerate signals yield no peaks") {
    CHECK(detect_r_peaks(Eigen::VectorXd::Zero(5000), 500.0).empty());
    CHECK(detect_r_peaks(Eigen::VectorXd::Constant(5000, 0.7), 500.0).empty());
}

TEST_CASE("refractory period suppresses double fire") {
    const auto [samples, truth] = synth_lead(5, 20.0);
    const auto peaks = detect_r_peaks(samples, 500.0);
    for (size_t i = 1; i < peaks.size(); ++i) {
        CHECK(peaks[i] - peaks[i - 1] >= static_cast<Eigen::Index>(0.2 * 500.0));
    }
}

TEST_CASE("delineation finds P, QRS and T near known fiducials") {
    SynthConfig cfg;
    cfg.snr_db = std::numeric_limits<double>::infinity();
    auto [record, truth] = make_synthetic_record(cfg, "delin");
    const auto& samples = record.leads[1].samples;
    const double fs = record.sample_rate_hz;
    const auto r_idx = truth.r_indices(fs);
    REQUIRE(r_idx.size() >= 3);

    // interior beat with both neighbors present
    const size_t b = 3;
    const auto fid = delineate_beat(samples, fs, r_idx[b], r_idx[b - 1], r_idx[b + 1]);
    CHECK(fid.ordering_valid());
    REQUIRE(fid.p_peak.has_value());
    REQUIRE(fid.p_onset.has_value());
    REQUIRE(fid.p_offset.has_value());
    REQUIRE(fid.qrs_onset.has_value());
    REQUIRE(fid.qrs_offset.has_value());
    REQUIRE(fid.t_peak.has_value());
    REQUIRE(fid.t_offset.has_value());

    const SynthBeat& beat = truth.beats[b];
    auto err_ms = [&](Eigen::Index got, double truth_s) {
        return std::abs(static_cast<double>(got) / fs - truth_s) * 1000.0;
    };
    // truth convention: onset/offset at center -/+ 3 sigma
    CHECK(err_ms(*fid.p_peak, beat.r_time_s - beat.p_lead_s) <= 10.0);
    CHECK(err_ms(*fid.p_onset, beat.r_time_s - beat.p_lead_s - 3 * beat.p_sigma_s) <= 20.0);
    CHECK(err_ms(*fid.p_offset, beat.r_time_s - beat.p_lead_s + 3 * beat.p_sigma_s) <= 20.0);
    CHECK(err_ms(*fid.qrs_onset, beat.r_time_s - 3 * beat.qrs_sigma_s) <= 20.0);
    CHECK(err_ms(*fid.qrs_offset, beat.r_time_s + 3 * beat.qrs_sigma_s) <= 20.0);
    CHECK(err_ms(*fid.t_peak, beat.r_time_s + beat.t_lag_s) <= 10.0);
    CHECK(err_ms(*fid.t_offset, beat.r_time_s + beat.t_lag_s + 3 * beat.t_sigma_s) <= 20.0);
}

TEST_CASE("waves below the absence threshold are reported absent") {
    SynthConfig cfg;
    cfg.snr_db = std::numeric_limits<double>::infinity();
    cfg.beat.p_amp_mv = 0.01;  // below the 0.05 mV floor
    auto [record, truth] = make_synthetic_record(cfg, "nop");
    const auto& samples = record.leads[1].samples;
    const auto r_idx = truth.r_indices(record.sample_rate_hz);
    const auto fid = delineate_beat(samples, record.sample_rate_hz, r_idx[2], r_idx[1], r_idx[3]);
    CHECK_FALSE(fid.p_peak.has_value());
    CHECK_FALSE(fid.p_onset.has_value());
    CHECK(fid.t_peak.has_value());  // T untouched
    CHECK(fid.ordering_valid());
}

TEST_CASE("ordering invariant holds on noisy beats") {
    SynthConfig cfg;
    cfg.snr_db = 6.0;  // deliberately ugly
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        cfg.seed = seed;
        auto [record, truth] = make_synthetic_record(cfg, "noisy");
        const auto& samples = record.leads[1].samples;
        const auto r_idx = truth.r_indices(record.sample_rate_hz);
        for (size_t b = 1; b + 1 < r_idx.size(); ++b) {
            const auto fid =
                delineate_beat(samples, record.sample_rate_hz, r_idx[b], r_idx[b - 1], r_idx[b + 1]);
            CHECK(fid.ordering_valid());
        }
    }
}

TEST_CASE("ST classification on the synthetic template is not deviated") {
    SynthConfig cfg;
    cfg.snr_db = std::numeric_limits<double>::infinity();
    auto [record, truth] = make_synthetic_record(cfg, "st");
    const auto& samples = record.leads[1].samples;
    const auto r_idx = truth.r_indices(record.sample_rate_hz);
    const auto fid = delineate_beat(samples, record.sample_rate_hz, r_idx[2], r_idx[1], r_idx[3]);
    const StForm form = classify_st_form(samples, fid, record.sample_rate_hz);
    // the Gaussian T upslope may read as upsloping; it must not read as a shift
    CHECK(form != StForm::elevated);
    CHECK(form != StForm::depressed);
    CHECK(form != StForm::unknown);
}

TEST_CASE("st form round-trips through strings") {
    for (StForm f : {StForm::normal, StForm::elevated, StForm::depressed, StForm::upsloping,
                     StForm::downsloping, StForm::unknown}) {
        CHECK(st_form_from_string(to_string(f)) == f);
    }
    CHECK_THROWS_AS(st_form_from_string("wavy"), InvalidArgument);
}
