#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "ecgforge/features.hpp"

#include <doctest.h>
#include <json.hpp>

#include <cmath>

#include "ecgforge/synth.hpp"

using namespace ecgforge;

TEST_CASE("Bazett correction: hand-checked cases and domain errors") {
    CHECK(std::abs(correct_qt(360.0, 800.0) - 402.492) < 1e-3);  // 360 / sqrt(0.8)
    CHECK(correct_qt(400.0, 1000.0) == doctest::Approx(400.0).epsilon(1e-12));
    CHECK(std::abs(correct_qt(300.0, 600.0) - 387.298) < 1e-3);  // 300 / sqrt(0.6)
    CHECK_THROWS_AS(correct_qt(360.0, 0.0), InvalidArgument);
    CHECK_THROWS_AS(correct_qt(360.0, -5.0), InvalidArgument);
}

TEST_CASE("heart rate / RR identity is exact and RR chains across beats") {
    SynthConfig cfg;
    cfg.snr_db = 25.0;
    auto [record, truth] = make_synthetic_record(cfg, "feat");
    const FeatureSequences features = extract_features(record);

    for (const auto& [lead, rows] : features.leads) {
        for (size_t i = 0; i < rows.size(); ++i) {
            const auto& r = rows[i];
            if (r.rr_interval1_ms) {
                REQUIRE(r.heart_rate_bpm.has_value());
                CHECK(std::abs(*r.heart_rate_bpm - 60000.0 / *r.rr_interval1_ms) < 1e-9);
            } else {
                CHECK_FALSE(r.heart_rate_bpm.has_value());
            }
            // this beat's preceding RR is the previous beat's following RR
            if (i > 0 && rows[i - 1].rr_interval2_ms) {
                REQUIRE(r.rr_interval1_ms.has_value());
                CHECK(*r.rr_interval1_ms == *rows[i - 1].rr_interval2_ms);
            }
        }
        // first beat has no preceding interval, last no following
        if (!rows.empty()) {
            CHECK_FALSE(rows.front().rr_interval1_ms.has_value());
            CHECK_FALSE(rows.back().rr_interval2_ms.has_value());
        }
    }
}

TEST_CASE("every lead serializes all 14 sequences with length == beat count") {
    SynthConfig cfg;
    cfg.snr_db = 20.0;
    auto [record, truth] = make_synthetic_record(cfg, "feat");
    const FeatureSequences features = extract_features(record);
    REQUIRE(features.leads.size() == 12);

    const auto j = nlohmann::ordered_json::parse(features.to_json());
    REQUIRE(j.size() == 12);
    // leads serialized in canonical order
    size_t k = 0;
    for (const auto& [lead_name, lead_obj] : j.items()) {
        CHECK(lead_name == canonical_lead_names()[k++]);
        REQUIRE(lead_obj.size() == feature_names().size());
        const size_t beats = features.leads.at(lead_name).size();
        size_t fi = 0;
        for (const auto& [feat_name, arr] : lead_obj.items()) {
            CHECK(feat_name == feature_names()[fi++]);  // catalogue order
            CHECK(arr.size() == beats);
        }
    }
}

TEST_CASE("measured intervals on the synthetic oracle are plausible") {
    SynthConfig cfg;
    cfg.snr_db = std::numeric_limits<double>::infinity();
    auto [record, truth] = make_synthetic_record(cfg, "feat");
    const FeatureSequences features = extract_features(record);
    const auto& rows = features.leads.at("II");
    REQUIRE(rows.size() >= 5);

    const auto& r = rows[3];  // interior beat
    REQUIRE(r.rr_interval1_ms.has_value());
    CHECK(std::abs(*r.rr_interval1_ms - 800.0) <= 4.0);
    REQUIRE(r.pr_interval_ms.has_value());
    // truth PR: (r - 160ms - 3*25ms) to (r - 3*15ms) = 190 ms, delineation ±~25
    CHECK(std::abs(*r.pr_interval_ms - 190.0) <= 30.0);
    REQUIRE(r.qt_interval_ms.has_value());
    // truth QT: (r - 45ms) to (r + 280 + 150ms) = 475 ms
    CHECK(std::abs(*r.qt_interval_ms - 475.0) <= 40.0);
    REQUIRE(r.qtc_interval_ms.has_value());
    CHECK(std::abs(*r.qtc_interval_ms - correct_qt(*r.qt_interval_ms, *r.rr_interval1_ms)) < 1e-9);
    REQUIRE(r.p_amplitude_mv.has_value());
    CHECK(std::abs(*r.p_amplitude_mv) > 0.05);
    REQUIRE(r.qrs_amplitude_mv.has_value());
    CHECK(*r.qrs_amplitude_mv > 0.3);
    REQUIRE(r.st_form.has_value());
}

TEST_CASE("a dead lead becomes a warning, not a failure") {
    SynthConfig cfg;
    cfg.snr_db = 25.0;
    auto [record, truth] = make_synthetic_record(cfg, "dead");
    record.leads[4].samples.setZero();  // aVL flatlines
    const FeatureSequences features = extract_features(record);
    CHECK(features.leads.at("aVL").empty());
    REQUIRE_FALSE(features.warnings.empty());
    bool mentioned = false;
    for (const auto& w : features.warnings) mentioned = mentioned || w.find("aVL") != std::string::npos;
    CHECK(mentioned);
    // the other leads are unaffected
    CHECK_FALSE(features.leads.at("II").empty());
}

TEST_CASE("compute_beat_features nulls follow missing fiducials") {
    BeatFiducials fid;
    fid.r_peak = 500;
    // nothing else set: only amplitude-free fields possible
    Eigen::VectorXd samples = Eigen::VectorXd::Zero(2000);
    const BeatFeatures f = compute_beat_features(fid, std::nullopt, std::nullopt, 500.0, samples);
    CHECK_FALSE(f.heart_rate_bpm.has_value());
    CHECK_FALSE(f.rr_interval1_ms.has_value());
    CHECK_FALSE(f.rr_interval2_ms.has_value());
    CHECK_FALSE(f.p_amplitude_mv.has_value());
    CHECK_FALSE(f.pr_interval_ms.has_value());
    CHECK_FALSE(f.qrs_duration_ms.has_value());
    CHECK_FALSE(f.qt_interval_ms.has_value());
    CHECK_FALSE(f.qtc_interval_ms.has_value());
}
