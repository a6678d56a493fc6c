// Acceptance gate: eight release criteria, one verdict line each.
// Exit status is the number of failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "ecgforge/features.hpp"
#include "ecgforge/fusion.hpp"
#include "ecgforge/guider.hpp"
#include "ecgforge/judge.hpp"
#include "ecgforge/llm_client.hpp"
#include "ecgforge/metrics.hpp"
#include "ecgforge/mock_llm.hpp"
#include "ecgforge/synth.hpp"

using namespace ecgforge;
namespace fs = std::filesystem;

namespace {

#ifndef ECGFORGE_FIXTURE_DIR
#define ECGFORGE_FIXTURE_DIR "fixtures"
#endif

int failures = 0;

void verdict(int criterion, bool pass, const std::string& detail) {
    std::printf("criterion %d: %s — %s\n", criterion, pass ? "PASS" : "FAIL", detail.c_str());
    if (!pass) ++failures;
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const size_t n = v.size();
    return n % 2 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2.0;
}

// --- criterion 1: delineation oracle ---------------------------------------

void criterion1() {
    const auto start = std::chrono::steady_clock::now();
    long truth_peaks = 0, recovered = 0;
    std::vector<double> fiducial_errors_ms;

    for (int rec = 0; rec < 200; ++rec) {
        SynthConfig cfg;
        cfg.seed = static_cast<std::uint64_t>(rec);
        cfg.snr_db = 20.0;
        auto [record, truth] = make_synthetic_record(cfg, "acc");
        const double fs = record.sample_rate_hz;
        const auto expected = truth.r_indices(fs);
        const auto tol = static_cast<Eigen::Index>(std::llround(0.010 * fs));

        for (const auto& lead : record.leads) {
            const auto peaks = detect_r_peaks(lead.samples, fs);
            truth_peaks += static_cast<long>(expected.size());
            for (const auto t : expected) {
                for (const auto p : peaks) {
                    if (std::abs(p - t) <= tol) {
                        ++recovered;
                        break;
                    }
                }
            }
        }

        // fiducial accuracy on the interior beats of lead II
        const auto& samples = record.leads[1].samples;
        for (size_t b = 1; b + 1 < expected.size(); ++b) {
            const auto fid =
                delineate_beat(samples, fs, expected[b], expected[b - 1], expected[b + 1]);
            const SynthBeat& beat = truth.beats[b];
            auto push = [&](const std::optional<Eigen::Index>& got, double truth_s) {
                if (got) {
                    fiducial_errors_ms.push_back(
                        std::abs(static_cast<double>(*got) / fs - truth_s) * 1000.0);
                }
            };
            push(fid.p_onset, beat.r_time_s - beat.p_lead_s - 3 * beat.p_sigma_s);
            push(fid.p_offset, beat.r_time_s - beat.p_lead_s + 3 * beat.p_sigma_s);
            push(fid.qrs_onset, beat.r_time_s - 3 * beat.qrs_sigma_s);
            push(fid.qrs_offset, beat.r_time_s + 3 * beat.qrs_sigma_s);
            push(fid.t_offset, beat.r_time_s + beat.t_lag_s + 3 * beat.t_sigma_s);
        }
    }

    const double elapsed_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const double recall = static_cast<double>(recovered) / static_cast<double>(truth_peaks);
    const double med = fiducial_errors_ms.empty() ? 1e9 : median(fiducial_errors_ms);

    char detail[256];
    std::snprintf(detail, sizeof(detail),
                  "delineation oracle: recall %.2f%% (need >=95%%), median fiducial error "
                  "%.1f ms (need <=20), %.1f s (need <30)",
                  100.0 * recall, med, elapsed_s);
    verdict(1, recall >= 0.95 && med <= 20.0 && elapsed_s < 30.0, detail);
}

// --- criterion 2: feature contract -----------------------------------------

void criterion2() {
    bool lengths_ok = true, identity_ok = true;
    for (int rec = 0; rec < 20; ++rec) {
        SynthConfig cfg;
        cfg.seed = 1000 + static_cast<std::uint64_t>(rec);
        cfg.snr_db = rec % 2 ? 20.0 : 30.0;
        auto [record, truth] = make_synthetic_record(cfg, "feat");
        const FeatureSequences features = extract_features(record);
        const auto j = nlohmann::ordered_json::parse(features.to_json());
        for (const auto& [lead, rows] : features.leads) {
            const auto& obj = j.at(lead);
            if (obj.size() != 14) lengths_ok = false;
            for (const auto& [name, arr] : obj.items()) {
                if (arr.size() != rows.size()) lengths_ok = false;
            }
            for (const auto& r : rows) {
                if (r.rr_interval1_ms &&
                    std::abs(*r.heart_rate_bpm - 60000.0 / *r.rr_interval1_ms) > 1e-9) {
                    identity_ok = false;
                }
                if (r.qt_interval_ms && r.rr_interval1_ms && r.qtc_interval_ms &&
                    std::abs(*r.qtc_interval_ms -
                             correct_qt(*r.qt_interval_ms, *r.rr_interval1_ms)) > 1e-9) {
                    identity_ok = false;
                }
            }
        }
    }
    const bool bazett_ok = std::abs(correct_qt(360.0, 800.0) - 402.492) <= 0.001;
    verdict(2, lengths_ok && identity_ok && bazett_ok,
            "feature contract: 14 sequences x beat count, HR/RR and Bazett identities");
}

// --- criterion 3: prompt goldens -------------------------------------------

FeatureSequences golden_features() {
    FeatureSequences f;
    auto beat = [](double hr, double rr1) {
        BeatFeatures b;
        b.heart_rate_bpm = hr;
        b.rr_interval1_ms = rr1;
        b.rr_interval2_ms = 750.0;
        b.p_amplitude_mv = 0.15;
        b.p_duration_ms = 100.0;
        b.pr_interval_ms = 160.0;
        b.qrs_amplitude_mv = 1.0;
        b.qrs_duration_ms = 90.0;
        b.t_amplitude_mv = 0.3;
        b.t_duration_ms = 200.0;
        b.st_duration_ms = 110.0;
        b.st_form = StForm::normal;
        b.qt_interval_ms = 400.0;
        b.qtc_interval_ms = 447.2;
        return b;
    };
    f.leads["II"] = {beat(75.0, 800.0), beat(80.0, 750.0)};
    BeatFeatures sparse;
    sparse.heart_rate_bpm = 75.0;
    sparse.rr_interval1_ms = 800.0;
    f.leads["V1"] = {sparse};
    return f;
}

void criterion3() {
    const fs::path dir = fs::path(ECGFORGE_FIXTURE_DIR) / "prompts";
    const std::string guider_golden = read_file(dir / "guider_golden.txt");
    const std::string judge_golden = read_file(dir / "judge_golden.txt");

    const std::string report = "Sinus rhythm. Normal axis. No acute ST changes.";
    const std::string measurements = serialize_measurements(golden_features());

    bool ok = !guider_golden.empty() && !judge_golden.empty();
    for (int i = 0; i < 100 && ok; ++i) {
        ok = build_guider_prompt(report, measurements).rendered == guider_golden &&
             build_judge_prompt("The ECG shows sinus rhythm at 75 bpm.",
                                "Sinus rhythm, rate 75.") == judge_golden;
    }
    verdict(3, ok, "prompt goldens: guider + judge byte-equal across 100 reruns");
}

// --- criterion 4: scorecard suite ------------------------------------------

void criterion4() {
    bool ok = true;
    try {
        const JudgeScorecard card =
            parse_scorecard(read_file(fs::path(ECGFORGE_FIXTURE_DIR) / "prompts" /
                                      "scorecard_example.json"));
        ok = ok && card.diagnosis_accuracy.size() == 2 && card.diagnosis_accuracy[0].score == 2 &&
             card.diagnosis_accuracy[1].score == 1;
    } catch (const Error&) {
        ok = false;
    }

    // out-of-range rejection
    try {
        auto bad = nlohmann::json::parse(
            read_file(fs::path(ECGFORGE_FIXTURE_DIR) / "prompts" / "scorecard_example.json"));
        bad["DiagnosisAccuracy"][0]["Score"] = 7;
        parse_scorecard(bad.dump());
        ok = false;  // should have thrown
    } catch (const ValidationError&) {
    } catch (const Error&) {
        ok = false;
    }

    // hand-built aggregate: diagnosis [2,1], coverage nine 1s + three 0s, grounding 80
    auto entry = [](int score) {
        return nlohmann::json::array({{{"Score", score}, {"Explanation", "x"}}});
    };
    nlohmann::json j = {{"DiagnosisAccuracy",
                         nlohmann::json::array({nlohmann::json{{"Score", 2}, {"Explanation", "a"}},
                                                nlohmann::json{{"Score", 1}, {"Explanation", "b"}}})},
                        {"AnalysisCompleteness", entry(1)},
                        {"AnalysisRelevance", entry(2)},
                        {"LeadAssessmentAccuracy", entry(2)},
                        {"ECGFeatureGrounding", entry(80)},
                        {"EvidenceBasedReasoning", entry(80)},
                        {"ClinicalDiagnosticFidelity", entry(80)}};
    j["LeadAssessmentCoverage"] = nlohmann::json::array();
    for (int i = 0; i < 12; ++i) {
        j["LeadAssessmentCoverage"].push_back({{"Score", i < 9 ? 1 : 0}, {"Explanation", "lead"}});
    }
    try {
        const MetricReport report = aggregate_metrics({parse_scorecard(j.dump())});
        ok = ok && std::abs(report.diagnosis_accuracy_pct - 75.0) < 1e-9 &&
             std::abs(report.lead_coverage_pct - 75.0) < 1e-9 &&
             std::abs(report.feature_grounding - 80.0) < 1e-9;

        auto maxed = j;
        maxed["DiagnosisAccuracy"] = entry(2);
        maxed["LeadAssessmentCoverage"] = nlohmann::json::array();
        maxed["LeadAssessmentAccuracy"] = nlohmann::json::array();
        for (int i = 0; i < 12; ++i) {
            maxed["LeadAssessmentCoverage"].push_back({{"Score", 1}, {"Explanation", "l"}});
            maxed["LeadAssessmentAccuracy"].push_back({{"Score", 2}, {"Explanation", "l"}});
        }
        maxed["ECGFeatureGrounding"] = entry(100);
        const MetricReport sat = aggregate_metrics({parse_scorecard(maxed.dump())});
        ok = ok && std::abs(sat.diagnosis_accuracy_pct - 100.0) < 1e-9 &&
             std::abs(sat.lead_coverage_pct - 100.0) < 1e-9 &&
             std::abs(sat.lead_accuracy_pct - 100.0) < 1e-9 &&
             std::abs(sat.feature_grounding - 100.0) < 1e-9;
    } catch (const Error&) {
        ok = false;
    }
    verdict(4, ok, "scorecard suite: example parse [2,1], range rejection, 75/75/80, saturation");
}

// --- criterion 5: classification metric oracle ------------------------------

void criterion5() {
    std::mt19937_64 rng(4242);
    std::uniform_int_distribution<int> size_n(2, 8), size_l(1, 3), coin(0, 1);
    std::uniform_real_distribution<double> score(0.0, 1.0);
    std::uniform_int_distribution<int> quantize(0, 3);

    bool ok = true;
    for (int trial = 0; trial < 1000 && ok; ++trial) {
        const Eigen::Index n = size_n(rng), l = size_l(rng);
        Eigen::MatrixXd y_true(n, l), y_score(n, l);
        for (Eigen::Index i = 0; i < n; ++i) {
            for (Eigen::Index c = 0; c < l; ++c) {
                y_true(i, c) = coin(rng);
                y_score(i, c) = trial % 4 == 0 ? quantize(rng) / 3.0 : score(rng);
            }
        }
        const MultilabelMetrics got = compute_multilabel_metrics(y_true, y_score, 0.5);

        // brute force, per label
        double auc_sum = 0.0, f1_sum = 0.0;
        int auc_labels = 0;
        long disagreements = 0;
        for (Eigen::Index c = 0; c < l; ++c) {
            long pos = 0;
            for (Eigen::Index i = 0; i < n; ++i) pos += y_true(i, c) == 1.0;
            const long neg = n - pos;
            if (pos && neg) {
                double wins = 0.0;
                for (Eigen::Index i = 0; i < n; ++i) {
                    for (Eigen::Index k = 0; k < n; ++k) {
                        if (y_true(i, c) == 1.0 && y_true(k, c) == 0.0) {
                            wins += y_score(i, c) > y_score(k, c)
                                        ? 1.0
                                        : (y_score(i, c) == y_score(k, c) ? 0.5 : 0.0);
                        }
                    }
                }
                auc_sum += wins / (static_cast<double>(pos) * static_cast<double>(neg));
                ++auc_labels;
            }
            long tp = 0, fp = 0, fn = 0;
            for (Eigen::Index i = 0; i < n; ++i) {
                const bool pred = y_score(i, c) >= 0.5;
                const bool truth = y_true(i, c) == 1.0;
                tp += pred && truth;
                fp += pred && !truth;
                fn += !pred && truth;
                disagreements += pred != truth;
            }
            f1_sum += (2 * tp + fp + fn) ? 2.0 * tp / static_cast<double>(2 * tp + fp + fn) : 0.0;
        }
        const double want_auc = auc_labels ? auc_sum / auc_labels : 0.0;
        const double want_f1 = f1_sum / static_cast<double>(l);
        const double want_hl = static_cast<double>(disagreements) / static_cast<double>(n * l);
        ok = std::abs(got.auc_macro - want_auc) < 1e-12 &&
             std::abs(got.f1_macro - want_f1) < 1e-12 &&
             std::abs(got.hamming_loss - want_hl) < 1e-12;
    }

    Eigen::MatrixXd y_true(3, 1), y_score(3, 1);
    y_true << 1, 0, 1;
    y_score << 0.9, 0.1, 0.8;
    const MultilabelMetrics perfect = compute_multilabel_metrics(y_true, y_score, 0.5);
    ok = ok && perfect.auc_macro == 1.0 && perfect.hamming_loss == 0.0;

    verdict(5, ok, "metric oracle: 1000 brute-force matches to 1e-12, perfect-ranking edge");
}

// --- criterion 6: fusion toy ------------------------------------------------

void criterion6() {
    std::mt19937_64 rng(777);
    std::normal_distribution<double> gauss(0.0, 0.5);
    auto random_matrix = [&](Eigen::Index r, Eigen::Index c) {
        Eigen::MatrixXd m(r, c);
        for (Eigen::Index i = 0; i < r; ++i)
            for (Eigen::Index j = 0; j < c; ++j) m(i, j) = gauss(rng);
        return m;
    };

    FusionParams shapes;
    shapes.ts_projector = Mlp::random(16, 12, 12, 61);
    shapes.shared_projector = Mlp::random(12, 10, 10, 62);
    shapes.head = random_matrix(10, 4);
    const Eigen::MatrixXd fused =
        project_and_fuse(random_matrix(64, 16), random_matrix(576, 12), random_matrix(32, 10),
                         shapes);
    bool ok = fused.rows() == 672 && fused.cols() == 10;

    double worst = 0.0;
    std::uniform_int_distribution<int> dim(2, 6);
    for (int trial = 0; trial < 50; ++trial) {
        const Eigen::Index d_s = dim(rng), d_m = dim(rng), d_t = dim(rng), vocab = dim(rng) + 1;
        FusionParams params;
        params.ts_projector = Mlp::random(d_s, d_m, d_m, 300 + trial);
        params.shared_projector = Mlp::random(d_m, d_t, d_t, 400 + trial);
        params.head = random_matrix(d_t, vocab);
        std::uniform_int_distribution<int> tok(0, static_cast<int>(vocab) - 1);
        worst = std::max(worst, grad_check(params, random_matrix(3, d_s), random_matrix(2, d_m),
                                           random_matrix(2, d_t), {tok(rng), tok(rng)}, 1e-5));
    }
    ok = ok && worst < 1e-4;

    const double uniform = nll_loss(Eigen::MatrixXd::Zero(2, 4), {0, 3});
    ok = ok && std::abs(uniform - 2.0 * std::log(4.0)) <= 1e-9;

    const auto trace = train_toy(0);
    bool decreasing = trace.size() > 1;
    for (size_t i = 1; i < trace.size(); ++i) decreasing = decreasing && trace[i] < trace[i - 1];
    ok = ok && decreasing;

    char detail[192];
    std::snprintf(detail, sizeof(detail),
                  "fusion toy: 672 fused rows, grad-check worst %.2e (<1e-4), uniform 2ln4, "
                  "monotone training",
                  worst);
    verdict(6, ok, detail);
}

// --- criterion 7: end-to-end pipeline ---------------------------------------

void criterion7() {
    const auto start = std::chrono::steady_clock::now();
    const fs::path root = fs::temp_directory_path() / "ecgforge_acceptance_e2e";
    fs::remove_all(root);
    fs::create_directories(root);

    MockLlmServer server;
    server.start();
    EndpointConfig cfg;
    cfg.base_url = server.base_url();
    cfg.cache_dir = root / "cache";
    cfg.backoff_base_s = 0.01;

    auto run = [&](LlmClient& client, const fs::path& out) {
        std::vector<InstructionPair> pairs;
        for (int i = 0; i < 100; ++i) {
            SynthConfig sc;
            sc.seed = 5000 + static_cast<std::uint64_t>(i);
            sc.snr_db = 20.0;
            char id[32];
            std::snprintf(id, sizeof(id), "fix%04d", i);
            auto [record, truth] = make_synthetic_record(sc, id);
            record.report_text = "Sinus rhythm. Normal ECG.";
            const FeatureSequences features = extract_features(record);
            GenerationOptions options;
            options.seed = 11;
            pairs.push_back(generate_instruction_pair(record, features,
                                                      std::string(id) + ".png", client, options));
        }
        write_dataset(pairs, out);
    };

    bool ok = true;
    std::string detail = "end-to-end: ";
    try {
        LlmClient first(cfg);
        run(first, root / "a.jsonl");
        const long calls_first = first.network_calls();

        LlmClient second(cfg);
        run(second, root / "b.jsonl");

        const std::string a = read_file(root / "a.jsonl");
        std::istringstream count_stream(a);
        long lines = 0;
        for (std::string line; std::getline(count_stream, line);) lines += !line.empty();

        const double elapsed_s =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

        ok = lines == 100 && a == read_file(root / "b.jsonl") && calls_first == 100 &&
             second.network_calls() == 0 && elapsed_s < 60.0;
        char buf[224];
        std::snprintf(buf, sizeof(buf),
                      "100 records -> %ld JSONL lines, byte-stable rerun, %ld then %ld network "
                      "calls, %.1f s (<60)",
                      lines, calls_first, second.network_calls(), elapsed_s);
        detail += buf;
    } catch (const Error& e) {
        ok = false;
        detail += std::string("pipeline error: ") + e.what();
    }
    verdict(7, ok, detail);
}

// --- criterion 8: human-score aggregation -----------------------------------

void criterion8() {
    const std::vector<int> panel = {3, 4, 4, 4, 4, 5, 5, 5, 5, 5, 5, 5, 5, 5, 5, 5};
    const std::string a = aggregate_human_scores(panel).formatted;
    const std::string b = aggregate_human_scores({4, 5}).formatted;
    verdict(8, a == "4.6/5 (0.60)" && b == "4.5/5 (0.50)",
            "human scores: panel -> \"" + a + "\", [4,5] -> \"" + b + "\"");
}

}  // namespace

int main() {
    criterion1();
    criterion2();
    criterion3();
    criterion4();
    criterion5();
    criterion6();
    criterion7();
    criterion8();
    if (failures) std::printf("%d criterion(s) failed\n", failures);
    else std::printf("all 8 criteria passed\n");
    return failures;
}
