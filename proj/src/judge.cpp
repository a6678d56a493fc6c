#include "ecgforge/judge.hpp"

#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "ecgforge/guider.hpp"

namespace ecgforge {

namespace {

struct CriterionSpec {
    const char* key;
    std::vector<ScoreEntry> JudgeScorecard::* field;
    std::vector<int> allowed;
    size_t max_entries;       // 0 = unbounded
    bool single_entry;
};

const std::vector<CriterionSpec>& criteria() {
    static const std::vector<CriterionSpec> spec = {
        {"DiagnosisAccuracy", &JudgeScorecard::diagnosis_accuracy, {0, 1, 2}, 0, false},
        {"AnalysisCompleteness", &JudgeScorecard::analysis_completeness, {0, 1}, 0, false},
        {"AnalysisRelevance", &JudgeScorecard::analysis_relevance, {0, 1, 2}, 0, false},
        {"LeadAssessmentCoverage", &JudgeScorecard::lead_assessment_coverage, {0, 1}, 12, false},
        {"LeadAssessmentAccuracy", &JudgeScorecard::lead_assessment_accuracy, {0, 1, 2}, 12, false},
        {"ECGFeatureGrounding", &JudgeScorecard::ecg_feature_grounding, {0, 50, 80, 100}, 1, true},
        {"EvidenceBasedReasoning", &JudgeScorecard::evidence_based_reasoning, {0, 50, 80, 100}, 1, true},
        {"ClinicalDiagnosticFidelity", &JudgeScorecard::clinical_diagnostic_fidelity, {0, 50, 80, 100}, 1, true},
    };
    return spec;
}

double entry_sum(const std::vector<ScoreEntry>& entries) {
    return std::accumulate(entries.begin(), entries.end(), 0.0,
                           [](double acc, const ScoreEntry& e) { return acc + e.score; });
}

}  // namespace

void JudgeScorecard::validate() const {
    for (const auto& spec : criteria()) {
        const auto& entries = this->*spec.field;
        if (spec.single_entry && entries.size() != 1) {
            throw ValidationError(std::string(spec.key) + ": expected exactly one entry, got " +
                                  std::to_string(entries.size()));
        }
        if (spec.max_entries && entries.size() > spec.max_entries) {
            throw ValidationError(std::string(spec.key) + ": at most " +
                                  std::to_string(spec.max_entries) + " entries, got " +
                                  std::to_string(entries.size()));
        }
        for (size_t i = 0; i < entries.size(); ++i) {
            const int s = entries[i].score;
            if (std::find(spec.allowed.begin(), spec.allowed.end(), s) == spec.allowed.end()) {
                throw ValidationError(std::string(spec.key) + "[" + std::to_string(i) +
                                      "]: score " + std::to_string(s) + " out of range");
            }
        }
    }
}

std::string build_judge_prompt(const std::string& generated, const std::string& groundtruth) {
    if (generated.empty() || groundtruth.empty()) {
        throw InvalidArgument("judge prompt needs non-empty generated and groundtruth texts");
    }
    std::string rendered = load_template("judge.v1.txt");
    rendered = substitute_placeholder(rendered, "model_generated", generated);
    rendered = substitute_placeholder(rendered, "groundtruth", groundtruth);
    return rendered;
}

JudgeScorecard parse_scorecard(const std::string& raw) {
    // Tolerate ``` / ```json fences around the payload.
    std::string text = raw;
    const auto fence = text.find("```");
    if (fence != std::string::npos) {
        auto start = text.find('\n', fence);
        if (start == std::string::npos) throw ParseError("unterminated code fence");
        ++start;
        const auto end = text.find("```", start);
        if (end == std::string::npos) throw ParseError("unterminated code fence");
        text = text.substr(start, end - start);
    }

    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("scorecard is not valid JSON: ") + e.what());
    }

    JudgeScorecard card;
    for (const auto& spec : criteria()) {
        if (!j.contains(spec.key)) {
            throw ValidationError(std::string("missing criterion ") + spec.key);
        }
        const auto& arr = j.at(spec.key);
        if (!arr.is_array()) throw ValidationError(std::string(spec.key) + " must be an array");
        auto& entries = card.*spec.field;
        for (const auto& item : arr) {
            ScoreEntry e;
            try {
                e.score = item.at("Score").get<int>();
                e.explanation = item.value("Explanation", "");
            } catch (const nlohmann::json::exception& ex) {
                throw ParseError(std::string(spec.key) + ": bad entry: " + ex.what());
            }
            entries.push_back(std::move(e));
        }
    }
    card.validate();
    return card;
}

MetricReport aggregate_metrics(const std::vector<JudgeScorecard>& cards) {
    if (cards.empty()) throw InvalidArgument("aggregate_metrics needs at least one scorecard");
    MetricReport report;
    report.sample_count = static_cast<long>(cards.size());
    for (const auto& card : cards) {
        card.validate();
        const double n_diag = static_cast<double>(card.diagnosis_accuracy.size());
        report.diagnosis_accuracy_pct +=
            n_diag > 0 ? 100.0 * entry_sum(card.diagnosis_accuracy) / (2.0 * n_diag) : 0.0;
        report.analysis_completeness_avg += entry_sum(card.analysis_completeness);
        report.analysis_relevance_avg += entry_sum(card.analysis_relevance) / 2.0;
        report.lead_coverage_pct += 100.0 * entry_sum(card.lead_assessment_coverage) / 12.0;
        report.lead_accuracy_pct += 100.0 * entry_sum(card.lead_assessment_accuracy) / 24.0;
        report.feature_grounding += entry_sum(card.ecg_feature_grounding);
        report.evidence_reasoning += entry_sum(card.evidence_based_reasoning);
        report.clinical_fidelity += entry_sum(card.clinical_diagnostic_fidelity);
    }
    const double m = static_cast<double>(cards.size());
    report.diagnosis_accuracy_pct /= m;
    report.analysis_completeness_avg /= m;
    report.analysis_relevance_avg /= m;
    report.lead_coverage_pct /= m;
    report.lead_accuracy_pct /= m;
    report.feature_grounding /= m;
    report.evidence_reasoning /= m;
    report.clinical_fidelity /= m;
    return report;
}

std::string metric_report_json(const MetricReport& r) {
    nlohmann::ordered_json j;
    j["diagnosis_accuracy_pct"] = r.diagnosis_accuracy_pct;
    j["analysis_completeness_avg"] = r.analysis_completeness_avg;
    j["analysis_relevance_avg"] = r.analysis_relevance_avg;
    j["lead_coverage_pct"] = r.lead_coverage_pct;
    j["lead_accuracy_pct"] = r.lead_accuracy_pct;
    j["feature_grounding"] = r.feature_grounding;
    j["evidence_reasoning"] = r.evidence_reasoning;
    j["clinical_fidelity"] = r.clinical_fidelity;
    j["sample_count"] = r.sample_count;
    return j.dump(2);
}

std::string render_report_table(const std::vector<std::pair<std::string, MetricReport>>& rows) {
    std::ostringstream out;
    char buf[32];
    out << "Model                    DiagAcc  Compl  Relev  LeadCov  LeadAcc  Ground  Reason  Fidel\n";
    for (const auto& [name, r] : rows) {
        out << name;
        for (size_t i = name.size(); i < 24; ++i) out << ' ';
        const double vals[] = {r.diagnosis_accuracy_pct, r.analysis_completeness_avg,
                               r.analysis_relevance_avg, r.lead_coverage_pct,
                               r.lead_accuracy_pct,      r.feature_grounding,
                               r.evidence_reasoning,     r.clinical_fidelity};
        for (double v : vals) {
            std::snprintf(buf, sizeof(buf), " %7.2f", v);
            out << buf;
        }
        out << "\n";
    }
    return out.str();
}

HumanScoreSummary aggregate_human_scores(const std::vector<int>& scores) {
    if (scores.empty()) throw InvalidArgument("no scores to aggregate");
    for (int s : scores) {
        if (s < 1 || s > 5) {
            throw ValidationError("expert score " + std::to_string(s) + " outside 1..5");
        }
    }
    HumanScoreSummary out;
    const double n = static_cast<double>(scores.size());
    out.mean = std::accumulate(scores.begin(), scores.end(), 0.0) / n;
    double var = 0.0;
    for (int s : scores) var += (s - out.mean) * (s - out.mean);
    out.std_dev = std::sqrt(var / n);  // population std, matching "Mean and STD" tables
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.1f/5 (%.2f)", out.mean, out.std_dev);
    out.formatted = buf;
    return out;
}

}  // namespace ecgforge
