#pragma once

#include <array>
#include <string>
#include <vector>

#include "ecgforge/errors.hpp"

namespace ecgforge {

struct ScoreEntry {
    int score = 0;
    std::string explanation;
};

/// Parsed judge verdict for one sample.
/// Rubric ranges: DiagnosisAccuracy / AnalysisRelevance / LeadAssessmentAccuracy
/// entries in {0,1,2}; AnalysisCompleteness / LeadAssessmentCoverage in {0,1}
/// (coverage capped at 12 entries); the three 0-100 criteria take a single
/// entry in {0,50,80,100}.
struct JudgeScorecard {
    std::vector<ScoreEntry> diagnosis_accuracy;
    std::vector<ScoreEntry> analysis_completeness;
    std::vector<ScoreEntry> analysis_relevance;
    std::vector<ScoreEntry> lead_assessment_coverage;
    std::vector<ScoreEntry> lead_assessment_accuracy;
    std::vector<ScoreEntry> ecg_feature_grounding;
    std::vector<ScoreEntry> evidence_based_reasoning;
    std::vector<ScoreEntry> clinical_diagnostic_fidelity;

    void validate() const;
};

struct MetricReport {
    double diagnosis_accuracy_pct = 0.0;
    double analysis_completeness_avg = 0.0;
    double analysis_relevance_avg = 0.0;
    double lead_coverage_pct = 0.0;
    double lead_accuracy_pct = 0.0;
    double feature_grounding = 0.0;
    double evidence_reasoning = 0.0;
    double clinical_fidelity = 0.0;
    long sample_count = 0;
};

/// Verbatim judge template with both texts substituted; deterministic.
std::string build_judge_prompt(const std::string& generated, const std::string& groundtruth);

/// Parses a judge reply (tolerating ``` fences) into a validated scorecard.
JudgeScorecard parse_scorecard(const std::string& raw);

/// Per-sample normalization then arithmetic mean across samples:
/// diagnosis 100*sum/(2n), completeness sum, relevance sum/2,
/// coverage 100*sum/12, lead accuracy 100*sum/24, 0-100 criteria as given.
MetricReport aggregate_metrics(const std::vector<JudgeScorecard>& cards);

std::string metric_report_json(const MetricReport& report);

/// Plain-text table row in the 8-column order of the grounded-understanding
/// protocol, values at 2 decimals.
std::string render_report_table(const std::vector<std::pair<std::string, MetricReport>>& rows);

/// Mean and population standard deviation of 1..5 expert scores, rendered
/// "m/5 (s)" with one decimal on the mean and two on the std.
struct HumanScoreSummary {
    double mean = 0.0;
    double std_dev = 0.0;
    std::string formatted;  // e.g. "4.5/5 (0.50)"
};
HumanScoreSummary aggregate_human_scores(const std::vector<int>& scores);

}  // namespace ecgforge
