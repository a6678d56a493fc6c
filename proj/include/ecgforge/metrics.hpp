#pragma once

#include <Eigen/Core>
#include <optional>
#include <vector>

#include "ecgforge/errors.hpp"

namespace ecgforge {

struct MultilabelMetrics {
    double auc_macro = 0.0;
    double f1_macro = 0.0;
    double hamming_loss = 0.0;
    std::vector<int> skipped_labels;  // single-class columns excluded from AUC
};

/// Macro AUC by pairwise ranking counts (ties = 0.5), macro F1 at the
/// threshold, Hamming loss as mean elementwise disagreement.
/// y_true is 0/1, shape (samples, labels); y_score the same shape.
MultilabelMetrics compute_multilabel_metrics(const Eigen::MatrixXd& y_true,
                                             const Eigen::MatrixXd& y_score,
                                             double threshold);

/// Single-label accuracy for the non-multi-label benchmarks.
double compute_accuracy(const std::vector<int>& y_true, const std::vector<int>& y_pred);

}  // namespace ecgforge
