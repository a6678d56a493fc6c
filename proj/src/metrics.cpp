#include "ecgforge/metrics.hpp"

namespace ecgforge {

MultilabelMetrics compute_multilabel_metrics(const Eigen::MatrixXd& y_true,
                                             const Eigen::MatrixXd& y_score,
                                             double threshold) {
    if (y_true.rows() != y_score.rows() || y_true.cols() != y_score.cols()) {
        throw ShapeError("y_true and y_score shapes differ");
    }
    if (y_true.size() == 0) throw InvalidArgument("empty label matrix");
    const Eigen::Index n = y_true.rows();
    const Eigen::Index labels = y_true.cols();
    for (Eigen::Index i = 0; i < y_true.size(); ++i) {
        const double v = y_true(i / labels, i % labels);
        if (v != 0.0 && v != 1.0) throw ValidationError("y_true must be binary");
    }

    MultilabelMetrics out;
    double auc_sum = 0.0;
    int auc_labels = 0;
    double f1_sum = 0.0;
    double disagreements = 0.0;

    for (Eigen::Index c = 0; c < labels; ++c) {
        long positives = 0;
        for (Eigen::Index i = 0; i < n; ++i) positives += y_true(i, c) > 0.5 ? 1 : 0;
        const long negatives = n - positives;

        // AUC: P(score_pos > score_neg) with ties counted half.
        if (positives > 0 && negatives > 0) {
            double wins = 0.0;
            for (Eigen::Index i = 0; i < n; ++i) {
                if (y_true(i, c) <= 0.5) continue;
                for (Eigen::Index k = 0; k < n; ++k) {
                    if (y_true(k, c) > 0.5) continue;
                    if (y_score(i, c) > y_score(k, c)) wins += 1.0;
                    else if (y_score(i, c) == y_score(k, c)) wins += 0.5;
                }
            }
            auc_sum += wins / (static_cast<double>(positives) * static_cast<double>(negatives));
            ++auc_labels;
        } else {
            out.skipped_labels.push_back(static_cast<int>(c));
        }

        long tp = 0, fp = 0, fn = 0;
        for (Eigen::Index i = 0; i < n; ++i) {
            const bool truth = y_true(i, c) > 0.5;
            const bool pred = y_score(i, c) >= threshold;
            if (pred && truth) ++tp;
            else if (pred && !truth) ++fp;
            else if (!pred && truth) ++fn;
            if (pred != truth) disagreements += 1.0;
        }
        // F1 of an empty-positive column with no predictions is defined as 0.
        f1_sum += (2 * tp + fp + fn) > 0
                      ? 2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn)
                      : 0.0;
    }

    out.auc_macro = auc_labels > 0 ? auc_sum / auc_labels : 0.0;
    out.f1_macro = f1_sum / static_cast<double>(labels);
    out.hamming_loss = disagreements / static_cast<double>(n * labels);
    return out;
}

double compute_accuracy(const std::vector<int>& y_true, const std::vector<int>& y_pred) {
    if (y_true.size() != y_pred.size()) throw ShapeError("length mismatch");
    if (y_true.empty()) throw InvalidArgument("empty label vectors");
    long hits = 0;
    for (size_t i = 0; i < y_true.size(); ++i) hits += y_true[i] == y_pred[i] ? 1 : 0;
    return static_cast<double>(hits) / static_cast<double>(y_true.size());
}

}  // namespace ecgforge
