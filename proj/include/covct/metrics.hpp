#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "covct/errors.hpp"

namespace covct {

struct ConfusionMatrix {
    long long tp = 0;
    long long fp = 0;
    long long tn = 0;
    long long fn = 0;
    int positive_class = 0;

    long long total() const { return tp + fp + tn + fn; }
};

/// Tallies predictions against labels with the stated positive class.
ConfusionMatrix confusion(const std::vector<int>& predictions, const std::vector<int>& labels,
                          int positive);

/// Percentages; metrics with a zero denominator are reported as undefined.
struct DerivedMetrics {
    std::optional<double> accuracy;
    std::optional<double> precision;
    std::optional<double> sensitivity;
    std::optional<double> specificity;
    std::optional<double> f1;
};

DerivedMetrics derive_metrics(const ConfusionMatrix& cm);

struct RocCurve {
    std::vector<std::pair<double, double>> points; // (fpr, tpr) from (0,0) to (1,1)
    double auc = 0.0;
};

/// Threshold sweep with tied scores grouped into one step; trapezoidal AUC.
RocCurve roc_auc(const std::vector<double>& scores, const std::vector<int>& labels, int positive);

enum class ConfidenceLevel { P90 = 90, P95 = 95, P99 = 99 };

/// Normal-approximation binomial interval on accuracy (percent), clipped to
/// [0, 100].
std::pair<double, double> accuracy_ci(double accuracy_percent, long long n,
                                      ConfidenceLevel level);

/// One `id,score_covid,predicted_class,true_class` row.
struct PredictionRow {
    std::string id;
    double score_covid = 0.0;
    int predicted_class = 0;
    int true_class = 0;
};

/// Parses the predictions CSV; throws MalformedCsv on bad header/rows or an
/// empty file.
std::vector<PredictionRow> parse_predictions_csv(const std::string& text);

} // namespace covct
