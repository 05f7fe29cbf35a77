#include "covct/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace covct {

ConfusionMatrix confusion(const std::vector<int>& predictions, const std::vector<int>& labels,
                          int positive) {
    if (predictions.empty()) throw EmptyInput("no predictions");
    if (predictions.size() != labels.size())
        throw LengthMismatch("predictions and labels differ in length");
    ConfusionMatrix cm;
    cm.positive_class = positive;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        bool pred_pos = predictions[i] == positive;
        bool label_pos = labels[i] == positive;
        if (pred_pos && label_pos) cm.tp++;
        else if (pred_pos && !label_pos) cm.fp++;
        else if (!pred_pos && !label_pos) cm.tn++;
        else cm.fn++;
    }
    return cm;
}

DerivedMetrics derive_metrics(const ConfusionMatrix& cm) {
    DerivedMetrics m;
    const double tp = static_cast<double>(cm.tp), fp = static_cast<double>(cm.fp);
    const double tn = static_cast<double>(cm.tn), fn = static_cast<double>(cm.fn);
    if (cm.total() > 0) m.accuracy = 100.0 * (tp + tn) / static_cast<double>(cm.total());
    if (tp + fp > 0) m.precision = 100.0 * tp / (tp + fp);
    if (tp + fn > 0) m.sensitivity = 100.0 * tp / (tp + fn);
    if (tn + fp > 0) m.specificity = 100.0 * tn / (tn + fp);
    if (m.precision && m.sensitivity && (*m.precision + *m.sensitivity) > 0)
        m.f1 = 2.0 * *m.precision * *m.sensitivity / (*m.precision + *m.sensitivity);
    return m;
}

RocCurve roc_auc(const std::vector<double>& scores, const std::vector<int>& labels, int positive) {
    if (scores.size() != labels.size())
        throw LengthMismatch("scores and labels differ in length");
    long long pos = 0, neg = 0;
    for (int l : labels) (l == positive ? pos : neg)++;
    if (pos == 0 || neg == 0) throw SingleClass("ROC needs both classes present");

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    RocCurve roc;
    roc.points.emplace_back(0.0, 0.0);
    long long tp = 0, fp = 0;
    double auc = 0.0;
    std::size_t i = 0;
    while (i < order.size()) {
        double s = scores[order[i]];
        long long dtp = 0, dfp = 0;
        while (i < order.size() && scores[order[i]] == s) {
            (labels[order[i]] == positive ? dtp : dfp)++;
            ++i;
        }
        double fpr0 = static_cast<double>(fp) / static_cast<double>(neg);
        double tpr0 = static_cast<double>(tp) / static_cast<double>(pos);
        tp += dtp;
        fp += dfp;
        double fpr1 = static_cast<double>(fp) / static_cast<double>(neg);
        double tpr1 = static_cast<double>(tp) / static_cast<double>(pos);
        auc += (fpr1 - fpr0) * (tpr0 + tpr1) / 2.0;
        roc.points.emplace_back(fpr1, tpr1);
    }
    roc.auc = auc;
    return roc;
}

std::pair<double, double> accuracy_ci(double accuracy_percent, long long n,
                                      ConfidenceLevel level) {
    double z = 1.645;
    if (level == ConfidenceLevel::P95) z = 1.960;
    else if (level == ConfidenceLevel::P99) z = 2.576;
    double se = std::sqrt(accuracy_percent * (100.0 - accuracy_percent) / static_cast<double>(n));
    double lo = std::max(0.0, accuracy_percent - z * se);
    double hi = std::min(100.0, accuracy_percent + z * se);
    return {lo, hi};
}

std::vector<PredictionRow> parse_predictions_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw MalformedCsv("empty CSV");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "id,score_covid,predicted_class,true_class")
        throw MalformedCsv("unexpected CSV header: " + line);
    std::vector<PredictionRow> rows;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::istringstream ls(line);
        PredictionRow row;
        std::string field;
        try {
            if (!std::getline(ls, row.id, ',')) throw MalformedCsv("");
            if (!std::getline(ls, field, ',')) throw MalformedCsv("");
            row.score_covid = std::stod(field);
            if (!std::getline(ls, field, ',')) throw MalformedCsv("");
            row.predicted_class = std::stoi(field);
            if (!std::getline(ls, field, ',')) throw MalformedCsv("");
            row.true_class = std::stoi(field);
        } catch (const std::exception&) {
            throw MalformedCsv("bad CSV row at line " + std::to_string(lineno));
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw MalformedCsv("CSV has a header but no rows");
    return rows;
}

} // namespace covct
