#include "toxtrace/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "toxtrace/error.hpp"

namespace toxtrace {

std::size_t default_quorum(std::size_t annotator_count) {
    return (annotator_count + 1) / 2;
}

std::vector<std::size_t> majority_vote(const AnnotationSet& annotations,
                                       std::size_t quorum) {
    if (quorum < 1) {
        throw ConfigError("quorum must be >= 1");
    }
    std::map<std::size_t, std::size_t> votes;
    for (const auto& [annotator, indices] : annotations.annotators) {
        std::size_t prev = 0;
        for (std::size_t index : indices) {
            if (index < 1 || index >= annotations.series_length) {
                throw IndexError("annotator " + annotator + " marked index " +
                                 std::to_string(index) +
                                 " outside [1, n-1] for n = " +
                                 std::to_string(annotations.series_length));
            }
            if (index <= prev && prev != 0) {
                throw ParseError("annotator " + annotator +
                                 " indices are not strictly ascending");
            }
            prev = index;
            ++votes[index];
        }
    }
    std::vector<std::size_t> consensus;
    for (const auto& [index, count] : votes) {
        if (count >= quorum) {
            consensus.push_back(index);
        }
    }
    return consensus;
}

namespace {

double directed_hausdorff(const std::vector<std::size_t>& from,
                          const std::vector<std::size_t>& to) {
    double worst = 0.0;
    for (std::size_t p : from) {
        double nearest = std::numeric_limits<double>::infinity();
        for (std::size_t t : to) {
            const double d = p > t ? static_cast<double>(p - t)
                                   : static_cast<double>(t - p);
            nearest = std::min(nearest, d);
        }
        worst = std::max(worst, nearest);
    }
    return worst;
}

double pairs2(double m) { return m * (m - 1.0) / 2.0; }

std::vector<std::size_t> segment_lengths(const std::vector<std::size_t>& bkps) {
    std::vector<std::size_t> lengths;
    std::size_t prev = 0;
    for (std::size_t b : bkps) {
        lengths.push_back(b - prev);
        prev = b;
    }
    return lengths;
}

void validate_breakpoints(const std::vector<std::size_t>& bkps, std::size_t n,
                          const char* label) {
    if (bkps.empty() || bkps.back() != n) {
        throw PreconditionError(std::string(label) +
                                " breakpoints must end with the sentinel n");
    }
    std::size_t prev = 0;
    for (std::size_t b : bkps) {
        if (b == 0 || b > n) {
            throw PreconditionError(std::string(label) +
                                    " breakpoints must lie in (0, n]");
        }
        if (b <= prev) {
            throw PreconditionError(std::string(label) +
                                    " breakpoints must be strictly ascending");
        }
        prev = b;
    }
}

}  // namespace

double hausdorff(const std::vector<std::size_t>& pred,
                 const std::vector<std::size_t>& truth) {
    if (pred.empty() || truth.empty()) {
        throw UndefinedStatError(
            "hausdorff distance is undefined for an empty change-point set");
    }
    return std::max(directed_hausdorff(pred, truth),
                    directed_hausdorff(truth, pred));
}

double rand_index(const std::vector<std::size_t>& pred_breakpoints,
                  const std::vector<std::size_t>& truth_breakpoints,
                  std::size_t n) {
    if (n < 2) {
        throw UndefinedStatError("rand index needs a series of length >= 2");
    }
    validate_breakpoints(pred_breakpoints, n, "pred");
    validate_breakpoints(truth_breakpoints, n, "truth");

    // Contingency cells are the intersections of the two segmentations.
    std::set<std::size_t> cuts(pred_breakpoints.begin(), pred_breakpoints.end());
    cuts.insert(truth_breakpoints.begin(), truth_breakpoints.end());
    double same_both = 0.0;
    std::size_t prev = 0;
    for (std::size_t b : cuts) {
        same_both += pairs2(static_cast<double>(b - prev));
        prev = b;
    }
    double same_pred = 0.0;
    for (std::size_t len : segment_lengths(pred_breakpoints)) {
        same_pred += pairs2(static_cast<double>(len));
    }
    double same_truth = 0.0;
    for (std::size_t len : segment_lengths(truth_breakpoints)) {
        same_truth += pairs2(static_cast<double>(len));
    }
    const double total = pairs2(static_cast<double>(n));
    const double agreements = total + 2.0 * same_both - same_pred - same_truth;
    return agreements / total;
}

PrecisionRecall precision_recall(const std::vector<std::size_t>& pred,
                                 const std::vector<std::size_t>& truth,
                                 std::size_t margin) {
    struct Pair {
        std::size_t distance, pred_idx, truth_idx;
    };
    std::vector<Pair> pairs;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        for (std::size_t j = 0; j < truth.size(); ++j) {
            const std::size_t d = pred[i] > truth[j] ? pred[i] - truth[j]
                                                     : truth[j] - pred[i];
            if (d <= margin) {
                pairs.push_back({d, i, j});
            }
        }
    }
    std::sort(pairs.begin(), pairs.end(), [&](const Pair& a, const Pair& b) {
        if (a.distance != b.distance) return a.distance < b.distance;
        if (pred[a.pred_idx] != pred[b.pred_idx])
            return pred[a.pred_idx] < pred[b.pred_idx];
        return truth[a.truth_idx] < truth[b.truth_idx];
    });

    std::vector<bool> pred_used(pred.size(), false), truth_used(truth.size(), false);
    std::size_t matches = 0;
    for (const Pair& pair : pairs) {
        if (!pred_used[pair.pred_idx] && !truth_used[pair.truth_idx]) {
            pred_used[pair.pred_idx] = true;
            truth_used[pair.truth_idx] = true;
            ++matches;
        }
    }

    PrecisionRecall result;
    result.matches = matches;
    if (!pred.empty()) {
        result.precision =
            static_cast<double>(matches) / static_cast<double>(pred.size());
    }
    if (!truth.empty()) {
        result.recall =
            static_cast<double>(matches) / static_cast<double>(truth.size());
    }
    return result;
}

ChainMetrics evaluate_chain(const std::string& chain_id,
                            const std::string& method,
                            const std::vector<std::size_t>& pred_interior,
                            const std::vector<std::size_t>& truth,
                            std::size_t series_length,
                            const std::vector<std::size_t>& margins) {
    ChainMetrics metrics;
    metrics.chain_id = chain_id;
    metrics.method = method;

    if (!pred_interior.empty() && !truth.empty()) {
        metrics.hausdorff_distance = hausdorff(pred_interior, truth);
    }

    std::vector<std::size_t> pred_bkps = pred_interior;
    pred_bkps.push_back(series_length);
    std::vector<std::size_t> truth_bkps = truth;
    truth_bkps.push_back(series_length);
    metrics.rand = rand_index(pred_bkps, truth_bkps, series_length);

    for (std::size_t margin : margins) {
        const PrecisionRecall pr = precision_recall(pred_interior, truth, margin);
        metrics.precision[margin] = pr.precision;
        metrics.recall[margin] = pr.recall;
    }
    return metrics;
}

namespace {

std::optional<AggregateValue> aggregate_values(std::vector<double> values,
                                               std::size_t n_undefined) {
    if (values.empty()) {
        return std::nullopt;
    }
    AggregateValue agg;
    agg.n_valid = values.size();
    agg.n_undefined = n_undefined;
    for (double v : values) agg.mean += v;
    agg.mean /= static_cast<double>(values.size());
    std::sort(values.begin(), values.end());
    const std::size_t mid = values.size() / 2;
    agg.median = values.size() % 2 == 1
                     ? values[mid]
                     : 0.5 * (values[mid - 1] + values[mid]);
    return agg;
}

}  // namespace

EvalReport aggregate_report(std::vector<ChainMetrics> rows,
                            const std::vector<std::size_t>& margins) {
    EvalReport report;

    std::map<std::string, std::map<std::string, std::vector<double>>> valid;
    std::map<std::string, std::map<std::string, std::size_t>> undefined;
    auto record = [&](const std::string& method, const std::string& metric,
                      const std::optional<double>& value) {
        if (value.has_value()) {
            valid[method][metric].push_back(*value);
        } else {
            ++undefined[method][metric];
        }
    };

    for (const ChainMetrics& row : rows) {
        record(row.method, "hausdorff", row.hausdorff_distance);
        record(row.method, "rand_index", row.rand);
        for (std::size_t margin : margins) {
            const auto p = row.precision.find(margin);
            record(row.method, "precision@" + std::to_string(margin),
                   p != row.precision.end() ? p->second : std::nullopt);
            const auto r = row.recall.find(margin);
            record(row.method, "recall@" + std::to_string(margin),
                   r != row.recall.end() ? r->second : std::nullopt);
        }
    }

    for (auto& [method, metrics] : valid) {
        for (auto& [metric, values] : metrics) {
            const auto agg =
                aggregate_values(std::move(values), undefined[method][metric]);
            if (agg.has_value()) {
                report.by_method[method][metric] = *agg;
            }
        }
    }
    report.per_chain = std::move(rows);
    return report;
}

}  // namespace toxtrace
