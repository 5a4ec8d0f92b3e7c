#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace toxtrace {

// Change-point marks from several annotators over one chain's segment series.
// Indices are interior positions in [1, n-1]; the end sentinel is excluded.
struct AnnotationSet {
    std::string chain_id;
    std::map<std::string, std::vector<std::size_t>> annotators;
    std::size_t series_length = 0;  // n
};

// Number of annotators needed for a majority: ceil(m / 2).
std::size_t default_quorum(std::size_t annotator_count);

// Indices marked (exact match) by at least `quorum` annotators, ascending.
std::vector<std::size_t> majority_vote(const AnnotationSet& annotations,
                                       std::size_t quorum);

// max(directed(pred -> truth), directed(truth -> pred)) over index distance.
// Throws UndefinedStatError when either set is empty.
double hausdorff(const std::vector<std::size_t>& pred,
                 const std::vector<std::size_t>& truth);

// Fraction of the C(n,2) sample pairs on which the two segmentations agree
// about same-segment membership. Both breakpoint lists must end with n.
double rand_index(const std::vector<std::size_t>& pred_breakpoints,
                  const std::vector<std::size_t>& truth_breakpoints,
                  std::size_t n);

struct PrecisionRecall {
    std::optional<double> precision;  // absent when pred is empty
    std::optional<double> recall;     // absent when truth is empty
    std::size_t matches = 0;
};

// Greedy closest-first one-to-one matching within +/- margin.
PrecisionRecall precision_recall(const std::vector<std::size_t>& pred,
                                 const std::vector<std::size_t>& truth,
                                 std::size_t margin);

inline const std::vector<std::size_t> kDefaultMargins{1, 2, 4};

// All metrics for one chain. Absent values mark chains where a metric is
// undefined (e.g. the detector returned no change points); aggregation skips
// them per metric.
struct ChainMetrics {
    std::string chain_id;
    std::string method;
    std::optional<double> hausdorff_distance;
    std::optional<double> rand;
    std::map<std::size_t, std::optional<double>> precision;  // by margin
    std::map<std::size_t, std::optional<double>> recall;
};

// pred_interior excludes the end sentinel; truth is the consensus index list.
ChainMetrics evaluate_chain(const std::string& chain_id,
                            const std::string& method,
                            const std::vector<std::size_t>& pred_interior,
                            const std::vector<std::size_t>& truth,
                            std::size_t series_length,
                            const std::vector<std::size_t>& margins = kDefaultMargins);

struct AggregateValue {
    double mean = 0.0;
    double median = 0.0;
    std::size_t n_valid = 0;
    std::size_t n_undefined = 0;
};

// method -> metric name ("hausdorff", "rand_index", "precision@1", ...) ->
// aggregate. Metrics with zero valid chains are omitted.
struct EvalReport {
    std::vector<ChainMetrics> per_chain;
    std::map<std::string, std::map<std::string, AggregateValue>> by_method;
};

EvalReport aggregate_report(std::vector<ChainMetrics> rows,
                            const std::vector<std::size_t>& margins = kDefaultMargins);

}  // namespace toxtrace
