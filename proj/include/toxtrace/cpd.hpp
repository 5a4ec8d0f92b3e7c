#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace toxtrace {

inline constexpr std::size_t kDefaultMinSegmentSize = 2;

// A fixed-length series of d-dimensional points. The chain toxicity series is
// the d = 1 case; the detectors are generic over dimension.
class Signal {
public:
    Signal(std::vector<double> flat, std::size_t dim);
    static Signal univariate(std::vector<double> values);

    std::size_t size() const { return size_; }
    std::size_t dim() const { return dim_; }
    std::span<const double> point(std::size_t t) const {
        return {data_.data() + t * dim_, dim_};
    }

private:
    std::vector<double> data_;
    std::size_t size_ = 0;
    std::size_t dim_ = 1;
};

// Breakpoints are strictly increasing indices in (0, n]; the final element is
// always n (end sentinel) and the interior elements are the change points.
struct ChangePointSet {
    std::vector<std::size_t> breakpoints;

    std::vector<std::size_t> interior() const {
        if (breakpoints.empty()) return {};
        return {breakpoints.begin(), breakpoints.end() - 1};
    }
    std::size_t num_change_points() const {
        return breakpoints.empty() ? 0 : breakpoints.size() - 1;
    }
    bool operator==(const ChangePointSet&) const = default;
};

enum class CostModel { l2, rbf, linear, cosine };
enum class KernelModel { linear, rbf, cosine };

CostModel cost_model_from_name(const std::string& name);
const char* cost_model_name(CostModel model);
KernelModel kernel_model_from_name(const std::string& name);
const char* kernel_model_name(KernelModel model);

// Sum-of-costs interface over half-open intervals [a, b) of one signal.
// Implementations precompute prefix structures at construction, so queries
// are O(dim).
class Cost {
public:
    virtual ~Cost() = default;
    virtual double operator()(std::size_t a, std::size_t b) const = 0;
    // Shortest interval the model is defined on (linear regression needs 2).
    virtual std::size_t min_span() const { return 1; }
};

// bandwidth, when set, replaces the median pairwise distance in the rbf
// gamma = 1 / (2 * bandwidth^2). Ignored by the other models.
std::unique_ptr<Cost> make_cost(const Signal& signal, CostModel model,
                                std::optional<double> bandwidth = {});
std::unique_ptr<Cost> make_kernel_cost(const Signal& signal, KernelModel kernel,
                                       std::optional<double> bandwidth = {});

// One-off cost evaluations (construct a Cost for repeated queries instead).
double cost_l2(const Signal& signal, std::size_t a, std::size_t b);
double cost_rbf(const Signal& signal, std::size_t a, std::size_t b,
                std::optional<double> bandwidth = {});
double cost_linear(const Signal& signal, std::size_t a, std::size_t b);
double cost_cosine(const Signal& signal, std::size_t a, std::size_t b);

// Sum of per-segment costs plus penalty * (#segments - 1).
double segmentation_objective(const Cost& cost, const ChangePointSet& cps,
                              double penalty);

// BIC-style default for penalized detection: 2 * var(signal) * log(n).
double default_penalty(const Signal& signal);

// Exact penalized minimization via pruned dynamic programming. Ties are
// broken toward the earliest admissible index.
ChangePointSet detect_pelt(const Signal& signal, const Cost& cost,
                           double penalty,
                           std::size_t min_size = kDefaultMinSegmentSize);
ChangePointSet detect_pelt(const Signal& signal, CostModel model, double penalty,
                           std::size_t min_size = kDefaultMinSegmentSize,
                           std::optional<double> bandwidth = {});

// Exact dynamic program minimizing total kernel cost for a fixed number of
// change points, or the penalized objective when penalty is given instead.
ChangePointSet detect_kernelcpd(const Signal& signal, KernelModel kernel,
                                std::optional<std::size_t> n_bkps,
                                std::optional<double> penalty,
                                std::size_t min_size = kDefaultMinSegmentSize,
                                std::optional<double> bandwidth = {});
ChangePointSet detect_kernelcpd(const Signal& signal, const Cost& cost,
                                std::optional<std::size_t> n_bkps,
                                std::optional<double> penalty,
                                std::size_t min_size = kDefaultMinSegmentSize);

// Greedy recursive bisection: repeatedly apply the single split with the
// largest cost reduction; stop at n_bkps splits or when the best gain drops
// below the penalty.
ChangePointSet detect_binseg(const Signal& signal, const Cost& cost,
                             std::optional<std::size_t> n_bkps,
                             std::optional<double> penalty,
                             std::size_t min_size = kDefaultMinSegmentSize);
ChangePointSet detect_binseg(const Signal& signal, CostModel model,
                             std::optional<std::size_t> n_bkps,
                             std::optional<double> penalty,
                             std::size_t min_size = kDefaultMinSegmentSize,
                             std::optional<double> bandwidth = {});

// Greedy merging from a min_size grid of candidate breakpoints: repeatedly
// delete the breakpoint whose removal least increases total cost; stop at
// n_bkps or when the smallest increase exceeds the penalty.
ChangePointSet detect_bottomup(const Signal& signal, const Cost& cost,
                               std::optional<std::size_t> n_bkps,
                               std::optional<double> penalty,
                               std::size_t min_size = kDefaultMinSegmentSize);
ChangePointSet detect_bottomup(const Signal& signal, CostModel model,
                               std::optional<std::size_t> n_bkps,
                               std::optional<double> penalty,
                               std::size_t min_size = kDefaultMinSegmentSize,
                               std::optional<double> bandwidth = {});

}  // namespace toxtrace
