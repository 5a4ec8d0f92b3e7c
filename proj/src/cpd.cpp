#include "toxtrace/cpd.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>

#include "toxtrace/error.hpp"

namespace toxtrace {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::size_t kNone = static_cast<std::size_t>(-1);

void check_interval(std::size_t a, std::size_t b, std::size_t n,
                    std::size_t min_span) {
    if (a >= b || b > n) {
        throw IndexError("invalid interval [" + std::to_string(a) + ", " +
                         std::to_string(b) + ") over signal of length " +
                         std::to_string(n));
    }
    if (b - a < min_span) {
        throw IndexError("interval [" + std::to_string(a) + ", " +
                         std::to_string(b) + ") shorter than " +
                         std::to_string(min_span));
    }
}

double squared_distance(std::span<const double> u, std::span<const double> v) {
    double s = 0.0;
    for (std::size_t k = 0; k < u.size(); ++k) {
        const double d = u[k] - v[k];
        s += d * d;
    }
    return s;
}

// --- l2 ---------------------------------------------------------------------

class L2Cost final : public Cost {
public:
    explicit L2Cost(const Signal& signal)
        : n_(signal.size()), dim_(signal.dim()),
          sum_((n_ + 1) * signal.dim(), 0.0), sq_(n_ + 1, 0.0) {
        for (std::size_t t = 0; t < n_; ++t) {
            const auto y = signal.point(t);
            for (std::size_t k = 0; k < dim_; ++k) {
                sum_[(t + 1) * dim_ + k] = sum_[t * dim_ + k] + y[k];
                sq_[t + 1] += y[k] * y[k];
            }
            sq_[t + 1] += sq_[t];
        }
    }

    double operator()(std::size_t a, std::size_t b) const override {
        check_interval(a, b, n_, 1);
        const double m = static_cast<double>(b - a);
        double mean_term = 0.0;
        for (std::size_t k = 0; k < dim_; ++k) {
            const double s = sum_[b * dim_ + k] - sum_[a * dim_ + k];
            mean_term += s * s;
        }
        return std::max(0.0, (sq_[b] - sq_[a]) - mean_term / m);
    }

private:
    std::size_t n_, dim_;
    std::vector<double> sum_;  // prefix sums per dimension
    std::vector<double> sq_;   // prefix sums of squared norms
};

// --- kernel (rbf / cosine / linear) ------------------------------------------

class KernelCost final : public Cost {
public:
    KernelCost(const Signal& signal, KernelModel kernel,
               std::optional<double> bandwidth)
        : n_(signal.size()) {
        gram_.assign(n_ * n_, 0.0);
        diag_prefix_.assign(n_ + 1, 0.0);

        double gamma = 1.0;
        if (kernel == KernelModel::rbf) {
            gamma = rbf_gamma(signal, bandwidth);
        }

        std::vector<double> norms(n_, 0.0);
        if (kernel == KernelModel::cosine) {
            for (std::size_t t = 0; t < n_; ++t) {
                norms[t] = std::sqrt(dot(signal.point(t), signal.point(t)));
            }
        }

        for (std::size_t s = 0; s < n_; ++s) {
            for (std::size_t t = s; t < n_; ++t) {
                double k = 0.0;
                switch (kernel) {
                    case KernelModel::rbf:
                        k = std::exp(-gamma *
                                     squared_distance(signal.point(s), signal.point(t)));
                        break;
                    case KernelModel::cosine:
                        if (norms[s] > 0.0 && norms[t] > 0.0) {
                            k = dot(signal.point(s), signal.point(t)) /
                                (norms[s] * norms[t]);
                        }
                        break;
                    case KernelModel::linear:
                        k = dot(signal.point(s), signal.point(t));
                        break;
                }
                gram_[s * n_ + t] = k;
                gram_[t * n_ + s] = k;
            }
        }

        // rbf and cosine count each sample as 1 in the first term; the linear
        // kernel uses its own diagonal (giving the l2 cost).
        for (std::size_t t = 0; t < n_; ++t) {
            const double d =
                kernel == KernelModel::linear ? gram_[t * n_ + t] : 1.0;
            diag_prefix_[t + 1] = diag_prefix_[t] + d;
        }

        // 2-D prefix sums of the Gram matrix for O(1) box sums.
        box_.assign((n_ + 1) * (n_ + 1), 0.0);
        for (std::size_t i = 0; i < n_; ++i) {
            double row = 0.0;
            for (std::size_t j = 0; j < n_; ++j) {
                row += gram_[i * n_ + j];
                box_[(i + 1) * (n_ + 1) + (j + 1)] = box_[i * (n_ + 1) + (j + 1)] + row;
            }
        }
    }

    double operator()(std::size_t a, std::size_t b) const override {
        check_interval(a, b, n_, 1);
        const double m = static_cast<double>(b - a);
        const double box = box_[b * (n_ + 1) + b] - box_[a * (n_ + 1) + b] -
                           box_[b * (n_ + 1) + a] + box_[a * (n_ + 1) + a];
        return std::max(0.0, (diag_prefix_[b] - diag_prefix_[a]) - box / m);
    }

private:
    static double dot(std::span<const double> u, std::span<const double> v) {
        double s = 0.0;
        for (std::size_t k = 0; k < u.size(); ++k) s += u[k] * v[k];
        return s;
    }

    static double rbf_gamma(const Signal& signal,
                            std::optional<double> bandwidth) {
        if (bandwidth.has_value()) {
            if (!(*bandwidth > 0.0)) {
                throw ConfigError("rbf bandwidth must be positive");
            }
            return 1.0 / (2.0 * *bandwidth * *bandwidth);
        }
        // Median heuristic over pairwise distances of the full signal.
        const std::size_t n = signal.size();
        std::vector<double> dists;
        dists.reserve(n * (n - 1) / 2);
        for (std::size_t s = 0; s < n; ++s) {
            for (std::size_t t = s + 1; t < n; ++t) {
                dists.push_back(
                    std::sqrt(squared_distance(signal.point(s), signal.point(t))));
            }
        }
        std::sort(dists.begin(), dists.end());
        double median = 0.0;
        if (!dists.empty()) {
            const std::size_t mid = dists.size() / 2;
            median = dists.size() % 2 == 1
                         ? dists[mid]
                         : 0.5 * (dists[mid - 1] + dists[mid]);
        }
        if (!(median > 0.0)) {
            std::cerr << "toxtrace: rbf median heuristic degenerate "
                         "(identical samples); falling back to gamma = 1\n";
            return 1.0;
        }
        return 1.0 / (2.0 * median * median);
    }

    std::size_t n_;
    std::vector<double> gram_;
    std::vector<double> diag_prefix_;
    std::vector<double> box_;
};

// --- linear regression on the time index -------------------------------------

class LinearCost final : public Cost {
public:
    explicit LinearCost(const Signal& signal)
        : n_(signal.size()), dim_(signal.dim()),
          st_(n_ + 1, 0.0), st2_(n_ + 1, 0.0),
          sy_((n_ + 1) * signal.dim(), 0.0),
          sty_((n_ + 1) * signal.dim(), 0.0),
          syy_((n_ + 1) * signal.dim(), 0.0) {
        for (std::size_t t = 0; t < n_; ++t) {
            const double x = static_cast<double>(t);
            st_[t + 1] = st_[t] + x;
            st2_[t + 1] = st2_[t] + x * x;
            const auto y = signal.point(t);
            for (std::size_t k = 0; k < dim_; ++k) {
                sy_[(t + 1) * dim_ + k] = sy_[t * dim_ + k] + y[k];
                sty_[(t + 1) * dim_ + k] = sty_[t * dim_ + k] + x * y[k];
                syy_[(t + 1) * dim_ + k] = syy_[t * dim_ + k] + y[k] * y[k];
            }
        }
    }

    std::size_t min_span() const override { return 2; }

    double operator()(std::size_t a, std::size_t b) const override {
        check_interval(a, b, n_, 2);
        const double m = static_cast<double>(b - a);
        const double st = st_[b] - st_[a];
        const double sxx = (st2_[b] - st2_[a]) - st * st / m;
        double rss = 0.0;
        for (std::size_t k = 0; k < dim_; ++k) {
            const double sy = sy_[b * dim_ + k] - sy_[a * dim_ + k];
            const double sxy = (sty_[b * dim_ + k] - sty_[a * dim_ + k]) - st * sy / m;
            const double scc = (syy_[b * dim_ + k] - syy_[a * dim_ + k]) - sy * sy / m;
            rss += scc - (sxx > 0.0 ? sxy * sxy / sxx : 0.0);
        }
        return std::max(0.0, rss);
    }

private:
    std::size_t n_, dim_;
    std::vector<double> st_, st2_;
    std::vector<double> sy_, sty_, syy_;
};

std::size_t effective_min_size(const Cost& cost, std::size_t min_size) {
    if (min_size == 0) {
        throw ConfigError("min_size must be positive");
    }
    return std::max(min_size, cost.min_span());
}

void require_length(std::size_t n, std::size_t min_size) {
    if (n < 2 * min_size) {
        throw SignalTooShortError(
            "signal of length " + std::to_string(n) +
            " is shorter than 2 * min_size = " + std::to_string(2 * min_size));
    }
}

ChangePointSet trivial_result(std::size_t n) { return {{n}}; }

}  // namespace

// --- Signal ------------------------------------------------------------------

Signal::Signal(std::vector<double> flat, std::size_t dim)
    : data_(std::move(flat)), dim_(dim) {
    if (dim_ == 0) {
        throw ConfigError("signal dimension must be >= 1");
    }
    if (data_.size() % dim_ != 0) {
        throw ConfigError("flat data size is not a multiple of the dimension");
    }
    size_ = data_.size() / dim_;
    if (size_ < 2) {
        throw SignalTooShortError("signal must contain at least 2 samples");
    }
    for (double v : data_) {
        if (!std::isfinite(v)) {
            throw ConfigError("signal contains a non-finite value");
        }
    }
}

Signal Signal::univariate(std::vector<double> values) {
    return Signal(std::move(values), 1);
}

// --- model names -------------------------------------------------------------

CostModel cost_model_from_name(const std::string& name) {
    if (name == "l2") return CostModel::l2;
    if (name == "rbf") return CostModel::rbf;
    if (name == "linear") return CostModel::linear;
    if (name == "cosine") return CostModel::cosine;
    throw ConfigError("unknown cost model: " + name);
}

const char* cost_model_name(CostModel model) {
    switch (model) {
        case CostModel::l2: return "l2";
        case CostModel::rbf: return "rbf";
        case CostModel::linear: return "linear";
        case CostModel::cosine: return "cosine";
    }
    return "unknown";
}

KernelModel kernel_model_from_name(const std::string& name) {
    if (name == "rbf") return KernelModel::rbf;
    if (name == "cosine") return KernelModel::cosine;
    // The linear kernel's cost coincides with l2; accept both spellings.
    if (name == "linear" || name == "l2") return KernelModel::linear;
    throw ConfigError("unknown kernel: " + name);
}

const char* kernel_model_name(KernelModel model) {
    switch (model) {
        case KernelModel::linear: return "linear";
        case KernelModel::rbf: return "rbf";
        case KernelModel::cosine: return "cosine";
    }
    return "unknown";
}

std::unique_ptr<Cost> make_cost(const Signal& signal, CostModel model,
                                std::optional<double> bandwidth) {
    switch (model) {
        case CostModel::l2:
            return std::make_unique<L2Cost>(signal);
        case CostModel::rbf:
            return std::make_unique<KernelCost>(signal, KernelModel::rbf, bandwidth);
        case CostModel::linear:
            return std::make_unique<LinearCost>(signal);
        case CostModel::cosine:
            return std::make_unique<KernelCost>(signal, KernelModel::cosine,
                                                std::nullopt);
    }
    throw ConfigError("unknown cost model");
}

std::unique_ptr<Cost> make_kernel_cost(const Signal& signal, KernelModel kernel,
                                       std::optional<double> bandwidth) {
    return std::make_unique<KernelCost>(signal, kernel, bandwidth);
}

double cost_l2(const Signal& signal, std::size_t a, std::size_t b) {
    return L2Cost(signal)(a, b);
}

double cost_rbf(const Signal& signal, std::size_t a, std::size_t b,
                std::optional<double> bandwidth) {
    return KernelCost(signal, KernelModel::rbf, bandwidth)(a, b);
}

double cost_linear(const Signal& signal, std::size_t a, std::size_t b) {
    return LinearCost(signal)(a, b);
}

double cost_cosine(const Signal& signal, std::size_t a, std::size_t b) {
    return KernelCost(signal, KernelModel::cosine, std::nullopt)(a, b);
}

double segmentation_objective(const Cost& cost, const ChangePointSet& cps,
                              double penalty) {
    double total = 0.0;
    std::size_t prev = 0;
    for (std::size_t b : cps.breakpoints) {
        total += cost(prev, b);
        prev = b;
    }
    return total + penalty * static_cast<double>(cps.num_change_points());
}

double default_penalty(const Signal& signal) {
    const std::size_t n = signal.size();
    std::vector<double> mean(signal.dim(), 0.0);
    for (std::size_t t = 0; t < n; ++t) {
        const auto y = signal.point(t);
        for (std::size_t k = 0; k < signal.dim(); ++k) mean[k] += y[k];
    }
    for (double& m : mean) m /= static_cast<double>(n);
    double ss = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
        const auto y = signal.point(t);
        for (std::size_t k = 0; k < signal.dim(); ++k) {
            const double d = y[k] - mean[k];
            ss += d * d;
        }
    }
    const double var = ss / static_cast<double>(n - 1);
    return 2.0 * var * std::log(static_cast<double>(n));
}

// --- PELT --------------------------------------------------------------------

ChangePointSet detect_pelt(const Signal& signal, const Cost& cost,
                           double penalty, std::size_t min_size) {
    if (!(penalty > 0.0)) {
        throw ConfigError("penalty must be positive");
    }
    const std::size_t ms = effective_min_size(cost, min_size);
    const std::size_t n = signal.size();
    require_length(n, ms);

    // F[t] = optimal objective of y[0, t) with a penalty charged per segment;
    // charging every segment and seeding F[0] = -penalty reproduces
    // penalty * (#segments - 1).
    std::vector<double> best_cost(n + 1, kInf);
    std::vector<std::size_t> last_start(n + 1, kNone);
    best_cost[0] = -penalty;

    // A start s dominated at time t (F[s] + C(s,t) > F[t]) is dominated by
    // the path through t for every t' >= t + ms, but the [t, t') segment is
    // infeasible before that, so s must stay usable until it expires.
    std::vector<std::size_t> expiry(n + 1, kNone);
    std::vector<std::size_t> candidates{0};
    std::vector<std::size_t> survivors;
    for (std::size_t t = ms; t <= n; ++t) {
        survivors.clear();
        for (std::size_t s : candidates) {
            if (expiry[s] > t) {
                survivors.push_back(s);
            }
        }
        candidates.swap(survivors);

        double best = kInf;
        std::size_t best_s = kNone;
        for (std::size_t s : candidates) {
            if (t - s < ms) continue;
            const double value = best_cost[s] + cost(s, t) + penalty;
            if (value < best) {
                best = value;
                best_s = s;
            }
        }
        best_cost[t] = best;
        last_start[t] = best_s;

        for (std::size_t s : candidates) {
            if (t - s >= ms && expiry[s] == kNone &&
                best_cost[s] + cost(s, t) > best_cost[t]) {
                expiry[s] = t + ms;
            }
        }
        candidates.push_back(t);
    }

    ChangePointSet result;
    std::size_t t = n;
    while (t > 0) {
        result.breakpoints.push_back(t);
        t = last_start[t];
    }
    std::reverse(result.breakpoints.begin(), result.breakpoints.end());
    return result;
}

ChangePointSet detect_pelt(const Signal& signal, CostModel model, double penalty,
                           std::size_t min_size, std::optional<double> bandwidth) {
    return detect_pelt(signal, *make_cost(signal, model, bandwidth), penalty,
                       min_size);
}

// --- KernelCPD ---------------------------------------------------------------

namespace {

ChangePointSet kernel_fixed_k(const Signal& signal, const Cost& cost,
                              std::size_t n_bkps, std::size_t min_size) {
    const std::size_t ms = effective_min_size(cost, min_size);
    const std::size_t n = signal.size();
    if (n_bkps == 0) {
        return trivial_result(n);
    }
    const std::size_t segments = n_bkps + 1;
    if (segments * ms > n) {
        throw ConfigError("infeasible n_bkps = " + std::to_string(n_bkps) +
                          " for signal of length " + std::to_string(n) +
                          " with min_size " + std::to_string(ms));
    }

    // dp[j][t]: minimal cost of covering [0, t) with j segments.
    const std::size_t cols = n + 1;
    std::vector<double> prev_row(cols, kInf), cur_row(cols, kInf);
    std::vector<std::vector<std::size_t>> arg(segments + 1,
                                              std::vector<std::size_t>(cols, kNone));
    for (std::size_t t = ms; t <= n; ++t) {
        prev_row[t] = cost(0, t);
        arg[1][t] = 0;
    }
    for (std::size_t j = 2; j <= segments; ++j) {
        std::fill(cur_row.begin(), cur_row.end(), kInf);
        for (std::size_t t = j * ms; t <= n; ++t) {
            double best = kInf;
            std::size_t best_s = kNone;
            for (std::size_t s = (j - 1) * ms; s + ms <= t; ++s) {
                if (prev_row[s] == kInf) continue;
                const double value = prev_row[s] + cost(s, t);
                if (value < best) {
                    best = value;
                    best_s = s;
                }
            }
            cur_row[t] = best;
            arg[j][t] = best_s;
        }
        prev_row.swap(cur_row);
    }

    ChangePointSet result;
    std::size_t t = n;
    for (std::size_t j = segments; j >= 1 && t > 0; --j) {
        result.breakpoints.push_back(t);
        t = arg[j][t];
    }
    std::reverse(result.breakpoints.begin(), result.breakpoints.end());
    return result;
}

}  // namespace

ChangePointSet detect_kernelcpd(const Signal& signal, const Cost& cost,
                                std::optional<std::size_t> n_bkps,
                                std::optional<double> penalty,
                                std::size_t min_size) {
    if (n_bkps.has_value() == penalty.has_value()) {
        throw ConfigError("specify exactly one of n_bkps and penalty");
    }
    if (n_bkps.has_value()) {
        return kernel_fixed_k(signal, cost, *n_bkps, min_size);
    }
    return detect_pelt(signal, cost, *penalty, min_size);
}

ChangePointSet detect_kernelcpd(const Signal& signal, KernelModel kernel,
                                std::optional<std::size_t> n_bkps,
                                std::optional<double> penalty,
                                std::size_t min_size,
                                std::optional<double> bandwidth) {
    return detect_kernelcpd(signal, *make_kernel_cost(signal, kernel, bandwidth),
                            n_bkps, penalty, min_size);
}

// --- Binseg ------------------------------------------------------------------

namespace {

struct SplitChoice {
    double gain = -kInf;
    std::size_t split = kNone;
};

SplitChoice best_split(const Cost& cost, std::size_t a, std::size_t b,
                       std::size_t ms) {
    SplitChoice choice;
    if (b - a < 2 * ms) {
        return choice;
    }
    const double whole = cost(a, b);
    for (std::size_t s = a + ms; s + ms <= b; ++s) {
        const double gain = whole - cost(a, s) - cost(s, b);
        if (gain > choice.gain) {
            choice.gain = gain;
            choice.split = s;
        }
    }
    return choice;
}

}  // namespace

ChangePointSet detect_binseg(const Signal& signal, const Cost& cost,
                             std::optional<std::size_t> n_bkps,
                             std::optional<double> penalty,
                             std::size_t min_size) {
    if (n_bkps.has_value() == penalty.has_value()) {
        throw ConfigError("specify exactly one of n_bkps and penalty");
    }
    if (penalty.has_value() && !(*penalty > 0.0)) {
        throw ConfigError("penalty must be positive");
    }
    const std::size_t ms = effective_min_size(cost, min_size);
    const std::size_t n = signal.size();
    require_length(n, ms);
    if (n_bkps.has_value() && (*n_bkps + 1) * ms > n) {
        throw ConfigError("infeasible n_bkps = " + std::to_string(*n_bkps) +
                          " for signal of length " + std::to_string(n) +
                          " with min_size " + std::to_string(ms));
    }

    std::vector<std::size_t> bkps{n};
    while (!n_bkps.has_value() || bkps.size() - 1 < *n_bkps) {
        SplitChoice best;
        std::size_t prev = 0;
        for (std::size_t b : bkps) {
            const SplitChoice choice = best_split(cost, prev, b, ms);
            if (choice.split != kNone && choice.gain > best.gain) {
                best = choice;
            }
            prev = b;
        }
        if (best.split == kNone) {
            break;  // nothing left to split
        }
        if (penalty.has_value() && best.gain < *penalty) {
            break;
        }
        bkps.insert(std::upper_bound(bkps.begin(), bkps.end(), best.split),
                    best.split);
    }
    return {bkps};
}

ChangePointSet detect_binseg(const Signal& signal, CostModel model,
                             std::optional<std::size_t> n_bkps,
                             std::optional<double> penalty, std::size_t min_size,
                             std::optional<double> bandwidth) {
    return detect_binseg(signal, *make_cost(signal, model, bandwidth), n_bkps,
                         penalty, min_size);
}

// --- BottomUp ----------------------------------------------------------------

ChangePointSet detect_bottomup(const Signal& signal, const Cost& cost,
                               std::optional<std::size_t> n_bkps,
                               std::optional<double> penalty,
                               std::size_t min_size) {
    if (n_bkps.has_value() == penalty.has_value()) {
        throw ConfigError("specify exactly one of n_bkps and penalty");
    }
    if (penalty.has_value() && !(*penalty > 0.0)) {
        throw ConfigError("penalty must be positive");
    }
    const std::size_t ms = effective_min_size(cost, min_size);
    const std::size_t n = signal.size();
    require_length(n, ms);

    // Fine grid with step min_size; the last grid point keeps the tail
    // segment at least min_size long.
    std::vector<std::size_t> bkps;
    for (std::size_t b = ms; b + ms <= n; b += ms) {
        bkps.push_back(b);
    }
    bkps.push_back(n);

    if (n_bkps.has_value() && bkps.size() - 1 < *n_bkps) {
        throw ConfigError("infeasible n_bkps = " + std::to_string(*n_bkps) +
                          ": the min_size grid only has " +
                          std::to_string(bkps.size() - 1) + " candidates");
    }

    while (bkps.size() > 1 &&
           (!n_bkps.has_value() || bkps.size() - 1 > *n_bkps)) {
        double best_increase = kInf;
        std::size_t best_idx = kNone;
        std::size_t prev = 0;
        for (std::size_t i = 0; i + 1 < bkps.size(); ++i) {
            const std::size_t left = prev;
            const std::size_t mid = bkps[i];
            const std::size_t right = bkps[i + 1];
            const double increase =
                cost(left, right) - cost(left, mid) - cost(mid, right);
            if (increase < best_increase) {
                best_increase = increase;
                best_idx = i;
            }
            prev = mid;
        }
        if (best_idx == kNone) {
            break;
        }
        if (penalty.has_value() && best_increase > *penalty) {
            break;
        }
        bkps.erase(bkps.begin() + static_cast<std::ptrdiff_t>(best_idx));
    }
    return {bkps};
}

ChangePointSet detect_bottomup(const Signal& signal, CostModel model,
                               std::optional<std::size_t> n_bkps,
                               std::optional<double> penalty,
                               std::size_t min_size,
                               std::optional<double> bandwidth) {
    return detect_bottomup(signal, *make_cost(signal, model, bandwidth), n_bkps,
                           penalty, min_size);
}

}  // namespace toxtrace
