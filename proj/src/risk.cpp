#include "svo/risk.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace svo::risk {

EmpiricalSample::EmpiricalSample(std::vector<double> values)
    : values_(std::move(values)) {
    if (values_.empty()) {
        throw std::invalid_argument("EmpiricalSample: sample must be nonempty");
    }
    for (double v : values_) {
        if (!std::isfinite(v)) {
            throw std::invalid_argument("EmpiricalSample: all values must be finite");
        }
    }
    sorted_ = values_;
    std::stable_sort(sorted_.begin(), sorted_.end());
}

double EmpiricalSample::mean() const {
    return std::accumulate(values_.begin(), values_.end(), 0.0) /
           static_cast<double>(values_.size());
}

double empirical_quantile(const EmpiricalSample& s, double p) {
    if (!(p > 0.0 && p <= 1.0)) {
        throw std::invalid_argument("empirical_quantile: p must be in (0, 1]");
    }
    const auto n = s.size();
    // smallest z with empirical CDF >= p, i.e. order statistic ceil(p*n)
    auto idx = static_cast<std::size_t>(std::ceil(p * static_cast<double>(n)));
    idx = std::clamp<std::size_t>(idx, 1, n);
    return s.sorted()[idx - 1];
}

namespace {

// Integral of the empirical quantile function over (lo, hi) in (0, 1].
// Q(u) = z_(i) for u in ((i-1)/n, i/n], piecewise constant.
double quantile_integral(const EmpiricalSample& s, double lo, double hi) {
    const auto n = static_cast<double>(s.size());
    double total = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const double seg_lo = static_cast<double>(i) / n;
        const double seg_hi = static_cast<double>(i + 1) / n;
        const double overlap = std::min(hi, seg_hi) - std::max(lo, seg_lo);
        if (overlap > 0.0) {
            total += overlap * s.sorted()[i];
        }
    }
    return total;
}

}  // namespace

double superquantile(const EmpiricalSample& s, double p) {
    if (p < 0.0 || p > 1.0) {
        throw std::invalid_argument("superquantile: p must be in [0, 1]");
    }
    if (p == 0.0) return s.mean();
    if (p == 1.0) return s.max();
    return quantile_integral(s, p, 1.0) / (1.0 - p);
}

double subquantile(const EmpiricalSample& s, double p) {
    if (p < 0.0 || p > 1.0) {
        throw std::invalid_argument("subquantile: p must be in [0, 1]");
    }
    if (p == 0.0) return s.min();
    if (p == 1.0) return s.mean();
    return quantile_integral(s, 0.0, p) / p;
}

TailValue superquantile_ru(const EmpiricalSample& s, double p) {
    if (!(p > 0.0 && p < 1.0)) {
        throw std::invalid_argument("superquantile_ru: p must be in (0, 1)");
    }
    const double eta = empirical_quantile(s, p);
    double excess = 0.0;
    for (double z : s.values()) {
        excess += std::max(z - eta, 0.0);
    }
    const double n = static_cast<double>(s.size());
    return {eta + excess / (n * (1.0 - p)), eta};
}

TailValue subquantile_ru(const EmpiricalSample& s, double p) {
    if (!(p > 0.0 && p < 1.0)) {
        throw std::invalid_argument("subquantile_ru: p must be in (0, 1)");
    }
    const double eta = empirical_quantile(s, p);
    double shortfall = 0.0;
    for (double z : s.values()) {
        shortfall += std::max(eta - z, 0.0);
    }
    const double n = static_cast<double>(s.size());
    return {eta - shortfall / (n * p), eta};
}

}  // namespace svo::risk
