#pragma once

#include <span>
#include <vector>

// Empirical quantile, subquantile, and superquantile functionals, in both
// exact tail-average form and the Rockafellar-Uryasev variational form.

namespace svo::risk {

// Finite real-valued sample with a cached ascending-sorted view.
class EmpiricalSample {
public:
    explicit EmpiricalSample(std::vector<double> values);

    const std::vector<double>& values() const { return values_; }
    const std::vector<double>& sorted() const { return sorted_; }
    std::size_t size() const { return values_.size(); }

    double min() const { return sorted_.front(); }
    double max() const { return sorted_.back(); }
    double mean() const;

private:
    std::vector<double> values_;
    std::vector<double> sorted_;
};

struct TailValue {
    double value = 0.0;
    double eta = 0.0;  // optimal auxiliary scalar, equals the empirical p-quantile
};

// Left-continuous inverse CDF: order statistic at index ceil(p*n), 1-based.
// Requires p in (0, 1].
double empirical_quantile(const EmpiricalSample& s, double p);

// Mean of the upper (1-p)-tail. Exact integral of the piecewise-constant
// empirical quantile function for p in (0,1); p=0 gives the mean, p=1 the max.
double superquantile(const EmpiricalSample& s, double p);

// Mean of the lower p-tail. p=0 gives the min, p=1 the mean.
double subquantile(const EmpiricalSample& s, double p);

// Variational form eta + (1/(n(1-p))) * sum max(z_i - eta, 0) evaluated at
// eta = empirical p-quantile. Requires p in (0,1).
TailValue superquantile_ru(const EmpiricalSample& s, double p);

// Mirrored form eta - (1/(np)) * sum max(eta - z_i, 0). Requires p in (0,1).
TailValue subquantile_ru(const EmpiricalSample& s, double p);

}  // namespace svo::risk
