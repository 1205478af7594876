#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <vector>

// Softplus smoothing of the hinge max(0, .), smoothed empirical tail
// objectives with gradients, and the smoothing stochastic gradient loop.

namespace svo::smooth {

struct ValueGrad {
    double value = 0.0;
    std::vector<double> grad;
};

// mu_k = max(floor, mu0 / k^decay_exponent), nonincreasing in k (1-based).
struct SmoothingSchedule {
    double mu0 = 0.1;
    double decay_exponent = 0.5;
    double floor = 1e-8;

    double at(int k) const;
};

// alpha_k = alpha0 / (1 + decay_rate * k), k 1-based.
struct StepsizeSchedule {
    double alpha0 = 1.3;
    double decay_rate = 0.0;

    double at(int k) const;
};

struct HingeEval {
    double value = 0.0;
    double derivative = 0.0;
};

// Scaled softplus mu*ln(1 + exp(t/mu)), overflow-safe.
// 0 <= value - max(0,t) <= mu*ln 2; derivative is the sigmoid of t/mu.
HingeEval smooth_hinge(double t, double mu);

// Per-sample loss z_i = psi(x, xi_i) with gradient in x.
using SampleLoss = std::function<ValueGrad(std::span<const double> x, int index)>;

enum class TailMode {
    sub,    // subquantile at level p
    super,  // superquantile at level p
    mean,   // expectation (boundary levels p_lower=1 / p_upper=0)
    min,    // empirical minimum (p_lower=0)
    max,    // empirical maximum (p_upper=1)
};

struct SmoothedTailObjective {
    TailMode mode = TailMode::super;
    double p = 0.5;  // only meaningful for sub/super, must be in (0,1)
    SampleLoss loss;
};

struct TailEval {
    double value = 0.0;
    std::vector<double> grad;
    double eta = 0.0;  // empirical p-quantile of the batch losses (sub/super only)
};

// Evaluates the smoothed empirical tail objective on a minibatch. eta is the
// empirical p-quantile of the batch losses and is held constant during
// differentiation.
TailEval tail_objective_eval(const SmoothedTailObjective& obj, std::span<const double> x,
                             std::span<const int> batch, double mu);

// Stochastic objective evaluated on a realized minibatch of sample indices.
using BatchObjective =
    std::function<TailEval(std::span<const double> x, std::span<const int> batch, double mu)>;

struct MinibatchSpec {
    int pool_size = 1;
    int batch_size = 1;
};

// Draws batch_size indices from [0, pool_size) without replacement. When the
// batch covers the pool, returns 0..n-1 without consuming the generator.
std::vector<int> draw_batch(const MinibatchSpec& spec, std::mt19937_64& rng);

// SG on the smoothed surrogate with nonincreasing smoothing parameter:
//   x_{k+1} = x_k - alpha_k * grad f~(x_k, xi_k, mu_k).
// Deterministic given the seed. Throws on non-finite gradients.
std::vector<double> ssg_run(const BatchObjective& objective, const MinibatchSpec& batch,
                            std::vector<double> x0, int steps, const StepsizeSchedule& alphas,
                            const SmoothingSchedule& mus, std::uint64_t seed);

}  // namespace svo::smooth
