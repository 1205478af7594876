#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "svo/smooth.hpp"

// Minimum-norm convex combination of gradients over the simplex, and the
// stochastic multi-gradient descent loop built on it.

namespace svo::mgrad {

// m per-objective gradient estimates of common length.
struct GradientBundle {
    std::vector<std::vector<double>> gradients;

    std::size_t count() const { return gradients.size(); }
    std::size_t dim() const { return gradients.empty() ? 0 : gradients.front().size(); }
};

struct MultiGradient {
    std::vector<double> weights;  // point of the simplex
    std::vector<double> direction;  // sum_i weights[i] * g_i
};

// Euclidean projection onto the probability simplex (sorting-based threshold).
std::vector<double> project_simplex(std::span<const double> v);

// lambda minimizing ||sum lambda_i g_i||^2 over the simplex, with the combined
// vector. m=2 is solved in closed form; m>2 by projected gradient from the
// uniform start, refined by an exact active-support enumeration when m <= 12.
MultiGradient min_norm_multigradient(const GradientBundle& bundle);

namespace detail {
// General projected-gradient solver, exposed so the closed-form m=2 path can
// be cross-checked against it.
MultiGradient min_norm_projected_gradient(const GradientBundle& bundle, double tol = 1e-12,
                                          int max_iters = 200000);
}  // namespace detail

// Multi-objective analog of ssg_run: each iteration draws one shared
// minibatch, evaluates all objectives, and steps along the negative
// minimum-norm multi-gradient. With a single objective the iterates coincide
// with ssg_run under the same seed.
std::vector<double> smg_run(std::span<const smooth::BatchObjective> objectives,
                            const smooth::MinibatchSpec& batch, std::vector<double> x0, int steps,
                            const smooth::StepsizeSchedule& alphas,
                            const smooth::SmoothingSchedule& mus, std::uint64_t seed);

}  // namespace svo::mgrad
