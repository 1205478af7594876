#include "svo/mgrad.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace svo::mgrad {

namespace {

void validate(const GradientBundle& bundle) {
    if (bundle.count() == 0) throw std::invalid_argument("GradientBundle: m must be >= 1");
    const std::size_t n = bundle.dim();
    for (const auto& g : bundle.gradients) {
        if (g.size() != n) throw std::invalid_argument("GradientBundle: length mismatch");
        for (double v : g) {
            if (!std::isfinite(v)) throw std::invalid_argument("GradientBundle: non-finite entry");
        }
    }
}

std::vector<double> combine(const GradientBundle& bundle, std::span<const double> lambda) {
    std::vector<double> g(bundle.dim(), 0.0);
    for (std::size_t i = 0; i < bundle.count(); ++i) {
        for (std::size_t j = 0; j < g.size(); ++j) g[j] += lambda[i] * bundle.gradients[i][j];
    }
    return g;
}

double dot(std::span<const double> a, std::span<const double> b) {
    return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

// Gram matrix G_ij = g_i . g_j
std::vector<std::vector<double>> gram(const GradientBundle& bundle) {
    const std::size_t m = bundle.count();
    std::vector<std::vector<double>> G(m, std::vector<double>(m, 0.0));
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = i; j < m; ++j) {
            G[i][j] = G[j][i] = dot(bundle.gradients[i], bundle.gradients[j]);
        }
    }
    return G;
}

}  // namespace

std::vector<double> project_simplex(std::span<const double> v) {
    for (double x : v) {
        if (!std::isfinite(x)) throw std::invalid_argument("project_simplex: non-finite input");
    }
    std::vector<double> u(v.begin(), v.end());
    std::sort(u.begin(), u.end(), std::greater<>());

    double cumsum = 0.0;
    double theta = 0.0;
    for (std::size_t k = 0; k < u.size(); ++k) {
        cumsum += u[k];
        const double candidate = (cumsum - 1.0) / static_cast<double>(k + 1);
        if (u[k] - candidate > 0.0) {
            theta = candidate;
        }
    }
    std::vector<double> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = std::max(v[i] - theta, 0.0);
    return out;
}

namespace detail {

MultiGradient min_norm_projected_gradient(const GradientBundle& bundle, double tol,
                                          int max_iters) {
    validate(bundle);
    const std::size_t m = bundle.count();
    const auto G = gram(bundle);

    double trace = 0.0;
    for (std::size_t i = 0; i < m; ++i) trace += G[i][i];
    if (trace <= 0.0) {
        // all-zero bundle
        MultiGradient out;
        out.weights.assign(m, 1.0 / static_cast<double>(m));
        out.direction.assign(bundle.dim(), 0.0);
        return out;
    }
    const double step = 1.0 / (2.0 * trace);

    std::vector<double> lambda(m, 1.0 / static_cast<double>(m));
    std::vector<double> glam(m, 0.0);  // G * lambda

    auto apply_gram = [&](std::span<const double> lam, std::vector<double>& out) {
        for (std::size_t i = 0; i < m; ++i) {
            out[i] = 0.0;
            for (std::size_t j = 0; j < m; ++j) out[i] += G[i][j] * lam[j];
        }
    };

    for (int it = 0; it < max_iters; ++it) {
        apply_gram(lambda, glam);
        // KKT: g.g_i >= ||g||^2 for all i, equality on the support
        const double gnorm2 = dot(lambda, glam);
        double residual = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            residual = std::max(residual, gnorm2 - glam[i]);
            if (lambda[i] > 0.0) residual = std::max(residual, std::abs(glam[i] - gnorm2));
        }
        if (residual <= tol * std::max(1.0, trace)) break;

        std::vector<double> candidate(m);
        for (std::size_t i = 0; i < m; ++i) candidate[i] = lambda[i] - 2.0 * step * glam[i];
        lambda = project_simplex(candidate);
    }

    MultiGradient out;
    out.weights = std::move(lambda);
    out.direction = combine(bundle, out.weights);
    return out;
}

}  // namespace detail

namespace {

// Solves [G_SS 1; 1^T 0] [lambda; nu] = [0; 1] by Gaussian elimination with
// partial pivoting. Returns the support weights, or empty when the system is
// numerically singular.
std::vector<double> solve_support_system(const std::vector<std::vector<double>>& G,
                                         const std::vector<std::size_t>& support) {
    const std::size_t s = support.size();
    std::vector<std::vector<double>> A(s + 1, std::vector<double>(s + 2, 0.0));
    for (std::size_t i = 0; i < s; ++i) {
        for (std::size_t j = 0; j < s; ++j) A[i][j] = G[support[i]][support[j]];
        A[i][s] = 1.0;
    }
    for (std::size_t j = 0; j < s; ++j) A[s][j] = 1.0;
    A[s][s + 1] = 1.0;

    const std::size_t n = s + 1;
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < n; ++r) {
            if (std::abs(A[r][col]) > std::abs(A[pivot][col])) pivot = r;
        }
        if (std::abs(A[pivot][col]) < 1e-300) return {};
        std::swap(A[col], A[pivot]);
        for (std::size_t r = 0; r < n; ++r) {
            if (r == col) continue;
            const double factor = A[r][col] / A[col][col];
            for (std::size_t c = col; c <= n; ++c) A[r][c] -= factor * A[col][c];
        }
    }
    std::vector<double> lambda(s);
    for (std::size_t i = 0; i < s; ++i) {
        lambda[i] = A[i][n] / A[i][i];
        if (!std::isfinite(lambda[i])) return {};
    }
    return lambda;
}

// Exact polish for small m: enumerate supports, solve each equality-
// constrained subproblem, and keep the feasible candidate with the smallest
// KKT residual (norm alone cannot discriminate: an iterative solution can
// match the optimal norm to rounding while its residual is still ~1e-8).
void exact_support_polish(const GradientBundle& bundle, MultiGradient& best) {
    const std::size_t m = bundle.count();
    const auto G = gram(bundle);

    auto residual = [&](std::span<const double> lam) {
        std::vector<double> glam(m, 0.0);
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = 0; j < m; ++j) glam[i] += G[i][j] * lam[j];
        }
        const double gnorm2 = dot(lam, glam);
        double r = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            r = std::max(r, gnorm2 - glam[i]);
            if (lam[i] > 1e-12) r = std::max(r, std::abs(glam[i] - gnorm2));
        }
        return r;
    };

    double best_residual = residual(best.weights);
    for (unsigned mask = 1; mask < (1u << m) && best_residual > 0.0; ++mask) {
        std::vector<std::size_t> support;
        for (std::size_t i = 0; i < m; ++i) {
            if (mask & (1u << i)) support.push_back(i);
        }
        const auto partial = solve_support_system(G, support);
        if (partial.empty()) continue;
        bool feasible = true;
        for (double v : partial) feasible = feasible && v >= -1e-12;
        if (!feasible) continue;
        std::vector<double> lambda(m, 0.0);
        for (std::size_t i = 0; i < support.size(); ++i) {
            lambda[support[i]] = std::max(partial[i], 0.0);
        }
        double total = std::accumulate(lambda.begin(), lambda.end(), 0.0);
        for (double& v : lambda) v /= total;
        const double r = residual(lambda);
        if (r < best_residual) {
            best_residual = r;
            best.weights = std::move(lambda);
        }
    }
    best.direction = combine(bundle, best.weights);
}

}  // namespace

MultiGradient min_norm_multigradient(const GradientBundle& bundle) {
    validate(bundle);
    const std::size_t m = bundle.count();

    if (m == 1) {
        return {{1.0}, bundle.gradients[0]};
    }
    if (m == 2) {
        const auto& g1 = bundle.gradients[0];
        const auto& g2 = bundle.gradients[1];
        std::vector<double> diff(g1.size());
        for (std::size_t i = 0; i < g1.size(); ++i) diff[i] = g1[i] - g2[i];
        const double denom = dot(diff, diff);
        double t = 0.5;  // identical gradients: uniform weights
        if (denom > 0.0) {
            // argmin_t || t*g1 + (1-t)*g2 ||^2 over [0,1]
            t = std::clamp((dot(g2, g2) - dot(g1, g2)) / denom, 0.0, 1.0);
        }
        MultiGradient out;
        out.weights = {t, 1.0 - t};
        out.direction = combine(bundle, out.weights);
        return out;
    }
    if (m <= 12) {
        // a short projected-gradient run locates the neighborhood; the
        // support enumeration then solves the QP exactly
        MultiGradient out = detail::min_norm_projected_gradient(bundle, 1e-10, 500);
        exact_support_polish(bundle, out);
        return out;
    }
    return detail::min_norm_projected_gradient(bundle);
}

std::vector<double> smg_run(std::span<const smooth::BatchObjective> objectives,
                            const smooth::MinibatchSpec& batch, std::vector<double> x0, int steps,
                            const smooth::StepsizeSchedule& alphas,
                            const smooth::SmoothingSchedule& mus, std::uint64_t seed) {
    if (steps < 1) throw std::invalid_argument("smg_run: steps must be >= 1");
    if (objectives.empty()) throw std::invalid_argument("smg_run: needs at least one objective");

    std::mt19937_64 rng(seed);
    std::vector<double> x = std::move(x0);

    for (int k = 1; k <= steps; ++k) {
        const std::vector<int> realization = smooth::draw_batch(batch, rng);
        const double mu = mus.at(k);

        GradientBundle bundle;
        bundle.gradients.reserve(objectives.size());
        for (std::size_t i = 0; i < objectives.size(); ++i) {
            smooth::TailEval eval;
            try {
                eval = objectives[i](x, realization, mu);
            } catch (const std::exception& e) {
                throw std::runtime_error("smg_run: objective " + std::to_string(i) +
                                         " failed at iteration " + std::to_string(k) + ": " +
                                         e.what());
            }
            bundle.gradients.push_back(std::move(eval.grad));
        }

        const MultiGradient mg = min_norm_multigradient(bundle);
        const double alpha = alphas.at(k);
        for (std::size_t i = 0; i < x.size(); ++i) x[i] -= alpha * mg.direction[i];
    }
    return x;
}

}  // namespace svo::mgrad
