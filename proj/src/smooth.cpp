#include "svo/smooth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace svo::smooth {

double SmoothingSchedule::at(int k) const {
    if (k < 1) throw std::invalid_argument("SmoothingSchedule: k must be >= 1");
    return std::max(floor, mu0 / std::pow(static_cast<double>(k), decay_exponent));
}

double StepsizeSchedule::at(int k) const {
    if (k < 1) throw std::invalid_argument("StepsizeSchedule: k must be >= 1");
    return alpha0 / (1.0 + decay_rate * static_cast<double>(k));
}

HingeEval smooth_hinge(double t, double mu) {
    if (!(mu > 0.0)) throw std::invalid_argument("smooth_hinge: mu must be positive");
    const double r = t / mu;
    HingeEval out;
    if (r > 0.0) {
        // value = t + mu*log(1 + exp(-r)) avoids overflow for large r
        out.value = t + mu * std::log1p(std::exp(-r));
        out.derivative = 1.0 / (1.0 + std::exp(-r));
    } else {
        out.value = mu * std::log1p(std::exp(r));
        const double e = std::exp(r);
        out.derivative = e / (1.0 + e);
    }
    return out;
}

namespace {

void axpy(double a, std::span<const double> x, std::vector<double>& y) {
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += a * x[i];
}

}  // namespace

TailEval tail_objective_eval(const SmoothedTailObjective& obj, std::span<const double> x,
                             std::span<const int> batch, double mu) {
    if (batch.empty()) throw std::invalid_argument("tail_objective_eval: empty batch");
    if (!(mu > 0.0)) throw std::invalid_argument("tail_objective_eval: mu must be positive");

    const auto n = static_cast<double>(batch.size());
    std::vector<ValueGrad> losses;
    losses.reserve(batch.size());
    for (int idx : batch) losses.push_back(obj.loss(x, idx));

    TailEval out;
    out.grad.assign(x.size(), 0.0);

    switch (obj.mode) {
        case TailMode::mean: {
            for (const auto& l : losses) {
                out.value += l.value / n;
                axpy(1.0 / n, l.grad, out.grad);
            }
            return out;
        }
        case TailMode::min:
        case TailMode::max: {
            std::size_t best = 0;
            for (std::size_t i = 1; i < losses.size(); ++i) {
                const bool better = obj.mode == TailMode::min ? losses[i].value < losses[best].value
                                                              : losses[i].value > losses[best].value;
                if (better) best = i;
            }
            out.value = losses[best].value;
            out.grad.assign(losses[best].grad.begin(), losses[best].grad.end());
            return out;
        }
        case TailMode::sub:
        case TailMode::super:
            break;
    }

    if (!(obj.p > 0.0 && obj.p < 1.0)) {
        throw std::invalid_argument("tail_objective_eval: p must be in (0, 1)");
    }

    // eta = empirical p-quantile of the batch losses (order statistic ceil(p*n)),
    // treated as constant during differentiation.
    std::vector<double> sorted(losses.size());
    for (std::size_t i = 0; i < losses.size(); ++i) sorted[i] = losses[i].value;
    std::stable_sort(sorted.begin(), sorted.end());
    auto q_idx = static_cast<std::size_t>(std::ceil(obj.p * n));
    q_idx = std::clamp<std::size_t>(q_idx, 1, losses.size());
    const double eta = sorted[q_idx - 1];
    out.eta = eta;

    if (obj.mode == TailMode::super) {
        const double scale = 1.0 / (n * (1.0 - obj.p));
        out.value = eta;
        for (const auto& l : losses) {
            const HingeEval h = smooth_hinge(l.value - eta, mu);
            out.value += scale * h.value;
            axpy(scale * h.derivative, l.grad, out.grad);
        }
    } else {
        const double scale = 1.0 / (n * obj.p);
        out.value = eta;
        for (const auto& l : losses) {
            const HingeEval h = smooth_hinge(eta - l.value, mu);
            out.value -= scale * h.value;
            axpy(scale * h.derivative, l.grad, out.grad);
        }
    }
    return out;
}

std::vector<int> draw_batch(const MinibatchSpec& spec, std::mt19937_64& rng) {
    if (spec.pool_size < 1 || spec.batch_size < 1) {
        throw std::invalid_argument("draw_batch: pool and batch sizes must be >= 1");
    }
    std::vector<int> indices(spec.pool_size);
    std::iota(indices.begin(), indices.end(), 0);
    if (spec.batch_size >= spec.pool_size) return indices;

    // partial Fisher-Yates
    for (int i = 0; i < spec.batch_size; ++i) {
        std::uniform_int_distribution<int> pick(i, spec.pool_size - 1);
        std::swap(indices[i], indices[pick(rng)]);
    }
    indices.resize(spec.batch_size);
    return indices;
}

std::vector<double> ssg_run(const BatchObjective& objective, const MinibatchSpec& batch,
                            std::vector<double> x0, int steps, const StepsizeSchedule& alphas,
                            const SmoothingSchedule& mus, std::uint64_t seed) {
    if (steps < 1) throw std::invalid_argument("ssg_run: steps must be >= 1");
    std::mt19937_64 rng(seed);
    std::vector<double> x = std::move(x0);

    for (int k = 1; k <= steps; ++k) {
        const std::vector<int> realization = draw_batch(batch, rng);
        const TailEval eval = objective(x, realization, mus.at(k));
        const double alpha = alphas.at(k);
        for (std::size_t i = 0; i < x.size(); ++i) {
            if (!std::isfinite(eval.grad[i])) {
                throw std::runtime_error("ssg_run: non-finite gradient at iteration " +
                                         std::to_string(k));
            }
            x[i] -= alpha * eval.grad[i];
        }
    }
    return x;
}

}  // namespace svo::smooth
