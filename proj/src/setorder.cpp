#include "svo/setorder.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace svo::setorder {

Hyperbox::Hyperbox(std::vector<double> lower, std::vector<double> upper)
    : lb(std::move(lower)), ub(std::move(upper)) {
    if (lb.empty() || lb.size() != ub.size()) {
        throw std::invalid_argument("Hyperbox: corner vectors must be nonempty and equal length");
    }
    for (std::size_t i = 0; i < lb.size(); ++i) {
        if (!(lb[i] <= ub[i])) {
            throw std::invalid_argument("Hyperbox: lb must not exceed ub componentwise");
        }
    }
}

bool cone_dominates(std::span<const double> a, std::span<const double> b, bool strict) {
    if (a.size() != b.size()) {
        throw std::invalid_argument("cone_dominates: length mismatch");
    }
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (strict ? !(a[i] < b[i]) : !(a[i] <= b[i])) return false;
    }
    return true;
}

bool box_relate(const Hyperbox& a, const Hyperbox& b, RelationMode mode) {
    if (a.dim() != b.dim()) {
        throw std::invalid_argument("box_relate: dimension mismatch");
    }
    switch (mode.kind) {
        case RelationKind::lower:
            return cone_dominates(a.lb, b.lb, mode.strict);
        case RelationKind::upper:
            return cone_dominates(a.ub, b.ub, mode.strict);
        case RelationKind::both:
            return cone_dominates(a.lb, b.lb, mode.strict) &&
                   cone_dominates(a.ub, b.ub, mode.strict);
    }
    return false;
}

std::vector<std::size_t> minimal_elements(const std::vector<Hyperbox>& family, bool strict) {
    if (family.empty()) {
        throw std::invalid_argument("minimal_elements: family must be nonempty");
    }
    const RelationMode nonstrict{RelationKind::both, false};
    const RelationMode strict_rel{RelationKind::both, true};

    std::vector<std::size_t> result;
    for (std::size_t i = 0; i < family.size(); ++i) {
        bool keep = true;
        for (std::size_t j = 0; j < family.size() && keep; ++j) {
            if (j == i) continue;
            if (strict) {
                // B <= A must imply A <= B
                if (box_relate(family[j], family[i], nonstrict) &&
                    !box_relate(family[i], family[j], nonstrict)) {
                    keep = false;
                }
            } else {
                if (box_relate(family[j], family[i], strict_rel)) {
                    keep = false;
                }
            }
        }
        if (keep) result.push_back(i);
    }
    return result;
}

ObjectiveVectorSpec vectorize(CornerMap f_lb, CornerMap f_ub, std::size_t k) {
    if (k == 0) throw std::invalid_argument("vectorize: k must be >= 1");

    ObjectiveVectorSpec spec;
    spec.arity = 2 * k;
    if (k == 1) {
        spec.slots = {"f_lb", "f_ub"};
    } else {
        for (std::size_t i = 0; i < k; ++i) spec.slots.push_back("F_ub[" + std::to_string(i) + "]");
        for (std::size_t i = 0; i < k; ++i) spec.slots.push_back("F_lb[" + std::to_string(i) + "]");
    }
    spec.eval = [f_lb = std::move(f_lb), f_ub = std::move(f_ub), k](std::span<const double> x) {
        std::vector<double> lo = f_lb(x);
        std::vector<double> hi = f_ub(x);
        if (lo.size() != k || hi.size() != k) {
            throw std::invalid_argument("vectorize: corner map arity mismatch");
        }
        for (std::size_t i = 0; i < k; ++i) {
            // tolerance absorbs rounding when both corners are analytically
            // equal (e.g. constant samples) but computed by different routes
            const double tol = 1e-9 * std::max({1.0, std::abs(lo[i]), std::abs(hi[i])});
            if (!(lo[i] <= hi[i] + tol)) {
                throw std::domain_error("vectorize: lower bound exceeds upper bound at x");
            }
        }
        std::vector<double> out;
        out.reserve(2 * k);
        if (k == 1) {
            out = {lo[0], hi[0]};
        } else {
            out.insert(out.end(), hi.begin(), hi.end());
            out.insert(out.end(), lo.begin(), lo.end());
        }
        return out;
    };
    return spec;
}

}  // namespace svo::setorder
