#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

// Vector and set partial orders for the cone K = R^k_+, hyperbox set-less
// comparisons, minimal-element enumeration, and the finite vectorization
// maps used by the interval- and rectangle-valued formulations.

namespace svo::setorder {

// Axis-aligned box [lb, ub] in R^k with lb <= ub componentwise.
struct Hyperbox {
    std::vector<double> lb;
    std::vector<double> ub;

    Hyperbox(std::vector<double> lower, std::vector<double> upper);
    std::size_t dim() const { return lb.size(); }
};

enum class RelationKind { lower, upper, both };

struct RelationMode {
    RelationKind kind = RelationKind::both;
    bool strict = false;
};

// a <=_K b for K = R^m_+ (componentwise); strict uses the interior of K.
bool cone_dominates(std::span<const double> a, std::span<const double> b, bool strict);

// Hyperbox set-less comparison via corner inequalities:
//   lower:  A.lb <=_K B.lb,   upper:  A.ub <=_K B.ub,   both: conjunction.
bool box_relate(const Hyperbox& a, const Hyperbox& b, RelationMode mode);

// Indices of the strictly minimal (strict=true) or weakly minimal
// (strict=false) boxes of the family, by exhaustive pairwise comparison.
// Strictly minimal: every B with B <= A also satisfies A <= B.
// Weakly minimal: no B with B < A (strict set-less).
std::vector<std::size_t> minimal_elements(const std::vector<Hyperbox>& family, bool strict);

// Evaluator mapping a decision vector to the corners of its image box.
using CornerMap = std::function<std::vector<double>(std::span<const double>)>;

// Stacked multi-objective evaluator produced by vectorization.
struct ObjectiveVectorSpec {
    std::size_t arity = 0;  // 2k
    std::vector<std::string> slots;
    // Evaluates the 2k-dimensional objective vector; throws if the
    // lower-bound map exceeds the upper-bound map at x.
    std::function<std::vector<double>(std::span<const double>)> eval;
};

// Builds the finite vectorization of a k-dimensional hyperbox objective.
// k=1 uses the interval ordering (f_lb, f_ub); k>=2 stacks (F_ub; F_lb).
ObjectiveVectorSpec vectorize(CornerMap f_lb, CornerMap f_ub, std::size_t k);

}  // namespace svo::setorder
