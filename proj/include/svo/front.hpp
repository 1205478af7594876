#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "svo/mgrad.hpp"
#include "svo/smooth.hpp"

// Nondominance pruning, the Pareto-front stochastic multi-gradient driver,
// angle-based knee selection, and the four-objective two-plane combination.

namespace svo::front {

struct ArchiveEntry {
    std::vector<double> x;
    std::vector<double> objectives;
};

struct ParetoArchive {
    std::vector<ArchiveEntry> entries;
    std::size_t capacity = 100;

    std::size_t objective_count() const {
        return entries.empty() ? 0 : entries.front().objectives.size();
    }
};

// Indices of points not dominated by any other. Dominance: <= in every
// component with < in at least one. Duplicate vectors are all kept.
std::vector<std::size_t> prune_nondominated(const std::vector<std::vector<double>>& points);

struct PFSMGConfig {
    int outer_iterations = 20;
    int perturbations = 3;
    double perturbation_magnitude = 0.05;  // scaled by (1 + ||x||)
    int inner_steps = 30;
    std::size_t capacity = 100;
    std::uint64_t seed = 0;
};

// Full-data (unsmoothed) objective vector used for archiving.
using FullObjectiveEval = std::function<std::vector<double>(std::span<const double>)>;

struct PFSMGResult {
    ParetoArchive archive;
    // Nondominated objective vectors per outer iteration, recorded before
    // capacity truncation.
    std::vector<std::vector<std::vector<double>>> front_history;
};

// Maintains a candidate list approximating the Pareto front: each outer
// iteration perturbs every candidate, refines the perturbed points with short
// SMG runs, merges the endpoints into the archive, prunes dominated entries,
// and truncates to capacity by crowding distance. Deterministic given
// cfg.seed; per-run seeds are derived from (seed, outer, candidate,
// perturbation) so candidate refinements are order-independent.
PFSMGResult pf_smg_run(std::span<const smooth::BatchObjective> objectives,
                       const FullObjectiveEval& full_eval, const smooth::MinibatchSpec& batch,
                       const std::vector<std::vector<double>>& x0_seeds,
                       const smooth::StepsizeSchedule& alphas, const smooth::SmoothingSchedule& mus,
                       const PFSMGConfig& cfg);

struct KneeSelection {
    std::size_t index = 0;  // into archive.entries
    double angle = 0.0;     // interior angle at the knee, radians
    std::vector<double> objective_min;
    std::vector<double> objective_max;
};

// Angle-based knee on a bi-objective archive: objectives are min-max
// normalized, points sorted by the first objective, and the interior point
// with the smallest angle between its neighbors is returned. Fronts with
// fewer than three points fall back to the smallest normalized-sum point.
KneeSelection knee_select(const ParetoArchive& archive);

// Four-objective archive with slots (F_ub1, F_ub2, F_lb1, F_lb2): projects
// onto the two (f_lb_i, f_ub_i) planes, selects a knee per plane, and blends
// the two knee parameter vectors with ideal-point-distance weights.
std::vector<double> rvo_knee_combine(const ParetoArchive& archive);

// Area dominated by a bi-objective front relative to a reference point
// (minimization; points beyond the reference contribute nothing).
double hypervolume_2d(const std::vector<std::vector<double>>& points,
                      std::span<const double> reference);

// CSV serialization with columns f_1..f_m then x_1..x_n.
std::string archive_to_csv(const ParetoArchive& archive);

}  // namespace svo::front
