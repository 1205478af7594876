#include "svo/front.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <numeric>
#include <stdexcept>

namespace svo::front {

namespace {

bool dominates(std::span<const double> a, std::span<const double> b) {
    bool strict = false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] > b[i]) return false;
        if (a[i] < b[i]) strict = true;
    }
    return strict;
}

std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t outer, std::uint64_t candidate,
                          std::uint64_t perturbation, std::uint64_t tag) {
    std::uint64_t h = splitmix64(seed);
    h = splitmix64(h ^ outer);
    h = splitmix64(h ^ candidate);
    h = splitmix64(h ^ perturbation);
    return splitmix64(h ^ tag);
}

double norm2(std::span<const double> v) {
    return std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
}

// crowding-distance truncation: keep objective-space extremes, drop the
// densest points until the archive fits
void truncate_to_capacity(ParetoArchive& archive) {
    while (archive.entries.size() > archive.capacity) {
        const std::size_t n = archive.entries.size();
        const std::size_t m = archive.objective_count();
        std::vector<double> crowding(n, 0.0);

        for (std::size_t obj = 0; obj < m; ++obj) {
            std::vector<std::size_t> order(n);
            std::iota(order.begin(), order.end(), 0);
            std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
                return archive.entries[a].objectives[obj] < archive.entries[b].objectives[obj];
            });
            const double lo = archive.entries[order.front()].objectives[obj];
            const double hi = archive.entries[order.back()].objectives[obj];
            const double span = hi - lo;
            crowding[order.front()] = std::numeric_limits<double>::infinity();
            crowding[order.back()] = std::numeric_limits<double>::infinity();
            if (span <= 0.0) continue;
            for (std::size_t k = 1; k + 1 < n; ++k) {
                const double gap = archive.entries[order[k + 1]].objectives[obj] -
                                   archive.entries[order[k - 1]].objectives[obj];
                crowding[order[k]] += gap / span;
            }
        }

        std::size_t drop = 0;
        for (std::size_t i = 1; i < n; ++i) {
            if (crowding[i] < crowding[drop]) drop = i;
        }
        archive.entries.erase(archive.entries.begin() + static_cast<std::ptrdiff_t>(drop));
    }
}

void prune_archive(ParetoArchive& archive) {
    std::vector<std::vector<double>> objs;
    objs.reserve(archive.entries.size());
    for (const auto& e : archive.entries) objs.push_back(e.objectives);
    const auto keep = prune_nondominated(objs);
    std::vector<ArchiveEntry> kept;
    kept.reserve(keep.size());
    for (std::size_t idx : keep) kept.push_back(std::move(archive.entries[idx]));
    archive.entries = std::move(kept);
}

}  // namespace

std::vector<std::size_t> prune_nondominated(const std::vector<std::vector<double>>& points) {
    if (points.empty()) return {};
    const std::size_t m = points.front().size();
    for (const auto& p : points) {
        if (p.size() != m) throw std::invalid_argument("prune_nondominated: dimension mismatch");
    }
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < points.size(); ++i) {
        bool dominated = false;
        for (std::size_t j = 0; j < points.size() && !dominated; ++j) {
            if (j != i && dominates(points[j], points[i])) dominated = true;
        }
        if (!dominated) keep.push_back(i);
    }
    return keep;
}

PFSMGResult pf_smg_run(std::span<const smooth::BatchObjective> objectives,
                       const FullObjectiveEval& full_eval, const smooth::MinibatchSpec& batch,
                       const std::vector<std::vector<double>>& x0_seeds,
                       const smooth::StepsizeSchedule& alphas, const smooth::SmoothingSchedule& mus,
                       const PFSMGConfig& cfg) {
    if (x0_seeds.empty()) throw std::invalid_argument("pf_smg_run: needs a starting point");
    if (cfg.outer_iterations < 1 || cfg.perturbations < 1 || cfg.inner_steps < 1 ||
        cfg.capacity < 1 || !(cfg.perturbation_magnitude > 0.0)) {
        throw std::invalid_argument("pf_smg_run: invalid configuration");
    }

    PFSMGResult result;
    result.archive.capacity = cfg.capacity;
    for (const auto& x : x0_seeds) {
        result.archive.entries.push_back({x, full_eval(x)});
    }
    prune_archive(result.archive);
    truncate_to_capacity(result.archive);

    for (int outer = 1; outer <= cfg.outer_iterations; ++outer) {
        const std::vector<ArchiveEntry> candidates = result.archive.entries;

        for (std::size_t c = 0; c < candidates.size(); ++c) {
            const auto& base = candidates[c].x;
            const double scale = cfg.perturbation_magnitude * (1.0 + norm2(base));

            for (int p = 0; p < cfg.perturbations; ++p) {
                std::mt19937_64 perturb_rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(outer),
                                                        c, static_cast<std::uint64_t>(p), 1));
                std::normal_distribution<double> gauss(0.0, 1.0);
                std::vector<double> start = base;
                for (double& v : start) v += scale * gauss(perturb_rng);

                const std::uint64_t run_seed = derive_seed(
                    cfg.seed, static_cast<std::uint64_t>(outer), c, static_cast<std::uint64_t>(p), 2);
                std::vector<double> endpoint;
                try {
                    endpoint = mgrad::smg_run(objectives, batch, std::move(start), cfg.inner_steps,
                                              alphas, mus, run_seed);
                } catch (const std::exception&) {
                    continue;  // drop the failed candidate refinement
                }
                result.archive.entries.push_back({endpoint, full_eval(endpoint)});
            }
        }

        prune_archive(result.archive);
        std::vector<std::vector<double>> snapshot;
        snapshot.reserve(result.archive.entries.size());
        for (const auto& e : result.archive.entries) snapshot.push_back(e.objectives);
        result.front_history.push_back(std::move(snapshot));
        truncate_to_capacity(result.archive);
    }
    return result;
}

KneeSelection knee_select(const ParetoArchive& archive) {
    if (archive.entries.empty()) throw std::invalid_argument("knee_select: empty archive");
    if (archive.objective_count() != 2) {
        throw std::invalid_argument("knee_select: archive must be bi-objective");
    }
    const auto& entries = archive.entries;

    KneeSelection sel;
    sel.objective_min = {entries.front().objectives[0], entries.front().objectives[1]};
    sel.objective_max = sel.objective_min;
    for (const auto& e : entries) {
        for (int j = 0; j < 2; ++j) {
            sel.objective_min[j] = std::min(sel.objective_min[j], e.objectives[j]);
            sel.objective_max[j] = std::max(sel.objective_max[j], e.objectives[j]);
        }
    }

    auto normalized = [&](std::size_t i) {
        std::vector<double> p(2);
        for (int j = 0; j < 2; ++j) {
            const double span = sel.objective_max[j] - sel.objective_min[j];
            p[j] = span > 0.0 ? (entries[i].objectives[j] - sel.objective_min[j]) / span : 0.0;
        }
        return p;
    };

    std::vector<std::size_t> order(entries.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (entries[a].objectives[0] != entries[b].objectives[0]) {
            return entries[a].objectives[0] < entries[b].objectives[0];
        }
        return entries[a].objectives[1] < entries[b].objectives[1];
    });

    if (entries.size() < 3) {
        // fallback: smallest normalized objective sum, ties to lower first objective
        std::size_t best = order[0];
        double best_sum = normalized(best)[0] + normalized(best)[1];
        for (std::size_t k = 1; k < order.size(); ++k) {
            const auto p = normalized(order[k]);
            if (p[0] + p[1] < best_sum) {
                best = order[k];
                best_sum = p[0] + p[1];
            }
        }
        sel.index = best;
        sel.angle = std::numbers::pi_v<double>;
        return sel;
    }

    const double pi = std::numbers::pi_v<double>;
    sel.angle = pi;
    sel.index = order[1];
    bool found = false;
    for (std::size_t k = 1; k + 1 < order.size(); ++k) {
        const auto prev = normalized(order[k - 1]);
        const auto here = normalized(order[k]);
        const auto next = normalized(order[k + 1]);
        const double ux = prev[0] - here[0], uy = prev[1] - here[1];
        const double vx = next[0] - here[0], vy = next[1] - here[1];
        const double nu = std::hypot(ux, uy), nv = std::hypot(vx, vy);
        if (nu <= 0.0 || nv <= 0.0) continue;  // coincident neighbor
        double cosang = (ux * vx + uy * vy) / (nu * nv);
        cosang = std::clamp(cosang, -1.0, 1.0);
        const double angle = std::acos(cosang);
        const bool better = !found || angle < sel.angle ||
                            (angle == sel.angle &&
                             entries[order[k]].objectives[0] < entries[sel.index].objectives[0]);
        if (better) {
            sel.index = order[k];
            sel.angle = angle;
            found = true;
        }
    }
    if (!found) {
        // every interior point coincides with a neighbor: fall back as above
        sel.index = order[1];
        sel.angle = pi;
    }
    return sel;
}

std::vector<double> rvo_knee_combine(const ParetoArchive& archive) {
    if (archive.entries.empty()) throw std::invalid_argument("rvo_knee_combine: empty archive");
    if (archive.objective_count() != 4) {
        throw std::invalid_argument("rvo_knee_combine: archive must have four objectives");
    }

    // slots: (F_ub1, F_ub2, F_lb1, F_lb2); plane i carries (f_lb_i, f_ub_i)
    struct PlaneKnee {
        std::vector<double> x;
        double ideal_distance = 0.0;  // normalized distance to the plane's ideal point
        bool degenerate = false;
    };

    auto plane_knee = [&](std::size_t lb_slot, std::size_t ub_slot) {
        std::vector<std::vector<double>> projected;
        projected.reserve(archive.entries.size());
        for (const auto& e : archive.entries) {
            projected.push_back({e.objectives[lb_slot], e.objectives[ub_slot]});
        }
        const auto keep = prune_nondominated(projected);

        ParetoArchive plane;
        plane.capacity = archive.entries.size();
        for (std::size_t idx : keep) {
            plane.entries.push_back({archive.entries[idx].x, projected[idx]});
        }
        const KneeSelection sel = knee_select(plane);

        PlaneKnee out;
        out.x = plane.entries[sel.index].x;
        double d2 = 0.0;
        bool degenerate = true;
        for (int j = 0; j < 2; ++j) {
            const double span = sel.objective_max[j] - sel.objective_min[j];
            if (span > 0.0) {
                degenerate = false;
                const double v =
                    (plane.entries[sel.index].objectives[j] - sel.objective_min[j]) / span;
                d2 += v * v;
            }
        }
        out.ideal_distance = std::sqrt(d2);
        out.degenerate = degenerate;
        return out;
    };

    const PlaneKnee acc = plane_knee(2, 0);
    const PlaneKnee fair = plane_knee(3, 1);

    double w_acc = 0.5;
    const double total = acc.ideal_distance + fair.ideal_distance;
    if (!acc.degenerate && !fair.degenerate && total > 0.0) {
        // weight a plane by the other plane's distance to its ideal point
        w_acc = fair.ideal_distance / total;
    } else if (acc.degenerate && !fair.degenerate) {
        w_acc = 0.0;
    } else if (!acc.degenerate && fair.degenerate) {
        w_acc = 1.0;
    }

    std::vector<double> combined(acc.x.size());
    for (std::size_t i = 0; i < combined.size(); ++i) {
        combined[i] = w_acc * acc.x[i] + (1.0 - w_acc) * fair.x[i];
    }
    return combined;
}

double hypervolume_2d(const std::vector<std::vector<double>>& points,
                      std::span<const double> reference) {
    if (reference.size() != 2) throw std::invalid_argument("hypervolume_2d: 2-D reference required");
    const auto keep = prune_nondominated(points);
    std::vector<std::vector<double>> front;
    for (std::size_t idx : keep) front.push_back(points[idx]);
    std::sort(front.begin(), front.end());

    double volume = 0.0;
    double prev_f2 = reference[1];
    for (const auto& p : front) {
        if (p[0] >= reference[0] || p[1] >= prev_f2) continue;
        volume += (reference[0] - p[0]) * (prev_f2 - p[1]);
        prev_f2 = p[1];
    }
    return volume;
}

std::string archive_to_csv(const ParetoArchive& archive) {
    std::string out;
    const std::size_t m = archive.objective_count();
    const std::size_t n = archive.entries.empty() ? 0 : archive.entries.front().x.size();
    for (std::size_t j = 0; j < m; ++j) {
        out += "f_" + std::to_string(j + 1) + ",";
    }
    for (std::size_t j = 0; j < n; ++j) {
        out += "x_" + std::to_string(j + 1);
        out += (j + 1 < n) ? "," : "";
    }
    out += "\n";

    char buf[64];
    auto append = [&](double v, bool last) {
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        out += buf;
        out += last ? "\n" : ",";
    };
    for (const auto& e : archive.entries) {
        for (std::size_t j = 0; j < m; ++j) append(e.objectives[j], false);
        for (std::size_t j = 0; j < n; ++j) append(e.x[j], j + 1 == n);
    }
    return out;
}

}  // namespace svo::front
