#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "svo/front.hpp"
#include "svo/learn.hpp"
#include "svo/smooth.hpp"

// Experiment orchestration: ERM baseline, IVO/RVO/BI pipelines,
// distribution-shift evaluation, M/V/FRPA metrics, and report emission.

namespace svo::bench {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
    std::string data_path;
    std::string schema_path;
    std::string method = "erm";  // erm | ivo | rvo | bi
    double p_lower = 0.1;
    double p_upper = 0.9;
    int budget = 1500;
    double alpha0 = 1.3;
    double alpha_decay = -1.0;  // negative: resolved to 1/budget
    smooth::SmoothingSchedule smoothing;
    front::PFSMGConfig pfsmg;
    int batch_size = 64;
    double test_fraction = 0.2;
    std::vector<double> shift_grid = {0.05, 0.10, 0.15, 0.20, 0.25, 0.30, 0.40, 0.50};
    int n_test = 200;
    int n_rep = 30;
    std::uint64_t seed = 0;
    std::string out_dir;

    smooth::StepsizeSchedule stepsizes() const;
    void validate() const;

    static ExperimentConfig from_json(const std::string& json_text);
    std::string to_json() const;  // resolved config echo
};

struct TrainedSolution {
    std::string method;
    std::vector<double> x;
    double p_lower = 0.1;
    double p_upper = 0.9;
    double lambda = 0.5;  // IVO evaluation weight
    front::ParetoArchive archive;  // empty for erm
    std::optional<front::KneeSelection> knee;

    std::string to_json() const;
    static TrainedSolution from_json(const std::string& json_text);
};

TrainedSolution run_erm(const ExperimentConfig& cfg, const learn::Dataset& train);
TrainedSolution run_ivo(const ExperimentConfig& cfg, const learn::Dataset& train);
TrainedSolution run_rvo(const ExperimentConfig& cfg, const learn::Dataset& train);
TrainedSolution run_bi(const ExperimentConfig& cfg, const learn::Dataset& train);

// Per-replication losses of one solution on one shifted test set.
struct ReplicationRow {
    double designated = 0.0;  // the method's own Loss variant
    double plain = 0.0;       // mean logistic loss
    double accuracy = 0.0;
    std::optional<double> fairness;
};

struct CellStats {
    double rho = 0.0;
    double mean = 0.0;                  // M over replications of the designated loss
    std::optional<double> variance;     // V with the (N_rep - 1) denominator
    double accuracy_mean = 0.0;         // M_ACC
    std::optional<double> fairness_variance;  // V_F
    std::optional<double> frpa;               // V_F / M_ACC
    std::vector<double> raw;            // designated loss per replication
};

struct MetricsReport {
    // method -> cells in shift-grid order
    std::map<std::string, std::vector<CellStats>> methods;
    std::vector<std::string> skipped;  // infeasible shift fractions

    std::string to_json() const;
    static MetricsReport from_json(const std::string& json_text);
};

// Designated per-replication loss of a solution on a test set, using the
// unsmoothed empirical functionals.
ReplicationRow evaluate_on(const TrainedSolution& solution, const learn::Dataset& test);

// Runs the shift protocol: for each grid fraction and replication, builds one
// shared test set (RNG derived from (seed, rho, r) only) and evaluates every
// solution on it.
MetricsReport evaluate_shift(const std::vector<TrainedSolution>& solutions,
                             const ExperimentConfig& cfg, const learn::Dataset& pool);

// FRPA = V_F / M_ACC; nullopt when M_ACC is zero or V_F unavailable.
std::optional<double> frpa(std::optional<double> fairness_variance, double accuracy_mean);

// Emits metrics.json plus config.json into out_dir.
void write_report(const MetricsReport& report, const ExperimentConfig& cfg,
                  const std::string& out_dir);

// Writes solution.json (and front.csv / knee.json when an archive exists).
void write_solution(const TrainedSolution& solution, const std::string& out_dir);

}  // namespace svo::bench
