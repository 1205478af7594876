#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "svo/smooth.hpp"

// Dataset ingestion and preprocessing, logistic-regression prediction,
// per-sample accuracy and fairness losses with gradients, and the
// class-imbalance test resampling used by the shift protocol.

namespace svo::learn {

// Column roles for a delimited text file with a header row.
struct ColumnSchema {
    std::string label_column;
    std::string positive_label;  // label cell value mapped to +1
    std::string sensitive_column;  // empty = no sensitive attribute
    std::vector<std::string> categorical_columns;
    std::vector<std::string> continuous_columns;
    std::string missing_marker = "?";
    char delimiter = ',';
};

ColumnSchema parse_schema_json(const std::string& json_text);

struct Dataset {
    std::vector<std::vector<double>> features;  // n_samples x d
    std::vector<int> labels;                    // in {-1, +1}
    std::vector<double> sensitive;              // empty when absent
    std::vector<std::string> feature_names;

    std::size_t size() const { return features.size(); }
    std::size_t dim() const { return features.empty() ? 0 : features.front().size(); }
    bool has_sensitive() const { return !sensitive.empty(); }

    int label01(std::size_t i) const { return labels[i] > 0 ? 1 : 0; }
    double sensitive_mean() const;
    std::size_t positive_count() const;
};

// Reads the file, drops rows containing the missing marker, one-hot expands
// categorical columns, z-scores continuous columns with the statistics of the
// ingested rows, and maps labels to +/-1.
Dataset ingest_dataset(const std::string& path, const ColumnSchema& schema);

// Same pipeline, but splits rows into train/test first and fits the
// continuous-column statistics on the training rows only.
std::pair<Dataset, Dataset> ingest_split(const std::string& path, const ColumnSchema& schema,
                                         double test_fraction, std::uint64_t seed);

// Parameter vector convention: x = (w_1..w_d, b).
struct LogisticModel {
    std::vector<double> weights;
    double bias = 0.0;

    static LogisticModel from_parameters(std::span<const double> x);
    std::vector<double> to_parameters() const;
};

// sigma(w.u + b); class decision at threshold 0.5, probability exactly 0.5
// predicts +1.
double predict_proba(const LogisticModel& model, std::span<const double> u);

// Per-sample logistic loss ln(1 + exp(-v*(w.u+b))) with gradient in (w, b).
std::vector<smooth::ValueGrad> sample_losses(const LogisticModel& model, const Dataset& data,
                                             std::span<const int> indices);

// Squared covariance between the sensitive attribute and the prediction score,
// with gradient through the sigmoid.
smooth::ValueGrad fairness_loss(const LogisticModel& model, const Dataset& data);

// Fraction of samples whose thresholded prediction matches the label.
double accuracy(const LogisticModel& model, const Dataset& data);

// Per-sample loss closures over a fixed dataset, in the parameter vector
// convention above.
smooth::SampleLoss logistic_sample_loss(const Dataset& data);

// Per-sample fairness surrogate ((a_i - a_mean) * sigma(w.u_i + b))^2; a_mean
// is held at the training-set value.
smooth::SampleLoss fairness_sample_loss(const Dataset& data, double sensitive_mean);

struct ShiftSpec {
    double positive_fraction = 0.5;  // rho in (0,1)
    int test_size = 100;
    int replications = 30;
    std::uint64_t seed = 0;
};

// Samples round(rho*N) positives and the complement negatives without
// replacement from the pool, then shuffles the rows. The RNG stream is derived
// from (spec.seed, rho, r) only.
Dataset resample_shift(const Dataset& pool, const ShiftSpec& spec, int replication);

}  // namespace svo::learn
