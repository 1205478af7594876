#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "svo/learn.hpp"

using svo::learn::ColumnSchema;
using svo::learn::Dataset;
using svo::learn::LogisticModel;

namespace {

std::string write_temp(const std::string& name, const std::string& content) {
    const auto path = (std::filesystem::temp_directory_path() / name).string();
    std::ofstream out(path, std::ios::binary);
    out << content;
    return path;
}

const char* kToyCsv =
    "age,color,group,label\n"
    "30,red,0,yes\n"
    "40,green,1,no\n"
    "50,blue,1,yes\n"
    "60,red,0,no\n"
    "25,?,1,yes\n"
    "45,green,0,yes\n";

ColumnSchema toy_schema() {
    ColumnSchema schema;
    schema.label_column = "label";
    schema.positive_label = "yes";
    schema.sensitive_column = "group";
    schema.categorical_columns = {"color"};
    schema.continuous_columns = {"age"};
    return schema;
}

Dataset synthetic_dataset(std::mt19937_64& rng, std::size_t n, std::size_t d) {
    std::uniform_real_distribution<double> val(-1.0, 1.0);
    std::bernoulli_distribution coin(0.5);
    Dataset data;
    data.features.resize(n, std::vector<double>(d));
    data.labels.resize(n);
    data.sensitive.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (double& v : data.features[i]) v = val(rng);
        data.labels[i] = coin(rng) ? 1 : -1;
        data.sensitive[i] = coin(rng) ? 1.0 : 0.0;
    }
    return data;
}

}  // namespace

TEST_CASE("ingestion drops missing rows, one-hot expands, z-scores") {
    const auto csv = write_temp("svo_learn_toy.csv", kToyCsv);
    const auto data = svo::learn::ingest_dataset(csv, toy_schema());

    CHECK(data.size() == 5);  // the '?' row is gone
    CHECK(data.dim() == 4);   // 3 color levels + age
    CHECK(data.feature_names ==
          std::vector<std::string>{"color=blue", "color=green", "color=red", "age"});

    double one_hot_sum = 0.0, age_mean = 0.0, age_var = 0.0;
    for (const auto& row : data.features) {
        one_hot_sum = row[0] + row[1] + row[2];
        CHECK(one_hot_sum == 1.0);
        age_mean += row[3] / 5.0;
    }
    for (const auto& row : data.features) {
        age_var += (row[3] - age_mean) * (row[3] - age_mean) / 5.0;
    }
    CHECK(std::abs(age_mean) <= 1e-10);
    CHECK(std::abs(age_var - 1.0) <= 1e-10);

    CHECK(data.labels == std::vector<int>{1, -1, 1, -1, 1});
    CHECK(data.sensitive == std::vector<double>{0, 1, 1, 0, 0});
    CHECK(data.label01(0) == 1);
    CHECK(data.label01(1) == 0);

    // reproducibility
    const auto again = svo::learn::ingest_dataset(csv, toy_schema());
    CHECK(again.features == data.features);
    CHECK(again.labels == data.labels);
    CHECK(again.sensitive == data.sensitive);
}

TEST_CASE("ingestion error reporting") {
    const auto csv = write_temp("svo_learn_toy.csv", kToyCsv);
    ColumnSchema bad_col = toy_schema();
    bad_col.continuous_columns = {"height"};
    CHECK_THROWS(svo::learn::ingest_dataset(csv, bad_col));

    ColumnSchema bad_numeric = toy_schema();
    bad_numeric.continuous_columns = {"color"};
    CHECK_THROWS(svo::learn::ingest_dataset(csv, bad_numeric));

    const auto empty = write_temp("svo_learn_empty.csv", "age,color,group,label\n");
    CHECK_THROWS(svo::learn::ingest_dataset(empty, toy_schema()));
}

TEST_CASE("schema json parsing") {
    const auto schema = svo::learn::parse_schema_json(R"({
        "label": "label", "positive_label": "yes", "sensitive": "group",
        "categorical": ["color"], "continuous": ["age"],
        "missing_marker": "NA", "delimiter": ";"
    })");
    CHECK(schema.label_column == "label");
    CHECK(schema.positive_label == "yes");
    CHECK(schema.sensitive_column == "group");
    CHECK(schema.categorical_columns == std::vector<std::string>{"color"});
    CHECK(schema.missing_marker == "NA");
    CHECK(schema.delimiter == ';');
    CHECK_THROWS(svo::learn::parse_schema_json("{}"));
}

TEST_CASE("split fits statistics on the training rows only") {
    // 40 rows so both sides are nonempty and statistics differ between splits
    std::string csv = "x,label\n";
    for (int i = 0; i < 40; ++i) {
        csv += std::to_string(i) + "," + (i % 2 == 0 ? "yes" : "no") + "\n";
    }
    const auto path = write_temp("svo_learn_split.csv", csv);
    ColumnSchema schema;
    schema.label_column = "label";
    schema.positive_label = "yes";
    schema.continuous_columns = {"x"};

    auto [train, test] = svo::learn::ingest_split(path, schema, 0.25, 3);
    CHECK(train.size() == 30);
    CHECK(test.size() == 10);

    double mean = 0.0;
    for (const auto& row : train.features) mean += row[0] / 30.0;
    CHECK(std::abs(mean) <= 1e-10);  // train is centered by construction

    // same seed reproduces the same split
    auto [train2, test2] = svo::learn::ingest_split(path, schema, 0.25, 3);
    CHECK(train2.features == train.features);
    CHECK(test2.features == test.features);

    auto [train3, test3] = svo::learn::ingest_split(path, schema, 0.25, 4);
    CHECK(train3.features != train.features);
}

TEST_CASE("prediction examples") {
    LogisticModel zero;
    zero.weights = {0.0, 0.0};
    CHECK(svo::learn::predict_proba(zero, std::vector<double>{3.0, -2.0}) == 0.5);

    LogisticModel unit;
    unit.weights = {1.0};
    CHECK(svo::learn::predict_proba(unit, std::vector<double>{0.5}) ==
          doctest::Approx(1.0 / (1.0 + std::exp(-0.5))).epsilon(1e-14));

    double prev = 0.0;
    for (double b : {-4.0, -1.0, 0.0, 1.0, 4.0, 20.0}) {
        LogisticModel biased;
        biased.weights = {1.0};
        biased.bias = b;
        const double phi = svo::learn::predict_proba(biased, std::vector<double>{0.0});
        CHECK(phi > prev);
        prev = phi;
    }
    CHECK(prev > 0.999);

    CHECK_THROWS(svo::learn::predict_proba(unit, std::vector<double>{1.0, 2.0}));
}

TEST_CASE("logistic losses") {
    std::mt19937_64 rng(401);
    auto data = synthetic_dataset(rng, 6, 3);
    LogisticModel zero;
    zero.weights = {0.0, 0.0, 0.0};
    std::vector<int> all(6);
    std::iota(all.begin(), all.end(), 0);

    for (const auto& vg : svo::learn::sample_losses(zero, data, all)) {
        CHECK(vg.value == doctest::Approx(std::log(2.0)).epsilon(1e-14));
    }

    // large-margin correct classification has negligible loss
    Dataset tiny;
    tiny.features = {{1.0}};
    tiny.labels = {1};
    LogisticModel confident;
    confident.weights = {20.0};
    const int one[] = {0};
    CHECK(svo::learn::sample_losses(confident, tiny, one).front().value <= 1e-6);

    CHECK_THROWS(svo::learn::sample_losses(zero, data, std::vector<int>{99}));
}

TEST_CASE("logistic and fairness gradients match finite differences") {
    std::mt19937_64 rng(409);
    std::uniform_real_distribution<double> xval(-0.8, 0.8);
    for (int trial = 0; trial < 50; ++trial) {
        auto data = synthetic_dataset(rng, 8, 3);
        std::vector<double> x(4);
        for (double& v : x) v = xval(rng);

        auto loss = svo::learn::logistic_sample_loss(data);
        auto fair = svo::learn::fairness_sample_loss(data, data.sensitive_mean());
        const int index = trial % 8;

        for (const auto& fn : {loss, fair}) {
            const auto vg = fn(x, index);
            for (std::size_t j = 0; j < x.size(); ++j) {
                auto xp = x, xm = x;
                const double h = 1e-6;
                xp[j] += h;
                xm[j] -= h;
                const double fd = (fn(xp, index).value - fn(xm, index).value) / (2.0 * h);
                CHECK(std::abs(vg.grad[j] - fd) / std::max({1.0, std::abs(fd)}) <= 1e-6);
            }
        }

        const LogisticModel model = LogisticModel::from_parameters(x);
        const auto vg = svo::learn::fairness_loss(model, data);
        for (std::size_t j = 0; j < x.size(); ++j) {
            auto xp = x, xm = x;
            const double h = 1e-6;
            xp[j] += h;
            xm[j] -= h;
            const double fd =
                (svo::learn::fairness_loss(LogisticModel::from_parameters(xp), data).value -
                 svo::learn::fairness_loss(LogisticModel::from_parameters(xm), data).value) /
                (2.0 * h);
            CHECK(std::abs(vg.grad[j] - fd) / std::max({1.0, std::abs(fd)}) <= 1e-6);
        }
    }
}

TEST_CASE("fairness loss degeneracies") {
    std::mt19937_64 rng(419);
    auto data = synthetic_dataset(rng, 10, 2);

    auto constant_attr = data;
    std::fill(constant_attr.sensitive.begin(), constant_attr.sensitive.end(), 1.0);
    LogisticModel model;
    model.weights = {0.4, -0.7};
    model.bias = 0.2;
    const auto vg = svo::learn::fairness_loss(model, constant_attr);
    CHECK(vg.value == 0.0);
    for (double g : vg.grad) CHECK(g == 0.0);

    LogisticModel zero;
    zero.weights = {0.0, 0.0};
    CHECK(svo::learn::fairness_loss(zero, data).value <= 1e-30);  // phi constant at 0.5

    CHECK(svo::learn::fairness_loss(model, data).value >= 0.0);
}

TEST_CASE("accuracy") {
    Dataset sep;
    sep.features = {{-1.0}, {1.0}};
    sep.labels = {-1, 1};
    LogisticModel model;
    model.weights = {5.0};
    CHECK(svo::learn::accuracy(model, sep) == 1.0);

    // zero model: probability exactly 0.5 predicts +1
    LogisticModel zero;
    zero.weights = {0.0};
    CHECK(svo::learn::accuracy(zero, sep) == 0.5);

    std::mt19937_64 rng(421);
    auto data = synthetic_dataset(rng, 20, 1);
    LogisticModel any;
    any.weights = {0.3};
    const double acc = svo::learn::accuracy(any, data);
    CHECK(acc >= 0.0);
    CHECK(acc <= 1.0);
}

TEST_CASE("shift resampling") {
    std::mt19937_64 rng(431);
    Dataset pool = synthetic_dataset(rng, 0, 2);
    for (int i = 0; i < 200; ++i) {
        pool.features.push_back({0.1 * i, -0.1 * i});
        pool.labels.push_back(i < 100 ? 1 : -1);
        pool.sensitive.push_back(i % 2);
    }

    svo::learn::ShiftSpec spec;
    spec.positive_fraction = 0.25;
    spec.test_size = 100;
    spec.seed = 17;

    const auto test = svo::learn::resample_shift(pool, spec, 1);
    CHECK(test.size() == 100);
    CHECK(test.positive_count() == 25);

    // exact fraction across replications
    for (int r = 1; r <= 30; ++r) {
        CHECK(svo::learn::resample_shift(pool, spec, r).positive_count() == 25);
    }

    // determinism in (seed, rho, r); different r gives a different draw
    const auto same = svo::learn::resample_shift(pool, spec, 1);
    CHECK(same.features == test.features);
    CHECK(same.labels == test.labels);
    const auto other = svo::learn::resample_shift(pool, spec, 2);
    CHECK(other.features != test.features);

    svo::learn::ShiftSpec native = spec;
    native.positive_fraction = 0.5;
    CHECK(svo::learn::resample_shift(pool, native, 3).positive_count() == 50);

    svo::learn::ShiftSpec infeasible = spec;
    infeasible.test_size = 500;
    CHECK_THROWS(svo::learn::resample_shift(pool, infeasible, 1));
}
