#include "svo/learn.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "svo/seeding.hpp"

namespace svo::learn {

namespace {

std::vector<std::string> split_line(const std::string& line, char delimiter) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, delimiter)) {
        // trim surrounding whitespace
        const auto first = cell.find_first_not_of(" \t\r");
        const auto last = cell.find_last_not_of(" \t\r");
        cells.push_back(first == std::string::npos ? "" : cell.substr(first, last - first + 1));
    }
    if (!line.empty() && line.back() == delimiter) cells.push_back("");
    return cells;
}

struct RawTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;  // missing-marker rows already dropped
};

RawTable load_table(const std::string& path, const ColumnSchema& schema) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("ingest_dataset: cannot open " + path);

    RawTable table;
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("ingest_dataset: empty file " + path);
    table.header = split_line(line, schema.delimiter);

    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto cells = split_line(line, schema.delimiter);
        if (cells.size() != table.header.size()) {
            throw std::runtime_error("ingest_dataset: ragged row in " + path);
        }
        const bool missing = std::any_of(cells.begin(), cells.end(), [&](const std::string& c) {
            return c == schema.missing_marker;
        });
        if (!missing) table.rows.push_back(std::move(cells));
    }
    if (table.rows.empty()) {
        throw std::runtime_error("ingest_dataset: no rows left after filtering " + path);
    }
    return table;
}

std::size_t column_index(const RawTable& table, const std::string& name) {
    const auto it = std::find(table.header.begin(), table.header.end(), name);
    if (it == table.header.end()) {
        throw std::runtime_error("ingest_dataset: unknown column '" + name + "'");
    }
    return static_cast<std::size_t>(it - table.header.begin());
}

double parse_numeric(const std::string& cell, const std::string& column) {
    std::size_t consumed = 0;
    double value = 0.0;
    try {
        value = std::stod(cell, &consumed);
    } catch (const std::exception&) {
        throw std::runtime_error("ingest_dataset: unparseable numeric cell '" + cell +
                                 "' in column '" + column + "'");
    }
    if (consumed != cell.size()) {
        throw std::runtime_error("ingest_dataset: unparseable numeric cell '" + cell +
                                 "' in column '" + column + "'");
    }
    return value;
}

// One-hot level maps and continuous-column statistics, fitted on a row subset
// and applied to any subset.
struct Encoder {
    const ColumnSchema* schema = nullptr;
    std::size_t label_idx = 0;
    std::size_t sensitive_idx = 0;
    bool has_sensitive = false;
    std::vector<std::pair<std::size_t, std::vector<std::string>>> categorical;  // col, levels
    std::vector<std::pair<std::size_t, std::pair<double, double>>> continuous;  // col, (mean, sd)
    std::vector<std::string> feature_names;
    bool sensitive_is_numeric = true;
    std::string sensitive_positive_level;

    void fit(const RawTable& table, std::span<const std::size_t> fit_rows,
             const ColumnSchema& s) {
        schema = &s;
        label_idx = column_index(table, s.label_column);
        has_sensitive = !s.sensitive_column.empty();
        if (has_sensitive) sensitive_idx = column_index(table, s.sensitive_column);

        for (const auto& name : s.categorical_columns) {
            const std::size_t idx = column_index(table, name);
            std::set<std::string> levels;
            for (const auto& row : table.rows) levels.insert(row[idx]);
            categorical.emplace_back(idx, std::vector<std::string>(levels.begin(), levels.end()));
            for (const auto& level : levels) feature_names.push_back(name + "=" + level);
        }
        for (const auto& name : s.continuous_columns) {
            const std::size_t idx = column_index(table, name);
            double sum = 0.0, sumsq = 0.0;
            for (std::size_t r : fit_rows) {
                const double v = parse_numeric(table.rows[r][idx], name);
                sum += v;
                sumsq += v * v;
            }
            const double n = static_cast<double>(fit_rows.size());
            const double mean = sum / n;
            const double var = std::max(sumsq / n - mean * mean, 0.0);
            const double sd = var > 0.0 ? std::sqrt(var) : 1.0;
            continuous.emplace_back(idx, std::make_pair(mean, sd));
            feature_names.push_back(name);
        }

        if (has_sensitive) {
            for (const auto& row : table.rows) {
                try {
                    parse_numeric(row[sensitive_idx], s.sensitive_column);
                } catch (const std::exception&) {
                    sensitive_is_numeric = false;
                    break;
                }
            }
            if (!sensitive_is_numeric) {
                std::set<std::string> levels;
                for (const auto& row : table.rows) levels.insert(row[sensitive_idx]);
                // non-numeric attribute: lexicographically largest level maps to 1
                sensitive_positive_level = *levels.rbegin();
            }
        }
    }

    Dataset transform(const RawTable& table, std::span<const std::size_t> rows) const {
        Dataset out;
        out.feature_names = feature_names;
        out.features.reserve(rows.size());
        out.labels.reserve(rows.size());

        for (std::size_t r : rows) {
            const auto& row = table.rows[r];
            std::vector<double> x;
            x.reserve(feature_names.size());
            for (const auto& [idx, levels] : categorical) {
                for (const auto& level : levels) x.push_back(row[idx] == level ? 1.0 : 0.0);
            }
            for (const auto& [idx, stats] : continuous) {
                const double v = parse_numeric(row[idx], table.header[idx]);
                x.push_back((v - stats.first) / stats.second);
            }
            out.features.push_back(std::move(x));
            out.labels.push_back(row[label_idx] == schema->positive_label ? 1 : -1);
            if (has_sensitive) {
                if (sensitive_is_numeric) {
                    out.sensitive.push_back(
                        parse_numeric(row[sensitive_idx], schema->sensitive_column));
                } else {
                    out.sensitive.push_back(row[sensitive_idx] == sensitive_positive_level ? 1.0
                                                                                          : 0.0);
                }
            }
        }
        return out;
    }
};

double sigmoid(double t) {
    if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
    const double e = std::exp(t);
    return e / (1.0 + e);
}

double score(const LogisticModel& model, std::span<const double> u) {
    if (u.size() != model.weights.size()) {
        throw std::invalid_argument("predict_proba: dimension mismatch");
    }
    return std::inner_product(u.begin(), u.end(), model.weights.begin(), model.bias);
}

}  // namespace

ColumnSchema parse_schema_json(const std::string& json_text) {
    const auto j = nlohmann::json::parse(json_text);
    ColumnSchema schema;
    schema.label_column = j.at("label").get<std::string>();
    schema.positive_label = j.at("positive_label").get<std::string>();
    if (j.contains("sensitive")) schema.sensitive_column = j["sensitive"].get<std::string>();
    if (j.contains("categorical")) {
        schema.categorical_columns = j["categorical"].get<std::vector<std::string>>();
    }
    if (j.contains("continuous")) {
        schema.continuous_columns = j["continuous"].get<std::vector<std::string>>();
    }
    if (j.contains("missing_marker")) schema.missing_marker = j["missing_marker"].get<std::string>();
    if (j.contains("delimiter")) {
        const auto d = j["delimiter"].get<std::string>();
        if (d.size() != 1) throw std::runtime_error("schema: delimiter must be one character");
        schema.delimiter = d[0];
    }
    return schema;
}

double Dataset::sensitive_mean() const {
    if (sensitive.empty()) throw std::logic_error("Dataset: no sensitive attribute");
    return std::accumulate(sensitive.begin(), sensitive.end(), 0.0) /
           static_cast<double>(sensitive.size());
}

std::size_t Dataset::positive_count() const {
    return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
}

Dataset ingest_dataset(const std::string& path, const ColumnSchema& schema) {
    const RawTable table = load_table(path, schema);
    std::vector<std::size_t> all(table.rows.size());
    std::iota(all.begin(), all.end(), 0);
    Encoder encoder;
    encoder.fit(table, all, schema);
    return encoder.transform(table, all);
}

std::pair<Dataset, Dataset> ingest_split(const std::string& path, const ColumnSchema& schema,
                                         double test_fraction, std::uint64_t seed) {
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
        throw std::invalid_argument("ingest_split: test_fraction must be in (0, 1)");
    }
    const RawTable table = load_table(path, schema);
    std::vector<std::size_t> order(table.rows.size());
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(seeding::derive(seed, {0x73706c6974ULL}));
    std::shuffle(order.begin(), order.end(), rng);

    const auto n_test = static_cast<std::size_t>(
        std::round(test_fraction * static_cast<double>(order.size())));
    if (n_test == 0 || n_test >= order.size()) {
        throw std::invalid_argument("ingest_split: split leaves an empty side");
    }
    std::vector<std::size_t> test_rows(order.begin(), order.begin() + n_test);
    std::vector<std::size_t> train_rows(order.begin() + n_test, order.end());
    std::sort(test_rows.begin(), test_rows.end());
    std::sort(train_rows.begin(), train_rows.end());

    Encoder encoder;
    encoder.fit(table, train_rows, schema);
    return {encoder.transform(table, train_rows), encoder.transform(table, test_rows)};
}

LogisticModel LogisticModel::from_parameters(std::span<const double> x) {
    if (x.empty()) throw std::invalid_argument("LogisticModel: empty parameter vector");
    LogisticModel model;
    model.weights.assign(x.begin(), x.end() - 1);
    model.bias = x.back();
    return model;
}

std::vector<double> LogisticModel::to_parameters() const {
    std::vector<double> x = weights;
    x.push_back(bias);
    return x;
}

double predict_proba(const LogisticModel& model, std::span<const double> u) {
    return sigmoid(score(model, u));
}

std::vector<smooth::ValueGrad> sample_losses(const LogisticModel& model, const Dataset& data,
                                             std::span<const int> indices) {
    std::vector<smooth::ValueGrad> out;
    out.reserve(indices.size());
    const std::size_t d = data.dim();
    for (int idx : indices) {
        if (idx < 0 || static_cast<std::size_t>(idx) >= data.size()) {
            throw std::out_of_range("sample_losses: index out of range");
        }
        const auto& u = data.features[static_cast<std::size_t>(idx)];
        const double v = data.labels[static_cast<std::size_t>(idx)];
        const double margin = v * score(model, u);

        smooth::ValueGrad vg;
        // ln(1 + exp(-margin)), overflow-safe
        vg.value = margin > 0.0 ? std::log1p(std::exp(-margin))
                                : -margin + std::log1p(std::exp(margin));
        const double dloss = -v * sigmoid(-margin);
        vg.grad.resize(d + 1);
        for (std::size_t j = 0; j < d; ++j) vg.grad[j] = dloss * u[j];
        vg.grad[d] = dloss;
        out.push_back(std::move(vg));
    }
    return out;
}

smooth::ValueGrad fairness_loss(const LogisticModel& model, const Dataset& data) {
    if (data.size() == 0) throw std::invalid_argument("fairness_loss: empty dataset");
    if (!data.has_sensitive()) throw std::invalid_argument("fairness_loss: no sensitive attribute");

    const double a_mean = data.sensitive_mean();
    const double n = static_cast<double>(data.size());
    const std::size_t d = data.dim();

    double cov = 0.0;
    std::vector<double> cov_grad(d + 1, 0.0);
    for (std::size_t i = 0; i < data.size(); ++i) {
        const double a = data.sensitive[i] - a_mean;
        const double phi = predict_proba(model, data.features[i]);
        cov += a * phi / n;
        const double dphi = a * phi * (1.0 - phi) / n;
        for (std::size_t j = 0; j < d; ++j) cov_grad[j] += dphi * data.features[i][j];
        cov_grad[d] += dphi;
    }

    smooth::ValueGrad out;
    out.value = cov * cov;
    out.grad.resize(d + 1);
    for (std::size_t j = 0; j <= d; ++j) out.grad[j] = 2.0 * cov * cov_grad[j];
    return out;
}

double accuracy(const LogisticModel& model, const Dataset& data) {
    if (data.size() == 0) throw std::invalid_argument("accuracy: empty dataset");
    std::size_t correct = 0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        const int predicted = predict_proba(model, data.features[i]) >= 0.5 ? 1 : -1;
        if (predicted == data.labels[i]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(data.size());
}

smooth::SampleLoss logistic_sample_loss(const Dataset& data) {
    return [&data](std::span<const double> x, int index) {
        const LogisticModel model = LogisticModel::from_parameters(x);
        const int idx[] = {index};
        return sample_losses(model, data, idx).front();
    };
}

smooth::SampleLoss fairness_sample_loss(const Dataset& data, double sensitive_mean) {
    return [&data, sensitive_mean](std::span<const double> x, int index) {
        if (index < 0 || static_cast<std::size_t>(index) >= data.size()) {
            throw std::out_of_range("fairness_sample_loss: index out of range");
        }
        const LogisticModel model = LogisticModel::from_parameters(x);
        const auto& u = data.features[static_cast<std::size_t>(index)];
        const double a = data.sensitive[static_cast<std::size_t>(index)] - sensitive_mean;
        const double phi = predict_proba(model, u);

        smooth::ValueGrad vg;
        const double term = a * phi;
        vg.value = term * term;
        const double dterm = 2.0 * term * a * phi * (1.0 - phi);
        vg.grad.resize(u.size() + 1);
        for (std::size_t j = 0; j < u.size(); ++j) vg.grad[j] = dterm * u[j];
        vg.grad[u.size()] = dterm;
        return vg;
    };
}

Dataset resample_shift(const Dataset& pool, const ShiftSpec& spec, int replication) {
    if (!(spec.positive_fraction > 0.0 && spec.positive_fraction < 1.0)) {
        throw std::invalid_argument("resample_shift: positive fraction must be in (0, 1)");
    }
    const auto n_pos = static_cast<std::size_t>(
        std::round(spec.positive_fraction * static_cast<double>(spec.test_size)));
    const auto n_neg = static_cast<std::size_t>(spec.test_size) - n_pos;

    std::vector<std::size_t> pos_pool, neg_pool;
    for (std::size_t i = 0; i < pool.size(); ++i) {
        (pool.labels[i] > 0 ? pos_pool : neg_pool).push_back(i);
    }
    if (pos_pool.size() < n_pos || neg_pool.size() < n_neg) {
        throw std::invalid_argument("resample_shift: infeasible fraction for the pool");
    }

    std::mt19937_64 rng(seeding::derive(
        spec.seed, {seeding::double_bits(spec.positive_fraction),
                    static_cast<std::uint64_t>(replication)}));

    auto take = [&rng](std::vector<std::size_t> candidates, std::size_t count) {
        for (std::size_t i = 0; i < count; ++i) {
            std::uniform_int_distribution<std::size_t> pick(i, candidates.size() - 1);
            std::swap(candidates[i], candidates[pick(rng)]);
        }
        candidates.resize(count);
        return candidates;
    };

    std::vector<std::size_t> chosen = take(pos_pool, n_pos);
    const std::vector<std::size_t> negs = take(neg_pool, n_neg);
    chosen.insert(chosen.end(), negs.begin(), negs.end());
    std::shuffle(chosen.begin(), chosen.end(), rng);

    Dataset out;
    out.feature_names = pool.feature_names;
    out.features.reserve(chosen.size());
    for (std::size_t idx : chosen) {
        out.features.push_back(pool.features[idx]);
        out.labels.push_back(pool.labels[idx]);
        if (pool.has_sensitive()) out.sensitive.push_back(pool.sensitive[idx]);
    }
    return out;
}

}  // namespace svo::learn
