#include "svo/bench.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "svo/risk.hpp"
#include "svo/setorder.hpp"

namespace svo::bench {

namespace {

using nlohmann::json;

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open for writing: " + path);
    out << content;
    if (!out) throw DataError("write failure: " + path);
}

std::vector<double> zero_parameters(const learn::Dataset& data) {
    return std::vector<double>(data.dim() + 1, 0.0);
}

// Tail mode for the lower objective at level p_lower (extensions at 0 and 1).
smooth::TailMode lower_mode(double p) {
    if (p == 0.0) return smooth::TailMode::min;
    if (p == 1.0) return smooth::TailMode::mean;
    return smooth::TailMode::sub;
}

smooth::TailMode upper_mode(double p) {
    if (p == 0.0) return smooth::TailMode::mean;
    if (p == 1.0) return smooth::TailMode::max;
    return smooth::TailMode::super;
}

smooth::BatchObjective tail_batch_objective(smooth::TailMode mode, double p,
                                            smooth::SampleLoss loss) {
    smooth::SmoothedTailObjective obj{mode, p, std::move(loss)};
    return [obj = std::move(obj)](std::span<const double> x, std::span<const int> batch,
                                  double mu) { return smooth::tail_objective_eval(obj, x, batch, mu); };
}

// Squared covariance between the sensitive attribute and the prediction score,
// estimated over the minibatch with the training-set attribute mean held fixed.
smooth::BatchObjective fairness_batch_objective(const learn::Dataset& train, double a_mean) {
    return [&train, a_mean](std::span<const double> x, std::span<const int> batch,
                            double /*mu*/) {
        const learn::LogisticModel model = learn::LogisticModel::from_parameters(x);
        const double n = static_cast<double>(batch.size());
        const std::size_t d = train.dim();

        double cov = 0.0;
        std::vector<double> cov_grad(d + 1, 0.0);
        for (int idx : batch) {
            const auto& u = train.features[static_cast<std::size_t>(idx)];
            const double a = train.sensitive[static_cast<std::size_t>(idx)] - a_mean;
            const double phi = learn::predict_proba(model, u);
            cov += a * phi / n;
            const double dphi = a * phi * (1.0 - phi) / n;
            for (std::size_t j = 0; j < d; ++j) cov_grad[j] += dphi * u[j];
            cov_grad[d] += dphi;
        }
        smooth::TailEval out;
        out.value = cov * cov;
        out.grad.resize(d + 1);
        for (std::size_t j = 0; j <= d; ++j) out.grad[j] = 2.0 * cov * cov_grad[j];
        return out;
    };
}

std::vector<double> full_losses(const learn::Dataset& data, std::span<const double> x) {
    const learn::LogisticModel model = learn::LogisticModel::from_parameters(x);
    std::vector<int> all(data.size());
    std::iota(all.begin(), all.end(), 0);
    const auto losses = learn::sample_losses(model, data, all);
    std::vector<double> values(losses.size());
    for (std::size_t i = 0; i < losses.size(); ++i) values[i] = losses[i].value;
    return values;
}

std::vector<double> full_fairness_losses(const learn::Dataset& data, double a_mean,
                                         std::span<const double> x) {
    const auto loss = learn::fairness_sample_loss(data, a_mean);
    std::vector<double> values(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
        values[i] = loss(x, static_cast<int>(i)).value;
    }
    return values;
}

double tail_functional(const risk::EmpiricalSample& sample, smooth::TailMode mode, double p) {
    switch (mode) {
        case smooth::TailMode::sub:
            return risk::subquantile(sample, p);
        case smooth::TailMode::super:
            return risk::superquantile(sample, p);
        case smooth::TailMode::mean:
            return sample.mean();
        case smooth::TailMode::min:
            return sample.min();
        case smooth::TailMode::max:
            return sample.max();
    }
    return 0.0;
}

double knee_lambda(const front::KneeSelection& knee) {
    // The knee is selected on the min-max normalized front, where its
    // supporting scalarization has slope -1. In raw coordinates that
    // scalarization weights each objective inversely to its range, so the
    // evaluation weight on the lower endpoint is span_ub / (span_lb + span_ub).
    const double span_lb = knee.objective_max[0] - knee.objective_min[0];
    const double span_ub = knee.objective_max[1] - knee.objective_min[1];
    if (!(span_lb + span_ub > 0.0)) return 0.5;
    return std::clamp(span_ub / (span_lb + span_ub), 0.0, 1.0);
}

json knee_to_json(const front::KneeSelection& knee) {
    return json{{"index", knee.index},
                {"angle", knee.angle},
                {"objective_min", knee.objective_min},
                {"objective_max", knee.objective_max}};
}

json cell_to_json(const CellStats& cell) {
    json j{{"rho", cell.rho},
           {"mean", cell.mean},
           {"accuracy_mean", cell.accuracy_mean},
           {"raw", cell.raw}};
    j["variance"] = cell.variance ? json(*cell.variance) : json(nullptr);
    j["fairness_variance"] = cell.fairness_variance ? json(*cell.fairness_variance) : json(nullptr);
    j["frpa"] = cell.frpa ? json(*cell.frpa) : json(nullptr);
    return j;
}

CellStats cell_from_json(const json& j) {
    CellStats cell;
    cell.rho = j.at("rho").get<double>();
    cell.mean = j.at("mean").get<double>();
    cell.accuracy_mean = j.at("accuracy_mean").get<double>();
    cell.raw = j.at("raw").get<std::vector<double>>();
    if (!j.at("variance").is_null()) cell.variance = j["variance"].get<double>();
    if (!j.at("fairness_variance").is_null()) {
        cell.fairness_variance = j["fairness_variance"].get<double>();
    }
    if (!j.at("frpa").is_null()) cell.frpa = j["frpa"].get<double>();
    return cell;
}

struct MeanVar {
    double mean = 0.0;
    std::optional<double> variance;
};

MeanVar mean_variance(std::span<const double> values) {
    MeanVar out;
    const double n = static_cast<double>(values.size());
    out.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
    if (values.size() >= 2) {
        double ss = 0.0;
        for (double v : values) ss += (v - out.mean) * (v - out.mean);
        out.variance = ss / (n - 1.0);
    }
    return out;
}

}  // namespace

smooth::StepsizeSchedule ExperimentConfig::stepsizes() const {
    smooth::StepsizeSchedule s;
    s.alpha0 = alpha0;
    s.decay_rate = alpha_decay < 0.0 ? 1.0 / static_cast<double>(budget) : alpha_decay;
    return s;
}

void ExperimentConfig::validate() const {
    if (budget < 1) throw ConfigError("budget must be >= 1");
    if (!(alpha0 > 0.0)) throw ConfigError("alpha0 must be positive");
    if (p_lower < 0.0 || p_lower > 1.0 || p_upper < 0.0 || p_upper > 1.0) {
        throw ConfigError("tail levels must be in [0, 1]");
    }
    if (n_rep < 1) throw ConfigError("n_rep must be >= 1");
    if (n_test < 1) throw ConfigError("n_test must be >= 1");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
        throw ConfigError("test_fraction must be in (0, 1)");
    }
    for (double rho : shift_grid) {
        if (!(rho > 0.0 && rho < 1.0)) throw ConfigError("shift fractions must be in (0, 1)");
    }
    if (method != "erm" && method != "ivo" && method != "rvo" && method != "bi") {
        throw ConfigError("unknown method: " + method);
    }
}

ExperimentConfig ExperimentConfig::from_json(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const std::exception& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    ExperimentConfig cfg;
    auto get = [&](const char* key, auto& field) {
        if (j.contains(key)) field = j[key].get<std::remove_reference_t<decltype(field)>>();
    };
    get("data", cfg.data_path);
    get("schema", cfg.schema_path);
    get("method", cfg.method);
    get("p_lower", cfg.p_lower);
    get("p_upper", cfg.p_upper);
    get("budget", cfg.budget);
    get("alpha0", cfg.alpha0);
    get("alpha_decay", cfg.alpha_decay);
    get("batch_size", cfg.batch_size);
    get("test_fraction", cfg.test_fraction);
    get("shift_grid", cfg.shift_grid);
    get("n_test", cfg.n_test);
    get("n_rep", cfg.n_rep);
    get("seed", cfg.seed);
    get("out", cfg.out_dir);
    if (j.contains("smoothing")) {
        const auto& s = j["smoothing"];
        if (s.contains("mu0")) cfg.smoothing.mu0 = s["mu0"].get<double>();
        if (s.contains("decay_exponent")) {
            cfg.smoothing.decay_exponent = s["decay_exponent"].get<double>();
        }
        if (s.contains("floor")) cfg.smoothing.floor = s["floor"].get<double>();
    }
    if (j.contains("pfsmg")) {
        const auto& p = j["pfsmg"];
        if (p.contains("outer_iterations")) {
            cfg.pfsmg.outer_iterations = p["outer_iterations"].get<int>();
        }
        if (p.contains("perturbations")) cfg.pfsmg.perturbations = p["perturbations"].get<int>();
        if (p.contains("perturbation_magnitude")) {
            cfg.pfsmg.perturbation_magnitude = p["perturbation_magnitude"].get<double>();
        }
        if (p.contains("inner_steps")) cfg.pfsmg.inner_steps = p["inner_steps"].get<int>();
        if (p.contains("capacity")) cfg.pfsmg.capacity = p["capacity"].get<std::size_t>();
    }
    return cfg;
}

std::string ExperimentConfig::to_json() const {
    json j{{"data", data_path},
           {"schema", schema_path},
           {"method", method},
           {"p_lower", p_lower},
           {"p_upper", p_upper},
           {"budget", budget},
           {"alpha0", alpha0},
           {"alpha_decay", stepsizes().decay_rate},
           {"batch_size", batch_size},
           {"test_fraction", test_fraction},
           {"shift_grid", shift_grid},
           {"n_test", n_test},
           {"n_rep", n_rep},
           {"seed", seed},
           {"out", out_dir}};
    j["smoothing"] = {{"mu0", smoothing.mu0},
                      {"decay_exponent", smoothing.decay_exponent},
                      {"floor", smoothing.floor}};
    j["pfsmg"] = {{"outer_iterations", pfsmg.outer_iterations},
                  {"perturbations", pfsmg.perturbations},
                  {"perturbation_magnitude", pfsmg.perturbation_magnitude},
                  {"inner_steps", pfsmg.inner_steps},
                  {"capacity", pfsmg.capacity}};
    return j.dump(2) + "\n";
}

std::string TrainedSolution::to_json() const {
    json j{{"method", method},
           {"x", x},
           {"p_lower", p_lower},
           {"p_upper", p_upper},
           {"lambda", lambda}};
    return j.dump(2) + "\n";
}

TrainedSolution TrainedSolution::from_json(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const std::exception& e) {
        throw DataError(std::string("solution parse error: ") + e.what());
    }
    TrainedSolution s;
    s.method = j.at("method").get<std::string>();
    s.x = j.at("x").get<std::vector<double>>();
    s.p_lower = j.at("p_lower").get<double>();
    s.p_upper = j.at("p_upper").get<double>();
    s.lambda = j.at("lambda").get<double>();
    return s;
}

TrainedSolution run_erm(const ExperimentConfig& cfg, const learn::Dataset& train) {
    cfg.validate();
    const auto objective =
        tail_batch_objective(smooth::TailMode::mean, 0.5, learn::logistic_sample_loss(train));
    const smooth::MinibatchSpec batch{static_cast<int>(train.size()), cfg.batch_size};

    TrainedSolution out;
    out.method = "erm";
    out.p_lower = cfg.p_lower;
    out.p_upper = cfg.p_upper;
    out.x = smooth::ssg_run(objective, batch, zero_parameters(train), cfg.budget, cfg.stepsizes(),
                            cfg.smoothing, cfg.seed);
    return out;
}

TrainedSolution run_ivo(const ExperimentConfig& cfg, const learn::Dataset& train) {
    cfg.validate();
    const auto loss = learn::logistic_sample_loss(train);
    const smooth::MinibatchSpec batch{static_cast<int>(train.size()), cfg.batch_size};
    const smooth::TailMode lo_mode = lower_mode(cfg.p_lower);
    const smooth::TailMode up_mode = upper_mode(cfg.p_upper);

    // interval ordering (f_lb, f_ub), evaluated exactly on the full data
    const auto full_eval = setorder::vectorize(
        [&](std::span<const double> x) {
            risk::EmpiricalSample sample(full_losses(train, x));
            return std::vector<double>{tail_functional(sample, lo_mode, cfg.p_lower)};
        },
        [&](std::span<const double> x) {
            risk::EmpiricalSample sample(full_losses(train, x));
            return std::vector<double>{tail_functional(sample, up_mode, cfg.p_upper)};
        },
        1);

    TrainedSolution out;
    out.method = "ivo";
    out.p_lower = cfg.p_lower;
    out.p_upper = cfg.p_upper;

    if (lo_mode == smooth::TailMode::mean && up_mode == smooth::TailMode::mean) {
        // both objectives collapse to the expectation: plain SG, identical to ERM
        const auto objective = tail_batch_objective(smooth::TailMode::mean, 0.5, loss);
        out.x = smooth::ssg_run(objective, batch, zero_parameters(train), cfg.budget,
                                cfg.stepsizes(), cfg.smoothing, cfg.seed);
        out.archive.capacity = cfg.pfsmg.capacity;
        out.archive.entries.push_back({out.x, full_eval.eval(out.x)});
        out.lambda = 0.5;
        out.knee = front::knee_select(out.archive);
        return out;
    }

    const std::vector<smooth::BatchObjective> objectives = {
        tail_batch_objective(lo_mode, cfg.p_lower, loss),
        tail_batch_objective(up_mode, cfg.p_upper, loss)};

    front::PFSMGConfig pf = cfg.pfsmg;
    pf.seed = cfg.seed;
    auto result = front::pf_smg_run(objectives, full_eval.eval, batch,
                                    {zero_parameters(train)}, cfg.stepsizes(), cfg.smoothing, pf);
    if (result.archive.entries.empty()) {
        throw std::runtime_error("run_ivo: empty Pareto archive");
    }
    out.archive = std::move(result.archive);
    out.knee = front::knee_select(out.archive);
    out.x = out.archive.entries[out.knee->index].x;
    out.lambda = knee_lambda(*out.knee);
    return out;
}

TrainedSolution run_rvo(const ExperimentConfig& cfg, const learn::Dataset& train) {
    cfg.validate();
    if (!train.has_sensitive()) throw DataError("run_rvo: dataset has no sensitive attribute");

    const double a_mean = train.sensitive_mean();
    const auto acc_loss = learn::logistic_sample_loss(train);
    const auto fair_loss = learn::fairness_sample_loss(train, a_mean);
    const smooth::MinibatchSpec batch{static_cast<int>(train.size()), cfg.batch_size};
    const smooth::TailMode lo_mode = lower_mode(cfg.p_lower);
    const smooth::TailMode up_mode = upper_mode(cfg.p_upper);

    // rectangle axes: component 1 carries the accuracy loss interval,
    // component 2 the fairness loss interval; stacked as (F_ub; F_lb)
    const auto full_eval = setorder::vectorize(
        [&](std::span<const double> x) {
            risk::EmpiricalSample acc(full_losses(train, x));
            risk::EmpiricalSample fair(full_fairness_losses(train, a_mean, x));
            return std::vector<double>{tail_functional(acc, lo_mode, cfg.p_lower),
                                       tail_functional(fair, lo_mode, cfg.p_lower)};
        },
        [&](std::span<const double> x) {
            risk::EmpiricalSample acc(full_losses(train, x));
            risk::EmpiricalSample fair(full_fairness_losses(train, a_mean, x));
            return std::vector<double>{tail_functional(acc, up_mode, cfg.p_upper),
                                       tail_functional(fair, up_mode, cfg.p_upper)};
        },
        2);

    const std::vector<smooth::BatchObjective> objectives = {
        tail_batch_objective(up_mode, cfg.p_upper, acc_loss),
        tail_batch_objective(up_mode, cfg.p_upper, fair_loss),
        tail_batch_objective(lo_mode, cfg.p_lower, acc_loss),
        tail_batch_objective(lo_mode, cfg.p_lower, fair_loss)};

    front::PFSMGConfig pf = cfg.pfsmg;
    pf.seed = cfg.seed;
    auto result = front::pf_smg_run(objectives, full_eval.eval, batch,
                                    {zero_parameters(train)}, cfg.stepsizes(), cfg.smoothing, pf);
    if (result.archive.entries.empty()) {
        throw std::runtime_error("run_rvo: empty Pareto archive");
    }

    TrainedSolution out;
    out.method = "rvo";
    out.p_lower = cfg.p_lower;
    out.p_upper = cfg.p_upper;
    out.archive = std::move(result.archive);
    out.x = front::rvo_knee_combine(out.archive);
    return out;
}

TrainedSolution run_bi(const ExperimentConfig& cfg, const learn::Dataset& train) {
    cfg.validate();
    if (!train.has_sensitive()) throw DataError("run_bi: dataset has no sensitive attribute");

    const double a_mean = train.sensitive_mean();
    const smooth::MinibatchSpec batch{static_cast<int>(train.size()), cfg.batch_size};

    const std::vector<smooth::BatchObjective> objectives = {
        tail_batch_objective(smooth::TailMode::mean, 0.5, learn::logistic_sample_loss(train)),
        fairness_batch_objective(train, a_mean)};

    const auto full_eval = [&](std::span<const double> x) {
        risk::EmpiricalSample sample(full_losses(train, x));
        const learn::LogisticModel model = learn::LogisticModel::from_parameters(x);
        return std::vector<double>{sample.mean(), learn::fairness_loss(model, train).value};
    };

    front::PFSMGConfig pf = cfg.pfsmg;
    pf.seed = cfg.seed;
    auto result = front::pf_smg_run(objectives, full_eval, batch, {zero_parameters(train)},
                                    cfg.stepsizes(), cfg.smoothing, pf);
    if (result.archive.entries.empty()) {
        throw std::runtime_error("run_bi: empty Pareto archive");
    }

    TrainedSolution out;
    out.method = "bi";
    out.p_lower = cfg.p_lower;
    out.p_upper = cfg.p_upper;
    out.archive = std::move(result.archive);
    out.knee = front::knee_select(out.archive);
    out.x = out.archive.entries[out.knee->index].x;
    return out;
}

ReplicationRow evaluate_on(const TrainedSolution& solution, const learn::Dataset& test) {
    const learn::LogisticModel model = learn::LogisticModel::from_parameters(solution.x);
    const risk::EmpiricalSample losses(full_losses(test, solution.x));

    ReplicationRow row;
    row.plain = losses.mean();
    row.accuracy = learn::accuracy(model, test);
    if (test.has_sensitive()) {
        row.fairness = learn::fairness_loss(model, test).value;
    }

    if (solution.method == "ivo") {
        const double sub = tail_functional(losses, lower_mode(solution.p_lower), solution.p_lower);
        const double super = tail_functional(losses, upper_mode(solution.p_upper), solution.p_upper);
        row.designated = solution.lambda * sub + (1.0 - solution.lambda) * super;
    } else if (solution.method == "rvo" || solution.method == "bi") {
        if (!row.fairness) {
            throw DataError("evaluate_on: fairness loss requires a sensitive attribute");
        }
        row.designated = *row.fairness;
    } else {
        row.designated = row.plain;
    }
    return row;
}

std::optional<double> frpa(std::optional<double> fairness_variance, double accuracy_mean) {
    if (!fairness_variance || accuracy_mean == 0.0) return std::nullopt;
    return *fairness_variance / accuracy_mean;
}

MetricsReport evaluate_shift(const std::vector<TrainedSolution>& solutions,
                             const ExperimentConfig& cfg, const learn::Dataset& pool) {
    cfg.validate();
    MetricsReport report;

    const std::size_t pool_pos = pool.positive_count();
    const std::size_t pool_neg = pool.size() - pool_pos;

    for (double rho : cfg.shift_grid) {
        const auto need_pos =
            static_cast<std::size_t>(std::round(rho * static_cast<double>(cfg.n_test)));
        const auto need_neg = static_cast<std::size_t>(cfg.n_test) - need_pos;
        if (need_pos > pool_pos || need_neg > pool_neg) {
            std::ostringstream msg;
            msg << "shift fraction " << rho << " infeasible for pool (" << pool_pos
                << " positives, " << pool_neg << " negatives)";
            report.skipped.push_back(msg.str());
            continue;
        }

        learn::ShiftSpec spec;
        spec.positive_fraction = rho;
        spec.test_size = cfg.n_test;
        spec.replications = cfg.n_rep;
        spec.seed = cfg.seed;

        std::vector<std::vector<ReplicationRow>> rows(solutions.size());
        for (int r = 1; r <= cfg.n_rep; ++r) {
            const learn::Dataset test = learn::resample_shift(pool, spec, r);
            for (std::size_t s = 0; s < solutions.size(); ++s) {
                rows[s].push_back(evaluate_on(solutions[s], test));
            }
        }

        for (std::size_t s = 0; s < solutions.size(); ++s) {
            CellStats cell;
            cell.rho = rho;
            std::vector<double> designated, accuracies, fairness;
            bool all_fair = true;
            for (const auto& row : rows[s]) {
                designated.push_back(row.designated);
                accuracies.push_back(row.accuracy);
                if (row.fairness) {
                    fairness.push_back(*row.fairness);
                } else {
                    all_fair = false;
                }
            }
            const MeanVar mv = mean_variance(designated);
            cell.mean = mv.mean;
            cell.variance = mv.variance;
            cell.accuracy_mean = mean_variance(accuracies).mean;
            if (all_fair && !fairness.empty()) {
                cell.fairness_variance = mean_variance(fairness).variance;
            }
            cell.frpa = frpa(cell.fairness_variance, cell.accuracy_mean);
            cell.raw = std::move(designated);
            report.methods[solutions[s].method].push_back(std::move(cell));
        }
    }
    return report;
}

std::string MetricsReport::to_json() const {
    json j;
    j["skipped"] = skipped;
    json methods_json = json::object();
    for (const auto& [method, cells] : methods) {
        json arr = json::array();
        for (const auto& cell : cells) arr.push_back(cell_to_json(cell));
        methods_json[method] = std::move(arr);
    }
    j["methods"] = std::move(methods_json);
    return j.dump(2) + "\n";
}

MetricsReport MetricsReport::from_json(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const std::exception& e) {
        throw DataError(std::string("metrics parse error: ") + e.what());
    }
    MetricsReport report;
    report.skipped = j.at("skipped").get<std::vector<std::string>>();
    for (const auto& [method, cells] : j.at("methods").items()) {
        for (const auto& cell : cells) {
            report.methods[method].push_back(cell_from_json(cell));
        }
    }
    return report;
}

void write_report(const MetricsReport& report, const ExperimentConfig& cfg,
                  const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);
    write_file(out_dir + "/metrics.json", report.to_json());
    write_file(out_dir + "/config.json", cfg.to_json());
}

void write_solution(const TrainedSolution& solution, const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);
    write_file(out_dir + "/solution.json", solution.to_json());
    if (!solution.archive.entries.empty()) {
        write_file(out_dir + "/front.csv", front::archive_to_csv(solution.archive));
    }
    if (solution.knee) {
        write_file(out_dir + "/knee.json", knee_to_json(*solution.knee).dump(2) + "\n");
    }
}

}  // namespace svo::bench
