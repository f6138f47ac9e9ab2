#include "liftseq/experiment.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <nlohmann/json.hpp>
#include <sstream>
#include <thread>

namespace liftseq {

using nlohmann::json;

void ExperimentConfig::validate() const {
    base_spec.validate();
    if (values.empty()) throw InvalidSpec("experiment: value list is empty");
    if (methods.empty()) throw InvalidSpec("experiment: method list is empty");
    for (const auto& m : methods)
        if (m != "lifted" && m != "sgd") throw InvalidSpec("experiment: unknown method '" + m + "'");
    if (repeats < 1) throw InvalidSpec("experiment: repeats must be >= 1");
    if (train_size < 1 || test_size < 1) throw InvalidSpec("experiment: dataset sizes");
    if (sweep == SweepVariable::max_dependency && base_spec.kind != GeneratorKind::timer)
        throw InvalidSpec("experiment: max_dependency sweep requires the timer generator");
    if (sweep == SweepVariable::lag && base_spec.kind != GeneratorKind::lag_echo)
        throw InvalidSpec("experiment: lag sweep requires the lag_echo generator");
}

namespace {

Task task_from_string(const std::string& s) {
    if (s == "classification") return Task::classification;
    if (s == "regression") return Task::regression;
    throw InvalidSpec("unknown task '" + s + "'");
}

LastLayerMode mode_from_string(const std::string& s) {
    if (s == "softmax_ce") return LastLayerMode::softmax_ce;
    if (s == "simplex_ce") return LastLayerMode::simplex_ce;
    throw InvalidSpec("unknown last_layer_mode '" + s + "'");
}

LiftedHyperparams lifted_hyper_from_jobj(const json& j) {
    LiftedHyperparams hp;
    hp.lambda = j.value("lambda", hp.lambda);
    hp.rho0 = j.value("rho0", hp.rho0);
    hp.rho1 = j.value("rho1", hp.rho1);
    hp.rho2 = j.value("rho2", hp.rho2);
    hp.hidden = j.value("hidden", hp.hidden);
    hp.sweeps = j.value("sweeps", hp.sweeps);
    hp.inner_tol = j.value("inner_tol", hp.inner_tol);
    hp.inner_max_iters = j.value("inner_max_iters", hp.inner_max_iters);
    hp.task = task_from_string(j.value("task", std::string("classification")));
    hp.last_layer_mode = mode_from_string(j.value("last_layer_mode", std::string("softmax_ce")));
    hp.validate();
    return hp;
}

SgdConfig sgd_config_from_jobj(const json& j) {
    SgdConfig cfg;
    cfg.lr0 = j.value("lr0", cfg.lr0);
    cfg.decay = j.value("decay", cfg.decay);
    cfg.decay_every = j.value("decay_every", cfg.decay_every);
    cfg.batch_size = j.value("batch_size", cfg.batch_size);
    cfg.rho = j.value("rho", cfg.rho);
    cfg.steps = j.value("steps", cfg.steps);
    cfg.hidden = j.value("hidden", cfg.hidden);
    cfg.seed = j.value("seed", cfg.seed);
    return cfg;
}

std::size_t worker_count(std::size_t repeats) {
    std::size_t n = 0;
    if (const char* env = std::getenv("LIFTED_SEQ_THREADS")) n = std::strtoul(env, nullptr, 10);
    if (n == 0) n = std::max<std::size_t>(1, std::thread::hardware_concurrency());
    return std::min(n, repeats);
}

}  // namespace

LiftedHyperparams lifted_hyper_from_json(const std::string& text) {
    try {
        return lifted_hyper_from_jobj(json::parse(text));
    } catch (const json::exception& e) {
        throw ParseError(std::string("lifted config: ") + e.what());
    }
}

SgdConfig sgd_config_from_json(const std::string& text) {
    try {
        return sgd_config_from_jobj(json::parse(text));
    } catch (const json::exception& e) {
        throw ParseError(std::string("sgd config: ") + e.what());
    }
}

ExperimentConfig ExperimentConfig::parse(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ParseError(std::string("experiment config: ") + e.what());
    }
    try {
        ExperimentConfig cfg;
        cfg.base_spec = GeneratorSpec::parse(j.at("spec").dump());
        const std::string sweep = j.value("sweep", "length");
        if (sweep == "length")
            cfg.sweep = SweepVariable::length;
        else if (sweep == "max_dependency")
            cfg.sweep = SweepVariable::max_dependency;
        else if (sweep == "lag")
            cfg.sweep = SweepVariable::lag;
        else
            throw InvalidSpec("experiment: unknown sweep variable '" + sweep + "'");
        cfg.values = j.at("values").get<std::vector<std::size_t>>();
        cfg.methods = j.at("methods").get<std::vector<std::string>>();
        cfg.repeats = j.value("repeats", cfg.repeats);
        cfg.train_size = j.value("train_size", cfg.train_size);
        cfg.test_size = j.value("test_size", cfg.test_size);
        cfg.base_seed = j.value("base_seed", cfg.base_seed);
        cfg.calibrate_timer = j.value("calibrate_timer", cfg.sweep == SweepVariable::max_dependency);
        if (j.contains("lifted")) cfg.lifted = lifted_hyper_from_jobj(j["lifted"]);
        if (j.contains("sgd")) cfg.sgd = sgd_config_from_jobj(j["sgd"]);
        cfg.validate();
        return cfg;
    } catch (const json::exception& e) {
        throw ParseError(std::string("experiment config: ") + e.what());
    }
}

std::vector<ResultRow> run_experiment(const ExperimentConfig& config) {
    config.validate();
    std::vector<ResultRow> rows;

    for (const std::size_t value : config.values) {
        GeneratorSpec spec = config.base_spec;
        switch (config.sweep) {
            case SweepVariable::length: spec.length = value; break;
            case SweepVariable::max_dependency: spec.timer_max = value; break;
            case SweepVariable::lag: spec.lag = value; break;
        }
        if (spec.kind == GeneratorKind::timer && config.calibrate_timer)
            spec.on_fraction = calibrate_on_fraction(spec.timer_max, spec.length);
        spec.validate();

        for (const auto& method : config.methods) {
            ResultRow row;
            row.dataset = spec.name();
            row.value = value;
            row.method = method;

            std::vector<double> accs(config.repeats, 0.0);
            std::vector<std::string> errors(config.repeats);
            for (std::size_t r = 0; r < config.repeats; ++r)
                row.seeds.push_back(config.base_seed + r);

            const auto started = std::chrono::steady_clock::now();
            std::atomic<std::size_t> next{0};
            auto work = [&]() {
                while (true) {
                    const std::size_t r = next.fetch_add(1);
                    if (r >= config.repeats) return;
                    try {
                        const std::uint64_t seed = config.base_seed + r;
                        const SequenceDataset train = generate(spec, config.train_size, seed);
                        const SequenceDataset test =
                            generate(spec, config.test_size, config.base_seed + 10000 + r);
                        LiftedRnnModel model;
                        if (method == "lifted") {
                            LiftedHyperparams hp = config.lifted;
                            model = train_bcd(train.x, train.y, hp, seed).model;
                        } else {
                            SgdConfig sc = config.sgd;
                            sc.seed = seed;
                            model = sgd_train(train.x, train.y, sc).model;
                        }
                        accs[r] = accuracy(predict(model, test.x, Task::classification), test.y);
                    } catch (const std::exception& e) {
                        errors[r] = e.what();
                    }
                }
            };
            const std::size_t workers = worker_count(config.repeats);
            if (workers <= 1) {
                work();
            } else {
                std::vector<std::thread> pool;
                for (std::size_t t = 0; t < workers; ++t) pool.emplace_back(work);
                for (auto& th : pool) th.join();
            }
            for (std::size_t r = 0; r < config.repeats; ++r)
                if (!errors[r].empty())
                    throw std::runtime_error("experiment: " + row.dataset + " value " +
                                             std::to_string(value) + " method " + method +
                                             " repeat " + std::to_string(r) + ": " + errors[r]);

            double mean = 0.0;
            for (double a : accs) mean += a;
            mean /= static_cast<double>(config.repeats);
            double var = 0.0;
            for (double a : accs) var += (a - mean) * (a - mean);
            var /= static_cast<double>(config.repeats);
            row.mean_acc = mean;
            row.std_acc = std::sqrt(var);
            row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started)
                              .count();
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

std::string results_to_csv(const std::vector<ResultRow>& rows) {
    std::ostringstream out;
    out << "dataset,value,method,mean_acc,std_acc,seconds,seeds\n";
    out.precision(6);
    out << std::fixed;
    for (const auto& row : rows) {
        out << row.dataset << ',' << row.value << ',' << row.method << ',' << row.mean_acc << ','
            << row.std_acc << ',' << row.seconds << ',';
        for (std::size_t i = 0; i < row.seeds.size(); ++i) {
            if (i) out << ';';
            out << row.seeds[i];
        }
        out << '\n';
    }
    return out.str();
}

namespace {

json matrix_to_json(const DenseMatrix& m) {
    json rows = json::array();
    for (std::size_t r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (std::size_t c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

DenseMatrix matrix_from_json(const json& j) {
    const std::size_t rows = j.size();
    const std::size_t cols = rows ? j[0].size() : 0;
    DenseMatrix m(rows, cols);
    for (std::size_t r = 0; r < rows; ++r) {
        if (j[r].size() != cols) throw ParseError("model: ragged matrix");
        for (std::size_t c = 0; c < cols; ++c) m(r, c) = j[r][c].get<double>();
    }
    return m;
}

}  // namespace

std::string model_to_json(const LiftedRnnModel& model) {
    json j;
    j["u0"] = matrix_to_json(model.u0);
    j["w"] = matrix_to_json(model.w);
    j["b0"] = model.b0;
    j["u1"] = matrix_to_json(model.u1);
    j["b1"] = model.b1;
    return j.dump();
}

LiftedRnnModel model_from_json(const std::string& text) {
    try {
        const json j = json::parse(text);
        LiftedRnnModel model;
        model.u0 = matrix_from_json(j.at("u0"));
        model.w = matrix_from_json(j.at("w"));
        model.b0 = j.at("b0").get<std::vector<double>>();
        model.u1 = matrix_from_json(j.at("u1"));
        model.b1 = j.at("b1").get<std::vector<double>>();
        return model;
    } catch (const json::exception& e) {
        throw ParseError(std::string("model: ") + e.what());
    }
}

}  // namespace liftseq
