#include <CLI11.hpp>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include "liftseq/experiment.hpp"
#include "liftseq/rng.hpp"

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void spill(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    out << text;
}

// Inline JSON or a path to a JSON file.
std::string json_arg(const std::string& arg) {
    if (!arg.empty() && (arg.front() == '{' || arg.front() == '[')) return arg;
    return slurp(arg);
}

int run_selftest() {
    using namespace liftseq;
    int failures = 0;
    auto check = [&failures](bool ok, const char* name) {
        std::cout << (ok ? "ok   " : "FAIL ") << name << "\n";
        if (!ok) ++failures;
    };

    {  // ridge against the normal equations
        Rng rng(7);
        DenseMatrix a(6, 3), b(6, 2);
        for (double& v : a.raw()) v = rng.normal();
        for (double& v : b.raw()) v = rng.normal();
        const std::vector<double> reg{0.2, 0.1, 0.0};
        const DenseMatrix theta = ridge_solve(a, b, 0.7, reg);
        DenseMatrix lhs = matmul(matmul_at_b(a, a), theta);
        for (double& v : lhs.raw()) v *= 0.7;
        for (std::size_t r = 0; r < 3; ++r)
            for (std::size_t c = 0; c < 2; ++c) lhs(r, c) += reg[r] * theta(r, c);
        DenseMatrix rhs = matmul_at_b(a, b);
        for (double& v : rhs.raw()) v *= 0.7;
        check(max_abs(lhs - rhs) <= 1e-8 * (1.0 + max_abs(rhs)), "ridge normal-equation residual");
    }
    {  // nnls clamp
        std::vector<WeightedFactorTerm> terms;
        terms.push_back({DenseMatrix::identity(1), DenseMatrix(1, 1, {-3.0}), 1.0});
        const auto res = nnls_solve(terms, DenseMatrix(1, 1), 100, 1e-10);
        check(res.converged && res.h(0, 0) == 0.0, "nnls clamps negative target");
    }
    {  // simplex prox feasibility
        const auto prob =
            SimplexEntropyProblem::make({0.5, -0.2, 0.1}, {0.0, 1.0, 0.0}, 0.7);
        const auto z = simplex_entropy_prox(prob, 1e-10);
        double sum = 0.0;
        bool nonneg = true;
        for (double v : z) {
            sum += v;
            nonneg = nonneg && v >= 0.0;
        }
        check(nonneg && std::abs(sum - 1.0) <= 1e-10, "simplex-entropy prox feasibility");
    }
    {  // bptt gradient vs central differences
        const GeneratorSpec spec{GeneratorKind::sum_threshold, 4};
        const SequenceDataset ds = generate(spec, 3, 11);
        LiftedRnnModel model = init_model(ds.meta.i, 3, ds.meta.o, 5);
        const Gradients g = grad_bptt(model, ds.x, ds.y, 1e-3);
        const double eps = 1e-5;
        double worst = 0.0;
        for (std::size_t idx = 0; idx < model.w.size(); ++idx) {
            const double keep = model.w.raw()[idx];
            model.w.raw()[idx] = keep + eps;
            const double fp = loss(model, ds.x, ds.y, 1e-3);
            model.w.raw()[idx] = keep - eps;
            const double fm = loss(model, ds.x, ds.y, 1e-3);
            model.w.raw()[idx] = keep;
            const double fd = (fp - fm) / (2.0 * eps);
            worst = std::max(worst, std::abs(fd - g.w.raw()[idx]) / std::max(1.0, std::abs(fd)));
        }
        check(worst <= 1e-6, "bptt W-gradient finite-difference check");
    }
    std::cout << (failures ? "selftest: FAILED\n" : "selftest: all checks passed\n");
    return failures ? 2 : 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Lifted-RNN block-coordinate descent trainer and experiment harness"};
    app.require_subcommand(1);

    auto* gen = app.add_subcommand("generate", "Generate a dataset file");
    std::string gen_spec, gen_out;
    std::size_t gen_m = 200;
    std::uint64_t gen_seed = 0;
    gen->add_option("--spec", gen_spec, "Generator spec (inline JSON or path)")->required();
    gen->add_option("--m", gen_m, "Sample count");
    gen->add_option("--seed", gen_seed, "RNG seed");
    gen->add_option("--out", gen_out, "Output dataset file")->required();

    auto* train = app.add_subcommand("train", "Train a model on a dataset file");
    std::string train_method, train_data, train_config = "{}", train_out;
    train->add_option("--method", train_method, "lifted or sgd")
        ->required()
        ->check(CLI::IsMember({"lifted", "sgd"}));
    train->add_option("--data", train_data, "Dataset file")->required();
    train->add_option("--config", train_config, "Hyperparameters (inline JSON or path)");
    train->add_option("--out-model", train_out, "Output model file")->required();

    auto* eval = app.add_subcommand("eval", "Evaluate a model on a dataset file");
    std::string eval_model, eval_data;
    eval->add_option("--model", eval_model, "Model file")->required();
    eval->add_option("--data", eval_data, "Dataset file")->required();

    auto* exp = app.add_subcommand("experiment", "Run an experiment sweep, write CSV");
    std::string exp_config, exp_out;
    exp->add_option("--config", exp_config, "Experiment config (inline JSON or path)")->required();
    exp->add_option("--out", exp_out, "Output CSV file")->required();

    auto* selftest = app.add_subcommand("selftest", "Run solver-oracle and gradient checks");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        using namespace liftseq;
        if (gen->parsed()) {
            const GeneratorSpec spec = GeneratorSpec::parse(json_arg(gen_spec));
            spill(gen_out, serialize(generate(spec, gen_m, gen_seed)));
        } else if (train->parsed()) {
            const SequenceDataset ds = deserialize(slurp(train_data));
            LiftedRnnModel model;
            if (train_method == "lifted") {
                const LiftedHyperparams hp = lifted_hyper_from_json(json_arg(train_config));
                model = train_bcd(ds.x, ds.y, hp, ds.meta.seed).model;
            } else {
                const SgdConfig cfg = sgd_config_from_json(json_arg(train_config));
                model = sgd_train(ds.x, ds.y, cfg).model;
            }
            spill(train_out, model_to_json(model));
        } else if (eval->parsed()) {
            const LiftedRnnModel model = model_from_json(slurp(eval_model));
            const SequenceDataset ds = deserialize(slurp(eval_data));
            std::cout << accuracy(predict(model, ds.x, Task::classification), ds.y) << "\n";
        } else if (exp->parsed()) {
            const ExperimentConfig cfg = ExperimentConfig::parse(json_arg(exp_config));
            spill(exp_out, results_to_csv(run_experiment(cfg)));
        } else if (selftest->parsed()) {
            return run_selftest();
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
