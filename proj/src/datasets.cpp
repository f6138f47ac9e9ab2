#include "liftseq/datasets.hpp"

#include <cmath>
#include <nlohmann/json.hpp>

#include "liftseq/rng.hpp"

namespace liftseq {

using nlohmann::json;

void GeneratorSpec::validate() const {
    if (length < 1) throw InvalidSpec("generator: length must be >= 1");
    switch (kind) {
        case GeneratorKind::timer:
            if (timer_max < 1) throw InvalidSpec("timer: max value must be >= 1");
            if (on_fraction < 0.0 || !(on_fraction < 1.0))
                throw InvalidSpec("timer: on_fraction must be in [0,1)");
            break;
        case GeneratorKind::lag_echo:
            if (num_classes < 1) throw InvalidSpec("lag_echo: num_classes must be >= 1");
            if (lag < 1 || lag >= length) throw InvalidSpec("lag_echo: need 1 <= lag < T");
            break;
        default:
            break;
    }
}

std::size_t GeneratorSpec::input_dim() const {
    switch (kind) {
        case GeneratorKind::timer: return 3;
        case GeneratorKind::lag_echo: return num_classes;
        default: return 1;
    }
}

std::size_t GeneratorSpec::output_dim() const {
    return kind == GeneratorKind::lag_echo ? num_classes : 2;
}

std::string GeneratorSpec::name() const {
    switch (kind) {
        case GeneratorKind::sum_threshold: return "sum_threshold";
        case GeneratorKind::timer: return "timer";
        case GeneratorKind::ar2: return "ar2";
        case GeneratorKind::lag_echo: return "lag_echo";
    }
    return "?";
}

GeneratorSpec GeneratorSpec::parse(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ParseError(std::string("generator spec: ") + e.what());
    }
    GeneratorSpec spec;
    const std::string name = j.value("generator", "");
    if (name == "sum_threshold")
        spec.kind = GeneratorKind::sum_threshold;
    else if (name == "timer")
        spec.kind = GeneratorKind::timer;
    else if (name == "ar2")
        spec.kind = GeneratorKind::ar2;
    else if (name == "lag_echo")
        spec.kind = GeneratorKind::lag_echo;
    else
        throw InvalidSpec("unknown generator: '" + name + "'");
    spec.length = j.value("length", std::size_t{1});
    spec.timer_max = j.value("timer_max", std::size_t{1});
    spec.on_fraction = j.value("on_fraction", 0.08);
    spec.ar_a1 = j.value("ar_a1", -0.6);
    spec.ar_a2 = j.value("ar_a2", 0.3);
    spec.num_classes = j.value("num_classes", std::size_t{2});
    spec.lag = j.value("lag", std::size_t{1});
    spec.validate();
    return spec;
}

std::string GeneratorSpec::to_json() const {
    json j;
    j["generator"] = name();
    j["length"] = length;
    switch (kind) {
        case GeneratorKind::timer:
            j["timer_max"] = timer_max;
            j["on_fraction"] = on_fraction;
            break;
        case GeneratorKind::ar2:
            j["ar_a1"] = ar_a1;
            j["ar_a2"] = ar_a2;
            break;
        case GeneratorKind::lag_echo:
            j["num_classes"] = num_classes;
            j["lag"] = lag;
            break;
        default:
            break;
    }
    return j.dump();
}

DenseMatrix sum_threshold_labels(const std::vector<double>& x) {
    const std::size_t t_len = x.size();
    DenseMatrix y(2, t_len);
    double running = 0.0;
    for (std::size_t t = 0; t < t_len; ++t) {
        running += x[t];
        if (running > 0.0)
            y(0, t) = 1.0;
        else
            y(1, t) = 1.0;
    }
    return y;
}

TimerLabels timer_labels(const std::vector<int>& timer_values, const std::vector<int>& switches) {
    if (timer_values.size() != switches.size())
        throw DimensionMismatch("timer_labels: value/switch length mismatch");
    const std::size_t t_len = timer_values.size();
    TimerLabels out;
    out.y = DenseMatrix(2, t_len);
    out.running_timer.resize(t_len);
    int rt = 0;
    for (std::size_t t = 0; t < t_len; ++t) {
        rt = std::max(rt - 1, 0);
        if (switches[t]) rt = std::max(rt, timer_values[t]);
        out.running_timer[t] = rt;
        if (rt > 0)
            out.y(0, t) = 1.0;
        else
            out.y(1, t) = 1.0;
    }
    return out;
}

SequenceDataset generate(const GeneratorSpec& spec, std::size_t m, std::uint64_t seed) {
    spec.validate();
    const std::size_t t_len = spec.length;
    const std::size_t i_dim = spec.input_dim();
    const std::size_t o_dim = spec.output_dim();

    SequenceDataset ds;
    ds.x.assign(t_len, DenseMatrix(m, i_dim));
    ds.y.assign(t_len, DenseMatrix(m, o_dim));
    ds.meta = {spec.name(), spec.to_json(), seed, m, i_dim, o_dim, t_len};

    // One stream, consumed sample-major / time-minor.
    Rng rng(seed);

    for (std::size_t s = 0; s < m; ++s) {
        switch (spec.kind) {
            case GeneratorKind::sum_threshold: {
                std::vector<double> x(t_len);
                for (std::size_t t = 0; t < t_len; ++t) x[t] = rng.uniform(-1.0, 1.0);
                const DenseMatrix y = sum_threshold_labels(x);
                for (std::size_t t = 0; t < t_len; ++t) {
                    ds.x[t](s, 0) = x[t];
                    ds.y[t](s, 0) = y(0, t);
                    ds.y[t](s, 1) = y(1, t);
                }
                break;
            }
            case GeneratorKind::timer: {
                // Per timestep: timer value first, then the switch.
                std::vector<int> values(t_len), switches(t_len);
                for (std::size_t t = 0; t < t_len; ++t) {
                    values[t] = 1 + static_cast<int>(rng.uniform_int(spec.timer_max));
                    switches[t] = rng.uniform() < spec.on_fraction ? 1 : 0;
                }
                const TimerLabels labels = timer_labels(values, switches);
                for (std::size_t t = 0; t < t_len; ++t) {
                    ds.x[t](s, 0) = static_cast<double>(values[t]);
                    ds.x[t](s, 1) = static_cast<double>(switches[t]);
                    ds.x[t](s, 2) = 1.0 - static_cast<double>(switches[t]);
                    ds.y[t](s, 0) = labels.y(0, t);
                    ds.y[t](s, 1) = labels.y(1, t);
                }
                break;
            }
            case GeneratorKind::ar2: {
                double prev1 = 0.0, prev2 = 0.0;
                for (std::size_t t = 0; t < t_len; ++t) {
                    const double xt = spec.ar_a1 * prev1 + spec.ar_a2 * prev2 + rng.normal();
                    prev2 = prev1;
                    prev1 = xt;
                    ds.x[t](s, 0) = xt;
                    if (xt > 0.0)
                        ds.y[t](s, 0) = 1.0;
                    else
                        ds.y[t](s, 1) = 1.0;
                }
                break;
            }
            case GeneratorKind::lag_echo: {
                // All T input classes first, then the lag-prefix labels.
                std::vector<std::size_t> cls(t_len);
                for (std::size_t t = 0; t < t_len; ++t) {
                    cls[t] = static_cast<std::size_t>(rng.uniform_int(spec.num_classes));
                    ds.x[t](s, cls[t]) = 1.0;
                }
                for (std::size_t t = 0; t < spec.lag; ++t) {
                    const auto c = static_cast<std::size_t>(rng.uniform_int(spec.num_classes));
                    ds.y[t](s, c) = 1.0;
                }
                for (std::size_t t = spec.lag; t < t_len; ++t) ds.y[t](s, cls[t - spec.lag]) = 1.0;
                break;
            }
        }
    }
    return ds;
}

std::string serialize(const SequenceDataset& ds) {
    json j;
    j["meta"] = {{"generator", ds.meta.generator}, {"params", json::parse(ds.meta.params_json)},
                 {"seed", ds.meta.seed},           {"m", ds.meta.m},
                 {"i", ds.meta.i},                 {"o", ds.meta.o},
                 {"T", ds.meta.T}};
    // Nested [m][i][T] and [m][o][T] arrays.
    json jx = json::array();
    json jy = json::array();
    for (std::size_t s = 0; s < ds.meta.m; ++s) {
        json xs = json::array();
        for (std::size_t f = 0; f < ds.meta.i; ++f) {
            json row = json::array();
            for (std::size_t t = 0; t < ds.meta.T; ++t) row.push_back(ds.x[t](s, f));
            xs.push_back(std::move(row));
        }
        jx.push_back(std::move(xs));
        json ys = json::array();
        for (std::size_t f = 0; f < ds.meta.o; ++f) {
            json row = json::array();
            for (std::size_t t = 0; t < ds.meta.T; ++t) row.push_back(ds.y[t](s, f));
            ys.push_back(std::move(row));
        }
        jy.push_back(std::move(ys));
    }
    j["x"] = std::move(jx);
    j["y"] = std::move(jy);
    return j.dump();
}

SequenceDataset deserialize(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ParseError(std::string("dataset: ") + e.what());
    }
    try {
        SequenceDataset ds;
        const json& meta = j.at("meta");
        ds.meta.generator = meta.at("generator").get<std::string>();
        ds.meta.params_json = meta.at("params").dump();
        ds.meta.seed = meta.at("seed").get<std::uint64_t>();
        ds.meta.m = meta.at("m").get<std::size_t>();
        ds.meta.i = meta.at("i").get<std::size_t>();
        ds.meta.o = meta.at("o").get<std::size_t>();
        ds.meta.T = meta.at("T").get<std::size_t>();

        const json& jx = j.at("x");
        const json& jy = j.at("y");
        if (jx.size() != ds.meta.m || jy.size() != ds.meta.m)
            throw ParseError("dataset: sample count does not match meta.m");
        ds.x.assign(ds.meta.T, DenseMatrix(ds.meta.m, ds.meta.i));
        ds.y.assign(ds.meta.T, DenseMatrix(ds.meta.m, ds.meta.o));
        for (std::size_t s = 0; s < ds.meta.m; ++s) {
            if (jx[s].size() != ds.meta.i || jy[s].size() != ds.meta.o)
                throw ParseError("dataset: feature count mismatch at sample " + std::to_string(s));
            for (std::size_t f = 0; f < ds.meta.i; ++f) {
                if (jx[s][f].size() != ds.meta.T)
                    throw ParseError("dataset: x length mismatch at sample " + std::to_string(s));
                for (std::size_t t = 0; t < ds.meta.T; ++t)
                    ds.x[t](s, f) = jx[s][f][t].get<double>();
            }
            for (std::size_t f = 0; f < ds.meta.o; ++f) {
                if (jy[s][f].size() != ds.meta.T)
                    throw ParseError("dataset: y length mismatch at sample " + std::to_string(s));
                for (std::size_t t = 0; t < ds.meta.T; ++t)
                    ds.y[t](s, f) = jy[s][f][t].get<double>();
            }
        }
        // One-hot check per (sample, timestep).
        for (std::size_t t = 0; t < ds.meta.T; ++t) {
            for (std::size_t s = 0; s < ds.meta.m; ++s) {
                double sum = 0.0;
                for (std::size_t f = 0; f < ds.meta.o; ++f) sum += ds.y[t](s, f);
                if (sum != 1.0)
                    throw ParseError("dataset: label not one-hot at sample " + std::to_string(s) +
                                     ", t=" + std::to_string(t));
            }
        }
        return ds;
    } catch (const json::exception& e) {
        throw ParseError(std::string("dataset: ") + e.what());
    }
}

double calibrate_on_fraction(std::size_t timer_max, std::size_t length) {
    constexpr std::size_t kSamples = 10000;
    constexpr std::uint64_t kSeed = 0x7f4a7c15;

    auto on_share = [&](double fraction) {
        Rng rng(kSeed);
        std::size_t on = 0;
        std::vector<int> values(length), switches(length);
        for (std::size_t s = 0; s < kSamples; ++s) {
            for (std::size_t t = 0; t < length; ++t) {
                values[t] = 1 + static_cast<int>(rng.uniform_int(timer_max));
                switches[t] = rng.uniform() < fraction ? 1 : 0;
            }
            const TimerLabels labels = timer_labels(values, switches);
            for (std::size_t t = 0; t < length; ++t)
                if (labels.y(0, t) == 1.0) ++on;
        }
        return static_cast<double>(on) / static_cast<double>(kSamples * length);
    };

    double lo = 0.0, hi = 1.0;
    for (int it = 0; it < 40; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double share = on_share(mid);
        if (share >= 0.48 && share <= 0.52) return mid;
        if (share < 0.5)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace liftseq
