// Command-line surface for the onflow library: dataset statistics, fee-aware
// strategy comparisons, the log-normal convergence laboratory, and seeded
// simulation runs. Outputs are plot-ready long-format CSV plus JSON summaries;
// identical inputs produce byte-identical files.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "onflow/onflow.hpp"

using json = nlohmann::ordered_json;

namespace {

constexpr int exit_ok = 0;
constexpr int exit_usage = 1;
constexpr int exit_data = 2;
constexpr int exit_divergence = 3;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep)) out.push_back(item);
    return out;
}

onflow::Vec parse_doubles(const std::string& s, char sep = ',') {
    onflow::Vec out;
    for (const std::string& item : split(s, sep)) {
        try {
            std::size_t used = 0;
            double v = std::stod(item, &used);
            if (used != item.size()) throw std::invalid_argument(item);
            out.push_back(v);
        } catch (const std::exception&) {
            throw UsageError("cannot parse number '" + item + "' in '" + s + "'");
        }
    }
    if (out.empty()) throw UsageError("empty number list '" + s + "'");
    return out;
}

// Table 1 pair presets
const std::map<int, std::pair<std::string, std::string>> pair_presets = {
    {1, {"comme", "kinar"}},
    {2, {"iroqu", "kinar"}},
    {3, {"coke", "ibm"}},
    {4, {"comme", "meico"}},
};

struct DataOptions {
    std::string path;
    std::string format = "relatives";
    int pair = 0;
    std::string assets;

    std::vector<std::string> asset_list() const {
        if (pair != 0) {
            auto it = pair_presets.find(pair);
            if (it == pair_presets.end())
                throw UsageError("unknown pair " + std::to_string(pair) + " (presets: 1-4)");
            return {it->second.first, it->second.second};
        }
        if (!assets.empty()) return split(assets, ',');
        return {};
    }

    onflow::PriceRelativeSeries load() const {
        if (path.empty()) throw UsageError("--data is required");
        onflow::CsvFormat f = onflow::CsvFormat::relatives;
        if (format == "prices")
            f = onflow::CsvFormat::prices;
        else if (format != "relatives")
            throw UsageError("--format must be 'prices' or 'relatives'");
        return onflow::load_market_csv(path, f, asset_list());
    }
};

void add_data_flags(CLI::App* cmd, DataOptions& data) {
    cmd->add_option("--data", data.path, "CSV file of prices or price relatives");
    cmd->add_option("--format", data.format, "Input layout: prices|relatives (default relatives)");
    cmd->add_option("--pair", data.pair, "Benchmark pair preset 1-4");
    cmd->add_option("--assets", data.assets, "Comma-separated asset names");
}

struct StrategyDefaults {
    double fee = 0.0;
    std::optional<double> tau;
    double eta = 0.05;
    int grid = 1000;
    int substeps = 10;
    std::string method = "rk4";
    int batch = 1;
};

struct NamedStrategy {
    std::string label;
    onflow::StrategySpec spec;
    json parameters;
};

onflow::OdeMethod parse_method(const std::string& s) {
    if (s == "rk4") return onflow::OdeMethod::rk4;
    if (s == "euler") return onflow::OdeMethod::euler;
    throw UsageError("--method must be 'rk4' or 'euler'");
}

// Strategy grammar: NAME[:key=value,...]. Names: bh, crp, bestcrp, eg, up,
// onflow. Unset keys fall back to the global flag defaults.
NamedStrategy parse_strategy(const std::string& text, const StrategyDefaults& defaults) {
    std::string name = text;
    std::map<std::string, std::string> kv;
    if (auto colon = text.find(':'); colon != std::string::npos) {
        name = text.substr(0, colon);
        for (const std::string& item : split(text.substr(colon + 1), ',')) {
            auto eq = item.find('=');
            if (eq == std::string::npos)
                throw UsageError("strategy parameter '" + item + "' is not key=value");
            kv[item.substr(0, eq)] = item.substr(eq + 1);
        }
    }
    auto take = [&kv](const std::string& key) -> std::optional<std::string> {
        auto it = kv.find(key);
        if (it == kv.end()) return std::nullopt;
        std::string v = it->second;
        kv.erase(it);
        return v;
    };
    auto take_double = [&take](const std::string& key) -> std::optional<double> {
        if (auto s = take(key)) return parse_doubles(*s)[0];
        return std::nullopt;
    };
    auto take_int = [&take](const std::string& key) -> std::optional<int> {
        if (auto s = take(key)) return static_cast<int>(parse_doubles(*s)[0]);
        return std::nullopt;
    };

    NamedStrategy out;
    out.label = text;
    onflow::StrategySpec& spec = out.spec;
    using Kind = onflow::StrategySpec::Kind;

    if (name == "bh" || name == "buyhold") {
        spec.kind = Kind::buy_and_hold;
        if (auto a = take_int("asset")) {
            spec.asset = *a;
            out.parameters["asset"] = *a;
        }
        if (auto w = take("weights")) {
            spec.weights = parse_doubles(*w, '|');
            out.parameters["weights"] = *spec.weights;
        }
    } else if (name == "crp") {
        spec.kind = Kind::crp;
        if (auto w = take("weights")) {
            spec.weights = parse_doubles(*w, '|');
            out.parameters["weights"] = *spec.weights;
        }
    } else if (name == "bestcrp") {
        spec.kind = Kind::best_crp;
        spec.resolution = take_int("grid").value_or(defaults.grid);
        out.parameters["grid"] = spec.resolution;
    } else if (name == "eg") {
        spec.kind = Kind::eg;
        spec.eta = take_double("eta").value_or(defaults.eta);
        out.parameters["eta"] = spec.eta;
    } else if (name == "up" || name == "universal") {
        spec.kind = Kind::universal;
        spec.resolution = take_int("grid").value_or(defaults.grid);
        out.parameters["grid"] = spec.resolution;
    } else if (name == "onflow") {
        spec.kind = Kind::onflow;
        double fallback_tau = defaults.tau.value_or(defaults.fee == 0.0 ? 0.05 : 1.0);
        spec.onflow.tau = take_double("tau").value_or(fallback_tau);
        spec.onflow.fees = onflow::FeeSchedule(defaults.fee, take_double("a").value_or(1e-6));
        spec.onflow.substeps = take_int("substeps").value_or(defaults.substeps);
        spec.onflow.batch = take_int("batch").value_or(defaults.batch);
        std::string method = take("method").value_or(defaults.method);
        spec.onflow.method = parse_method(method);
        out.parameters["tau"] = spec.onflow.tau;
        out.parameters["a"] = spec.onflow.fees.a;
        out.parameters["substeps"] = spec.onflow.substeps;
        out.parameters["batch"] = spec.onflow.batch;
        out.parameters["method"] = method;
    } else {
        throw UsageError("unknown strategy '" + name +
                         "' (expected bh, crp, bestcrp, eg, up, onflow)");
    }
    if (!kv.empty()) throw UsageError("unknown parameter '" + kv.begin()->first + "' for " + name);
    return out;
}

void write_file(const std::string& path, const std::string& contents) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw onflow::DataError(onflow::DataError::Kind::missing_file,
                                      "cannot write file: " + path);
    out << contents;
}

json summary_json(const onflow::BacktestSummary& s) {
    return json{{"final_wealth", s.final_wealth},
                {"total_turnover", s.total_turnover},
                {"mean_daily_turnover", s.mean_daily_turnover},
                {"log_wealth", s.log_wealth}};
}

// ---------------------------------------------------------------- compare --

int run_compare(const DataOptions& data, const StrategyDefaults& defaults,
                const std::vector<std::string>& strategy_texts, const std::string& out_csv,
                const std::string& out_json, bool single_strategy_mode) {
    if (strategy_texts.empty()) throw UsageError("at least one --strategy is required");
    onflow::PriceRelativeSeries rel = data.load();
    onflow::FeeSchedule fees(defaults.fee);

    std::vector<NamedStrategy> strategies;
    for (const std::string& text : strategy_texts)
        strategies.push_back(parse_strategy(text, defaults));

    std::string csv;
    {
        std::string header = "t,strategy,wealth,turnover_cum";
        for (std::size_t i = 0; i < rel.assets(); ++i)
            header += ",pi_" + std::to_string(i + 1);
        csv = header + "\n";
    }

    json strategies_json = json::array();
    bool any_ok = false;
    bool any_diverged = false;
    for (const NamedStrategy& st : strategies) {
        json entry;
        entry["name"] = st.label;
        entry["parameters"] = st.parameters;
        try {
            auto targets = onflow::run_strategy(st.spec, rel);
            onflow::BacktestResult res = onflow::run_backtest(targets, rel, fees);
            for (std::size_t t = 0; t < res.wealth.size(); ++t) {
                csv += std::to_string(t) + "," + st.label + "," + fmt(res.wealth[t]) + "," +
                       fmt(t == 0 ? 0.0 : res.turnover_cum[t - 1]);
                for (std::size_t i = 0; i < rel.assets(); ++i)
                    csv += "," + fmt(res.allocations[t][i]);
                csv += "\n";
            }
            entry["summary"] = summary_json(res.summary);
            any_ok = true;
        } catch (const onflow::DivergenceError& e) {
            entry["error"] = e.what();
            any_diverged = true;
        }
        strategies_json.push_back(entry);
    }

    json out;
    out["command"] = single_strategy_mode ? "backtest" : "compare";
    out["data"] = data.path;
    out["format"] = data.format;
    out["assets"] = rel.names;
    out["fee"] = defaults.fee;
    out["steps"] = rel.steps();
    out["strategies"] = strategies_json;

    if (!out_csv.empty()) write_file(out_csv, csv);
    if (!out_json.empty()) write_file(out_json, out.dump(2) + "\n");
    if (out_csv.empty() && out_json.empty()) std::cout << out.dump(2) << "\n";

    if (single_strategy_mode && any_diverged) return exit_divergence;
    if (!any_ok) return exit_divergence;
    return exit_ok;
}

// ------------------------------------------------------------------ stats --

int run_stats(const DataOptions& data, const std::string& out_json) {
    onflow::PriceRelativeSeries rel = data.load();
    if (rel.assets() != 2) throw UsageError("stats requires exactly two assets (--pair or --assets)");
    double corr = onflow::relative_correlation(rel);
    double perf0 = onflow::buy_and_hold_wealth(rel, 0);
    double perf1 = onflow::buy_and_hold_wealth(rel, 1);

    std::cout << "assets        " << rel.names[0] << " / " << rel.names[1] << "\n"
              << "steps         " << rel.steps() << "\n"
              << "correlation   " << fmt(corr) << "\n"
              << "performance   " << fmt(perf0) << " / " << fmt(perf1) << "\n";

    if (!out_json.empty()) {
        json out;
        out["command"] = "stats";
        out["data"] = data.path;
        out["assets"] = rel.names;
        out["steps"] = rel.steps();
        out["correlation"] = corr;
        out["individual_performance"] = {{rel.names[0], perf0}, {rel.names[1], perf1}};
        write_file(out_json, out.dump(2) + "\n");
    }
    return exit_ok;
}

// ----------------------------------------------------- model construction --

onflow::MarketModel build_model(const std::string& mu_text, const std::string& cov_text,
                                const std::string& vol_text) {
    onflow::Vec mu = parse_doubles(mu_text);
    const auto k = static_cast<Eigen::Index>(mu.size());
    if (cov_text.empty() == vol_text.empty())
        throw UsageError("provide exactly one of --cov or --vol (row-major K*K values)");
    const std::string& matrix_text = cov_text.empty() ? vol_text : cov_text;
    onflow::Vec entries = parse_doubles(matrix_text);
    if (entries.size() != mu.size() * mu.size())
        throw UsageError("matrix needs K*K = " + std::to_string(mu.size() * mu.size()) +
                         " entries, got " + std::to_string(entries.size()));
    Eigen::MatrixXd m(k, k);
    for (Eigen::Index i = 0; i < k; ++i)
        for (Eigen::Index j = 0; j < k; ++j)
            m(i, j) = entries[static_cast<std::size_t>(i * k + j)];
    try {
        return cov_text.empty() ? onflow::MarketModel::from_volatility(std::move(mu), std::move(m))
                                : onflow::MarketModel::from_covariance(std::move(mu), std::move(m));
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
}

// --------------------------------------------------------------- converge --

int run_converge(const std::string& mu_text, const std::string& cov_text,
                 const std::string& vol_text, const std::string& h0_text, double horizon,
                 double dt, long stride, const std::string& out_csv,
                 const std::string& out_json) {
    onflow::MarketModel model = build_model(mu_text, cov_text, vol_text);
    if (!model.positive_definite())
        throw UsageError("converge requires a positive definite covariance");

    onflow::Vec h0(model.assets(), 0.0);
    if (!h0_text.empty()) {
        h0 = parse_doubles(h0_text);
        if (h0.size() != model.assets()) throw UsageError("--h0 needs K entries");
    }

    auto traj = onflow::continuous_flow(model, onflow::LogitVector(h0), horizon, dt, stride);
    onflow::ConvergenceReport rep = onflow::verify_convergence(traj, model);
    onflow::Allocation opt = onflow::optimal_allocation(model);

    bool monotone = true;
    for (std::size_t i = 1; i < traj.size(); ++i)
        if (traj[i].reward < traj[i - 1].reward - 1e-12) monotone = false;

    if (!out_csv.empty()) {
        std::string csv = "t";
        for (std::size_t i = 0; i < model.assets(); ++i) csv += ",pi_" + std::to_string(i + 1);
        csv += ",reward,dist_to_opt\n";
        for (const onflow::FlowSample& s : traj) {
            csv += fmt(s.time);
            for (std::size_t i = 0; i < s.pi.size(); ++i) csv += "," + fmt(s.pi[i]);
            csv += "," + fmt(s.reward) + "," +
                   fmt(onflow::linf_distance(s.pi.weights(), opt.weights())) + "\n";
        }
        write_file(out_csv, csv);
    }

    json verdict;
    verdict["command"] = "converge";
    verdict["horizon"] = horizon;
    verdict["dt"] = dt;
    verdict["converged"] = rep.converged;
    verdict["terminal_motion"] = rep.terminal_motion;
    verdict["terminal"] = rep.terminal;
    verdict["nearest_support"] = rep.nearest_support;
    verdict["nearest_critical"] = rep.nearest_critical;
    verdict["distance_to_critical"] = rep.distance_to_critical;
    verdict["interior"] = rep.interior;
    verdict["optimal"] = opt.weights();
    verdict["distance_to_optimal"] = rep.distance_to_optimal;
    verdict["monotone_reward"] = monotone;
    if (rep.rate_fitted) {
        verdict["rate"] = rep.rate;
        verdict["rate_r_squared"] = rep.rate_r_squared;
    }
    if (!out_json.empty()) write_file(out_json, verdict.dump(2) + "\n");
    if (out_json.empty()) std::cout << verdict.dump(2) << "\n";
    return exit_ok;
}

// --------------------------------------------------------------- simulate --

int run_simulate(const std::string& mu_text, const std::string& cov_text,
                 const std::string& vol_text, long steps, double dt, std::uint64_t seed,
                 const StrategyDefaults& defaults, double tail_fraction,
                 const std::string& out_csv, const std::string& out_json) {
    onflow::MarketModel model = build_model(mu_text, cov_text, vol_text);
    if (steps < 1) throw UsageError("--steps must be >= 1");
    if (!(tail_fraction > 0.0 && tail_fraction <= 1.0))
        throw UsageError("--tail must lie in (0, 1]");

    onflow::PriceRelativeSeries rel = onflow::simulate_lognormal(model, steps, dt, seed);

    onflow::OnflowConfig cfg;
    cfg.tau = defaults.tau.value_or(defaults.fee == 0.0 ? 0.05 : 1.0);
    cfg.fees = onflow::FeeSchedule(defaults.fee);
    cfg.substeps = defaults.substeps;
    cfg.batch = defaults.batch;
    cfg.method = parse_method(defaults.method);
    auto targets = onflow::onflow_allocate(rel, cfg);

    if (!out_csv.empty()) {
        std::string csv = "t";
        for (std::size_t i = 0; i < model.assets(); ++i) csv += ",pi_" + std::to_string(i + 1);
        csv += "\n";
        for (std::size_t t = 0; t < targets.size(); ++t) {
            csv += std::to_string(t);
            for (std::size_t i = 0; i < targets[t].size(); ++i) csv += "," + fmt(targets[t][i]);
            csv += "\n";
        }
        write_file(out_csv, csv);
    }

    // time-averaged tail allocation vs the closed-form optimum
    std::size_t tail_start = targets.size() -
        static_cast<std::size_t>(tail_fraction * static_cast<double>(targets.size()));
    if (tail_start >= targets.size()) tail_start = targets.size() - 1;
    onflow::Vec mean(model.assets(), 0.0);
    for (std::size_t t = tail_start; t < targets.size(); ++t)
        for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += targets[t][i];
    for (double& x : mean) x /= static_cast<double>(targets.size() - tail_start);

    json out;
    out["command"] = "simulate";
    out["steps"] = steps;
    out["dt"] = dt;
    out["seed"] = seed;
    out["tau"] = cfg.tau;
    out["fee"] = defaults.fee;
    out["tail_fraction"] = tail_fraction;
    out["tail_average"] = mean;
    if (model.positive_definite()) {
        onflow::Allocation opt = onflow::optimal_allocation(model);
        out["optimal"] = opt.weights();
        out["linf_distance_to_optimal"] = onflow::linf_distance(mean, opt.weights());
    }
    if (!out_json.empty()) write_file(out_json, out.dump(2) + "\n");
    if (out_json.empty()) std::cout << out.dump(2) << "\n";
    return exit_ok;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Online portfolio allocation: softmax gradient-flow strategy, "
                 "benchmark competitors, fee-aware backtests"};
    app.require_subcommand(1);

    DataOptions data;
    StrategyDefaults defaults;
    std::vector<std::string> strategy_texts;
    std::string out_csv, out_json;
    std::uint64_t seed = 0;

    std::string mu_text, cov_text, vol_text, h0_text;
    double horizon = 100.0, flow_dt = 0.01, sim_dt = 0.01, tail_fraction = 0.5;
    long stride = 1, steps = 10000;
    double tau_flag = -1.0;

    auto add_common = [&](CLI::App* cmd, bool with_strategies) {
        add_data_flags(cmd, data);
        cmd->add_option("--fee", defaults.fee, "Proportional fee rate xi (e.g. 0.02)");
        cmd->add_option("--out", out_csv, "Output CSV path");
        cmd->add_option("--json", out_json, "Output JSON path");
        if (with_strategies) {
            cmd->add_option("--strategy", strategy_texts,
                            "Strategy NAME[:k=v,...]; repeatable. Names: bh, crp, bestcrp, eg, up, onflow");
            cmd->add_option("--tau", tau_flag, "Onflow numerical time per step");
            cmd->add_option("--eta", defaults.eta, "EG learning rate");
            cmd->add_option("--grid", defaults.grid, "Grid resolution for up/bestcrp");
            cmd->add_option("--substeps", defaults.substeps, "ODE substeps per trading step");
            cmd->add_option("--method", defaults.method, "ODE scheme: rk4|euler");
            cmd->add_option("--batch", defaults.batch, "Batch size B");
        }
    };

    CLI::App* stats = app.add_subcommand("stats", "Descriptive statistics of an asset pair");
    add_data_flags(stats, data);
    stats->add_option("--json", out_json, "Output JSON path");

    CLI::App* compare = app.add_subcommand("compare", "Backtest several strategies at one fee level");
    add_common(compare, true);

    CLI::App* backtest = app.add_subcommand("backtest", "Backtest a single strategy");
    add_common(backtest, true);

    CLI::App* converge = app.add_subcommand("converge", "Integrate the true-gradient flow of a log-normal model");
    converge->add_option("--mu", mu_text, "Drift vector, comma-separated")->required();
    converge->add_option("--cov", cov_text, "Covariance, row-major K*K");
    converge->add_option("--vol", vol_text, "Volatility matrix, row-major K*K");
    converge->add_option("--h0", h0_text, "Initial logits (default zeros)");
    converge->add_option("--horizon", horizon, "Integration horizon");
    converge->add_option("--dt", flow_dt, "Integrator step");
    converge->add_option("--stride", stride, "Record every n-th step");
    converge->add_option("--out", out_csv, "Trajectory CSV path");
    converge->add_option("--json", out_json, "Verdict JSON path");

    CLI::App* simulate = app.add_subcommand("simulate", "Run the strategy on simulated log-normal assets");
    simulate->add_option("--mu", mu_text, "Drift vector, comma-separated")->required();
    simulate->add_option("--cov", cov_text, "Covariance, row-major K*K");
    simulate->add_option("--vol", vol_text, "Volatility matrix, row-major K*K");
    simulate->add_option("--steps", steps, "Number of trading steps");
    simulate->add_option("--dt", sim_dt, "Time step of the simulation");
    simulate->add_option("--seed", seed, "RNG seed");
    simulate->add_option("--fee", defaults.fee, "Proportional fee rate xi");
    simulate->add_option("--tau", tau_flag, "Onflow numerical time per step");
    simulate->add_option("--substeps", defaults.substeps, "ODE substeps per trading step");
    simulate->add_option("--method", defaults.method, "ODE scheme: rk4|euler");
    simulate->add_option("--batch", defaults.batch, "Batch size B");
    simulate->add_option("--tail", tail_fraction, "Fraction of the path averaged for the tail report");
    simulate->add_option("--out", out_csv, "Allocation path CSV");
    simulate->add_option("--json", out_json, "Summary JSON path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return exit_usage;
    }

    if (tau_flag > 0.0) defaults.tau = tau_flag;

    try {
        if (stats->parsed()) return run_stats(data, out_json);
        if (compare->parsed())
            return run_compare(data, defaults, strategy_texts, out_csv, out_json, false);
        if (backtest->parsed()) {
            if (strategy_texts.size() != 1)
                throw UsageError("backtest requires exactly one --strategy");
            return run_compare(data, defaults, strategy_texts, out_csv, out_json, true);
        }
        if (converge->parsed())
            return run_converge(mu_text, cov_text, vol_text, h0_text, horizon, flow_dt, stride,
                                out_csv, out_json);
        if (simulate->parsed())
            return run_simulate(mu_text, cov_text, vol_text, steps, sim_dt, seed, defaults,
                                tail_fraction, out_csv, out_json);
        throw UsageError("no command given");
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_usage;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_usage;
    } catch (const onflow::DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return exit_data;
    } catch (const onflow::DegenerateDataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return exit_data;
    } catch (const onflow::DivergenceError& e) {
        std::cerr << "divergence: " << e.what() << "\n";
        return exit_divergence;
    } catch (const onflow::NumericalError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_usage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_usage;
    }
}
