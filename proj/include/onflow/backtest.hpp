#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "onflow/cost_model.hpp"
#include "onflow/market_data.hpp"
#include "onflow/simplex.hpp"

namespace onflow {

struct BacktestSummary {
    double final_wealth = 1.0;
    double total_turnover = 0.0;       // 1.0 = 100% of portfolio value traded
    double mean_daily_turnover = 0.0;
    double log_wealth = 0.0;
};

struct BacktestResult {
    Vec wealth;                        // T+1, wealth[0] = 1
    std::vector<Allocation> allocations;   // T+1 targets
    std::vector<Allocation> drifted;       // T, the pi_{t+} path
    Vec turnover_cum;                  // T, nondecreasing
    BacktestSummary summary;
};

inline BacktestSummary summarize(const BacktestResult& result) {
    BacktestSummary s;
    const std::size_t t_steps = result.wealth.size() - 1;
    s.final_wealth = result.wealth.back();
    s.total_turnover = result.turnover_cum.empty() ? 0.0 : result.turnover_cum.back();
    s.mean_daily_turnover = t_steps ? s.total_turnover / static_cast<double>(t_steps) : 0.0;
    s.log_wealth = std::log(s.final_wealth);
    return s;
}

/// Fee-aware wealth accounting for a target-allocation sequence.
///
/// Day t: hold pi_t = targets[t-1]; wealth multiplies by <pi_t, f_t>; the
/// allocation drifts to pi_{t+}; rebalancing to targets[t] (chosen after
/// seeing f_t) costs the exact factor 1 - xi * sum |pi_{t+} - targets[t]|.
/// targets[0] is assumed in place at t = 0 free of charge.
inline BacktestResult run_backtest(const std::vector<Allocation>& targets,
                                   const PriceRelativeSeries& rel,
                                   const FeeSchedule& fees) {
    const std::size_t t_steps = rel.steps();
    if (targets.size() != t_steps + 1)
        throw std::invalid_argument("run_backtest: need T+1 target allocations");
    const std::size_t k = rel.assets();
    for (const Allocation& a : targets)
        if (a.size() != k) throw std::invalid_argument("run_backtest: allocation dimension mismatch");

    BacktestResult res;
    res.allocations = targets;
    res.wealth.reserve(t_steps + 1);
    res.wealth.push_back(1.0);
    res.drifted.reserve(t_steps);
    res.turnover_cum.reserve(t_steps);

    double turnover = 0.0;
    for (std::size_t t = 0; t < t_steps; ++t) {
        const Allocation& held = targets[t];
        const Vec& f = rel.row(t);
        double gross = dot(held.weights(), f);
        Allocation plus = drifted_allocation(held, f);
        turnover += l1_distance(plus.weights(), targets[t + 1].weights());
        double factor = rebalance_factor(plus, targets[t + 1], fees.xi);
        res.wealth.push_back(res.wealth.back() * gross * factor);
        res.drifted.push_back(std::move(plus));
        res.turnover_cum.push_back(turnover);
    }
    res.summary = summarize(res);
    return res;
}

}  // namespace onflow
