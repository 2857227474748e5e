#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "onflow/engine.hpp"
#include "onflow/errors.hpp"
#include "onflow/market_data.hpp"
#include "onflow/simplex.hpp"

namespace onflow {

namespace detail {

// Simplex grid with `per_edge` points per edge, K = 2 or 3.
inline std::vector<Allocation> simplex_grid(std::size_t k, int per_edge) {
    if (per_edge < 2) throw std::invalid_argument("simplex grid: resolution must be >= 2");
    if (k != 2 && k != 3)
        throw UnsupportedDimensionError("simplex grid: only K = 2 or K = 3 supported");
    std::vector<Allocation> grid;
    const double denom = static_cast<double>(per_edge - 1);
    if (k == 2) {
        grid.reserve(static_cast<std::size_t>(per_edge));
        for (int i = 0; i < per_edge; ++i) {
            double x = static_cast<double>(i) / denom;
            grid.push_back(Allocation(Vec{x, 1.0 - x}));
        }
    } else {
        for (int i = 0; i < per_edge; ++i)
            for (int j = 0; j + i < per_edge; ++j) {
                double x = static_cast<double>(i) / denom;
                double y = static_cast<double>(j) / denom;
                double z = static_cast<double>(per_edge - 1 - i - j) / denom;
                grid.push_back(Allocation(Vec{x, y, z}));
            }
    }
    return grid;
}

}  // namespace detail

/// Constant rebalanced portfolio: the target allocation never changes.
inline std::vector<Allocation> crp_allocate(const PriceRelativeSeries& rel, const Allocation& pi) {
    if (pi.size() != rel.assets()) throw std::invalid_argument("crp_allocate: dimension mismatch");
    return std::vector<Allocation>(rel.steps() + 1, pi);
}

/// Fee-free terminal wealth of a CRP, the quantity the hindsight search and
/// the universal portfolio both weigh.
inline double crp_final_wealth(const PriceRelativeSeries& rel, const Allocation& pi) {
    double w = 1.0;
    for (const Vec& f : rel.relatives) w *= dot(pi.weights(), f);
    return w;
}

/// Grid argmax of fee-free terminal CRP wealth (K <= 3).
inline std::pair<Allocation, double> best_crp_hindsight(const PriceRelativeSeries& rel,
                                                        int resolution) {
    std::vector<Allocation> grid = detail::simplex_grid(rel.assets(), resolution);
    const Allocation* best = &grid.front();
    double best_wealth = -1.0;
    for (const Allocation& pi : grid) {
        double w = crp_final_wealth(rel, pi);
        if (w > best_wealth) {
            best_wealth = w;
            best = &pi;
        }
    }
    return {*best, best_wealth};
}

/// Exponentiated-gradient strategy: multiplicative update
/// pi_{t+1}(k) ~ pi_t(k) * exp(eta * f_t(k) / <pi_t, f_t>), started uniform.
inline std::vector<Allocation> eg_allocate(const PriceRelativeSeries& rel, double eta) {
    if (!(eta > 0.0)) throw std::invalid_argument("eg_allocate: eta must be > 0");
    const std::size_t k = rel.assets();
    std::vector<Allocation> out;
    out.reserve(rel.steps() + 1);
    out.push_back(Allocation::uniform(k));
    for (std::size_t t = 0; t < rel.steps(); ++t) {
        const Vec& f = rel.row(t);
        const Allocation& pi = out.back();
        double pf = dot(pi.weights(), f);
        Vec next(k);
        double sum = 0.0;
        for (std::size_t i = 0; i < k; ++i) {
            next[i] = pi[i] * std::exp(eta * f[i] / pf);
            sum += next[i];
        }
        for (double& x : next) x /= sum;
        out.push_back(Allocation(std::move(next)));
    }
    return out;
}

/// Cover's universal portfolio on a simplex grid: the allocation is the
/// CRP-wealth-weighted average of the grid points, wealths updated
/// incrementally (O(grid) per step). Its fee-free terminal wealth equals the
/// grid average of CRP terminal wealths exactly.
inline std::vector<Allocation> universal_allocate(const PriceRelativeSeries& rel, int grid_m) {
    std::vector<Allocation> grid = detail::simplex_grid(rel.assets(), grid_m);
    const std::size_t k = rel.assets();
    const std::size_t m = grid.size();
    Vec wealth(m, 1.0);

    auto weighted_mean = [&]() {
        Vec acc(k, 0.0);
        double total = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
            total += wealth[j];
            for (std::size_t i = 0; i < k; ++i) acc[i] += wealth[j] * grid[j][i];
        }
        for (double& x : acc) x /= total;
        return Allocation(std::move(acc));
    };

    std::vector<Allocation> out;
    out.reserve(rel.steps() + 1);
    out.push_back(weighted_mean());  // flat prior: the grid centroid (uniform)
    for (std::size_t t = 0; t < rel.steps(); ++t) {
        const Vec& f = rel.row(t);
        for (std::size_t j = 0; j < m; ++j) wealth[j] *= dot(grid[j].weights(), f);
        out.push_back(weighted_mean());
    }
    return out;
}

/// Buy and hold: the target is always the drifted allocation, so the
/// backtest never trades and turnover is exactly zero.
inline std::vector<Allocation> buy_and_hold_allocate(const PriceRelativeSeries& rel,
                                                     const Allocation& initial) {
    if (initial.size() != rel.assets())
        throw std::invalid_argument("buy_and_hold_allocate: dimension mismatch");
    std::vector<Allocation> out;
    out.reserve(rel.steps() + 1);
    out.push_back(initial);
    for (std::size_t t = 0; t < rel.steps(); ++t)
        out.push_back(drifted_allocation(out.back(), rel.row(t)));
    return out;
}

/// Unified strategy description for the CLI and comparison harness.
struct StrategySpec {
    enum class Kind { buy_and_hold, crp, best_crp, eg, universal, onflow };

    Kind kind = Kind::onflow;
    std::string label;
    std::optional<int> asset;              // buy_and_hold on one asset
    std::optional<Vec> weights;            // buy_and_hold/crp start weights
    int resolution = 1000;                 // best_crp / universal grid
    double eta = 0.05;                     // eg
    OnflowConfig onflow;

    static StrategySpec buy_and_hold_asset(int index) {
        StrategySpec s;
        s.kind = Kind::buy_and_hold;
        s.asset = index;
        return s;
    }
};

inline std::vector<Allocation> run_strategy(const StrategySpec& spec,
                                            const PriceRelativeSeries& rel) {
    const std::size_t k = rel.assets();
    switch (spec.kind) {
        case StrategySpec::Kind::buy_and_hold: {
            Allocation init = spec.weights ? Allocation(*spec.weights)
                                           : Allocation::uniform(k);
            if (spec.asset) {
                if (*spec.asset < 0 || static_cast<std::size_t>(*spec.asset) >= k)
                    throw std::invalid_argument("buy_and_hold: asset index out of range");
                Vec w(k, 0.0);
                w[static_cast<std::size_t>(*spec.asset)] = 1.0;
                init = Allocation(std::move(w));
            }
            return buy_and_hold_allocate(rel, init);
        }
        case StrategySpec::Kind::crp: {
            Allocation pi = spec.weights ? Allocation(*spec.weights) : Allocation::uniform(k);
            return crp_allocate(rel, pi);
        }
        case StrategySpec::Kind::best_crp:
            return crp_allocate(rel, best_crp_hindsight(rel, spec.resolution).first);
        case StrategySpec::Kind::eg:
            return eg_allocate(rel, spec.eta);
        case StrategySpec::Kind::universal:
            return universal_allocate(rel, spec.resolution);
        case StrategySpec::Kind::onflow:
            return onflow_allocate(rel, spec.onflow);
    }
    throw std::logic_error("run_strategy: unknown strategy kind");
}

}  // namespace onflow
