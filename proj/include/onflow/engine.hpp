#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "onflow/cost_model.hpp"
#include "onflow/errors.hpp"
#include "onflow/market_data.hpp"
#include "onflow/simplex.hpp"

namespace onflow {

enum class OdeMethod { rk4, euler };

struct OnflowConfig {
    double tau = 0.05;                // numerical time integrated per trading step
    FeeSchedule fees;
    int substeps = 10;                // integrator steps per trading step
    OdeMethod method = OdeMethod::rk4;
    int batch = 1;                    // B: trading steps per logit update

    void validate() const {
        if (!(tau > 0.0)) throw std::invalid_argument("OnflowConfig: tau must be > 0");
        if (substeps < 1) throw std::invalid_argument("OnflowConfig: substeps must be >= 1");
        if (batch < 1) throw std::invalid_argument("OnflowConfig: batch must be >= 1");
    }
};

struct OnflowState {
    LogitVector logits;
    long step = 1;
};

/// Per-step reward F(H) = ln <softmax(H), f>.
inline double reward_log_return(const LogitVector& h, const Vec& f) {
    if (f.size() != h.size()) throw std::invalid_argument("reward_log_return: dimension mismatch");
    for (double x : f)
        if (!(x > 0.0)) throw std::invalid_argument("reward_log_return: relatives must be > 0");
    return std::log(dot(softmax(h).weights(), f));
}

namespace detail {

// Right-hand side of the per-step gradient flow with the drift term averaged
// over a batch of relatives:
//   rhs = (1/B) sum_i pi .* f_i / <pi, f_i>  -  pi  -  grad_H G(H).
// The single-relative case is the ODE the ascent solves each trading step.
inline Vec onflow_rhs_batched(const LogitVector& h, std::span<const Vec> fs,
                              const Allocation& pi_plus, const FeeSchedule& fees) {
    Allocation pi = softmax(h);
    const std::size_t k = pi.size();
    Vec rhs(k, 0.0);
    for (const Vec& f : fs) {
        double pf = dot(pi.weights(), f);
        for (std::size_t i = 0; i < k; ++i) rhs[i] += pi[i] * f[i] / pf;
    }
    const double inv_b = 1.0 / static_cast<double>(fs.size());
    for (std::size_t i = 0; i < k; ++i) rhs[i] = rhs[i] * inv_b - pi[i];
    if (fees.xi != 0.0) {
        Vec g = transaction_loss_grad(h, pi_plus, fees);
        for (std::size_t i = 0; i < k; ++i) rhs[i] -= g[i];
    }
    return rhs;
}

constexpr double logit_guard = 1e3;

inline void check_logits(const Vec& h, long trading_step) {
    for (double x : h) {
        if (!std::isfinite(x) || std::abs(x) > logit_guard)
            throw DivergenceError("onflow: logits diverged at trading step " +
                                  std::to_string(trading_step));
    }
}

// Fixed-step integration of dH/du = rhs(H) over [0, tau]; pi_plus and the
// relatives stay frozen for the whole solve.
inline Vec integrate_logits(Vec h, std::span<const Vec> fs, const Allocation& pi_plus,
                            const OnflowConfig& cfg, long trading_step) {
    check_logits(h, trading_step);
    const double dt = cfg.tau / static_cast<double>(cfg.substeps);
    const std::size_t k = h.size();
    auto rhs_at = [&](const Vec& x) {
        return onflow_rhs_batched(LogitVector(x), fs, pi_plus, cfg.fees);
    };
    for (int s = 0; s < cfg.substeps; ++s) {
        if (cfg.method == OdeMethod::euler) {
            Vec k1 = rhs_at(h);
            for (std::size_t i = 0; i < k; ++i) h[i] += dt * k1[i];
        } else {
            Vec k1 = rhs_at(h);
            Vec x(k);
            for (std::size_t i = 0; i < k; ++i) x[i] = h[i] + 0.5 * dt * k1[i];
            Vec k2 = rhs_at(x);
            for (std::size_t i = 0; i < k; ++i) x[i] = h[i] + 0.5 * dt * k2[i];
            Vec k3 = rhs_at(x);
            for (std::size_t i = 0; i < k; ++i) x[i] = h[i] + dt * k3[i];
            Vec k4 = rhs_at(x);
            for (std::size_t i = 0; i < k; ++i)
                h[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        check_logits(h, trading_step);
    }
    return h;
}

}  // namespace detail

/// Gradient of the per-step objective F(H) - G(H) in H. The drift term is
/// pi .* f / <pi, f> - pi; the fee term enters through transaction_loss_grad.
/// Entries sum to zero.
inline Vec onflow_rhs(const LogitVector& h, const Vec& f, const Allocation& pi_plus,
                      const FeeSchedule& fees) {
    if (f.size() != h.size() || pi_plus.size() != h.size())
        throw std::invalid_argument("onflow_rhs: dimension mismatch");
    for (double x : f)
        if (!(x > 0.0)) throw std::invalid_argument("onflow_rhs: relatives must be > 0");
    return detail::onflow_rhs_batched(h, std::span<const Vec>(&f, 1), pi_plus, fees);
}

/// One trading step: freeze pi_plus = drift(softmax(H_t), f), integrate the
/// flow over [0, tau] with the configured fixed-step method, return H_{t+1}.
inline OnflowState integrate_step(const OnflowState& state, const Vec& f,
                                  const OnflowConfig& cfg) {
    cfg.validate();
    if (f.size() != state.logits.size())
        throw std::invalid_argument("integrate_step: dimension mismatch");
    for (double x : f)
        if (!(x > 0.0)) throw std::invalid_argument("integrate_step: relatives must be > 0");
    Allocation pi_plus = drifted_allocation(softmax(state.logits), f);
    Vec h = detail::integrate_logits(state.logits.values(), std::span<const Vec>(&f, 1),
                                     pi_plus, cfg, state.step);
    return OnflowState{LogitVector(std::move(h)), state.step + 1};
}

/// Full allocation loop over a relative series. Returns T+1 allocations,
/// the first being uniform (H_1 = 0); the allocation stored at index t only
/// depends on relatives before index t.
///
/// With batch B > 1 the drift term is averaged over the last B relatives and
/// the logits move only on every B-th step; the fee term uses the drifted
/// allocation of the update instant. A trailing partial batch makes no update.
inline std::vector<Allocation> onflow_allocate(const PriceRelativeSeries& rel,
                                               const OnflowConfig& cfg) {
    cfg.validate();
    if (rel.steps() < 1) throw std::invalid_argument("onflow_allocate: need T >= 1");
    const std::size_t k = rel.assets();

    std::vector<Allocation> out;
    out.reserve(rel.steps() + 1);
    Vec h(k, 0.0);
    out.push_back(softmax(LogitVector(h)));

    std::vector<Vec> buffer;
    buffer.reserve(static_cast<std::size_t>(cfg.batch));
    for (std::size_t t = 0; t < rel.steps(); ++t) {
        const Vec& f = rel.row(t);
        for (double x : f)
            if (!(x > 0.0))
                throw std::invalid_argument("onflow_allocate: nonpositive relative at step " +
                                            std::to_string(t + 1));
        buffer.push_back(f);
        if (buffer.size() == static_cast<std::size_t>(cfg.batch)) {
            Allocation pi_plus = drifted_allocation(out.back(), f);
            h = detail::integrate_logits(std::move(h), std::span<const Vec>(buffer),
                                         pi_plus, cfg, static_cast<long>(t + 1));
            buffer.clear();
        }
        out.push_back(softmax(LogitVector(h)));
    }
    return out;
}

}  // namespace onflow
