#pragma once

#include <cmath>
#include <stdexcept>

#include "onflow/simplex.hpp"

namespace onflow {

/// Proportional transaction-fee model: rate xi per unit of value traded,
/// smoothing width a for the differentiable |.| surrogate.
struct FeeSchedule {
    double xi = 0.0;
    double a = 1e-6;

    FeeSchedule() = default;
    explicit FeeSchedule(double xi_, double a_ = 1e-6) : xi(xi_), a(a_) {
        if (!(xi >= 0.0 && xi < 0.5)) throw std::invalid_argument("FeeSchedule: need 0 <= xi < 0.5");
        if (!(a > 0.0)) throw std::invalid_argument("FeeSchedule: need a > 0");
    }
};

/// Overnight drift of an allocation under price relatives f:
/// pi_plus = pi .* f / <pi, f>.
inline Allocation drifted_allocation(const Allocation& pi, const Vec& f) {
    if (f.size() != pi.size()) throw std::invalid_argument("drifted_allocation: dimension mismatch");
    for (double x : f)
        if (!(x > 0.0)) throw std::invalid_argument("drifted_allocation: relatives must be > 0");
    double denom = dot(pi.weights(), f);
    Vec out(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) out[i] = pi[i] * f[i] / denom;
    return Allocation(std::move(out));
}

/// Smooth surrogate for |x|: sqrt(x^2 + a^2) - a. Nonnegative, below |x|,
/// differentiable everywhere.
inline double huber_abs(double x, double a) {
    if (!(a > 0.0)) throw std::invalid_argument("huber_abs: need a > 0");
    return std::sqrt(x * x + a * a) - a;
}

inline double huber_abs_derivative(double x, double a) {
    return x / std::sqrt(x * x + a * a);
}

/// Smoothed fee penalty G(H) = xi * sum_k huber_abs(softmax(H)(k) - pi_plus(k), a).
inline double transaction_loss(const LogitVector& h, const Allocation& pi_plus,
                               const FeeSchedule& fees) {
    if (h.size() != pi_plus.size())
        throw std::invalid_argument("transaction_loss: dimension mismatch");
    if (fees.xi == 0.0) return 0.0;
    Allocation pi = softmax(h);
    double sum = 0.0;
    for (std::size_t i = 0; i < pi.size(); ++i) sum += huber_abs(pi[i] - pi_plus[i], fees.a);
    return fees.xi * sum;
}

/// Gradient of transaction_loss in H. Chain rule through softmax:
/// grad = xi * h(pi) g with g_k the huber_abs derivative at pi(k) - pi_plus(k),
/// so the entries sum to zero.
inline Vec transaction_loss_grad(const LogitVector& h, const Allocation& pi_plus,
                                 const FeeSchedule& fees) {
    if (h.size() != pi_plus.size())
        throw std::invalid_argument("transaction_loss_grad: dimension mismatch");
    if (fees.xi == 0.0) return Vec(h.size(), 0.0);
    Allocation pi = softmax(h);
    Vec g(pi.size());
    for (std::size_t i = 0; i < pi.size(); ++i)
        g[i] = fees.xi * huber_abs_derivative(pi[i] - pi_plus[i], fees.a);
    return jacobian_apply(pi, g);
}

/// Exact multiplicative wealth factor of a rebalancing trade:
/// 1 - xi * sum_k |pi_from(k) - pi_to(k)|. Positive because the L1 diameter
/// of the simplex is 2 and xi < 1/2.
inline double rebalance_factor(const Allocation& pi_from, const Allocation& pi_to, double xi) {
    if (!(xi >= 0.0 && xi < 0.5)) throw std::invalid_argument("rebalance_factor: need 0 <= xi < 0.5");
    if (pi_from.size() != pi_to.size())
        throw std::invalid_argument("rebalance_factor: dimension mismatch");
    return 1.0 - xi * l1_distance(pi_from.weights(), pi_to.weights());
}

}  // namespace onflow
