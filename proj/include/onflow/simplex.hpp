#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace onflow {

using Vec = std::vector<double>;

inline bool all_finite(const Vec& v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

inline double dot(const Vec& a, const Vec& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double l1_distance(const Vec& a, const Vec& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
    return s;
}

inline double linf_distance(const Vec& a, const Vec& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

/// A point of the unit simplex: nonnegative weights summing to one.
/// Construction renormalizes when the sum is within 1e-12 of one and
/// rejects anything further off (or any negative entry).
class Allocation {
public:
    static constexpr double sum_tolerance = 1e-12;

    explicit Allocation(Vec w) : w_(std::move(w)) {
        if (w_.empty()) throw std::invalid_argument("Allocation: K must be >= 1");
        double sum = 0.0;
        for (double x : w_) {
            if (!std::isfinite(x) || x < 0.0)
                throw std::invalid_argument("Allocation: entries must be finite and >= 0");
            sum += x;
        }
        if (std::abs(sum - 1.0) > sum_tolerance)
            throw std::invalid_argument("Allocation: weights sum to " + std::to_string(sum) +
                                        ", not 1 within 1e-12");
        for (double& x : w_) x /= sum;
    }

    static Allocation uniform(std::size_t k) {
        return Allocation(Vec(k, 1.0 / static_cast<double>(k)));
    }

    const Vec& weights() const { return w_; }
    double operator[](std::size_t i) const { return w_[i]; }
    std::size_t size() const { return w_.size(); }

private:
    Vec w_;
};

/// Unconstrained logits H; the allocation they induce is softmax(H).
class LogitVector {
public:
    explicit LogitVector(Vec h) : h_(std::move(h)) {
        if (h_.empty()) throw std::invalid_argument("LogitVector: K must be >= 1");
        if (!all_finite(h_)) throw std::invalid_argument("LogitVector: entries must be finite");
    }

    static LogitVector zeros(std::size_t k) { return LogitVector(Vec(k, 0.0)); }

    const Vec& values() const { return h_; }
    double operator[](std::size_t i) const { return h_[i]; }
    std::size_t size() const { return h_.size(); }

private:
    Vec h_;
};

/// softmax(H)(k) = e^{H_k} / sum_l e^{H_l}, stabilized by subtracting max(H).
inline Allocation softmax(const LogitVector& h) {
    const Vec& v = h.values();
    double hmax = *std::max_element(v.begin(), v.end());
    Vec e(v.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        e[i] = std::exp(v[i] - hmax);
        sum += e[i];
    }
    for (double& x : e) x /= sum;
    return Allocation(std::move(e));
}

/// Logits reproducing an interior allocation: H = ln(pi). softmax(logits_of(pi)) == pi
/// up to rounding; requires strictly positive weights.
inline LogitVector logits_of(const Allocation& pi) {
    Vec h(pi.size());
    for (std::size_t i = 0; i < pi.size(); ++i) {
        if (pi[i] <= 0.0) throw std::invalid_argument("logits_of: allocation must be interior");
        h[i] = std::log(pi[i]);
    }
    return LogitVector(std::move(h));
}

/// Action of the softmax Jacobian h(pi) = diag(pi) - pi pi^T on a vector:
/// h(pi) v = pi .* (v - <pi, v>). The result sums to zero.
inline Vec jacobian_apply(const Allocation& pi, const Vec& v) {
    if (v.size() != pi.size())
        throw std::invalid_argument("jacobian_apply: dimension mismatch");
    double mean = dot(pi.weights(), v);
    Vec out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = pi[i] * (v[i] - mean);
    return out;
}

/// Allocation with a bounded short-selling budget: (1+lambda) softmax(H) - lambda/K.
/// Entries sum to one and are bounded below by -lambda/K; not a simplex point
/// in general, hence the plain vector return.
inline Vec leveraged_allocation(const LogitVector& h, double lambda) {
    if (!(lambda >= 0.0)) throw std::invalid_argument("leveraged_allocation: lambda must be >= 0");
    Allocation pi = softmax(h);
    const double k = static_cast<double>(h.size());
    Vec out(h.size());
    for (std::size_t i = 0; i < h.size(); ++i) out[i] = (1.0 + lambda) * pi[i] - lambda / k;
    return out;
}

/// True iff every weight is at least eps away from the boundary.
inline bool is_interior(const Allocation& pi, double eps) {
    if (!(eps > 0.0)) throw std::invalid_argument("is_interior: eps must be > 0");
    return std::all_of(pi.weights().begin(), pi.weights().end(),
                       [eps](double x) { return x >= eps; });
}

}  // namespace onflow
