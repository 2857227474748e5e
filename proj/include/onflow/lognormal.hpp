#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "onflow/errors.hpp"
#include "onflow/market_data.hpp"
#include "onflow/simplex.hpp"

namespace onflow {

/// Log-normal market: dS/S = mu dt + sigma dz with covariance Sigma = sigma^T sigma.
/// Construction accepts positive semidefinite covariances (a zero-volatility
/// market is legal to simulate); operations that invert Sigma demand strict
/// positive definiteness (smallest eigenvalue > 1e-12).
class MarketModel {
public:
    static MarketModel from_volatility(Vec mu, Eigen::MatrixXd sigma) {
        if (sigma.rows() != sigma.cols() ||
            static_cast<std::size_t>(sigma.rows()) != mu.size())
            throw std::invalid_argument("MarketModel: sigma must be K x K");
        Eigen::MatrixXd cov = sigma.transpose() * sigma;
        return MarketModel(std::move(mu), std::move(sigma), std::move(cov));
    }

    static MarketModel from_covariance(Vec mu, Eigen::MatrixXd cov) {
        if (cov.rows() != cov.cols() || static_cast<std::size_t>(cov.rows()) != mu.size())
            throw std::invalid_argument("MarketModel: covariance must be K x K");
        if (!cov.isApprox(cov.transpose(), 1e-10))
            throw std::invalid_argument("MarketModel: covariance must be symmetric");
        // factor: sigma = sqrt(lambda) V^T so that sigma^T sigma = cov
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
        Eigen::VectorXd lam = es.eigenvalues();
        Eigen::MatrixXd sigma = lam.cwiseMax(0.0).cwiseSqrt().asDiagonal() *
                                es.eigenvectors().transpose();
        return MarketModel(std::move(mu), std::move(sigma), std::move(cov));
    }

    std::size_t assets() const { return mu_.size(); }
    const Vec& mu() const { return mu_; }
    const Eigen::MatrixXd& volatility() const { return sigma_; }
    const Eigen::MatrixXd& covariance() const { return cov_; }
    bool positive_definite() const { return min_eig_ > 1e-12; }
    double condition_estimate() const {
        return min_eig_ > 0.0 ? max_eig_ / min_eig_ : std::numeric_limits<double>::infinity();
    }

    void require_positive_definite(const std::string& who) const {
        if (!positive_definite())
            throw std::invalid_argument(who + ": covariance must be positive definite");
    }

    /// Sigma * x for the library's plain vectors.
    Vec cov_apply(const Vec& x) const {
        Eigen::VectorXd v = cov_ * Eigen::Map<const Eigen::VectorXd>(x.data(), x.size());
        return Vec(v.data(), v.data() + v.size());
    }

private:
    MarketModel(Vec mu, Eigen::MatrixXd sigma, Eigen::MatrixXd cov)
        : mu_(std::move(mu)), sigma_(std::move(sigma)), cov_(std::move(cov)) {
        if (mu_.empty()) throw std::invalid_argument("MarketModel: K must be >= 1");
        if (!all_finite(mu_)) throw std::invalid_argument("MarketModel: mu must be finite");
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov_);
        min_eig_ = es.eigenvalues().minCoeff();
        max_eig_ = es.eigenvalues().maxCoeff();
        if (min_eig_ < -1e-9 * std::max(1.0, max_eig_))
            throw std::invalid_argument("MarketModel: covariance is not positive semidefinite");
    }

    Vec mu_;
    Eigen::MatrixXd sigma_;
    Eigen::MatrixXd cov_;
    double min_eig_ = 0.0;
    double max_eig_ = 0.0;
};

/// Exact log-normal stepping: f_t(k) = exp((mu_k - Sigma_kk/2) dt + sqrt(dt) (sigma^T eps)_k)
/// with eps standard normal. Reproducible for a fixed seed.
inline PriceRelativeSeries simulate_lognormal(const MarketModel& model, long steps, double dt,
                                              std::uint64_t seed) {
    if (steps < 1) throw std::invalid_argument("simulate_lognormal: steps must be >= 1");
    if (!(dt > 0.0)) throw std::invalid_argument("simulate_lognormal: dt must be > 0");
    const std::size_t k = model.assets();
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);

    Vec log_drift(k);
    for (std::size_t i = 0; i < k; ++i)
        log_drift[i] = (model.mu()[i] - 0.5 * model.covariance()(i, i)) * dt;
    const double sqrt_dt = std::sqrt(dt);
    const Eigen::MatrixXd sigma_t = model.volatility().transpose();

    PriceRelativeSeries out;
    out.names.reserve(k);
    for (std::size_t i = 0; i < k; ++i) out.names.push_back("asset_" + std::to_string(i + 1));
    out.relatives.reserve(static_cast<std::size_t>(steps));
    Eigen::VectorXd eps(k);
    for (long t = 0; t < steps; ++t) {
        for (std::size_t i = 0; i < k; ++i) eps[static_cast<Eigen::Index>(i)] = gauss(rng);
        Eigen::VectorXd shock = sigma_t * eps;
        Vec row(k);
        for (std::size_t i = 0; i < k; ++i)
            row[i] = std::exp(log_drift[i] + sqrt_dt * shock[static_cast<Eigen::Index>(i)]);
        out.relatives.push_back(std::move(row));
    }
    return out;
}

/// Instantaneous expected log growth R(pi) = <mu, pi> - pi^T Sigma pi / 2.
inline double quadratic_reward(const Vec& pi, const MarketModel& model) {
    if (pi.size() != model.assets()) throw std::invalid_argument("quadratic_reward: dimension mismatch");
    Vec sp = model.cov_apply(pi);
    return dot(model.mu(), pi) - 0.5 * dot(pi, sp);
}

/// The unconstrained maximizer Sigma^{-1} mu.
inline Vec unconstrained_target(const MarketModel& model) {
    model.require_positive_definite("unconstrained_target");
    if (model.condition_estimate() > 1e12)
        throw NumericalError("unconstrained_target: covariance condition estimate exceeds 1e12");
    Eigen::Map<const Eigen::VectorXd> mu(model.mu().data(), model.mu().size());
    Eigen::VectorXd x = model.covariance().ldlt().solve(mu);
    return Vec(x.data(), x.data() + x.size());
}

/// Stationary point of the flow restricted to one support set.
struct CriticalPoint {
    std::vector<int> support;     // 0-based asset indices
    Vec point;                    // zero off-support
    bool in_simplex = false;      // on-support entries all nonnegative
    double reward = 0.0;
    bool degenerate = false;      // singular minor, point meaningless
};

/// Enumerate the stationary points of the true-gradient flow: one per
/// nonempty support L, with on-support entries solving
/// Sigma_LL x = mu_L + c 1 and c fixed by sum(x) = 1.
inline std::vector<CriticalPoint> critical_points(const MarketModel& model) {
    model.require_positive_definite("critical_points");
    const std::size_t k = model.assets();
    if (k > 20) throw std::invalid_argument("critical_points: enumeration supports K <= 20");

    std::vector<CriticalPoint> out;
    out.reserve((1u << k) - 1);
    for (std::uint32_t mask = 1; mask < (1u << k); ++mask) {
        CriticalPoint cp;
        for (std::size_t i = 0; i < k; ++i)
            if (mask & (1u << i)) cp.support.push_back(static_cast<int>(i));
        const Eigen::Index m = static_cast<Eigen::Index>(cp.support.size());

        Eigen::MatrixXd minor(m, m);
        Eigen::VectorXd mu_l(m);
        for (Eigen::Index a = 0; a < m; ++a) {
            mu_l[a] = model.mu()[static_cast<std::size_t>(cp.support[static_cast<std::size_t>(a)])];
            for (Eigen::Index b = 0; b < m; ++b)
                minor(a, b) = model.covariance()(cp.support[static_cast<std::size_t>(a)],
                                                 cp.support[static_cast<std::size_t>(b)]);
        }
        Eigen::LDLT<Eigen::MatrixXd> solver(minor);
        Eigen::VectorXd x = solver.solve(mu_l);
        Eigen::VectorXd y = solver.solve(Eigen::VectorXd::Ones(m));
        double denom = y.sum();
        if (solver.info() != Eigen::Success || !std::isfinite(denom) || denom == 0.0 ||
            !x.allFinite() || !y.allFinite()) {
            cp.degenerate = true;
            cp.point = Vec(k, 0.0);
            cp.reward = std::numeric_limits<double>::quiet_NaN();
            out.push_back(std::move(cp));
            continue;
        }
        double c = (1.0 - x.sum()) / denom;
        cp.point = Vec(k, 0.0);
        bool nonneg = true;
        for (Eigen::Index a = 0; a < m; ++a) {
            double v = x[a] + c * y[a];
            cp.point[static_cast<std::size_t>(cp.support[static_cast<std::size_t>(a)])] = v;
            if (v < -1e-12) nonneg = false;
        }
        cp.in_simplex = nonneg;
        cp.reward = quadratic_reward(cp.point, model);
        out.push_back(std::move(cp));
    }
    return out;
}

/// The log-optimal allocation: the feasible critical point of maximal reward.
inline Allocation optimal_allocation(const MarketModel& model) {
    const CriticalPoint* best = nullptr;
    std::vector<CriticalPoint> points = critical_points(model);
    for (const CriticalPoint& cp : points) {
        if (cp.degenerate || !cp.in_simplex) continue;
        if (!best || cp.reward > best->reward) best = &cp;
    }
    if (!best) throw NumericalError("optimal_allocation: no feasible critical point found");
    Vec w = best->point;
    double sum = 0.0;
    for (double& v : w) {
        if (v < 0.0) v = 0.0;    // clip rounding-level negatives
        sum += v;
    }
    for (double& v : w) v /= sum;
    return Allocation(std::move(w));
}

struct FlowSample {
    double time;
    Allocation pi;
    double reward;
};

/// RK4 trajectory of the true-gradient flow dH/dt = grad_H R(softmax(H)),
/// recorded every `record_stride` steps (the initial and final points always
/// included).
inline std::vector<FlowSample> continuous_flow(const MarketModel& model, const LogitVector& h0,
                                               double horizon, double dt,
                                               long record_stride = 1) {
    if (h0.size() != model.assets()) throw std::invalid_argument("continuous_flow: dimension mismatch");
    if (!(horizon > 0.0) || !(dt > 0.0))
        throw std::invalid_argument("continuous_flow: horizon and dt must be > 0");
    if (record_stride < 1) throw std::invalid_argument("continuous_flow: record_stride must be >= 1");

    const std::size_t k = model.assets();
    auto rhs = [&](const Vec& h) {
        Allocation pi = softmax(LogitVector(h));
        Vec v = model.cov_apply(pi.weights());
        for (std::size_t i = 0; i < k; ++i) v[i] = model.mu()[i] - v[i];
        return jacobian_apply(pi, v);
    };
    auto guard = [](const Vec& h) {
        for (double x : h)
            if (!std::isfinite(x) || std::abs(x) > 1e3)
                throw DivergenceError("continuous_flow: logits diverged");
    };

    const long n_steps = static_cast<long>(std::ceil(horizon / dt - 1e-12));
    std::vector<FlowSample> traj;
    traj.reserve(static_cast<std::size_t>(n_steps / record_stride) + 2);

    Vec h = h0.values();
    Allocation pi0 = softmax(h0);
    double r0 = quadratic_reward(pi0.weights(), model);
    traj.push_back(FlowSample{0.0, std::move(pi0), r0});

    Vec x(k);
    for (long s = 0; s < n_steps; ++s) {
        const double step = std::min(dt, horizon - static_cast<double>(s) * dt);
        Vec k1 = rhs(h);
        for (std::size_t i = 0; i < k; ++i) x[i] = h[i] + 0.5 * step * k1[i];
        Vec k2 = rhs(x);
        for (std::size_t i = 0; i < k; ++i) x[i] = h[i] + 0.5 * step * k2[i];
        Vec k3 = rhs(x);
        for (std::size_t i = 0; i < k; ++i) x[i] = h[i] + step * k3[i];
        Vec k4 = rhs(x);
        for (std::size_t i = 0; i < k; ++i)
            h[i] += step / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        guard(h);
        if ((s + 1) % record_stride == 0 || s + 1 == n_steps) {
            Allocation pi = softmax(LogitVector(h));
            double r = quadratic_reward(pi.weights(), model);
            traj.push_back(FlowSample{std::min(static_cast<double>(s + 1) * dt, horizon),
                                      std::move(pi), r});
        }
    }
    return traj;
}

/// dpi/dt of the flow at an allocation: h(pi) applied twice to Sigma (pi - pi_target),
/// written without pi_dagger as h(pi) [h(pi) (mu - Sigma pi)].
inline Vec flow_velocity(const Allocation& pi, const MarketModel& model) {
    Vec v = model.cov_apply(pi.weights());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = model.mu()[i] - v[i];
    return jacobian_apply(pi, jacobian_apply(pi, v));
}

struct ConvergenceReport {
    bool converged = false;            // terminal motion below 1e-10
    double terminal_motion = 0.0;      // ||dpi/dt|| at the last sample
    Vec terminal;
    std::vector<int> nearest_support;  // support of the nearest critical point
    Vec nearest_critical;
    double distance_to_critical = 0.0;
    bool interior = false;             // every terminal weight >= 1e-6
    double distance_to_optimal = 0.0;  // L-inf distance to optimal_allocation
    bool rate_fitted = false;
    double rate = 0.0;                 // fitted c1 in ||pi_t - pi*|| ~ c0 exp(-c1 t)
    double rate_r_squared = 0.0;
};

/// Inspect a flow trajectory: locate the nearest critical point, flag
/// interior terminals, and for interior runs fit the exponential decay of
/// ||pi_t - pi*|| over the tail where it lies in [1e-8, 1e-2].
inline ConvergenceReport verify_convergence(const std::vector<FlowSample>& trajectory,
                                            const MarketModel& model) {
    if (trajectory.empty()) throw std::invalid_argument("verify_convergence: empty trajectory");
    ConvergenceReport rep;
    const Allocation& terminal = trajectory.back().pi;
    rep.terminal = terminal.weights();

    Vec vel = flow_velocity(terminal, model);
    rep.terminal_motion = std::sqrt(dot(vel, vel));
    rep.converged = rep.terminal_motion <= 1e-10;

    double best = std::numeric_limits<double>::infinity();
    for (const CriticalPoint& cp : critical_points(model)) {
        if (cp.degenerate) continue;
        double d2 = 0.0;
        for (std::size_t i = 0; i < rep.terminal.size(); ++i) {
            double d = rep.terminal[i] - cp.point[i];
            d2 += d * d;
        }
        if (d2 < best) {
            best = d2;
            rep.nearest_support = cp.support;
            rep.nearest_critical = cp.point;
        }
    }
    rep.distance_to_critical = std::sqrt(best);
    rep.interior = is_interior(terminal, 1e-6);

    Allocation opt = optimal_allocation(model);
    rep.distance_to_optimal = linf_distance(rep.terminal, opt.weights());

    if (rep.interior) {
        // log-linear fits of ln ||pi_t - pi*||: the rate comes from the whole
        // decay band [1e-8, 1e-2]; the goodness-of-fit is judged on the last
        // decade, where the slow mode dominates and the decay is purely
        // exponential
        struct Fit {
            double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
            long n = 0;
            void add(double x, double y) {
                sx += x; sy += y; sxx += x * x; sxy += x * y; syy += y * y;
                ++n;
            }
            bool solve(double& slope, double& r2) const {
                if (n < 3) return false;
                double nx = static_cast<double>(n);
                double cov_xy = sxy - sx * sy / nx;
                double var_x = sxx - sx * sx / nx;
                double var_y = syy - sy * sy / nx;
                if (var_x <= 0.0 || var_y <= 0.0) return false;
                slope = cov_xy / var_x;
                r2 = (cov_xy * cov_xy) / (var_x * var_y);
                return true;
            }
        };
        Fit band, last_decade;
        for (const FlowSample& s : trajectory) {
            Vec d(s.pi.size());
            for (std::size_t i = 0; i < d.size(); ++i) d[i] = s.pi[i] - opt[i];
            double dist = std::sqrt(dot(d, d));
            if (dist < 1e-8 || dist > 1e-2) continue;
            band.add(s.time, std::log(dist));
            if (dist <= 1e-7) last_decade.add(s.time, std::log(dist));
        }
        double slope = 0.0, r2 = 0.0;
        if (band.solve(slope, r2)) {
            rep.rate = -slope;
            rep.rate_r_squared = r2;
            rep.rate_fitted = true;
            double tail_slope = 0.0, tail_r2 = 0.0;
            if (last_decade.n >= 5 && last_decade.solve(tail_slope, tail_r2))
                rep.rate_r_squared = tail_r2;
        }
    }
    return rep;
}

}  // namespace onflow
