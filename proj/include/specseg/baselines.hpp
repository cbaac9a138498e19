#ifndef SPECSEG_BASELINES_HPP_
#define SPECSEG_BASELINES_HPP_

// Parametric competitors: GARCH(1,1) Gaussian quasi-ML and a 2-regime
// Markov-switching GARCH with per-regime (Haas) variance recursions, plus the
// mapping of each fit to an implied time-varying spectrum.

#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "specseg/common.hpp"
#include "specseg/generators.hpp"
#include "specseg/spectral.hpp"

namespace specseg {

struct MsGarchParams {
    std::vector<GarchParams> regimes;
    Eigen::MatrixXd transition;  // row-stochastic N_R x N_R

    void validate() const {
        require(!regimes.empty(), "MsGarchParams: no regimes");
        const auto n = static_cast<Eigen::Index>(regimes.size());
        require(transition.rows() == n && transition.cols() == n,
                "MsGarchParams: transition matrix dimension mismatch");
        for (Eigen::Index i = 0; i < n; ++i) {
            require(std::abs(transition.row(i).sum() - 1.0) < 1e-12,
                    "MsGarchParams: transition rows must sum to 1");
            for (Eigen::Index j = 0; j < n; ++j)
                require(transition(i, j) >= 0.0, "MsGarchParams: negative transition probability");
        }
        for (const auto& r : regimes) r.validate();
    }
};

struct RegimeProbs {
    Eigen::MatrixXd filtered;  // T x N_R
    Eigen::MatrixXd smoothed;  // T x N_R
};

// --- derivative-free simplex optimizer -------------------------------------

struct NelderMeadOptions {
    int max_evals = 5000;
    double tol = 1e-8;
    double initial_step = 0.25;
};

struct NelderMeadResult {
    Eigen::VectorXd x;
    double fval = 0.0;
    bool converged = false;
    int n_evals = 0;
};

// Minimizes f. Standard reflection/expansion/contraction/shrink coefficients.
inline NelderMeadResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f,
                                    const Eigen::VectorXd& x0,
                                    const NelderMeadOptions& opt = {}) {
    const Eigen::Index n = x0.size();
    NelderMeadResult res;
    std::vector<Eigen::VectorXd> pts(static_cast<std::size_t>(n) + 1, x0);
    std::vector<double> fv(static_cast<std::size_t>(n) + 1);
    for (Eigen::Index i = 0; i < n; ++i) pts[static_cast<std::size_t>(i) + 1](i) += opt.initial_step;
    for (std::size_t i = 0; i < pts.size(); ++i) fv[i] = f(pts[i]);
    res.n_evals = static_cast<int>(pts.size());

    auto order = [&] {
        std::vector<std::size_t> idx(pts.size());
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
        std::vector<Eigen::VectorXd> p2;
        std::vector<double> f2;
        for (std::size_t i : idx) {
            p2.push_back(pts[i]);
            f2.push_back(fv[i]);
        }
        pts = std::move(p2);
        fv = std::move(f2);
    };
    order();

    while (res.n_evals < opt.max_evals) {
        if (std::abs(fv.back() - fv.front()) < opt.tol * (std::abs(fv.front()) + opt.tol)) {
            res.converged = true;
            break;
        }
        Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
        for (std::size_t i = 0; i + 1 < pts.size(); ++i) centroid += pts[i];
        centroid /= static_cast<double>(n);

        const Eigen::VectorXd xr = centroid + (centroid - pts.back());
        const double fr = f(xr);
        ++res.n_evals;
        if (fr < fv.front()) {
            const Eigen::VectorXd xe = centroid + 2.0 * (centroid - pts.back());
            const double fe = f(xe);
            ++res.n_evals;
            if (fe < fr) {
                pts.back() = xe;
                fv.back() = fe;
            } else {
                pts.back() = xr;
                fv.back() = fr;
            }
        } else if (fr < fv[fv.size() - 2]) {
            pts.back() = xr;
            fv.back() = fr;
        } else {
            const Eigen::VectorXd xc = centroid + 0.5 * (pts.back() - centroid);
            const double fc = f(xc);
            ++res.n_evals;
            if (fc < fv.back()) {
                pts.back() = xc;
                fv.back() = fc;
            } else {
                for (std::size_t i = 1; i < pts.size(); ++i) {
                    pts[i] = pts.front() + 0.5 * (pts[i] - pts.front());
                    fv[i] = f(pts[i]);
                    ++res.n_evals;
                }
            }
        }
        order();
    }
    res.x = pts.front();
    res.fval = fv.front();
    return res;
}

// --- GARCH(1,1) -------------------------------------------------------------

namespace detail {

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
inline double logit(double p) { return std::log(p / (1.0 - p)); }

// Unconstrained parameterization (mu, log alpha0, logit of alpha1+beta1,
// logit of alpha1/(alpha1+beta1)) keeps the optimizer inside the
// stationarity region.
inline GarchParams garch_from_raw(const Eigen::VectorXd& raw) {
    GarchParams p;
    p.mu = raw(0);
    p.alpha0 = std::exp(raw(1));
    const double persistence = 0.999999 * sigmoid(raw(2));
    const double share = sigmoid(raw(3));
    p.alpha1 = persistence * share;
    p.beta1 = persistence * (1.0 - share);
    return p;
}

inline Eigen::VectorXd garch_to_raw(const GarchParams& p) {
    Eigen::VectorXd raw(4);
    raw(0) = p.mu;
    raw(1) = std::log(p.alpha0);
    const double persistence = std::clamp(p.alpha1 + p.beta1, 1e-8, 1.0 - 1e-8);
    const double share = std::clamp(p.alpha1 / std::max(persistence, 1e-12), 1e-8, 1.0 - 1e-8);
    raw(2) = logit(persistence);
    raw(3) = logit(share);
    return raw;
}

}  // namespace detail

// Gaussian log-likelihood of the GARCH recursion seeded at the sample variance.
inline double garch_loglik(const TimeSeries& y, const GarchParams& p) {
    const std::size_t T = y.size();
    double sigma2 = variance_of(y.values);
    double ll = 0.0;
    double eta_prev = 0.0;
    for (std::size_t t = 0; t < T; ++t) {
        if (t > 0) sigma2 = p.alpha0 + p.alpha1 * eta_prev * eta_prev + p.beta1 * sigma2;
        const double eta = y.values[t] - p.mu;
        ll += -0.5 * std::log(2.0 * std::numbers::pi * sigma2) - eta * eta / (2.0 * sigma2);
        eta_prev = eta;
    }
    return ll;
}

struct GarchFit {
    GarchParams params;
    double loglik = 0.0;
    bool converged = false;
};

inline GarchFit fit_garch(const TimeSeries& y) {
    y.validate();
    require(y.size() >= 100, "fit_garch: need T >= 100");
    const double var = variance_of(y.values);
    GarchParams init;
    init.mu = mean_of(y.values);
    init.alpha1 = 0.05;
    init.beta1 = 0.8;
    init.alpha0 = var * (1.0 - init.alpha1 - init.beta1);

    auto objective = [&](const Eigen::VectorXd& raw) {
        const GarchParams p = detail::garch_from_raw(raw);
        const double ll = garch_loglik(y, p);
        return std::isfinite(ll) ? -ll : 1e300;
    };
    NelderMeadResult r = nelder_mead(objective, detail::garch_to_raw(init));
    GarchFit fit;
    fit.params = detail::garch_from_raw(r.x);
    fit.loglik = -r.fval;
    fit.converged = r.converged;
    return fit;
}

// GARCH returns are white noise: the implied spectrum is flat in both t and nu.
inline TvSpectrum garch_implied_tvspectrum(const GarchParams& p, int T,
                                           const std::vector<double>& freq_grid) {
    p.validate();
    TvSpectrum out;
    out.freq_grid = freq_grid;
    out.time_grid.resize(static_cast<std::size_t>(T));
    for (int t = 0; t < T; ++t) out.time_grid[static_cast<std::size_t>(t)] = t + 1;
    out.power.assign(static_cast<std::size_t>(T) * freq_grid.size(), p.sigma2_uc());
    return out;
}

// --- Markov-switching GARCH --------------------------------------------------

// Forward filter with Haas-style recursions: each regime j propagates its own
// sigma2_{j,t} driven by eta_{t-1} computed with mu_j. Returns filtered
// probabilities and the marginal log-likelihood.
inline std::pair<Eigen::MatrixXd, double> hamilton_filter(const TimeSeries& y,
                                                          const MsGarchParams& params) {
    y.validate();
    params.validate();
    const auto T = static_cast<Eigen::Index>(y.size());
    const auto N = static_cast<Eigen::Index>(params.regimes.size());

    // stationary distribution of the chain as the t=1 predictive
    Eigen::VectorXd pred(N);
    {
        Eigen::MatrixXd A = params.transition.transpose() - Eigen::MatrixXd::Identity(N, N);
        A.row(N - 1).setOnes();
        Eigen::VectorXd b = Eigen::VectorXd::Zero(N);
        b(N - 1) = 1.0;
        pred = A.fullPivLu().solve(b);
        for (Eigen::Index j = 0; j < N; ++j) pred(j) = std::max(pred(j), 1e-12);
        pred /= pred.sum();
    }

    const double var = variance_of(y.values);
    Eigen::VectorXd sigma2 = Eigen::VectorXd::Constant(N, var);
    Eigen::MatrixXd filtered(T, N);
    double ll = 0.0;
    for (Eigen::Index t = 0; t < T; ++t) {
        if (t > 0) {
            pred = params.transition.transpose() * filtered.row(t - 1).transpose();
            for (Eigen::Index j = 0; j < N; ++j) {
                const double eta = y.values[static_cast<std::size_t>(t) - 1] - params.regimes[static_cast<std::size_t>(j)].mu;
                sigma2(j) = params.regimes[static_cast<std::size_t>(j)].alpha0 +
                            params.regimes[static_cast<std::size_t>(j)].alpha1 * eta * eta +
                            params.regimes[static_cast<std::size_t>(j)].beta1 * sigma2(j);
            }
        }
        // log-space normalization guards against underflow
        Eigen::VectorXd logw(N);
        for (Eigen::Index j = 0; j < N; ++j) {
            const double eta = y.values[static_cast<std::size_t>(t)] - params.regimes[static_cast<std::size_t>(j)].mu;
            logw(j) = std::log(std::max(pred(j), 1e-300)) -
                      0.5 * std::log(2.0 * std::numbers::pi * sigma2(j)) -
                      eta * eta / (2.0 * sigma2(j));
        }
        const double mx = logw.maxCoeff();
        const Eigen::VectorXd w = (logw.array() - mx).exp();
        const double wsum = w.sum();
        if (!std::isfinite(wsum) || wsum <= 0.0)
            throw std::runtime_error("hamilton_filter: numerical failure");
        ll += mx + std::log(wsum);
        filtered.row(t) = (w / wsum).transpose();
    }
    return {std::move(filtered), ll};
}

// Standard backward smoothing of filtered probabilities.
inline Eigen::MatrixXd kim_smoother(const Eigen::MatrixXd& filtered,
                                    const Eigen::MatrixXd& transition) {
    const Eigen::Index T = filtered.rows();
    const Eigen::Index N = filtered.cols();
    Eigen::MatrixXd smoothed(T, N);
    smoothed.row(T - 1) = filtered.row(T - 1);
    for (Eigen::Index t = T - 2; t >= 0; --t) {
        const Eigen::VectorXd pred = transition.transpose() * filtered.row(t).transpose();
        for (Eigen::Index i = 0; i < N; ++i) {
            double s = 0.0;
            for (Eigen::Index j = 0; j < N; ++j)
                s += transition(i, j) * smoothed(t + 1, j) / std::max(pred(j), 1e-300);
            smoothed(t, i) = filtered(t, i) * s;
        }
        const double rsum = smoothed.row(t).sum();
        if (rsum > 0) smoothed.row(t) /= rsum;
    }
    return smoothed;
}

struct MsGarchFit {
    MsGarchParams params;
    RegimeProbs probs;
    double loglik = 0.0;
    bool converged = false;
};

namespace detail {

inline MsGarchParams msgarch_from_raw(const Eigen::VectorXd& raw, int n_regimes) {
    MsGarchParams p;
    p.regimes.resize(static_cast<std::size_t>(n_regimes));
    for (int j = 0; j < n_regimes; ++j)
        p.regimes[static_cast<std::size_t>(j)] = garch_from_raw(raw.segment(4 * j, 4));
    p.transition.resize(n_regimes, n_regimes);
    // N_R = 2 diagonal-persistence parameterization; rows renormalized for N_R > 2
    for (int i = 0; i < n_regimes; ++i) {
        const double stay = sigmoid(raw(4 * n_regimes + i));
        for (int j = 0; j < n_regimes; ++j)
            p.transition(i, j) = (i == j) ? stay : (1.0 - stay) / (n_regimes - 1);
    }
    return p;
}

}  // namespace detail

// ML fit via the simplex optimizer over reparameterized regime parameters and
// transition logits; multi-start from perturbed moment-based initials.
inline MsGarchFit fit_msgarch(const TimeSeries& y, int n_regimes = 2, int n_starts = 5,
                              std::uint64_t seed = 42) {
    y.validate();
    require(y.size() >= 500, "fit_msgarch: need T >= 500");
    require(n_regimes >= 2, "fit_msgarch: need at least 2 regimes");
    const double var = variance_of(y.values);
    const double mu = mean_of(y.values);
    Rng rng(seed);
    std::normal_distribution<double> stdnorm(0.0, 1.0);

    auto objective = [&](const Eigen::VectorXd& raw) {
        try {
            const MsGarchParams p = detail::msgarch_from_raw(raw, n_regimes);
            const double ll = hamilton_filter(y, p).second;
            return std::isfinite(ll) ? -ll : 1e300;
        } catch (const std::exception&) {
            return 1e300;
        }
    };

    NelderMeadResult best;
    best.fval = 1e301;
    bool any = false;
    for (int s = 0; s < n_starts; ++s) {
        Eigen::VectorXd raw(4 * n_regimes + n_regimes);
        for (int j = 0; j < n_regimes; ++j) {
            GarchParams init;
            init.mu = mu;
            init.alpha1 = 0.05;
            init.beta1 = 0.5;
            // spread the regime variances around the sample variance
            const double scale = std::pow(1.8, j - (n_regimes - 1) / 2.0);
            init.alpha0 = var * scale * (1.0 - init.alpha1 - init.beta1);
            Eigen::VectorXd r = detail::garch_to_raw(init);
            if (s > 0)
                for (Eigen::Index i = 0; i < 4; ++i) r(i) += 0.3 * stdnorm(rng);
            raw.segment(4 * j, 4) = r;
        }
        for (int i = 0; i < n_regimes; ++i)
            raw(4 * n_regimes + i) = detail::logit(0.97) + (s > 0 ? 0.3 * stdnorm(rng) : 0.0);
        NelderMeadResult r = nelder_mead(objective, raw);
        if (!any || r.fval < best.fval) {
            best = std::move(r);
            any = true;
        }
    }

    MsGarchFit fit;
    fit.params = detail::msgarch_from_raw(best.x, n_regimes);
    auto [filtered, ll] = hamilton_filter(y, fit.params);
    fit.probs.filtered = filtered;
    fit.probs.smoothed = kim_smoother(filtered, fit.params.transition);
    fit.loglik = ll;
    fit.converged = best.converged;
    return fit;
}

// f_hat(nu, t) = sum_j smoothed[t][j] * sigma2_uc(regime j), flat in nu.
inline TvSpectrum msgarch_implied_tvspectrum(const MsGarchParams& params,
                                             const Eigen::MatrixXd& smoothed,
                                             const std::vector<double>& freq_grid) {
    params.validate();
    const auto T = smoothed.rows();
    const auto N = static_cast<Eigen::Index>(params.regimes.size());
    require(smoothed.cols() == N, "msgarch_implied_tvspectrum: probability column mismatch");
    TvSpectrum out;
    out.freq_grid = freq_grid;
    out.time_grid.resize(static_cast<std::size_t>(T));
    out.power.resize(static_cast<std::size_t>(T) * freq_grid.size());
    for (Eigen::Index t = 0; t < T; ++t) {
        out.time_grid[static_cast<std::size_t>(t)] = static_cast<int>(t) + 1;
        double v = 0.0;
        for (Eigen::Index j = 0; j < N; ++j)
            v += smoothed(t, j) * params.regimes[static_cast<std::size_t>(j)].sigma2_uc();
        for (std::size_t f = 0; f < freq_grid.size(); ++f)
            out.at(static_cast<std::size_t>(t), f) = v;
    }
    return out;
}

}  // namespace specseg

#endif  // SPECSEG_BASELINES_HPP_
