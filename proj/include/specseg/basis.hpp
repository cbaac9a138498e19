#ifndef SPECSEG_BASIS_HPP_
#define SPECSEG_BASIS_HPP_

// Gaussian-process prior machinery for the log spectrum of one segment:
// Brownian-motion covariance on the Fourier frequencies, its eigenbasis
// truncated to the leading eigenvalues, and the induced design matrix.

#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <shared_mutex>
#include <vector>

#include <Eigen/Dense>

#include "specseg/common.hpp"

namespace specseg {

struct BasisMatrix {
    std::vector<double> freqs;    // likelihood frequencies k/n, k = 1..floor(n/2)
    Eigen::MatrixXd design;       // n_freq x J, X = Q D^{1/2} truncated
    Eigen::VectorXd eigenvalues;  // length J, nonincreasing, positive

    int num_basis() const { return static_cast<int>(design.cols()); }
};

struct SegmentParams {
    double alpha0 = 0.0;     // log-power intercept
    Eigen::VectorXd beta;    // basis coefficients
    double tau2 = 1.0;       // smoothing variance

    void validate() const {
        require(tau2 > 0.0 && std::isfinite(tau2), "SegmentParams: tau2 must be positive");
        require(std::isfinite(alpha0), "SegmentParams: alpha0 must be finite");
        require(beta.allFinite(), "SegmentParams: beta must be finite");
    }
};

// Covariance of a Wiener process at the given frequencies: (i,j) = min(nu_i, nu_j).
inline Eigen::MatrixXd brownian_cov(const std::vector<double>& freqs) {
    require(!freqs.empty(), "brownian_cov: empty frequency set");
    const auto n = static_cast<Eigen::Index>(freqs.size());
    for (std::size_t i = 0; i < freqs.size(); ++i) {
        require(freqs[i] > 0.0 && freqs[i] <= 0.5, "brownian_cov: frequencies must be in (0, 0.5]");
        if (i > 0) require(freqs[i] > freqs[i - 1], "brownian_cov: frequencies must be increasing");
    }
    Eigen::MatrixXd omega(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            omega(i, j) = std::min(freqs[static_cast<std::size_t>(i)],
                                   freqs[static_cast<std::size_t>(j)]);
    return omega;
}

namespace detail {

inline std::shared_ptr<const BasisMatrix> build_basis_uncached(int segment_length, int j_max) {
    require(segment_length >= 2, "build_basis: segment too short");
    const int n_freq = segment_length / 2;
    require(n_freq >= 1, "build_basis: no likelihood frequencies");

    BasisMatrix b;
    b.freqs.resize(static_cast<std::size_t>(n_freq));
    for (int k = 1; k <= n_freq; ++k)
        b.freqs[static_cast<std::size_t>(k - 1)] =
            static_cast<double>(k) / static_cast<double>(segment_length);

    Eigen::MatrixXd omega = brownian_cov(b.freqs);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(omega);
    require(es.info() == Eigen::Success, "build_basis: eigendecomposition failed");

    const int J = std::min(j_max, n_freq);
    b.design.resize(n_freq, J);
    b.eigenvalues.resize(J);
    // Eigen returns ascending order; take the top J, largest first.
    for (int j = 0; j < J; ++j) {
        const Eigen::Index src = static_cast<Eigen::Index>(n_freq - 1 - j);
        const double lam = es.eigenvalues()(src);
        b.eigenvalues(j) = lam;
        b.design.col(j) = es.eigenvectors().col(src) * std::sqrt(std::max(lam, 0.0));
    }
    return std::make_shared<const BasisMatrix>(std::move(b));
}

}  // namespace detail

// Eigenbasis of min(nu_i, nu_j) at the likelihood frequencies of a segment of
// the given length, truncated to J = min(j_max, n_freq) columns. Memoized per
// (length, j_max); birth/death moves repeatedly request the same lengths.
inline std::shared_ptr<const BasisMatrix> build_basis(int segment_length, int j_max = 30) {
    static std::shared_mutex mu;
    static std::map<std::pair<int, int>, std::shared_ptr<const BasisMatrix>> cache;
    const auto key = std::make_pair(segment_length, j_max);
    {
        std::shared_lock lk(mu);
        auto it = cache.find(key);
        if (it != cache.end()) return it->second;
    }
    auto b = detail::build_basis_uncached(segment_length, j_max);
    std::unique_lock lk(mu);
    auto [it, inserted] = cache.emplace(key, std::move(b));
    return it->second;
}

// g(nu_k) = alpha0 + (design * beta)_k at every likelihood frequency.
inline Eigen::VectorXd eval_log_spectrum(const BasisMatrix& basis, const SegmentParams& params) {
    require(params.beta.size() == basis.design.cols(),
            "eval_log_spectrum: beta dimension mismatch");
    return (basis.design * params.beta).array() + params.alpha0;
}

struct PriorConfig {
    double sigma2_alpha = 100.0;  // alpha0 ~ N(0, sigma2_alpha)
    double a_tau = 1.0;           // tau2 ~ InverseGamma(a_tau, b_tau)
    double b_tau = 1.0;
};

inline double log_normal_pdf(double x, double var) {
    return -0.5 * std::log(2.0 * std::numbers::pi * var) - x * x / (2.0 * var);
}

inline double log_invgamma_pdf(double x, double a, double b) {
    return a * std::log(b) - std::lgamma(a) - (a + 1.0) * std::log(x) - b / x;
}

// Joint log prior density of one segment's parameters:
// beta ~ N(0, tau2 I), alpha0 ~ N(0, sigma2_alpha), tau2 ~ IG(a_tau, b_tau).
inline double log_prior_segment(const SegmentParams& params, const PriorConfig& prior = {}) {
    params.validate();
    const auto J = static_cast<double>(params.beta.size());
    double lp = -0.5 * J * std::log(2.0 * std::numbers::pi * params.tau2) -
                params.beta.squaredNorm() / (2.0 * params.tau2);
    lp += log_normal_pdf(params.alpha0, prior.sigma2_alpha);
    lp += log_invgamma_pdf(params.tau2, prior.a_tau, prior.b_tau);
    return lp;
}

}  // namespace specseg

#endif  // SPECSEG_BASIS_HPP_
