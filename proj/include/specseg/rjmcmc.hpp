#ifndef SPECSEG_RJMCMC_HPP_
#define SPECSEG_RJMCMC_HPP_

// Reversible-jump MCMC over (K, xi, {alpha0, beta, tau2}) with Whittle
// segment likelihoods, and posterior summarization of the time-varying
// spectrum. Moves: birth (split), death (merge), relocate (move a cutpoint)
// and within-model parameter updates via independence proposals centered at
// conditional modes.

#include <array>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "specseg/basis.hpp"
#include "specseg/common.hpp"
#include "specseg/partition.hpp"
#include "specseg/spectral.hpp"

namespace specseg {

struct SamplerConfig {
    int n_iter = 10000;
    int n_burn = 2000;
    int thin = 10;
    double p_birth = 0.25;
    double p_death = 0.25;
    double p_relocate = 0.2;
    double p_within = 0.3;
    double newton_tol = 1e-6;
    int newton_max_iter = 100;
    int relocate_window = 10;       // half-width of the local relocate proposal
    double p_local_relocate = 0.8;
    double rw_step = 0.1;           // random-walk fallback when Newton fails
    int j_max = 30;
    PriorConfig prior;
    std::uint64_t rng_seed = 1;
    bool likelihood_off = false;    // prior-recovery runs
    bool store_states = true;
    bool accumulate_spectrum = true;

    void validate() const {
        require(n_burn >= 0 && n_burn < n_iter, "SamplerConfig: need 0 <= n_burn < n_iter");
        require(thin >= 1, "SamplerConfig: thin must be >= 1");
        const double s = p_birth + p_death + p_relocate + p_within;
        require(p_birth >= 0 && p_death >= 0 && p_relocate >= 0 && p_within > 0,
                "SamplerConfig: move probabilities must be nonnegative, within > 0");
        require(std::abs(s - 1.0) < 1e-9, "SamplerConfig: move probabilities must sum to 1");
    }
};

struct ModelState {
    Partition partition;
    std::vector<SegmentParams> segments;
};

struct MoveStats {
    long proposed = 0;
    long accepted = 0;
    double rate() const { return proposed ? static_cast<double>(accepted) / proposed : 0.0; }
};

struct PosteriorDraws {
    std::vector<ModelState> states;            // retained states (if store_states)
    std::vector<std::vector<int>> partitions;  // cut vectors of every retained state
    std::vector<long> k_counts;                // histogram over K, index K
    std::vector<int> time_grid;
    std::vector<double> freq_grid;
    std::vector<double> spectrum_sum;          // T x F accumulators
    std::vector<double> spectrum_sumsq;
    long n_retained = 0;
    MoveStats within_stats, birth_stats, death_stats, relocate_stats;
};

inline std::vector<double> make_freq_grid(int n = 101) {
    std::vector<double> g(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) g[static_cast<std::size_t>(i)] = 0.5 * i / (n - 1);
    return g;
}

namespace detail {
inline constexpr double kLog2Pi = 1.8378770664093453;
}

// Gaussian with precision matrix stored via its Cholesky factor (negH = L L').
struct GaussianAtMode {
    Eigen::VectorXd mode;
    Eigen::MatrixXd prec_chol;  // lower triangular L
    bool converged = false;

    double log_det_precision() const {
        return 2.0 * prec_chol.diagonal().array().log().sum();
    }
    Eigen::VectorXd sample(Rng& rng) const {
        std::normal_distribution<double> stdnorm(0.0, 1.0);
        Eigen::VectorXd z(mode.size());
        for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = stdnorm(rng);
        // x = mode + L^{-T} z has covariance (L L')^{-1}
        return mode + prec_chol.transpose().triangularView<Eigen::Upper>().solve(z);
    }
    double logpdf(const Eigen::VectorXd& x) const {
        const Eigen::VectorXd d = prec_chol.transpose() * (x - mode);
        return 0.5 * log_det_precision() -
               0.5 * static_cast<double>(mode.size()) * detail::kLog2Pi - 0.5 * d.squaredNorm();
    }
};

namespace detail {

// Per-segment cached quantities: likelihood ordinates, weights, basis and the
// stacked design [1 | X].
struct SegmentData {
    int begin = 0;  // y slice [begin, end)
    int end = 0;
    Eigen::VectorXd ords;     // I(nu_k), k = 1..floor(n/2)
    Eigen::VectorXd weights;  // Whittle weights
    std::shared_ptr<const BasisMatrix> basis;
    Eigen::MatrixXd design1;  // [1 | X], n_freq x (J+1)

    int length() const { return end - begin; }
    int dim() const { return static_cast<int>(design1.cols()); }
};

inline SegmentData make_segment_data(const std::vector<double>& y, int begin, int end, int j_max) {
    SegmentData d;
    d.begin = begin;
    d.end = end;
    const Periodogram pg = segment_periodogram(y, static_cast<std::size_t>(begin),
                                               static_cast<std::size_t>(end));
    const std::size_t m = pg.freqs.size() - 1;
    d.ords.resize(static_cast<Eigen::Index>(m));
    for (std::size_t k = 0; k < m; ++k) d.ords(static_cast<Eigen::Index>(k)) = pg.ordinates[k + 1];
    const std::vector<double> w = whittle_weights(pg);
    d.weights.resize(static_cast<Eigen::Index>(m));
    for (std::size_t k = 0; k < m; ++k) d.weights(static_cast<Eigen::Index>(k)) = w[k];
    d.basis = build_basis(end - begin, j_max);
    d.design1.resize(d.basis->design.rows(), d.basis->design.cols() + 1);
    d.design1.col(0).setOnes();
    d.design1.rightCols(d.basis->design.cols()) = d.basis->design;
    return d;
}

inline Eigen::VectorXd pack_params(const SegmentParams& p) {
    Eigen::VectorXd th(p.beta.size() + 1);
    th(0) = p.alpha0;
    th.tail(p.beta.size()) = p.beta;
    return th;
}

inline SegmentParams unpack_params(const Eigen::VectorXd& th, double tau2) {
    SegmentParams p;
    p.alpha0 = th(0);
    p.beta = th.tail(th.size() - 1);
    p.tau2 = tau2;
    return p;
}

}  // namespace detail

// Whittle log-likelihood of one segment given packed parameters theta = (alpha0, beta).
inline double segment_loglik_packed(const detail::SegmentData& d, const Eigen::VectorXd& theta,
                                    bool likelihood_off = false) {
    if (likelihood_off) return 0.0;
    const Eigen::ArrayXd g = (d.design1 * theta).array();
    return (d.weights.array() * (-g - d.ords.array() * (-g).exp())).sum();
}

// Spec-level form: periodogram of the demeaned segment against the basis expansion.
inline double segment_loglik(const TimeSeries& y_segment, const SegmentParams& params,
                             const BasisMatrix& basis) {
    const detail::SegmentData d =
        detail::make_segment_data(y_segment.values, 0, static_cast<int>(y_segment.size()),
                                  basis.num_basis());
    require(params.beta.size() == basis.design.cols(), "segment_loglik: beta dimension mismatch");
    return segment_loglik_packed(d, detail::pack_params(params));
}

// Newton ascent on the conditional log-posterior of (alpha0, beta) given tau2:
//   l(theta) = whittle loglik - beta'beta/(2 tau2) - alpha0^2/(2 sigma2_alpha).
// Returns the mode and the Cholesky factor of the negative Hessian there.
inline GaussianAtMode conditional_mode(const detail::SegmentData& d, double tau2,
                                       const PriorConfig& prior, const Eigen::VectorXd& start,
                                       double tol = 1e-6, int max_iter = 100,
                                       bool likelihood_off = false) {
    require(tau2 > 0.0, "conditional_mode: tau2 must be positive");
    const int dim = d.dim();
    Eigen::VectorXd prior_prec(dim);
    prior_prec(0) = 1.0 / prior.sigma2_alpha;
    for (int j = 1; j < dim; ++j) prior_prec(j) = 1.0 / tau2;

    auto objective = [&](const Eigen::VectorXd& th) {
        return segment_loglik_packed(d, th, likelihood_off) -
               0.5 * (prior_prec.array() * th.array().square()).sum();
    };

    Eigen::VectorXd theta = start;
    require(theta.size() == dim, "conditional_mode: start dimension mismatch");
    double obj = objective(theta);
    if (!std::isfinite(obj)) {
        theta.setZero();
        obj = objective(theta);
    }

    GaussianAtMode out;
    Eigen::MatrixXd neg_hess(dim, dim);
    for (int it = 0; it < max_iter; ++it) {
        Eigen::VectorXd grad = -(prior_prec.array() * theta.array()).matrix();
        if (!likelihood_off) {
            const Eigen::ArrayXd g = (d.design1 * theta).array();
            const Eigen::ArrayXd ie = d.ords.array() * (-g).exp();
            grad += d.design1.transpose() * (d.weights.array() * (ie - 1.0)).matrix();
            neg_hess = d.design1.transpose() *
                       (d.weights.array() * ie).matrix().asDiagonal() * d.design1;
            neg_hess.diagonal() += prior_prec;
        } else {
            neg_hess = prior_prec.asDiagonal();
        }
        if (!grad.allFinite() || !neg_hess.allFinite())
            throw std::runtime_error("conditional_mode: non-finite objective");

        if (grad.lpNorm<Eigen::Infinity>() < tol) {
            out.converged = true;
            break;
        }
        Eigen::LLT<Eigen::MatrixXd> llt(neg_hess);
        if (llt.info() != Eigen::Success)
            throw std::runtime_error("conditional_mode: Hessian not positive definite");
        Eigen::VectorXd step = llt.solve(grad);
        double scale = 1.0;
        Eigen::VectorXd cand = theta + step;
        double cand_obj = objective(cand);
        int halvings = 0;
        while ((!std::isfinite(cand_obj) || cand_obj < obj) && halvings < 40) {
            scale *= 0.5;
            cand = theta + scale * step;
            cand_obj = objective(cand);
            ++halvings;
        }
        if (!std::isfinite(cand_obj) || cand_obj < obj) break;  // stuck; flag non-convergence
        theta = cand;
        obj = cand_obj;
    }
    // Recompute the curvature at the final point.
    if (!likelihood_off) {
        const Eigen::ArrayXd g = (d.design1 * theta).array();
        const Eigen::ArrayXd ie = d.ords.array() * (-g).exp();
        neg_hess = d.design1.transpose() * (d.weights.array() * ie).matrix().asDiagonal() * d.design1;
        neg_hess.diagonal() += prior_prec;
    } else {
        neg_hess = prior_prec.asDiagonal();
        out.converged = true;
    }
    Eigen::LLT<Eigen::MatrixXd> llt(neg_hess);
    if (llt.info() != Eigen::Success)
        throw std::runtime_error("conditional_mode: Hessian not positive definite at mode");
    out.mode = theta;
    out.prec_chol = llt.matrixL();
    return out;
}

class Sampler {
public:
    Sampler(TimeSeries y, SamplerConfig cfg, PartitionConfig pcfg,
            std::vector<double> freq_grid = make_freq_grid())
        : y_(std::move(y.values)), cfg_(cfg), pcfg_(pcfg), rng_(cfg.rng_seed),
          freq_grid_(std::move(freq_grid)) {
        cfg_.validate();
        pcfg_.validate();
        require(static_cast<int>(y_.size()) >= pcfg_.t_min,
                "Sampler: series shorter than t_min");
        init_state();
    }

    const ModelState& state() const { return state_; }
    const std::vector<double>& freq_grid() const { return freq_grid_; }

    void set_state(ModelState st) {
        st.partition.validate(pcfg_);
        require(st.segments.size() == static_cast<std::size_t>(st.partition.num_segments()),
                "set_state: segment count mismatch");
        state_ = std::move(st);
        rebuild_all_segment_data();
    }

    // Feasibility-adjusted move selection probabilities for a given state.
    struct MoveProbs {
        double birth = 0, death = 0, relocate = 0, within = 0;
    };
    MoveProbs move_probs(const ModelState& st) const {
        MoveProbs p;
        const int K = st.partition.num_segments();
        const bool can_birth = K < pcfg_.max_segments && has_splittable(st.partition);
        const bool can_shrink = K > 1;
        p.birth = can_birth ? cfg_.p_birth : 0.0;
        p.death = can_shrink ? cfg_.p_death : 0.0;
        p.relocate = can_shrink ? cfg_.p_relocate : 0.0;
        p.within = cfg_.p_within;
        const double s = p.birth + p.death + p.relocate + p.within;
        p.birth /= s;
        p.death /= s;
        p.relocate /= s;
        p.within /= s;
        return p;
    }

    // --- deterministic move cores (random choices passed in; used by tests) ---

    // log acceptance ratio for splitting segment s at xi with mass split u and
    // proposed child parameters theta1, theta2. Returns the proposed state too.
    struct TransdimResult {
        ModelState proposed;
        double log_accept;
    };

    TransdimResult birth_log_accept(const ModelState& st, int s, int xi, double u,
                                    const Eigen::VectorXd& theta1,
                                    const Eigen::VectorXd& theta2) const {
        const SegmentParams& parent = st.segments[static_cast<std::size_t>(s)];
        const double tau2 = parent.tau2;
        const double tau2_1 = tau2 * u / (1.0 - u);
        const double tau2_2 = tau2 * (1.0 - u) / u;

        const int lo = st.partition.cuts[static_cast<std::size_t>(s)];
        const int hi = st.partition.cuts[static_cast<std::size_t>(s) + 1];
        detail::SegmentData d1 = detail::make_segment_data(y_, lo, xi, cfg_.j_max);
        detail::SegmentData d2 = detail::make_segment_data(y_, xi, hi, cfg_.j_max);
        const auto dp = seg_data_for(st, s);

        const GaussianAtMode m1 = mode_of(d1, tau2_1, theta1.size());
        const GaussianAtMode m2 = mode_of(d2, tau2_2, theta2.size());
        const GaussianAtMode mp = mode_of(*dp, tau2, dp->dim());

        ModelState next;
        next.partition = st.partition;
        next.partition.cuts.insert(
            next.partition.cuts.begin() + static_cast<std::ptrdiff_t>(s) + 1, xi);
        next.segments = st.segments;
        next.segments[static_cast<std::size_t>(s)] = detail::unpack_params(theta1, tau2_1);
        next.segments.insert(next.segments.begin() + static_cast<std::ptrdiff_t>(s) + 1,
                             detail::unpack_params(theta2, tau2_2));

        const double dll = segment_loglik_packed(d1, theta1, cfg_.likelihood_off) +
                           segment_loglik_packed(d2, theta2, cfg_.likelihood_off) -
                           segment_loglik_packed(*dp, detail::pack_params(parent),
                                                 cfg_.likelihood_off);
        const double dprior =
            log_prior_partition(next.partition, pcfg_) - log_prior_partition(st.partition, pcfg_) +
            log_prior_segment(next.segments[static_cast<std::size_t>(s)], cfg_.prior) +
            log_prior_segment(next.segments[static_cast<std::size_t>(s) + 1], cfg_.prior) -
            log_prior_segment(parent, cfg_.prior);

        const MoveProbs fwd = move_probs(st);
        const MoveProbs rev = move_probs(next);
        const int n_split = count_splittable(st.partition);
        const int m = hi - lo - 2 * pcfg_.t_min + 1;  // valid split positions in segment s
        const int K_new = next.partition.num_segments();

        const double log_q_fwd = std::log(fwd.birth) - std::log(static_cast<double>(n_split)) -
                                 std::log(static_cast<double>(m)) + m1.logpdf(theta1) +
                                 m2.logpdf(theta2);
        const double log_q_rev = std::log(rev.death) -
                                 std::log(static_cast<double>(K_new - 1)) +
                                 mp.logpdf(detail::pack_params(parent));
        const double log_jac = std::log(2.0 * tau2 / (u * (1.0 - u)));
        return {std::move(next), dll + dprior + log_q_rev - log_q_fwd + log_jac};
    }

    // log acceptance ratio for merging the segments around cutpoint index j
    // (1..K-1) with proposed merged parameters theta_m.
    TransdimResult death_log_accept(const ModelState& st, int j,
                                    const Eigen::VectorXd& theta_m) const {
        const SegmentParams& left = st.segments[static_cast<std::size_t>(j) - 1];
        const SegmentParams& right = st.segments[static_cast<std::size_t>(j)];
        const double tau2_m = std::sqrt(left.tau2 * right.tau2);
        const double u = std::sqrt(left.tau2) / (std::sqrt(left.tau2) + std::sqrt(right.tau2));

        const int lo = st.partition.cuts[static_cast<std::size_t>(j) - 1];
        const int hi = st.partition.cuts[static_cast<std::size_t>(j) + 1];
        detail::SegmentData dm = detail::make_segment_data(y_, lo, hi, cfg_.j_max);
        const auto d1 = seg_data_for(st, j - 1);
        const auto d2 = seg_data_for(st, j);

        const GaussianAtMode mm = mode_of(dm, tau2_m, theta_m.size());
        const GaussianAtMode m1 = mode_of(*d1, left.tau2, d1->dim());
        const GaussianAtMode m2 = mode_of(*d2, right.tau2, d2->dim());

        ModelState next;
        next.partition = st.partition;
        next.partition.cuts.erase(next.partition.cuts.begin() + static_cast<std::ptrdiff_t>(j));
        next.segments = st.segments;
        next.segments[static_cast<std::size_t>(j) - 1] = detail::unpack_params(theta_m, tau2_m);
        next.segments.erase(next.segments.begin() + static_cast<std::ptrdiff_t>(j));

        const double dll = segment_loglik_packed(dm, theta_m, cfg_.likelihood_off) -
                           segment_loglik_packed(*d1, detail::pack_params(left), cfg_.likelihood_off) -
                           segment_loglik_packed(*d2, detail::pack_params(right), cfg_.likelihood_off);
        const double dprior =
            log_prior_partition(next.partition, pcfg_) - log_prior_partition(st.partition, pcfg_) +
            log_prior_segment(next.segments[static_cast<std::size_t>(j) - 1], cfg_.prior) -
            log_prior_segment(left, cfg_.prior) - log_prior_segment(right, cfg_.prior);

        const MoveProbs fwd = move_probs(st);
        const MoveProbs rev = move_probs(next);
        const int K = st.partition.num_segments();
        const int n_split_new = count_splittable(next.partition);
        const int m = hi - lo - 2 * pcfg_.t_min + 1;  // split positions in the merged segment

        const double log_q_fwd = std::log(fwd.death) - std::log(static_cast<double>(K - 1)) +
                                 mm.logpdf(theta_m);
        const double log_q_rev = std::log(rev.birth) -
                                 std::log(static_cast<double>(n_split_new)) -
                                 std::log(static_cast<double>(m)) +
                                 m1.logpdf(detail::pack_params(left)) +
                                 m2.logpdf(detail::pack_params(right));
        const double log_jac = std::log(2.0 * tau2_m / (u * (1.0 - u)));
        return {std::move(next), dll + dprior + log_q_rev - log_q_fwd - log_jac};
    }

    // log acceptance ratio for moving cutpoint j to new_pos with proposed
    // parameters for the two affected segments.
    TransdimResult relocate_log_accept(const ModelState& st, int j, int new_pos,
                                       const Eigen::VectorXd& theta1,
                                       const Eigen::VectorXd& theta2) const {
        const SegmentParams& left = st.segments[static_cast<std::size_t>(j) - 1];
        const SegmentParams& right = st.segments[static_cast<std::size_t>(j)];
        const int lo = st.partition.cuts[static_cast<std::size_t>(j) - 1];
        const int cur = st.partition.cuts[static_cast<std::size_t>(j)];
        const int hi = st.partition.cuts[static_cast<std::size_t>(j) + 1];

        detail::SegmentData n1 = detail::make_segment_data(y_, lo, new_pos, cfg_.j_max);
        detail::SegmentData n2 = detail::make_segment_data(y_, new_pos, hi, cfg_.j_max);
        const auto o1 = seg_data_for(st, j - 1);
        const auto o2 = seg_data_for(st, j);

        const GaussianAtMode mn1 = mode_of(n1, left.tau2, n1.dim());
        const GaussianAtMode mn2 = mode_of(n2, right.tau2, n2.dim());
        const GaussianAtMode mo1 = mode_of(*o1, left.tau2, o1->dim());
        const GaussianAtMode mo2 = mode_of(*o2, right.tau2, o2->dim());

        ModelState next;
        next.partition = st.partition;
        next.partition.cuts[static_cast<std::size_t>(j)] = new_pos;
        next.segments = st.segments;
        next.segments[static_cast<std::size_t>(j) - 1] = detail::unpack_params(theta1, left.tau2);
        next.segments[static_cast<std::size_t>(j)] = detail::unpack_params(theta2, right.tau2);

        const double dll = segment_loglik_packed(n1, theta1, cfg_.likelihood_off) +
                           segment_loglik_packed(n2, theta2, cfg_.likelihood_off) -
                           segment_loglik_packed(*o1, detail::pack_params(left), cfg_.likelihood_off) -
                           segment_loglik_packed(*o2, detail::pack_params(right), cfg_.likelihood_off);
        // tau2 priors cancel (unchanged); use the theta-only prior terms, whose
        // normalization matters because beta dimensions can differ.
        const double dprior =
            log_prior_partition(next.partition, pcfg_) - log_prior_partition(st.partition, pcfg_) +
            log_prior_theta(theta1, left.tau2) + log_prior_theta(theta2, right.tau2) -
            log_prior_theta(detail::pack_params(left), left.tau2) -
            log_prior_theta(detail::pack_params(right), right.tau2);

        // Moving a cutpoint can change which moves are feasible (and hence the
        // renormalized selection probabilities). All probabilities share one
        // renormalizer, so the within ratio (always positive) carries it.
        const MoveProbs fwd = move_probs(st);
        const MoveProbs rev = move_probs(next);
        const double log_select = std::log(rev.within) - std::log(fwd.within);

        const double log_q_fwd = relocate_pos_logpdf(cur, new_pos, lo + pcfg_.t_min,
                                                     hi - pcfg_.t_min) +
                                 mn1.logpdf(theta1) + mn2.logpdf(theta2);
        const double log_q_rev = relocate_pos_logpdf(new_pos, cur, lo + pcfg_.t_min,
                                                     hi - pcfg_.t_min) +
                                 mo1.logpdf(detail::pack_params(left)) +
                                 mo2.logpdf(detail::pack_params(right));
        return {std::move(next), dll + dprior + log_q_rev - log_q_fwd + log_select};
    }

    // --- stochastic moves ---

    bool try_birth(MoveStats& stats) {
        const ModelState& st = state_;
        std::vector<int> splittable;
        for (int s = 0; s < st.partition.num_segments(); ++s)
            if (st.partition.segment_length(s) >= 2 * pcfg_.t_min) splittable.push_back(s);
        if (splittable.empty() || st.partition.num_segments() >= pcfg_.max_segments) return false;
        ++stats.proposed;

        const int s = splittable[std::uniform_int_distribution<std::size_t>(
            0, splittable.size() - 1)(rng_)];
        const int lo = st.partition.cuts[static_cast<std::size_t>(s)];
        const int hi = st.partition.cuts[static_cast<std::size_t>(s) + 1];
        const int xi = std::uniform_int_distribution<int>(lo + pcfg_.t_min,
                                                          hi - pcfg_.t_min)(rng_);
        double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng_);
        u = std::clamp(u, 1e-12, 1.0 - 1e-12);
        const double tau2 = st.segments[static_cast<std::size_t>(s)].tau2;

        detail::SegmentData d1 = detail::make_segment_data(y_, lo, xi, cfg_.j_max);
        detail::SegmentData d2 = detail::make_segment_data(y_, xi, hi, cfg_.j_max);
        const GaussianAtMode m1 = mode_of(d1, tau2 * u / (1.0 - u), d1.dim());
        const GaussianAtMode m2 = mode_of(d2, tau2 * (1.0 - u) / u, d2.dim());
        if (!m1.converged || !m2.converged) return false;
        const Eigen::VectorXd theta1 = m1.sample(rng_);
        const Eigen::VectorXd theta2 = m2.sample(rng_);

        TransdimResult r = birth_log_accept(st, s, xi, u, theta1, theta2);
        if (accept(r.log_accept)) {
            state_ = std::move(r.proposed);
            seg_data_.insert(seg_data_.begin() + static_cast<std::ptrdiff_t>(s) + 1,
                             std::move(d2));
            seg_data_[static_cast<std::size_t>(s)] = std::move(d1);
            ++stats.accepted;
            return true;
        }
        return false;
    }

    bool try_death(MoveStats& stats) {
        const ModelState& st = state_;
        const int K = st.partition.num_segments();
        if (K <= 1) return false;
        ++stats.proposed;
        const int j = std::uniform_int_distribution<int>(1, K - 1)(rng_);
        const double tau2_m = std::sqrt(st.segments[static_cast<std::size_t>(j) - 1].tau2 *
                                        st.segments[static_cast<std::size_t>(j)].tau2);
        const int lo = st.partition.cuts[static_cast<std::size_t>(j) - 1];
        const int hi = st.partition.cuts[static_cast<std::size_t>(j) + 1];
        detail::SegmentData dm = detail::make_segment_data(y_, lo, hi, cfg_.j_max);
        const GaussianAtMode mm = mode_of(dm, tau2_m, dm.dim());
        if (!mm.converged) return false;
        const Eigen::VectorXd theta_m = mm.sample(rng_);

        TransdimResult r = death_log_accept(st, j, theta_m);
        if (accept(r.log_accept)) {
            state_ = std::move(r.proposed);
            seg_data_[static_cast<std::size_t>(j) - 1] = std::move(dm);
            seg_data_.erase(seg_data_.begin() + static_cast<std::ptrdiff_t>(j));
            ++stats.accepted;
            return true;
        }
        return false;
    }

    bool try_relocate(MoveStats& stats) {
        const ModelState& st = state_;
        const int K = st.partition.num_segments();
        if (K <= 1) return false;
        ++stats.proposed;
        const int j = std::uniform_int_distribution<int>(1, K - 1)(rng_);
        const int lo = st.partition.cuts[static_cast<std::size_t>(j) - 1] + pcfg_.t_min;
        const int hi = st.partition.cuts[static_cast<std::size_t>(j) + 1] - pcfg_.t_min;
        const int cur = st.partition.cuts[static_cast<std::size_t>(j)];
        int new_pos;
        if (std::uniform_real_distribution<double>(0.0, 1.0)(rng_) < cfg_.p_local_relocate) {
            const int a = std::max(lo, cur - cfg_.relocate_window);
            const int b = std::min(hi, cur + cfg_.relocate_window);
            new_pos = std::uniform_int_distribution<int>(a, b)(rng_);
        } else {
            new_pos = std::uniform_int_distribution<int>(lo, hi)(rng_);
        }

        detail::SegmentData n1 = detail::make_segment_data(
            y_, st.partition.cuts[static_cast<std::size_t>(j) - 1], new_pos, cfg_.j_max);
        detail::SegmentData n2 = detail::make_segment_data(
            y_, new_pos, st.partition.cuts[static_cast<std::size_t>(j) + 1], cfg_.j_max);
        const GaussianAtMode m1 =
            mode_of(n1, st.segments[static_cast<std::size_t>(j) - 1].tau2, n1.dim());
        const GaussianAtMode m2 =
            mode_of(n2, st.segments[static_cast<std::size_t>(j)].tau2, n2.dim());
        if (!m1.converged || !m2.converged) return false;
        const Eigen::VectorXd theta1 = m1.sample(rng_);
        const Eigen::VectorXd theta2 = m2.sample(rng_);

        TransdimResult r = relocate_log_accept(st, j, new_pos, theta1, theta2);
        if (accept(r.log_accept)) {
            state_ = std::move(r.proposed);
            seg_data_[static_cast<std::size_t>(j) - 1] = std::move(n1);
            seg_data_[static_cast<std::size_t>(j)] = std::move(n2);
            ++stats.accepted;
            return true;
        }
        return false;
    }

    // Per-segment independence-proposal MH on (alpha0, beta), a Gibbs draw of
    // tau2, then one relocate proposal.
    void update_within(MoveStats& theta_stats, MoveStats& relocate_stats) {
        const int K = state_.partition.num_segments();
        for (int s = 0; s < K; ++s) {
            SegmentParams& p = state_.segments[static_cast<std::size_t>(s)];
            const detail::SegmentData& d = seg_data_[static_cast<std::size_t>(s)];
            const Eigen::VectorXd cur = detail::pack_params(p);
            ++theta_stats.proposed;

            GaussianAtMode m;
            bool have_mode = true;
            try {
                m = mode_of(d, p.tau2, d.dim(), &cur);
            } catch (const std::runtime_error&) {
                have_mode = false;
            }
            Eigen::VectorXd prop;
            double log_q_diff = 0.0;  // log q(cur) - log q(prop)
            if (have_mode && m.converged) {
                prop = m.sample(rng_);
                log_q_diff = m.logpdf(cur) - m.logpdf(prop);
            } else {
                std::normal_distribution<double> stdnorm(0.0, 1.0);
                prop = cur;
                for (Eigen::Index i = 0; i < prop.size(); ++i)
                    prop(i) += cfg_.rw_step * stdnorm(rng_);
            }
            const double log_target_diff =
                segment_loglik_packed(d, prop, cfg_.likelihood_off) +
                log_prior_theta(prop, p.tau2) -
                segment_loglik_packed(d, cur, cfg_.likelihood_off) -
                log_prior_theta(cur, p.tau2);
            if (accept(log_target_diff + log_q_diff)) {
                p.alpha0 = prop(0);
                p.beta = prop.tail(prop.size() - 1);
                ++theta_stats.accepted;
            }

            // Gibbs: tau2 | beta ~ IG(a + J/2, b + beta'beta/2)
            const double shape = cfg_.prior.a_tau + 0.5 * static_cast<double>(p.beta.size());
            const double rate = cfg_.prior.b_tau + 0.5 * p.beta.squaredNorm();
            std::gamma_distribution<double> gamma(shape, 1.0);
            p.tau2 = rate / gamma(rng_);
        }
        if (K > 1) try_relocate(relocate_stats);
    }

    void step(PosteriorDraws& draws) {
        const MoveProbs p = move_probs(state_);
        const double v = std::uniform_real_distribution<double>(0.0, 1.0)(rng_);
        if (v < p.birth) {
            try_birth(draws.birth_stats);
        } else if (v < p.birth + p.death) {
            try_death(draws.death_stats);
        } else if (v < p.birth + p.death + p.relocate) {
            try_relocate(draws.relocate_stats);
        } else {
            update_within(draws.within_stats, draws.relocate_stats);
        }
    }

    PosteriorDraws run() {
        PosteriorDraws draws;
        draws.freq_grid = freq_grid_;
        draws.time_grid.resize(y_.size());
        for (std::size_t t = 0; t < y_.size(); ++t)
            draws.time_grid[t] = static_cast<int>(t) + 1;
        draws.k_counts.assign(static_cast<std::size_t>(pcfg_.max_segments) + 1, 0);
        if (cfg_.accumulate_spectrum) {
            draws.spectrum_sum.assign(y_.size() * freq_grid_.size(), 0.0);
            draws.spectrum_sumsq.assign(y_.size() * freq_grid_.size(), 0.0);
        }
        for (int i = 1; i <= cfg_.n_iter; ++i) {
            step(draws);
            if (i > cfg_.n_burn && (i - cfg_.n_burn) % cfg_.thin == 0) retain(draws);
        }
        return draws;
    }

    // Grid-frequency power rows of a state, one row of freq_grid.size() per segment.
    std::vector<std::vector<double>> segment_grid_power(const ModelState& st) const {
        std::vector<std::vector<double>> rows;
        rows.reserve(st.segments.size());
        for (int s = 0; s < st.partition.num_segments(); ++s) {
            const int n = st.partition.segment_length(s);
            const auto basis = build_basis(n, cfg_.j_max);
            const Eigen::VectorXd g =
                eval_log_spectrum(*basis, st.segments[static_cast<std::size_t>(s)]);
            std::vector<double> gv(g.data(), g.data() + g.size());
            std::vector<double> row(freq_grid_.size());
            for (std::size_t f = 0; f < freq_grid_.size(); ++f)
                row[f] = std::exp(interp_linear(basis->freqs, gv, freq_grid_[f]));
            rows.push_back(std::move(row));
        }
        return rows;
    }

private:
    void init_state() {
        state_.partition = Partition::single(static_cast<int>(y_.size()));
        seg_data_.clear();
        seg_data_.push_back(detail::make_segment_data(y_, 0, static_cast<int>(y_.size()),
                                                      cfg_.j_max));
        const detail::SegmentData& d = seg_data_.front();
        SegmentParams p;
        p.beta = Eigen::VectorXd::Zero(d.basis->design.cols());
        p.tau2 = 1.0;
        if (!cfg_.likelihood_off) {
            const double wsum = d.weights.sum();
            const double wmean = d.weights.dot(d.ords) / wsum;
            p.alpha0 = std::log(std::max(wmean, 1e-300));
        }
        state_.segments = {std::move(p)};
    }

    void rebuild_all_segment_data() {
        seg_data_.clear();
        for (int s = 0; s < state_.partition.num_segments(); ++s)
            seg_data_.push_back(detail::make_segment_data(
                y_, state_.partition.cuts[static_cast<std::size_t>(s)],
                state_.partition.cuts[static_cast<std::size_t>(s) + 1], cfg_.j_max));
    }

    bool has_splittable(const Partition& p) const {
        for (int s = 0; s < p.num_segments(); ++s)
            if (p.segment_length(s) >= 2 * pcfg_.t_min) return true;
        return false;
    }
    int count_splittable(const Partition& p) const {
        int n = 0;
        for (int s = 0; s < p.num_segments(); ++s)
            if (p.segment_length(s) >= 2 * pcfg_.t_min) ++n;
        return n;
    }

    // Mixture density of the relocate position proposal.
    double relocate_pos_logpdf(int from, int to, int lo, int hi) const {
        const int n_full = hi - lo + 1;
        const int a = std::max(lo, from - cfg_.relocate_window);
        const int b = std::min(hi, from + cfg_.relocate_window);
        double dens = (1.0 - cfg_.p_local_relocate) / n_full;
        if (to >= a && to <= b) dens += cfg_.p_local_relocate / (b - a + 1);
        return std::log(dens);
    }

    double log_prior_theta(const Eigen::VectorXd& theta, double tau2) const {
        const auto J = static_cast<double>(theta.size() - 1);
        return -0.5 * J * std::log(2.0 * std::numbers::pi * tau2) -
               theta.tail(theta.size() - 1).squaredNorm() / (2.0 * tau2) +
               log_normal_pdf(theta(0), cfg_.prior.sigma2_alpha);
    }

    GaussianAtMode mode_of(const detail::SegmentData& d, double tau2, Eigen::Index dim,
                           const Eigen::VectorXd* start = nullptr) const {
        require(dim == d.dim(), "mode_of: dimension mismatch");
        Eigen::VectorXd th0;
        if (start) {
            th0 = *start;
        } else {
            th0 = Eigen::VectorXd::Zero(d.dim());
            if (!cfg_.likelihood_off) {
                const double wmean = d.weights.dot(d.ords) / d.weights.sum();
                th0(0) = std::log(std::max(wmean, 1e-300));
            }
        }
        return conditional_mode(d, tau2, cfg_.prior, th0, cfg_.newton_tol, cfg_.newton_max_iter,
                                cfg_.likelihood_off);
    }

    std::shared_ptr<const detail::SegmentData> seg_data_for(const ModelState& st, int s) const {
        // The deterministic move cores may be called with the live state (use
        // the cache) or an arbitrary test state (rebuild on the fly).
        if (&st == &state_)
            return {&seg_data_[static_cast<std::size_t>(s)], [](const detail::SegmentData*) {}};
        return std::make_shared<detail::SegmentData>(detail::make_segment_data(
            y_, st.partition.cuts[static_cast<std::size_t>(s)],
            st.partition.cuts[static_cast<std::size_t>(s) + 1], cfg_.j_max));
    }

    bool accept(double log_ratio) {
        if (log_ratio >= 0.0) return true;
        return std::log(std::uniform_real_distribution<double>(0.0, 1.0)(rng_)) < log_ratio;
    }

    void retain(PosteriorDraws& draws) {
        ++draws.n_retained;
        draws.partitions.push_back(state_.partition.cuts);
        const int K = state_.partition.num_segments();
        ++draws.k_counts[static_cast<std::size_t>(K)];
        if (cfg_.store_states) draws.states.push_back(state_);
        if (!cfg_.accumulate_spectrum) return;
        const auto rows = segment_grid_power(state_);
        const std::size_t F = freq_grid_.size();
        for (int s = 0; s < K; ++s) {
            const auto& row = rows[static_cast<std::size_t>(s)];
            const int t0 = state_.partition.cuts[static_cast<std::size_t>(s)];
            const int t1 = state_.partition.cuts[static_cast<std::size_t>(s) + 1];
            for (int t = t0; t < t1; ++t) {
                double* sum = &draws.spectrum_sum[static_cast<std::size_t>(t) * F];
                double* ssq = &draws.spectrum_sumsq[static_cast<std::size_t>(t) * F];
                for (std::size_t f = 0; f < F; ++f) {
                    sum[f] += row[f];
                    ssq[f] += row[f] * row[f];
                }
            }
        }
    }

    std::vector<double> y_;
    SamplerConfig cfg_;
    PartitionConfig pcfg_;
    ModelState state_;
    std::vector<detail::SegmentData> seg_data_;
    Rng rng_;
    std::vector<double> freq_grid_;
};

inline PosteriorDraws run_chain(const TimeSeries& y, const SamplerConfig& cfg,
                                const PartitionConfig& pcfg,
                                const std::vector<double>& freq_grid = make_freq_grid()) {
    Sampler s(y, cfg, pcfg, freq_grid);
    return s.run();
}

inline TvSpectrum posterior_mean_spectrum(const PosteriorDraws& draws) {
    require(draws.n_retained >= 1, "posterior_mean_spectrum: no retained draws");
    require(!draws.spectrum_sum.empty(), "posterior_mean_spectrum: spectrum was not accumulated");
    TvSpectrum out;
    out.time_grid = draws.time_grid;
    out.freq_grid = draws.freq_grid;
    out.power.resize(draws.spectrum_sum.size());
    for (std::size_t i = 0; i < out.power.size(); ++i)
        out.power[i] = draws.spectrum_sum[i] / static_cast<double>(draws.n_retained);
    return out;
}

inline TvSpectrum posterior_variance_spectrum(const PosteriorDraws& draws) {
    require(draws.n_retained >= 1, "posterior_variance_spectrum: no retained draws");
    TvSpectrum out;
    out.time_grid = draws.time_grid;
    out.freq_grid = draws.freq_grid;
    out.power.resize(draws.spectrum_sum.size());
    const auto n = static_cast<double>(draws.n_retained);
    for (std::size_t i = 0; i < out.power.size(); ++i) {
        const double m = draws.spectrum_sum[i] / n;
        out.power[i] = std::max(draws.spectrum_sumsq[i] / n - m * m, 1e-300);
    }
    return out;
}

// Central credible band from the retained states (requires store_states).
// Returns {lower, upper} at the given central probability.
inline std::pair<TvSpectrum, TvSpectrum> posterior_band(const PosteriorDraws& draws,
                                                        const SamplerConfig& cfg,
                                                        double level = 0.9) {
    require(!draws.states.empty(), "posterior_band: requires stored states");
    require(level > 0.0 && level < 1.0, "posterior_band: level in (0,1)");
    const std::size_t F = draws.freq_grid.size();
    const std::size_t T = draws.time_grid.size();
    const std::size_t N = draws.states.size();

    // Per state: segment cut vector + per-segment grid-power rows.
    std::vector<std::vector<int>> cuts(N);
    std::vector<std::vector<std::vector<double>>> rows(N);
    for (std::size_t i = 0; i < N; ++i) {
        const ModelState& st = draws.states[i];
        cuts[i] = st.partition.cuts;
        rows[i].reserve(st.segments.size());
        for (int s = 0; s < st.partition.num_segments(); ++s) {
            const int n = st.partition.segment_length(s);
            const auto basis = build_basis(n, cfg.j_max);
            const Eigen::VectorXd g =
                eval_log_spectrum(*basis, st.segments[static_cast<std::size_t>(s)]);
            std::vector<double> gv(g.data(), g.data() + g.size());
            std::vector<double> row(F);
            for (std::size_t f = 0; f < F; ++f)
                row[f] = std::exp(interp_linear(basis->freqs, gv, draws.freq_grid[f]));
            rows[i].push_back(std::move(row));
        }
    }

    TvSpectrum lower, upper;
    lower.time_grid = upper.time_grid = draws.time_grid;
    lower.freq_grid = upper.freq_grid = draws.freq_grid;
    lower.power.resize(T * F);
    upper.power.resize(T * F);

    const auto lo_idx = static_cast<std::ptrdiff_t>((1.0 - level) / 2.0 * (N - 1) + 0.5);
    const auto hi_idx = static_cast<std::ptrdiff_t>((1.0 + level) / 2.0 * (N - 1) + 0.5);
    std::vector<std::size_t> seg_idx(N, 0);
    std::vector<double> vals(N);
    for (std::size_t t = 0; t < T; ++t) {
        for (std::size_t i = 0; i < N; ++i) {
            while (static_cast<int>(t) >= cuts[i][seg_idx[i] + 1]) ++seg_idx[i];
        }
        for (std::size_t f = 0; f < F; ++f) {
            for (std::size_t i = 0; i < N; ++i) vals[i] = rows[i][seg_idx[i]][f];
            std::nth_element(vals.begin(), vals.begin() + lo_idx, vals.end());
            lower.power[t * F + f] = vals[static_cast<std::size_t>(lo_idx)];
            std::nth_element(vals.begin(), vals.begin() + hi_idx, vals.end());
            upper.power[t * F + f] = vals[static_cast<std::size_t>(hi_idx)];
        }
    }
    return {std::move(lower), std::move(upper)};
}

}  // namespace specseg

#endif  // SPECSEG_RJMCMC_HPP_
