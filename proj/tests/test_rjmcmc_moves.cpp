#include <catch2/catch_amalgamated.hpp>

#include "specseg/generators.hpp"
#include "specseg/rjmcmc.hpp"
#include "test_util.hpp"

using namespace specseg;
using Catch::Approx;

namespace {

TimeSeries test_series(int T, std::uint64_t seed) {
    Rng rng(seed);
    return simulate_garch(GarchParams{0.0, 1.0, 0.1, 0.1}, T, rng);
}

Eigen::VectorXd random_theta(Eigen::Index dim, Rng& rng) {
    std::normal_distribution<double> norm(0.0, 0.3);
    Eigen::VectorXd th(dim);
    for (Eigen::Index i = 0; i < dim; ++i) th(i) = norm(rng);
    return th;
}

}  // namespace

TEST_CASE("segment_loglik composes periodogram, basis and whittle pieces") {
    const TimeSeries y = test_series(64, 3);
    const auto basis = build_basis(64, 8);
    SegmentParams p;
    p.alpha0 = 0.4;
    p.beta = Eigen::VectorXd::Constant(basis->num_basis(), 0.1);

    const double got = segment_loglik(y, p, *basis);

    // independent recomputation from the public spectral primitives
    const Periodogram pg = segment_periodogram(y.values, 0, y.size());
    const Eigen::VectorXd g = eval_log_spectrum(*basis, p);
    const double expected = whittle_loglik(pg, std::vector<double>(g.data(), g.data() + g.size()));
    REQUIRE(got == Approx(expected).margin(1e-10));
}

TEST_CASE("conditional mode solves the stationarity condition") {
    const TimeSeries y = test_series(64, 11);
    const auto d = detail::make_segment_data(y.values, 0, 64, 4);
    const PriorConfig prior;
    const double tau2 = 0.5;
    const GaussianAtMode m =
        conditional_mode(d, tau2, prior, Eigen::VectorXd::Zero(d.dim()), 1e-10);
    REQUIRE(m.converged);

    auto objective = [&](const Eigen::VectorXd& th) {
        double pen = th(0) * th(0) / (2.0 * prior.sigma2_alpha);
        pen += th.tail(th.size() - 1).squaredNorm() / (2.0 * tau2);
        return segment_loglik_packed(d, th) - pen;
    };

    // numerical gradient vanishes at the mode
    const double h = 1e-5;
    for (Eigen::Index i = 0; i < m.mode.size(); ++i) {
        Eigen::VectorXd up = m.mode, dn = m.mode;
        up(i) += h;
        dn(i) -= h;
        const double grad = (objective(up) - objective(dn)) / (2.0 * h);
        REQUIRE(std::abs(grad) < 1e-4);
    }

    // the mode is a local maximum
    Rng rng(5);
    std::normal_distribution<double> norm;
    const double at_mode = objective(m.mode);
    for (int rep = 0; rep < 20; ++rep) {
        Eigen::VectorXd pert = m.mode;
        for (Eigen::Index i = 0; i < pert.size(); ++i) pert(i) += 0.01 * norm(rng);
        REQUIRE(objective(pert) <= at_mode + 1e-12);
    }
}

TEST_CASE("negative Hessian at the mode matches finite differences") {
    const TimeSeries y = test_series(64, 13);
    const auto d = detail::make_segment_data(y.values, 0, 64, 4);
    const PriorConfig prior;
    const double tau2 = 1.0;
    const GaussianAtMode m =
        conditional_mode(d, tau2, prior, Eigen::VectorXd::Zero(d.dim()), 1e-10);
    REQUIRE(m.converged);
    const Eigen::MatrixXd H = m.prec_chol * m.prec_chol.transpose();

    auto objective = [&](const Eigen::VectorXd& th) {
        double pen = th(0) * th(0) / (2.0 * prior.sigma2_alpha);
        pen += th.tail(th.size() - 1).squaredNorm() / (2.0 * tau2);
        return segment_loglik_packed(d, th) - pen;
    };
    const double h = 1e-4;
    const Eigen::Index n = m.mode.size();
    Eigen::MatrixXd fd(n, n);
    const double f0 = objective(m.mode);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j <= i; ++j) {
            Eigen::VectorXd pp = m.mode, pm = m.mode, mp = m.mode, mm = m.mode;
            if (i == j) {
                pp(i) += h;
                mm(i) -= h;
                fd(i, i) = -(objective(pp) - 2.0 * f0 + objective(mm)) / (h * h);
            } else {
                pp(i) += h; pp(j) += h;
                pm(i) += h; pm(j) -= h;
                mp(i) -= h; mp(j) += h;
                mm(i) -= h; mm(j) -= h;
                fd(i, j) = -(objective(pp) - objective(pm) - objective(mp) + objective(mm)) /
                           (4.0 * h * h);
                fd(j, i) = fd(i, j);
            }
        }
    }
    REQUIRE((fd - H).norm() / H.norm() < 1e-4);
}

TEST_CASE("conditional mode with the likelihood disabled is the prior mode") {
    const TimeSeries y = test_series(64, 17);
    const auto d = detail::make_segment_data(y.values, 0, 64, 4);
    const PriorConfig prior;
    const GaussianAtMode m = conditional_mode(d, 2.0, prior, Eigen::VectorXd::Ones(d.dim()),
                                              1e-10, 100, /*likelihood_off=*/true);
    REQUIRE(m.converged);
    CHECK(m.mode.lpNorm<Eigen::Infinity>() < 1e-8);
    const Eigen::MatrixXd H = m.prec_chol * m.prec_chol.transpose();
    CHECK(H(0, 0) == Approx(1.0 / prior.sigma2_alpha));
    for (Eigen::Index i = 1; i < H.rows(); ++i) CHECK(H(i, i) == Approx(0.5));
}

TEST_CASE("GaussianAtMode sample and logpdf are mutually consistent") {
    // diagonal precision: component variances and the closed-form density
    GaussianAtMode g;
    g.mode = Eigen::VectorXd::Zero(3);
    g.mode << 1.0, -2.0, 0.5;
    Eigen::MatrixXd prec = Eigen::MatrixXd::Zero(3, 3);
    prec.diagonal() << 4.0, 1.0, 0.25;
    g.prec_chol = Eigen::LLT<Eigen::MatrixXd>(prec).matrixL();

    // logpdf at the mode = 0.5 log det(prec) - (d/2) log 2 pi
    const double expected_peak =
        0.5 * std::log(4.0 * 1.0 * 0.25) - 1.5 * std::log(2.0 * std::numbers::pi);
    CHECK(g.logpdf(g.mode) == Approx(expected_peak).margin(1e-12));

    Rng rng(23);
    const int n = 200000;
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(3), var = Eigen::VectorXd::Zero(3);
    for (int i = 0; i < n; ++i) {
        const Eigen::VectorXd x = g.sample(rng);
        mean += x;
        var += (x - g.mode).cwiseAbs2();
    }
    mean /= n;
    var /= n;
    for (int i = 0; i < 3; ++i) {
        CHECK(mean(i) == Approx(g.mode(i)).margin(0.02));
        CHECK(var(i) == Approx(1.0 / prec(i, i)).epsilon(0.02));
    }
}

TEST_CASE("birth proposal splits tau2 by the mass-preserving rule") {
    const TimeSeries y = test_series(300, 31);
    SamplerConfig cfg;
    cfg.j_max = 8;
    PartitionConfig pcfg;
    Sampler smp(y, cfg, pcfg);

    ModelState st;
    st.partition = Partition::single(300);
    SegmentParams p;
    p.alpha0 = 0.1;
    p.beta = Eigen::VectorXd::Zero(8);
    p.tau2 = 0.9;
    st.segments = {p};

    Rng rng(7);
    const double u = 0.3;
    const Eigen::VectorXd th1 = random_theta(9, rng);
    const Eigen::VectorXd th2 = random_theta(9, rng);
    const auto r = smp.birth_log_accept(st, 0, 140, u, th1, th2);
    REQUIRE(r.proposed.partition.cuts == std::vector<int>({0, 140, 300}));
    CHECK(r.proposed.segments[0].tau2 == Approx(0.9 * u / (1.0 - u)));
    CHECK(r.proposed.segments[1].tau2 == Approx(0.9 * (1.0 - u) / u));
    // the implied merge recovers the parent smoothing variance
    CHECK(std::sqrt(r.proposed.segments[0].tau2 * r.proposed.segments[1].tau2) == Approx(0.9));
}

TEST_CASE("birth and death log acceptance ratios are exact inverses") {
    const TimeSeries y = test_series(300, 37);
    SamplerConfig cfg;
    cfg.j_max = 8;
    PartitionConfig pcfg;
    Sampler smp(y, cfg, pcfg);

    Rng rng(41);
    for (const double u : {0.5, 0.3, 0.8}) {
        ModelState st;
        st.partition = Partition::single(300);
        SegmentParams p;
        p.alpha0 = 0.2;
        p.beta = 0.1 * random_theta(8, rng);
        p.tau2 = 1.3;
        st.segments = {p};

        const Eigen::VectorXd th1 = random_theta(9, rng);
        const Eigen::VectorXd th2 = random_theta(9, rng);
        const auto fwd = smp.birth_log_accept(st, 0, 150, u, th1, th2);
        const auto rev = smp.death_log_accept(fwd.proposed, 1, detail::pack_params(p));
        REQUIRE(fwd.log_accept + rev.log_accept == Approx(0.0).margin(1e-8));
        REQUIRE(rev.proposed.partition.cuts == st.partition.cuts);
        REQUIRE(rev.proposed.segments[0].tau2 == Approx(p.tau2).margin(1e-12));
        REQUIRE((detail::pack_params(rev.proposed.segments[0]) - detail::pack_params(p))
                    .lpNorm<Eigen::Infinity>() < 1e-12);
    }
}

TEST_CASE("birth/death reversibility from a multi-segment state") {
    const TimeSeries y = test_series(400, 43);
    SamplerConfig cfg;
    cfg.j_max = 6;
    PartitionConfig pcfg;
    Sampler smp(y, cfg, pcfg);

    Rng rng(47);
    ModelState st;
    st.partition = Partition{400, {0, 120, 400}};
    SegmentParams a, b;
    a.alpha0 = -0.1;
    a.beta = 0.1 * random_theta(6, rng);
    a.tau2 = 0.6;
    b.alpha0 = 0.3;
    b.beta = 0.1 * random_theta(6, rng);
    b.tau2 = 2.1;
    st.segments = {a, b};

    // split the second segment (length 280) at 260
    const Eigen::VectorXd th1 = random_theta(7, rng);
    const Eigen::VectorXd th2 = random_theta(7, rng);
    const auto fwd = smp.birth_log_accept(st, 1, 260, 0.4, th1, th2);
    REQUIRE(fwd.proposed.partition.cuts == std::vector<int>({0, 120, 260, 400}));
    const auto rev = smp.death_log_accept(fwd.proposed, 2, detail::pack_params(b));
    REQUIRE(fwd.log_accept + rev.log_accept == Approx(0.0).margin(1e-8));
    REQUIRE(rev.proposed.partition.cuts == st.partition.cuts);
}

TEST_CASE("relocate reversibility and the identity proposal") {
    const TimeSeries y = test_series(300, 53);
    SamplerConfig cfg;
    cfg.j_max = 6;
    PartitionConfig pcfg;
    Sampler smp(y, cfg, pcfg);

    Rng rng(59);
    ModelState st;
    st.partition = Partition{300, {0, 130, 300}};
    SegmentParams a, b;
    a.alpha0 = 0.0;
    a.beta = 0.1 * random_theta(6, rng);
    a.tau2 = 1.0;
    b.alpha0 = 0.1;
    b.beta = 0.1 * random_theta(6, rng);
    b.tau2 = 0.8;
    st.segments = {a, b};

    // identity relocate with the current parameters accepts with probability one
    const auto ident = smp.relocate_log_accept(st, 1, 130, detail::pack_params(a),
                                               detail::pack_params(b));
    REQUIRE(ident.log_accept == Approx(0.0).margin(1e-10));

    const Eigen::VectorXd th1 = random_theta(7, rng);
    const Eigen::VectorXd th2 = random_theta(7, rng);
    const auto fwd = smp.relocate_log_accept(st, 1, 145, th1, th2);
    REQUIRE(fwd.proposed.partition.cuts == std::vector<int>({0, 145, 300}));
    const auto rev = smp.relocate_log_accept(fwd.proposed, 1, 130, detail::pack_params(a),
                                             detail::pack_params(b));
    REQUIRE(fwd.log_accept + rev.log_accept == Approx(0.0).margin(1e-8));
    REQUIRE(rev.proposed.partition.cuts == st.partition.cuts);
}

TEST_CASE("within-model sweep with the likelihood disabled samples the prior") {
    // With the likelihood off the theta proposal equals the conditional prior
    // (accept ratio 1) and the tau2 Gibbs step is conjugate, so the chain's
    // stationary law is exactly the prior: 1/tau2 ~ Exp(1) and
    // beta'beta / tau2 ~ chi^2_J.
    const TimeSeries y = test_series(300, 61);
    SamplerConfig cfg;
    cfg.likelihood_off = true;
    cfg.p_birth = cfg.p_death = cfg.p_relocate = 0.0;
    cfg.p_within = 1.0;
    cfg.n_iter = 40000;
    cfg.n_burn = 1000;
    cfg.thin = 1;
    cfg.store_states = true;
    cfg.accumulate_spectrum = false;
    cfg.rng_seed = 99;
    PartitionConfig pcfg;
    PosteriorDraws draws = run_chain(y, cfg, pcfg);

    REQUIRE(draws.n_retained == 39000);
    REQUIRE(draws.k_counts[1] == 39000);
    CHECK(draws.within_stats.rate() > 0.999);  // exact conditional proposal

    double inv_tau2 = 0.0, quad = 0.0, alpha2 = 0.0;
    double J = 0.0;
    for (const ModelState& st : draws.states) {
        const SegmentParams& p = st.segments[0];
        inv_tau2 += 1.0 / p.tau2;
        quad += p.beta.squaredNorm() / p.tau2;
        alpha2 += p.alpha0 * p.alpha0;
        J = static_cast<double>(p.beta.size());
    }
    const double n = static_cast<double>(draws.states.size());
    CHECK(inv_tau2 / n == Approx(1.0).epsilon(0.02));   // E[1/tau2] under IG(1,1)
    CHECK(quad / n == Approx(J).epsilon(0.03));         // chi^2_J mean
    CHECK(alpha2 / n == Approx(100.0).epsilon(0.05));   // alpha0 ~ N(0, 100)
}

TEST_CASE("move probabilities adapt to feasibility") {
    const TimeSeries y = test_series(300, 67);
    SamplerConfig cfg;
    cfg.j_max = 6;
    PartitionConfig pcfg;
    Sampler smp(y, cfg, pcfg);

    // K = 1: no death/relocate, birth and within renormalized
    ModelState k1;
    k1.partition = Partition::single(300);
    SegmentParams p;
    p.beta = Eigen::VectorXd::Zero(6);
    k1.segments = {p};
    const auto p1 = smp.move_probs(k1);
    CHECK(p1.death == 0.0);
    CHECK(p1.relocate == 0.0);
    CHECK(p1.birth == Approx(0.25 / 0.55));
    CHECK(p1.within == Approx(0.30 / 0.55));

    // short series where no segment can be split: birth is also off
    ModelState k2;
    k2.partition = Partition{300, {0, 70, 140, 230, 300}};  // all segments < 100
    k2.segments = {p, p, p, p};
    const auto p2 = smp.move_probs(k2);
    CHECK(p2.birth == 0.0);
    CHECK(p2.death + p2.relocate + p2.within == Approx(1.0));

    ModelState k3;
    k3.partition = Partition{300, {0, 150, 300}};  // splittable segments exist
    k3.segments = {p, p};
    const auto p3 = smp.move_probs(k3);
    CHECK(p3.birth == Approx(0.25));
    CHECK(p3.death == Approx(0.25));
    CHECK(p3.relocate == Approx(0.20));
    CHECK(p3.within == Approx(0.30));
}

TEST_CASE("sampler configuration validation") {
    SamplerConfig bad;
    bad.p_birth = 0.5;  // probabilities no longer sum to one
    const TimeSeries y = test_series(100, 71);
    CHECK_THROWS_AS(Sampler(y, bad, PartitionConfig{}), std::invalid_argument);

    SamplerConfig ok;
    const TimeSeries tiny = test_series(10, 73);
    CHECK_THROWS_AS(Sampler(tiny, ok, PartitionConfig{}), std::invalid_argument);
}
