#include <catch2/catch_amalgamated.hpp>

#include "specseg/generators.hpp"
#include "specseg/rjmcmc.hpp"
#include "test_util.hpp"

using namespace specseg;
using Catch::Approx;

TEST_CASE("chains are bitwise deterministic given the seed") {
    Rng gen(555);
    const TimeSeries y = simulate_garch(GarchParams{0, 1, 0.1, 0.1}, 300, gen);

    SamplerConfig cfg;
    cfg.n_iter = 1200;
    cfg.n_burn = 300;
    cfg.thin = 5;
    cfg.j_max = 10;
    cfg.rng_seed = 42;
    PartitionConfig pcfg;

    const PosteriorDraws a = run_chain(y, cfg, pcfg);
    const PosteriorDraws b = run_chain(y, cfg, pcfg);
    REQUIRE(a.n_retained == b.n_retained);
    REQUIRE(a.k_counts == b.k_counts);
    REQUIRE(a.partitions == b.partitions);
    REQUIRE(a.spectrum_sum == b.spectrum_sum);  // bitwise

    cfg.rng_seed = 43;
    const PosteriorDraws c = run_chain(y, cfg, pcfg);
    CHECK((a.partitions != c.partitions || a.spectrum_sum != c.spectrum_sum));
}

TEST_CASE("prior-only chain recovers the exact partition prior") {
    // Likelihood disabled: the full reversible-jump kernel (birth, death,
    // relocate, within) must leave the enumerated prior invariant. This
    // certifies the Jacobians and proposal-density ratios jointly.
    Rng gen(777);
    const TimeSeries y = simulate_garch(GarchParams{0, 1, 0, 0}, 150, gen);

    SamplerConfig cfg;
    cfg.likelihood_off = true;
    cfg.n_iter = 400000;
    cfg.n_burn = 4000;
    cfg.thin = 80;  // heavy thinning so the chi-square tests see near-iid draws
    cfg.j_max = 5;
    cfg.store_states = false;
    cfg.accumulate_spectrum = false;
    cfg.rng_seed = 7;
    PartitionConfig pcfg;
    pcfg.t_min = 50;
    pcfg.max_segments = 4;

    const PosteriorDraws draws = run_chain(y, cfg, pcfg);
    REQUIRE(draws.n_retained == 4950);

    // support: K = 1 (1 partition), K = 2 (51), K = 3 (1); K = 4 infeasible.
    // Pr(K) is uniform over feasible K, cutpoints uniform given K.
    const auto parts = enumerate_partitions(150, pcfg);
    REQUIRE(parts.size() == 53u);

    const double n = static_cast<double>(draws.n_retained);
    std::vector<long> k_obs{draws.k_counts[1], draws.k_counts[2], draws.k_counts[3]};
    REQUIRE(k_obs[0] + k_obs[1] + k_obs[2] == draws.n_retained);
    const double p_k = testutil::chi2_gof_pvalue(k_obs, {1.0 / 3, 1.0 / 3, 1.0 / 3});
    INFO("K counts: " << k_obs[0] << " " << k_obs[1] << " " << k_obs[2]
                      << " p = " << p_k);
    CHECK(p_k > 0.001);

    // cutpoint location given K = 2 is discrete-uniform on [50, 100]
    std::vector<long> pos_counts(51, 0);
    for (const auto& cuts : draws.partitions)
        if (cuts.size() == 3) ++pos_counts[static_cast<std::size_t>(cuts[1] - 50)];
    const double p_pos =
        testutil::chi2_gof_pvalue(pos_counts, std::vector<double>(51, 1.0 / 51));
    INFO("cutpoint chi2 p = " << p_pos);
    CHECK(p_pos > 0.001);

    // sanity: every retained partition is in the enumerated support
    for (const auto& cuts : draws.partitions) {
        Partition p{150, cuts};
        CHECK_NOTHROW(p.validate(pcfg));
    }
    (void)n;
}

TEST_CASE("stationary series concentrates on a single segment") {
    // smooth AR(2) spectrum with phi2 = 0 behaves like an AR(1); the
    // homogeneous series should give Pr(K = 1) > 0.5.
    Rng gen(999);
    const int T = 1024;
    std::vector<double> f(static_cast<std::size_t>(T / 2) + 1);
    for (std::size_t k = 0; k < f.size(); ++k)
        f[k] = ar2_spectrum(0.5, 0.0, 1.0, {static_cast<double>(k) / T}).power[0];
    const TimeSeries y = synthesize_from_spectrum(f, T, gen);

    SamplerConfig cfg;
    cfg.n_iter = 2500;
    cfg.n_burn = 500;
    cfg.thin = 4;
    cfg.j_max = 15;
    cfg.store_states = false;
    cfg.rng_seed = 11;
    PartitionConfig pcfg;
    const PosteriorDraws draws = run_chain(y, cfg, pcfg);

    const double frac_k1 =
        static_cast<double>(draws.k_counts[1]) / static_cast<double>(draws.n_retained);
    INFO("Pr(K=1) = " << frac_k1);
    REQUIRE(frac_k1 > 0.5);

    // posterior mean spectrum tracks the truth at a few interior frequencies
    const TvSpectrum mean = posterior_mean_spectrum(draws);
    for (double p : mean.power) {
        REQUIRE(p > 0.0);
        REQUIRE(std::isfinite(p));
    }
    const std::size_t F = mean.freq_grid.size();
    for (std::size_t fi : {std::size_t(10), std::size_t(50), std::size_t(90)}) {
        const double truth =
            ar2_spectrum(0.5, 0.0, 1.0, {mean.freq_grid[fi]}).power[0];
        const double est = mean.at(static_cast<std::size_t>(T / 2), fi);
        CHECK(est == Approx(truth).epsilon(0.5));
    }
    (void)F;
}

TEST_CASE("posterior summaries are mutually consistent") {
    Rng gen(202);
    const TimeSeries y = simulate_garch(GarchParams{0, 1, 0, 0}, 400, gen);

    SamplerConfig cfg;
    cfg.n_iter = 1500;
    cfg.n_burn = 500;
    cfg.thin = 5;
    cfg.j_max = 10;
    cfg.rng_seed = 21;
    PartitionConfig pcfg;
    Sampler smp(y, cfg, pcfg);
    const PosteriorDraws draws = smp.run();
    REQUIRE(draws.n_retained == 200);
    REQUIRE(draws.states.size() == 200u);

    const TvSpectrum mean = posterior_mean_spectrum(draws);
    const TvSpectrum var = posterior_variance_spectrum(draws);
    const auto [lower, upper] = posterior_band(draws, cfg, 0.9);

    // recompute the mean directly from the stored states (independent path)
    const std::size_t F = draws.freq_grid.size();
    std::vector<double> direct(mean.power.size(), 0.0);
    for (const ModelState& st : draws.states) {
        const auto rows = smp.segment_grid_power(st);
        for (int s = 0; s < st.partition.num_segments(); ++s) {
            const int t0 = st.partition.cuts[static_cast<std::size_t>(s)];
            const int t1 = st.partition.cuts[static_cast<std::size_t>(s) + 1];
            for (int t = t0; t < t1; ++t)
                for (std::size_t fi = 0; fi < F; ++fi)
                    direct[static_cast<std::size_t>(t) * F + fi] +=
                        rows[static_cast<std::size_t>(s)][fi];
        }
    }
    for (std::size_t i = 0; i < direct.size(); ++i) {
        direct[i] /= static_cast<double>(draws.n_retained);
        REQUIRE(mean.power[i] == Approx(direct[i]).margin(1e-12));
        REQUIRE(var.power[i] >= 0.0);
        REQUIRE(lower.power[i] > 0.0);
        REQUIRE(lower.power[i] <= upper.power[i]);
    }

    // the white-noise truth (flat at 1) is broadly covered by the 90% band
    std::size_t covered = 0, total = 0;
    for (std::size_t i = 0; i < lower.power.size(); ++i) {
        ++total;
        if (lower.power[i] <= 1.0 && 1.0 <= upper.power[i]) ++covered;
    }
    CHECK(static_cast<double>(covered) / static_cast<double>(total) > 0.6);
}

TEST_CASE("freq grid construction") {
    const std::vector<double> g = make_freq_grid(101);
    REQUIRE(g.size() == 101u);
    CHECK(g.front() == 0.0);
    CHECK(g.back() == Approx(0.5));
    CHECK(g[50] == Approx(0.25));
}
