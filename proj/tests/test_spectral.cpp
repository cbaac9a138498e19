#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "specseg/generators.hpp"
#include "specseg/spectral.hpp"
#include "test_util.hpp"

using namespace specseg;
using Catch::Approx;

TEST_CASE("dft of constant series puts all power at frequency zero") {
    TimeSeries y{{1, 1, 1, 1}, ""};
    const FourierCoeffs c = dft(y);
    const double mod0 = std::hypot(c.real_part[0], c.imag_part[0]);
    CHECK(mod0 == Approx(2.0).margin(1e-12));
    for (std::size_t k = 1; k < 4; ++k)
        CHECK(std::hypot(c.real_part[k], c.imag_part[k]) == Approx(0.0).margin(1e-12));
}

TEST_CASE("dft of alternating series puts all power at Nyquist") {
    TimeSeries y{{1, -1, 1, -1}, ""};
    const FourierCoeffs c = dft(y);
    for (std::size_t k = 0; k < 4; ++k) {
        const double mod = std::hypot(c.real_part[k], c.imag_part[k]);
        if (k == 2) CHECK(mod == Approx(2.0).margin(1e-12));
        else CHECK(mod == Approx(0.0).margin(1e-12));
    }
}

TEST_CASE("dft rejects series shorter than 2") {
    CHECK_THROWS_AS(dft(TimeSeries{{1.0}, ""}), std::invalid_argument);
}

TEST_CASE("fft matches the direct-sum oracle to 1e-10") {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> norm;
    for (int n : {16, 37, 100, 255}) {
        TimeSeries y;
        for (int t = 0; t < n; ++t) y.values.push_back(norm(rng));
        const FourierCoeffs fast = dft(y);
        const FourierCoeffs slow = testutil::dft_direct(y.values);
        for (int k = 0; k < n; ++k) {
            REQUIRE(fast.real_part[static_cast<std::size_t>(k)] ==
                    Approx(slow.real_part[static_cast<std::size_t>(k)]).margin(1e-10));
            REQUIRE(fast.imag_part[static_cast<std::size_t>(k)] ==
                    Approx(slow.imag_part[static_cast<std::size_t>(k)]).margin(1e-10));
        }
    }
}

TEST_CASE("conjugate symmetry of real-series coefficients") {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> norm;
    for (int n : {64, 101}) {
        TimeSeries y;
        for (int t = 0; t < n; ++t) y.values.push_back(norm(rng));
        const FourierCoeffs c = dft(y);
        CHECK(std::abs(c.imag_part[0]) < 1e-10);
        if (n % 2 == 0) CHECK(std::abs(c.imag_part[static_cast<std::size_t>(n / 2)]) < 1e-10);
        for (int k = 1; k < n; ++k) {
            CHECK(c.real_part[static_cast<std::size_t>(n - k)] ==
                  Approx(c.real_part[static_cast<std::size_t>(k)]).margin(1e-10));
            CHECK(c.imag_part[static_cast<std::size_t>(n - k)] ==
                  Approx(-c.imag_part[static_cast<std::size_t>(k)]).margin(1e-10));
        }
    }
}

TEST_CASE("Parseval identity holds to 1e-8 relative") {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> norm;
    for (int rep = 0; rep < 20; ++rep) {
        const int n = 64 + rep * 48;
        TimeSeries y;
        double ss = 0.0;
        for (int t = 0; t < n; ++t) {
            y.values.push_back(norm(rng));
            ss += y.values.back() * y.values.back();
        }
        const FourierCoeffs c = dft(y);
        double coef = 0.0;
        for (int k = 0; k < n; ++k)
            coef += c.real_part[static_cast<std::size_t>(k)] * c.real_part[static_cast<std::size_t>(k)] +
                    c.imag_part[static_cast<std::size_t>(k)] * c.imag_part[static_cast<std::size_t>(k)];
        REQUIRE(coef == Approx(ss).epsilon(1e-8));
    }
}

TEST_CASE("periodogram of trivial series") {
    const Periodogram p1 = periodogram(TimeSeries{{1, 1, 1, 1}, ""});
    CHECK(p1.ordinates[0] == Approx(4.0).margin(1e-12));
    CHECK(p1.ordinates[1] == Approx(0.0).margin(1e-12));
    CHECK(p1.ordinates[2] == Approx(0.0).margin(1e-12));

    const Periodogram p2 = periodogram(TimeSeries{{1, -1, 1, -1}, ""});
    CHECK(p2.ordinates[2] == Approx(4.0).margin(1e-12));
    CHECK(p2.ordinates[0] == Approx(0.0).margin(1e-12));
    CHECK(p2.freqs[2] == Approx(0.5));
}

TEST_CASE("mean periodogram of a flat spectrum is the spectrum") {
    // Monte Carlo: mean I(nu_k) = 1.0 +- 0.03 at interior frequencies.
    Rng rng(17);
    const int n = 128;
    const int reps = 10000;
    std::vector<double> acc(static_cast<std::size_t>(n / 2) + 1, 0.0);
    std::vector<double> flat(static_cast<std::size_t>(n / 2) + 1, 1.0);
    for (int r = 0; r < reps; ++r) {
        const TimeSeries y = synthesize_from_spectrum(flat, n, rng);
        const Periodogram pg = periodogram(y);
        for (std::size_t k = 0; k < acc.size(); ++k) acc[k] += pg.ordinates[k];
    }
    for (std::size_t k = 1; k < acc.size() - 1; ++k)
        REQUIRE(acc[k] / reps == Approx(1.0).margin(0.03));
}

TEST_CASE("whittle loglik closed forms") {
    Periodogram pg;
    pg.series_length = 7;  // odd: all weights 1
    pg.freqs = {0.0, 1.0 / 7, 2.0 / 7, 3.0 / 7};
    pg.ordinates = {0.0, 1.0, 1.0, 1.0};
    CHECK(whittle_loglik(pg, {0.0, 0.0, 0.0}) == Approx(-3.0));

    Periodogram pg2;
    pg2.series_length = 5;
    pg2.freqs = {0.0, 0.2, 0.4};
    pg2.ordinates = {0.0, 2.0, 2.0};
    CHECK(whittle_loglik(pg2, {std::log(2.0), std::log(2.0)}) ==
          Approx(-2.0 * (std::log(2.0) + 1.0)));

    CHECK_THROWS_AS(whittle_loglik(pg, {0.0}), std::invalid_argument);
}

TEST_CASE("constant-g maximizer of whittle loglik is log weighted mean") {
    Rng rng(5);
    const TimeSeries y = simulate_garch(GarchParams{0, 1, 0, 0}, 200, rng);
    const Periodogram pg = periodogram(y);
    const std::vector<double> w = whittle_weights(pg);
    double wsum = 0.0, wmean = 0.0;
    for (std::size_t k = 0; k < w.size(); ++k) {
        wsum += w[k];
        wmean += w[k] * pg.ordinates[k + 1];
    }
    wmean /= wsum;
    const double g_star = std::log(wmean);
    // numeric argmax over a fine grid brackets the analytic maximizer
    double best_g = 0.0, best_ll = -1e300;
    for (double g = g_star - 1.0; g <= g_star + 1.0; g += 1e-4) {
        const double ll = whittle_loglik(pg, std::vector<double>(w.size(), g));
        if (ll > best_ll) {
            best_ll = ll;
            best_g = g;
        }
    }
    CHECK(best_g == Approx(g_star).margin(2e-4));
}

TEST_CASE("whittle loglik is strictly concave in a constant offset") {
    Rng rng(23);
    const TimeSeries y = simulate_garch(GarchParams{0, 1, 0, 0}, 128, rng);
    const Periodogram pg = periodogram(y);
    const std::size_t m = pg.freqs.size() - 1;
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    for (int rep = 0; rep < 10; ++rep) {
        std::vector<double> g(m);
        for (double& v : g) v = unif(rng);
        auto at = [&](double c) {
            std::vector<double> gc = g;
            for (double& v : gc) v += c;
            return whittle_loglik(pg, gc);
        };
        const double h = 1e-4;
        const double second = (at(h) - 2.0 * at(0.0) + at(-h)) / (h * h);
        REQUIRE(second < 0.0);
    }
}

TEST_CASE("interior periodogram ordinates of white noise are Exp(mean f)") {
    // 2 I(nu_k)/sigma^2 ~ Exp(mean 2): pooled KS below the 1% critical value.
    Rng rng(29);
    std::vector<double> pool;
    const int n = 256;
    while (pool.size() < 10000) {
        const TimeSeries y = simulate_garch(GarchParams{0, 1, 0, 0}, n, rng);
        const Periodogram pg = periodogram(y);
        for (std::size_t k = 1; k < pg.freqs.size() - 1; ++k) pool.push_back(pg.ordinates[k]);
    }
    pool.resize(10000);
    const double d = testutil::ks_statistic_exp1(pool);
    REQUIRE(d < testutil::ks_critical_1pct(pool.size()));
}

TEST_CASE("mean of log Exp(1) draws is -gamma") {
    Rng rng(31);
    std::exponential_distribution<double> expo(1.0);
    double acc = 0.0;
    const int n = 1000000;
    for (int i = 0; i < n; ++i) acc += std::log(expo(rng));
    CHECK(acc / n == Approx(-0.5772).margin(0.01));
}

TEST_CASE("garch flat spectrum levels") {
    const std::vector<double> grid{0.0, 0.1, 0.25, 0.5};
    CHECK(garch_flat_spectrum(GarchParams{0, 1, 0.1, 0.1}.sigma2_uc(), grid).power[0] ==
          Approx(1.25));
    CHECK(garch_flat_spectrum(GarchParams{0, 1, 0, 0}.sigma2_uc(), grid).power[2] == Approx(1.0));
    CHECK(garch_flat_spectrum(GarchParams{0, 1, 0.3, 0.2}.sigma2_uc(), grid).power[3] ==
          Approx(2.0));
    CHECK_THROWS_AS(garch_flat_spectrum(-1.0, grid), std::invalid_argument);
}

TEST_CASE("ar2 spectrum closed forms and variance integral") {
    const std::vector<double> flat_grid{0.0, 0.25, 0.5};
    const SpectrumCurve flat = ar2_spectrum(0.0, 0.0, 1.0, flat_grid);
    for (double p : flat.power) CHECK(p == Approx(1.0));

    CHECK(ar2_spectrum(0.9, 0.0, 1.0, {0.0}).power[0] == Approx(100.0));
    CHECK_THROWS_AS(ar2_spectrum(1.2, 0.0, 1.0, flat_grid), std::invalid_argument);

    // integral over (-1/2, 1/2) equals the Yule-Walker process variance
    const double phi1 = 0.9, phi2 = -0.2;
    const int nq = 20000;
    double integral = 0.0;
    for (int i = 0; i < nq; ++i) {
        const double nu = (i + 0.5) * 0.5 / nq;
        integral += 2.0 * ar2_spectrum(phi1, phi2, 1.0, {nu}).power[0] * (0.5 / nq);
    }
    CHECK(integral == Approx(ar2_variance(phi1, phi2, 1.0)).epsilon(1e-4));
}

TEST_CASE("periodogram modulus is invariant to circular relabeling") {
    std::mt19937_64 rng(41);
    std::normal_distribution<double> norm;
    TimeSeries y;
    for (int t = 0; t < 64; ++t) y.values.push_back(norm(rng));
    TimeSeries rotated = y;
    std::rotate(rotated.values.begin(), rotated.values.begin() + 13, rotated.values.end());
    const Periodogram a = periodogram(y);
    const Periodogram b = periodogram(rotated);
    for (std::size_t k = 0; k < a.ordinates.size(); ++k)
        CHECK(a.ordinates[k] == Approx(b.ordinates[k]).margin(1e-9));
}
