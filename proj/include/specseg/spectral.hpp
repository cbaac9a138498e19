#ifndef SPECSEG_SPECTRAL_HPP_
#define SPECSEG_SPECTRAL_HPP_

// Frequency-domain primitives: DFT, periodogram, Whittle log-likelihood and
// analytic reference spectra. All functions are pure; the FFT plan cache is
// internally synchronized.

#include <algorithm>
#include <complex>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <vector>

#include <fftw3.h>

#include "specseg/common.hpp"

namespace specseg {

struct TimeSeries {
    std::vector<double> values;
    std::string origin_label;

    std::size_t size() const { return values.size(); }

    void validate() const {
        require(!values.empty(), "TimeSeries: length must be >= 1");
        require(all_finite(values), "TimeSeries: all values must be finite");
    }
};

struct FourierCoeffs {
    std::vector<double> real_part;
    std::vector<double> imag_part;
};

struct Periodogram {
    std::vector<double> freqs;      // nu_k = k/n, k = 0..floor(n/2)
    std::vector<double> ordinates;  // I(nu_k) >= 0
    std::size_t series_length = 0;  // n of the originating series
};

struct SpectrumCurve {
    std::vector<double> freqs;  // in [0, 0.5], strictly increasing
    std::vector<double> power;  // > 0

    void validate() const {
        require(freqs.size() == power.size(), "SpectrumCurve: size mismatch");
        require(!freqs.empty(), "SpectrumCurve: empty");
        for (std::size_t i = 0; i < freqs.size(); ++i) {
            require(freqs[i] >= 0.0 && freqs[i] <= 0.5, "SpectrumCurve: freq outside [0,0.5]");
            if (i > 0) require(freqs[i] > freqs[i - 1], "SpectrumCurve: freqs not increasing");
            require(power[i] > 0.0 && std::isfinite(power[i]), "SpectrumCurve: nonpositive power");
        }
    }
};

// time x frequency grid of power values.
struct TvSpectrum {
    std::vector<int> time_grid;      // 1..T
    std::vector<double> freq_grid;   // in [0, 0.5]
    std::vector<double> power;       // row-major, time_grid.size() x freq_grid.size()

    double& at(std::size_t t, std::size_t f) { return power[t * freq_grid.size() + f]; }
    double at(std::size_t t, std::size_t f) const { return power[t * freq_grid.size() + f]; }

    void validate() const {
        require(power.size() == time_grid.size() * freq_grid.size(),
                "TvSpectrum: grid/matrix dimension mismatch");
        for (double p : power)
            require(p > 0.0 && std::isfinite(p), "TvSpectrum: entries must be positive finite");
    }
};

namespace detail {

// Cached FFTW plans keyed by length. FFTW's planner is not thread-safe, and we
// reuse the in/out buffers bound to each plan, so execution holds the lock too.
class FftEngine {
public:
    static FftEngine& instance() {
        static FftEngine e;
        return e;
    }

    // Forward complex DFT, no normalization: X_k = sum_{t=0}^{n-1} y_t e^{-2pi i k t/n}.
    std::vector<std::complex<double>> forward(const std::vector<double>& y) {
        const std::size_t n = y.size();
        std::lock_guard<std::mutex> lk(mu_);
        Plan& p = plan(n, FFTW_FORWARD);
        for (std::size_t t = 0; t < n; ++t) {
            p.in[t][0] = y[t];
            p.in[t][1] = 0.0;
        }
        fftw_execute(p.plan);
        std::vector<std::complex<double>> out(n);
        for (std::size_t k = 0; k < n; ++k) out[k] = {p.out[k][0], p.out[k][1]};
        return out;
    }

    // Backward complex DFT, no normalization: y_t = sum_k X_k e^{+2pi i k t/n}.
    std::vector<std::complex<double>> backward(const std::vector<std::complex<double>>& x) {
        const std::size_t n = x.size();
        std::lock_guard<std::mutex> lk(mu_);
        Plan& p = plan(n, FFTW_BACKWARD);
        for (std::size_t k = 0; k < n; ++k) {
            p.in[k][0] = x[k].real();
            p.in[k][1] = x[k].imag();
        }
        fftw_execute(p.plan);
        std::vector<std::complex<double>> out(n);
        for (std::size_t t = 0; t < n; ++t) out[t] = {p.out[t][0], p.out[t][1]};
        return out;
    }

private:
    struct Plan {
        fftw_complex* in = nullptr;
        fftw_complex* out = nullptr;
        fftw_plan plan = nullptr;
        ~Plan() {
            if (plan) fftw_destroy_plan(plan);
            if (in) fftw_free(in);
            if (out) fftw_free(out);
        }
    };

    Plan& plan(std::size_t n, int sign) {
        auto key = std::make_pair(n, sign);
        auto it = plans_.find(key);
        if (it != plans_.end()) return *it->second;
        auto p = std::make_unique<Plan>();
        p->in = fftw_alloc_complex(n);
        p->out = fftw_alloc_complex(n);
        p->plan = fftw_plan_dft_1d(static_cast<int>(n), p->in, p->out, sign, FFTW_ESTIMATE);
        auto& ref = *p;
        plans_.emplace(key, std::move(p));
        return ref;
    }

    std::mutex mu_;
    std::map<std::pair<std::size_t, int>, std::unique_ptr<Plan>> plans_;
};

}  // namespace detail

// DFT with 1/sqrt(n) normalization and the time index running t = 1..n, so
// coefficient k equals (1/sqrt(n)) sum_t y_t (cos(2pi nu_k t) - i sin(2pi nu_k t)).
inline FourierCoeffs dft(const TimeSeries& y) {
    y.validate();
    const std::size_t n = y.size();
    require(n >= 2, "dft: length must be >= 2");
    auto x = detail::FftEngine::instance().forward(y.values);
    const double scale = 1.0 / std::sqrt(static_cast<double>(n));
    FourierCoeffs out;
    out.real_part.resize(n);
    out.imag_part.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        // shift from t = 0..n-1 to t = 1..n
        const double ang = -2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
        const std::complex<double> phase{std::cos(ang), std::sin(ang)};
        const std::complex<double> v = x[k] * phase * scale;
        out.real_part[k] = v.real();
        out.imag_part[k] = v.imag();
    }
    return out;
}

inline Periodogram periodogram(const TimeSeries& y) {
    const std::size_t n = y.size();
    FourierCoeffs c = dft(y);
    Periodogram pg;
    pg.series_length = n;
    const std::size_t m = n / 2;
    pg.freqs.resize(m + 1);
    pg.ordinates.resize(m + 1);
    for (std::size_t k = 0; k <= m; ++k) {
        pg.freqs[k] = static_cast<double>(k) / static_cast<double>(n);
        pg.ordinates[k] = c.real_part[k] * c.real_part[k] + c.imag_part[k] * c.imag_part[k];
    }
    return pg;
}

// Likelihood frequency weights for a periodogram of a length-n series:
// frequencies k = 1..floor(n/2); weight 1 interior, 1/2 at the Nyquist
// ordinate when n is even (that ordinate is f*chi^2_1, not exponential).
inline std::vector<double> whittle_weights(const Periodogram& pg) {
    require(pg.freqs.size() >= 2, "whittle_weights: too few frequencies");
    std::vector<double> w(pg.freqs.size() - 1, 1.0);
    if (pg.series_length % 2 == 0) w.back() = 0.5;
    return w;
}

// Whittle log-likelihood over the likelihood frequency set k = 1..floor(n/2):
// sum_k c_k * (-g_k - I_k exp(-g_k)). The additive -log(pi) constants are omitted.
inline double whittle_loglik(const Periodogram& pg, const std::vector<double>& logspec) {
    require(logspec.size() == pg.freqs.size() - 1,
            "whittle_loglik: logspec length must match likelihood frequency count");
    require(all_finite(logspec), "whittle_loglik: logspec must be finite");
    const std::vector<double> w = whittle_weights(pg);
    double ll = 0.0;
    for (std::size_t k = 0; k < logspec.size(); ++k) {
        const double g = logspec[k];
        const double ordinate = pg.ordinates[k + 1];
        ll += w[k] * (-g - ordinate * std::exp(-g));
    }
    return ll;
}

// GARCH returns are serially uncorrelated, so their spectrum is flat at the
// unconditional variance.
inline SpectrumCurve garch_flat_spectrum(double sigma2_uc, const std::vector<double>& freq_grid) {
    require(sigma2_uc > 0.0 && std::isfinite(sigma2_uc),
            "garch_flat_spectrum: variance must be positive");
    SpectrumCurve c;
    c.freqs = freq_grid;
    c.power.assign(freq_grid.size(), sigma2_uc);
    c.validate();
    return c;
}

inline bool ar2_stationary(double phi1, double phi2) {
    return std::abs(phi2) < 1.0 && phi1 + phi2 < 1.0 && phi2 - phi1 < 1.0;
}

// f(nu) = sigma2 / |1 - phi1 e^{-2pi i nu} - phi2 e^{-4pi i nu}|^2
inline SpectrumCurve ar2_spectrum(double phi1, double phi2, double sigma2,
                                  const std::vector<double>& freq_grid) {
    require(ar2_stationary(phi1, phi2), "ar2_spectrum: coefficients outside stationarity triangle");
    require(sigma2 > 0.0, "ar2_spectrum: innovation variance must be positive");
    SpectrumCurve c;
    c.freqs = freq_grid;
    c.power.resize(freq_grid.size());
    for (std::size_t i = 0; i < freq_grid.size(); ++i) {
        const double w = 2.0 * std::numbers::pi * freq_grid[i];
        const std::complex<double> z1{std::cos(w), -std::sin(w)};
        const std::complex<double> z2{std::cos(2 * w), -std::sin(2 * w)};
        const std::complex<double> denom = 1.0 - phi1 * z1 - phi2 * z2;
        c.power[i] = sigma2 / std::norm(denom);
    }
    c.validate();
    return c;
}

// Stationary variance of an AR(2) process (Yule-Walker).
inline double ar2_variance(double phi1, double phi2, double sigma2) {
    require(ar2_stationary(phi1, phi2), "ar2_variance: non-stationary coefficients");
    return sigma2 * (1.0 - phi2) /
           ((1.0 + phi2) * ((1.0 - phi2) * (1.0 - phi2) - phi1 * phi1));
}

// Lag-1 autocorrelation of an AR(2) process.
inline double ar2_rho1(double phi1, double phi2) {
    require(ar2_stationary(phi1, phi2), "ar2_rho1: non-stationary coefficients");
    return phi1 / (1.0 - phi2);
}

// Demean a slice and return its periodogram; the likelihood convention used
// throughout the sampler (k=0 is excluded, its ordinate is 0 after demeaning).
inline Periodogram segment_periodogram(const std::vector<double>& y, std::size_t begin,
                                       std::size_t end) {
    require(begin < end && end <= y.size(), "segment_periodogram: bad slice");
    TimeSeries seg;
    seg.values.assign(y.begin() + static_cast<std::ptrdiff_t>(begin),
                      y.begin() + static_cast<std::ptrdiff_t>(end));
    const double m = mean_of(seg.values);
    for (double& v : seg.values) v -= m;
    return periodogram(seg);
}

// Piecewise-linear interpolation of g (log power) defined at `freqs` onto nu,
// constant-extrapolated outside the range.
inline double interp_linear(const std::vector<double>& freqs, const std::vector<double>& vals,
                            double nu) {
    if (nu <= freqs.front()) return vals.front();
    if (nu >= freqs.back()) return vals.back();
    auto it = std::upper_bound(freqs.begin(), freqs.end(), nu);
    const std::size_t j = static_cast<std::size_t>(it - freqs.begin());
    const double x0 = freqs[j - 1], x1 = freqs[j];
    const double t = (nu - x0) / (x1 - x0);
    return vals[j - 1] * (1.0 - t) + vals[j] * t;
}

}  // namespace specseg

#endif  // SPECSEG_SPECTRAL_HPP_
