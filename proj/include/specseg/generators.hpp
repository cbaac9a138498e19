#ifndef SPECSEG_GENERATORS_HPP_
#define SPECSEG_GENERATORS_HPP_

// Data-generating processes: GARCH(1,1), regime-switching GARCH with a
// deterministic segment layout, and spectral-domain synthesis of time series
// from arbitrary spectra via the inverse DFT.

#include <complex>
#include <vector>

#include "specseg/common.hpp"
#include "specseg/spectral.hpp"

namespace specseg {

struct GarchParams {
    double mu = 0.0;
    double alpha0 = 1.0;
    double alpha1 = 0.0;
    double beta1 = 0.0;

    double sigma2_uc() const { return alpha0 / (1.0 - alpha1 - beta1); }

    void validate() const {
        require(alpha0 > 0.0, "GarchParams: alpha0 must be positive");
        require(alpha1 >= 0.0 && beta1 >= 0.0, "GarchParams: alpha1, beta1 must be nonnegative");
        require(alpha1 + beta1 < 1.0, "GarchParams: alpha1 + beta1 must be < 1");
    }
};

// Deterministic regime layout: segment k covers cutpoints[k-1]+1 .. cutpoints[k]
// and is generated by regimes[labels[k]] (labels are 0-based regime indices).
struct RegimeSpec {
    std::vector<GarchParams> regimes;
    std::vector<int> cutpoints;  // increasing, last = T
    std::vector<int> labels;     // same length as cutpoints

    int total_length() const { return cutpoints.back(); }

    void validate() const {
        require(!regimes.empty(), "RegimeSpec: no regimes");
        require(!cutpoints.empty() && cutpoints.size() == labels.size(),
                "RegimeSpec: cutpoints/labels size mismatch");
        require(cutpoints.size() >= regimes.size(), "RegimeSpec: needs K_R >= N_R");
        int prev = 0;
        for (std::size_t k = 0; k < cutpoints.size(); ++k) {
            require(cutpoints[k] > prev, "RegimeSpec: cutpoints must be increasing");
            prev = cutpoints[k];
            require(labels[k] >= 0 && labels[k] < static_cast<int>(regimes.size()),
                    "RegimeSpec: label out of range");
        }
        for (const auto& r : regimes) r.validate();
    }
};

struct PiecewiseSpectrum {
    std::vector<int> segment_lengths;
    std::vector<SpectrumCurve> curves;  // one per segment

    int total_length() const {
        int t = 0;
        for (int n : segment_lengths) t += n;
        return t;
    }

    void validate() const {
        require(segment_lengths.size() == curves.size() && !curves.empty(),
                "PiecewiseSpectrum: lengths/curves mismatch");
        for (int n : segment_lengths) require(n >= 2, "PiecewiseSpectrum: segment length < 2");
        for (const auto& c : curves) c.validate();
    }
};

inline TimeSeries simulate_garch(const GarchParams& p, int T, Rng& rng) {
    p.validate();
    require(T >= 1, "simulate_garch: T must be >= 1");
    std::normal_distribution<double> stdnorm(0.0, 1.0);
    TimeSeries y;
    y.values.resize(static_cast<std::size_t>(T));
    double sigma2 = p.sigma2_uc();
    double eta_prev = 0.0;
    for (int t = 0; t < T; ++t) {
        if (t > 0) sigma2 = p.alpha0 + p.alpha1 * eta_prev * eta_prev + p.beta1 * sigma2;
        const double yt = p.mu + std::sqrt(sigma2) * stdnorm(rng);
        y.values[static_cast<std::size_t>(t)] = yt;
        eta_prev = yt - p.mu;
    }
    return y;
}

// Regime-switching GARCH with deterministic segments. By default the variance
// recursion carries sigma^2_{t-1} across segment boundaries; `reset_at_boundary`
// restarts it at the incoming regime's unconditional variance. The ground
// truth is flat per segment at the generating regime's sigma2_uc.
inline std::pair<TimeSeries, TvSpectrum> simulate_regime(
    const RegimeSpec& spec, Rng& rng, const std::vector<double>& freq_grid,
    bool reset_at_boundary = false) {
    spec.validate();
    const int T = spec.total_length();
    std::normal_distribution<double> stdnorm(0.0, 1.0);

    TimeSeries y;
    y.values.resize(static_cast<std::size_t>(T));
    TvSpectrum truth;
    truth.freq_grid = freq_grid;
    truth.time_grid.resize(static_cast<std::size_t>(T));
    truth.power.resize(static_cast<std::size_t>(T) * freq_grid.size());

    std::size_t seg = 0;
    const GarchParams* p = &spec.regimes[static_cast<std::size_t>(spec.labels[0])];
    double sigma2 = p->sigma2_uc();
    double eta_prev = 0.0;
    for (int t = 0; t < T; ++t) {
        if (t >= spec.cutpoints[seg]) {
            ++seg;
            p = &spec.regimes[static_cast<std::size_t>(spec.labels[seg])];
            if (reset_at_boundary) sigma2 = p->sigma2_uc();
        }
        if (t > 0) sigma2 = p->alpha0 + p->alpha1 * eta_prev * eta_prev + p->beta1 * sigma2;
        const double yt = p->mu + std::sqrt(sigma2) * stdnorm(rng);
        y.values[static_cast<std::size_t>(t)] = yt;
        eta_prev = yt - p->mu;

        truth.time_grid[static_cast<std::size_t>(t)] = t + 1;
        const double s2uc = p->sigma2_uc();
        for (std::size_t f = 0; f < freq_grid.size(); ++f)
            truth.at(static_cast<std::size_t>(t), f) = s2uc;
    }
    return {std::move(y), std::move(truth)};
}

// Draw the DFT components of a length-n series from a spectrum evaluated at
// the Fourier frequencies (f_at_fourier[k] = f(k/n) for k = 0..floor(n/2)),
// enforce conjugate symmetry, and invert. With zero_dc the DC component is
// forced to 0 so the output is exactly mean-balanced.
inline TimeSeries synthesize_from_spectrum(const std::vector<double>& f_at_fourier, int n,
                                           Rng& rng, bool zero_dc = true) {
    require(n >= 4, "synthesize_from_spectrum: n must be >= 4");
    const std::size_t half = static_cast<std::size_t>(n) / 2;
    require(f_at_fourier.size() == half + 1,
            "synthesize_from_spectrum: need f at k = 0..floor(n/2)");
    for (double f : f_at_fourier)
        require(f > 0.0 && std::isfinite(f), "synthesize_from_spectrum: nonpositive spectrum");

    std::normal_distribution<double> stdnorm(0.0, 1.0);
    std::vector<std::complex<double>> x(static_cast<std::size_t>(n));
    x[0] = zero_dc ? 0.0 : std::sqrt(f_at_fourier[0]) * stdnorm(rng);
    for (std::size_t k = 1; k < half; ++k) {
        const double sd = std::sqrt(f_at_fourier[k] / 2.0);
        x[k] = {sd * stdnorm(rng), sd * stdnorm(rng)};
    }
    if (n % 2 == 0) x[half] = std::sqrt(f_at_fourier[half]) * stdnorm(rng);
    else if (half >= 1) {  // odd n: no Nyquist bin, k = half is a paired frequency
        const double sd = std::sqrt(f_at_fourier[half] / 2.0);
        x[half] = {sd * stdnorm(rng), sd * stdnorm(rng)};
    }
    for (std::size_t k = half + 1; k < static_cast<std::size_t>(n); ++k)
        x[k] = std::conj(x[static_cast<std::size_t>(n) - k]);

    auto inv = detail::FftEngine::instance().backward(x);
    const double scale = 1.0 / std::sqrt(static_cast<double>(n));
    TimeSeries y;
    y.values.resize(static_cast<std::size_t>(n));
    for (std::size_t t = 0; t < static_cast<std::size_t>(n); ++t) {
        const std::complex<double> v = inv[t] * scale;
        if (std::abs(v.imag()) > 1e-10)
            throw std::runtime_error("synthesize_from_spectrum: imaginary residual too large");
        y.values[t] = v.real();
    }
    return y;
}

// Evaluate a SpectrumCurve at the Fourier frequencies of a length-n segment.
inline std::vector<double> curve_at_fourier(const SpectrumCurve& curve, int n) {
    curve.validate();
    const std::size_t half = static_cast<std::size_t>(n) / 2;
    std::vector<double> f(half + 1);
    for (std::size_t k = 0; k <= half; ++k)
        f[k] = interp_linear(curve.freqs, curve.power,
                             static_cast<double>(k) / static_cast<double>(n));
    return f;
}

inline TimeSeries synthesize_from_spectrum(const SpectrumCurve& curve, int n, Rng& rng,
                                           bool zero_dc = true) {
    return synthesize_from_spectrum(curve_at_fourier(curve, n), n, rng, zero_dc);
}

// Independent synthesis per segment, concatenated in order.
inline TimeSeries synthesize_piecewise(const PiecewiseSpectrum& ps, Rng& rng,
                                       bool zero_dc = true) {
    ps.validate();
    TimeSeries y;
    y.values.reserve(static_cast<std::size_t>(ps.total_length()));
    for (std::size_t s = 0; s < ps.curves.size(); ++s) {
        TimeSeries seg = synthesize_from_spectrum(ps.curves[s], ps.segment_lengths[s], rng, zero_dc);
        y.values.insert(y.values.end(), seg.values.begin(), seg.values.end());
    }
    return y;
}

// Ground truth grid for a PiecewiseSpectrum: each segment's curve interpolated
// onto the common frequency grid, constant in t within the segment.
inline TvSpectrum piecewise_truth(const PiecewiseSpectrum& ps, const std::vector<double>& freq_grid) {
    ps.validate();
    const int T = ps.total_length();
    TvSpectrum truth;
    truth.freq_grid = freq_grid;
    truth.time_grid.resize(static_cast<std::size_t>(T));
    truth.power.resize(static_cast<std::size_t>(T) * freq_grid.size());
    int t0 = 0;
    for (std::size_t s = 0; s < ps.curves.size(); ++s) {
        std::vector<double> row(freq_grid.size());
        for (std::size_t f = 0; f < freq_grid.size(); ++f)
            row[f] = interp_linear(ps.curves[s].freqs, ps.curves[s].power, freq_grid[f]);
        for (int t = t0; t < t0 + ps.segment_lengths[s]; ++t) {
            truth.time_grid[static_cast<std::size_t>(t)] = t + 1;
            for (std::size_t f = 0; f < freq_grid.size(); ++f)
                truth.at(static_cast<std::size_t>(t), f) = row[f];
        }
        t0 += ps.segment_lengths[s];
    }
    return truth;
}

}  // namespace specseg

#endif  // SPECSEG_GENERATORS_HPP_
