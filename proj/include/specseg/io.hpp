#ifndef SPECSEG_IO_HPP_
#define SPECSEG_IO_HPP_

// Plain tabular text formats for every artifact the library emits, plus CSV
// ingestion of price series. All numbers are written with %.17g so replaying
// a run reproduces artifacts bitwise.

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "specseg/common.hpp"
#include "specseg/generators.hpp"
#include "specseg/metrics.hpp"
#include "specseg/rjmcmc.hpp"

namespace specseg {

inline std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

struct ReturnsSeries {
    std::vector<std::string> dates;  // ISO-8601, one per return
    std::vector<double> returns;     // percent log-returns
    std::vector<double> squared;
    int dropped_rows = 0;
    std::vector<std::string> warnings;
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line, char sep = ',') {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

}  // namespace detail

// Reads a CSV of dated prices and converts to percent log-returns
// r_t = 100 (ln p_t - ln p_{t-1}). Malformed or nonpositive rows are dropped
// and reported by row number.
inline ReturnsSeries ingest_csv(const std::string& path, const std::string& price_column,
                                const std::string& date_column, int t_min = 50) {
    std::ifstream in(path);
    require(in.good(), "ingest_csv: cannot open " + path);
    std::string line;
    require(static_cast<bool>(std::getline(in, line)), "ingest_csv: empty file " + path);
    const auto header = detail::split_csv_line(line);
    int price_idx = -1, date_idx = -1;
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == price_column) price_idx = static_cast<int>(i);
        if (header[i] == date_column) date_idx = static_cast<int>(i);
    }
    require(price_idx >= 0, "ingest_csv: missing price column '" + price_column + "'");
    require(date_idx >= 0, "ingest_csv: missing date column '" + date_column + "'");

    std::vector<std::string> dates;
    std::vector<double> prices;
    ReturnsSeries out;
    int row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) continue;
        const auto cells = detail::split_csv_line(line);
        if (cells.size() <= static_cast<std::size_t>(std::max(price_idx, date_idx))) {
            out.warnings.push_back("row " + std::to_string(row) + ": too few columns, dropped");
            ++out.dropped_rows;
            continue;
        }
        double p;
        try {
            std::size_t pos = 0;
            p = std::stod(cells[static_cast<std::size_t>(price_idx)], &pos);
            if (pos != cells[static_cast<std::size_t>(price_idx)].size()) throw std::invalid_argument("");
        } catch (const std::exception&) {
            out.warnings.push_back("row " + std::to_string(row) + ": unparseable price, dropped");
            ++out.dropped_rows;
            continue;
        }
        if (!(p > 0.0) || !std::isfinite(p)) {
            out.warnings.push_back("row " + std::to_string(row) + ": nonpositive price, dropped");
            ++out.dropped_rows;
            continue;
        }
        dates.push_back(cells[static_cast<std::size_t>(date_idx)]);
        prices.push_back(p);
    }
    require(static_cast<int>(prices.size()) >= t_min + 1,
            "ingest_csv: fewer than t_min+1 usable rows (" + std::to_string(prices.size()) + ")");
    out.returns.resize(prices.size() - 1);
    out.squared.resize(prices.size() - 1);
    out.dates.assign(dates.begin() + 1, dates.end());
    for (std::size_t t = 1; t < prices.size(); ++t) {
        const double r = 100.0 * (std::log(prices[t]) - std::log(prices[t - 1]));
        out.returns[t - 1] = r;
        out.squared[t - 1] = r * r;
    }
    return out;
}

// --- series -----------------------------------------------------------------

inline void write_series(const std::string& path, const TimeSeries& y) {
    std::ofstream f(path);
    require(f.good(), "write_series: cannot open " + path);
    f << "t\tvalue\n";
    for (std::size_t t = 0; t < y.size(); ++t)
        f << (t + 1) << '\t' << fmt_double(y.values[t]) << '\n';
}

inline TimeSeries read_series(const std::string& path) {
    std::ifstream f(path);
    require(f.good(), "read_series: cannot open " + path);
    std::string line;
    require(static_cast<bool>(std::getline(f, line)) && line == "t\tvalue",
            "read_series: bad header in " + path);
    TimeSeries y;
    y.origin_label = path;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        long t;
        double v;
        require(static_cast<bool>(ss >> t >> v), "read_series: bad row in " + path);
        y.values.push_back(v);
    }
    y.validate();
    return y;
}

// --- time-varying spectrum grid ----------------------------------------------

// Columns: t, nu, log_fhat, log_lower90, log_upper90. Band columns repeat the
// point estimate when no band is available.
inline void write_spectrum_grid(const std::string& path, const TvSpectrum& est,
                                const TvSpectrum* lower = nullptr,
                                const TvSpectrum* upper = nullptr) {
    std::ofstream f(path);
    require(f.good(), "write_spectrum_grid: cannot open " + path);
    f << "t\tnu\tlog_fhat\tlog_lower90\tlog_upper90\n";
    const std::size_t F = est.freq_grid.size();
    for (std::size_t t = 0; t < est.time_grid.size(); ++t) {
        for (std::size_t k = 0; k < F; ++k) {
            const double lf = std::log(est.at(t, k));
            const double lo = lower ? std::log(lower->at(t, k)) : lf;
            const double hi = upper ? std::log(upper->at(t, k)) : lf;
            f << est.time_grid[t] << '\t' << fmt_double(est.freq_grid[k]) << '\t'
              << fmt_double(lf) << '\t' << fmt_double(lo) << '\t' << fmt_double(hi) << '\n';
        }
    }
}

inline TvSpectrum read_spectrum_grid(const std::string& path) {
    std::ifstream f(path);
    require(f.good(), "read_spectrum_grid: cannot open " + path);
    std::string line;
    require(static_cast<bool>(std::getline(f, line)) &&
                line == "t\tnu\tlog_fhat\tlog_lower90\tlog_upper90",
            "read_spectrum_grid: bad header in " + path);
    std::vector<int> times;
    std::vector<double> freqs;
    std::vector<double> power;
    int last_t = -1;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        int t;
        double nu, lf, lo, hi;
        require(static_cast<bool>(ss >> t >> nu >> lf >> lo >> hi),
                "read_spectrum_grid: bad row in " + path);
        if (t != last_t) {
            times.push_back(t);
            last_t = t;
        }
        if (times.size() == 1) freqs.push_back(nu);
        power.push_back(std::exp(lf));
    }
    TvSpectrum s;
    s.time_grid = std::move(times);
    s.freq_grid = std::move(freqs);
    s.power = std::move(power);
    s.validate();
    return s;
}

// --- retained draws ----------------------------------------------------------

// Line-delimited record per retained state:
//   iteration K xi_0..xi_K { alpha0 tau2 J beta_1..beta_J }  per segment
inline void write_draws(const std::string& path, const PosteriorDraws& draws) {
    std::ofstream f(path);
    require(f.good(), "write_draws: cannot open " + path);
    f << "# specseg-draws v1\n";
    for (std::size_t i = 0; i < draws.states.size(); ++i) {
        const ModelState& st = draws.states[i];
        f << i << ' ' << st.partition.num_segments();
        for (int c : st.partition.cuts) f << ' ' << c;
        for (const SegmentParams& p : st.segments) {
            f << ' ' << fmt_double(p.alpha0) << ' ' << fmt_double(p.tau2) << ' '
              << p.beta.size();
            for (Eigen::Index j = 0; j < p.beta.size(); ++j) f << ' ' << fmt_double(p.beta(j));
        }
        f << '\n';
    }
}

inline std::vector<ModelState> read_draws(const std::string& path, int T) {
    std::ifstream f(path);
    require(f.good(), "read_draws: cannot open " + path);
    std::string line;
    require(static_cast<bool>(std::getline(f, line)) && line == "# specseg-draws v1",
            "read_draws: unknown schema in " + path);
    std::vector<ModelState> out;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        long iter;
        int K;
        require(static_cast<bool>(ss >> iter >> K), "read_draws: bad record");
        ModelState st;
        st.partition.T = T;
        st.partition.cuts.resize(static_cast<std::size_t>(K) + 1);
        for (int& c : st.partition.cuts) require(static_cast<bool>(ss >> c), "read_draws: bad cuts");
        st.segments.resize(static_cast<std::size_t>(K));
        for (SegmentParams& p : st.segments) {
            Eigen::Index J;
            require(static_cast<bool>(ss >> p.alpha0 >> p.tau2 >> J), "read_draws: bad segment");
            p.beta.resize(J);
            for (Eigen::Index j = 0; j < J; ++j)
                require(static_cast<bool>(ss >> p.beta(j)), "read_draws: bad beta");
        }
        out.push_back(std::move(st));
    }
    return out;
}

// --- piecewise spectrum ---------------------------------------------------------

inline void write_piecewise(const std::string& path, const PiecewiseSpectrum& ps) {
    ps.validate();
    std::ofstream f(path);
    require(f.good(), "write_piecewise: cannot open " + path);
    f << "# specseg-piecewise v1\n";
    f << "segments " << ps.curves.size() << '\n';
    for (std::size_t s = 0; s < ps.curves.size(); ++s) {
        f << "length " << ps.segment_lengths[s] << " points " << ps.curves[s].freqs.size() << '\n';
        for (std::size_t k = 0; k < ps.curves[s].freqs.size(); ++k)
            f << fmt_double(ps.curves[s].freqs[k]) << '\t' << fmt_double(ps.curves[s].power[k])
              << '\n';
    }
}

inline PiecewiseSpectrum read_piecewise(const std::string& path) {
    std::ifstream f(path);
    require(f.good(), "read_piecewise: cannot open " + path);
    std::string tok;
    std::getline(f, tok);
    require(tok == "# specseg-piecewise v1", "read_piecewise: unknown schema in " + path);
    std::size_t n_seg;
    require(static_cast<bool>(f >> tok >> n_seg) && tok == "segments",
            "read_piecewise: bad segment count");
    PiecewiseSpectrum ps;
    for (std::size_t s = 0; s < n_seg; ++s) {
        int len;
        std::size_t pts;
        std::string tok2;
        require(static_cast<bool>(f >> tok >> len >> tok2 >> pts) && tok == "length" &&
                    tok2 == "points",
                "read_piecewise: bad segment header");
        SpectrumCurve c;
        c.freqs.resize(pts);
        c.power.resize(pts);
        for (std::size_t k = 0; k < pts; ++k)
            require(static_cast<bool>(f >> c.freqs[k] >> c.power[k]), "read_piecewise: bad row");
        ps.segment_lengths.push_back(len);
        ps.curves.push_back(std::move(c));
    }
    ps.validate();
    return ps;
}

// --- metric reports -------------------------------------------------------------

inline void write_report_header(std::ostream& f) {
    f << "dgp,estimator,replicate,seed,skl,mse,wall_time_s,error\n";
}

inline void write_report_row(std::ostream& f, const MetricReport& r) {
    f << r.dgp << ',' << r.estimator << ',' << r.replicate << ',' << r.seed << ','
      << fmt_double(r.skl) << ',' << fmt_double(r.mse) << ',' << fmt_double(r.wall_time_s) << ','
      << r.error << '\n';
}

inline std::vector<MetricReport> read_reports(const std::string& path) {
    std::ifstream f(path);
    require(f.good(), "read_reports: cannot open " + path);
    std::string line;
    require(static_cast<bool>(std::getline(f, line)) &&
                line == "dgp,estimator,replicate,seed,skl,mse,wall_time_s,error",
            "read_reports: bad header in " + path);
    std::vector<MetricReport> out;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        const auto cells = detail::split_csv_line(line);
        require(cells.size() == 8, "read_reports: bad row in " + path);
        MetricReport r;
        r.dgp = cells[0];
        r.estimator = cells[1];
        r.replicate = std::stoi(cells[2]);
        r.seed = std::stoull(cells[3]);
        r.skl = std::stod(cells[4]);
        r.mse = std::stod(cells[5]);
        r.wall_time_s = std::stod(cells[6]);
        r.error = cells[7];
        out.push_back(std::move(r));
    }
    return out;
}

// --- generic numeric TSV tables ---------------------------------------------------

// Headered tab-separated numeric tables; the CLI's summary artifacts
// (K histogram, cutpoint samples, parameter traces) use this shape.
struct TsvTable {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
};

inline void write_tsv(const std::string& path, const TsvTable& table) {
    require(!table.columns.empty(), "write_tsv: no columns");
    std::ofstream f(path);
    require(f.good(), "write_tsv: cannot open " + path);
    for (std::size_t c = 0; c < table.columns.size(); ++c)
        f << (c ? "\t" : "") << table.columns[c];
    f << '\n';
    for (const auto& row : table.rows) {
        require(row.size() == table.columns.size(), "write_tsv: ragged row");
        for (std::size_t c = 0; c < row.size(); ++c) f << (c ? "\t" : "") << fmt_double(row[c]);
        f << '\n';
    }
}

inline TsvTable read_tsv(const std::string& path) {
    std::ifstream f(path);
    require(f.good(), "read_tsv: cannot open " + path);
    std::string line;
    require(static_cast<bool>(std::getline(f, line)), "read_tsv: empty file " + path);
    TsvTable table;
    table.columns = detail::split_csv_line(line, '\t');
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        const auto cells = detail::split_csv_line(line, '\t');
        require(cells.size() == table.columns.size(), "read_tsv: ragged row in " + path);
        std::vector<double> row(cells.size());
        for (std::size_t c = 0; c < cells.size(); ++c) row[c] = std::stod(cells[c]);
        table.rows.push_back(std::move(row));
    }
    return table;
}

// --- flat key=value config -------------------------------------------------------

using KeyValueConfig = std::map<std::string, std::string>;

inline KeyValueConfig read_config(const std::string& path) {
    std::ifstream f(path);
    require(f.good(), "read_config: cannot open " + path);
    KeyValueConfig cfg;
    std::string line;
    int row = 0;
    while (std::getline(f, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        require(eq != std::string::npos,
                "read_config: row " + std::to_string(row) + " is not key=value");
        cfg[line.substr(0, eq)] = line.substr(eq + 1);
    }
    return cfg;
}

inline void write_config(const std::string& path, const KeyValueConfig& cfg) {
    std::ofstream f(path);
    require(f.good(), "write_config: cannot open " + path);
    for (const auto& [k, v] : cfg) f << k << '=' << v << '\n';
}

}  // namespace specseg

#endif  // SPECSEG_IO_HPP_
