#ifndef SPECSEG_PARTITION_HPP_
#define SPECSEG_PARTITION_HPP_

// Segmentations of 1..T and the exact prior over (K, xi_K): Pr(K) = 1/S and a
// sequential discrete-uniform prior over cutpoints subject to a minimum
// segment length.

#include <vector>

#include "specseg/common.hpp"

namespace specseg {

struct PartitionConfig {
    int t_min = 50;        // minimum segment length
    int max_segments = 30; // S, upper limit for the number of segments

    void validate() const {
        require(t_min >= 2, "PartitionConfig: t_min must be >= 2");
        require(max_segments >= 1, "PartitionConfig: max_segments must be >= 1");
    }
};

// Cutpoints xi = (xi_0, ..., xi_K) with xi_0 = 0 and xi_K = T. Segment s
// covers times xi_{s-1}+1 .. xi_s inclusive.
struct Partition {
    int T = 0;
    std::vector<int> cuts;  // length K+1

    int num_segments() const { return static_cast<int>(cuts.size()) - 1; }
    int segment_length(int s) const { return cuts[static_cast<std::size_t>(s) + 1] - cuts[static_cast<std::size_t>(s)]; }

    static Partition single(int T) { return Partition{T, {0, T}}; }

    void validate(const PartitionConfig& cfg) const {
        require(cuts.size() >= 2, "Partition: needs at least xi_0 and xi_K");
        require(cuts.front() == 0 && cuts.back() == T, "Partition: endpoints must be 0 and T");
        const int K = num_segments();
        require(K >= 1 && K <= cfg.max_segments, "Partition: K outside [1, S]");
        for (int s = 0; s < K; ++s)
            require(segment_length(s) >= cfg.t_min, "Partition: segment shorter than t_min");
    }
};

struct CutpointRange {
    int lo = 0;     // smallest valid position
    int hi = 0;     // largest valid position
    int count = 0;  // hi - lo + 1
};

// Number of available locations for cutpoint s of K given the previous
// cutpoint: p_{s,K} = T - xi_{s-1} - (K-s+1) t_min + 1, with the valid index
// range [xi_{s-1} + t_min, T - (K-s) t_min].
inline CutpointRange available_locations(int T, int xi_prev, int s, int K, int t_min) {
    CutpointRange r;
    r.lo = xi_prev + t_min;
    r.hi = T - (K - s) * t_min;
    r.count = T - xi_prev - (K - s + 1) * t_min + 1;
    require(r.count >= 1, "available_locations: no valid cutpoint location");
    return r;
}

// log Pr(K) + log Pr(xi | K) = -log S - sum_{s=1}^{K-1} log p_{s,K}.
inline double log_prior_partition(const Partition& p, const PartitionConfig& cfg) {
    p.validate(cfg);
    const int K = p.num_segments();
    double lp = -std::log(static_cast<double>(cfg.max_segments));
    for (int s = 1; s <= K - 1; ++s) {
        const CutpointRange r =
            available_locations(p.T, p.cuts[static_cast<std::size_t>(s) - 1], s, K, cfg.t_min);
        lp -= std::log(static_cast<double>(r.count));
    }
    return lp;
}

// Every valid partition exactly once; test oracle for prior normalization.
inline std::vector<Partition> enumerate_partitions(int T, const PartitionConfig& cfg,
                                                   std::size_t bound = 1000000) {
    cfg.validate();
    require(T >= cfg.t_min, "enumerate_partitions: series shorter than t_min");
    std::vector<Partition> out;
    const int k_max = std::min(cfg.max_segments, T / cfg.t_min);
    std::vector<int> cuts{0};
    // depth-first over cutpoints for each K
    for (int K = 1; K <= k_max; ++K) {
        auto recurse = [&](auto&& self, int s) -> void {
            if (s == K) {
                out.push_back(Partition{T, cuts});
                out.back().cuts.push_back(T);
                if (out.size() > bound)
                    throw std::runtime_error("enumerate_partitions: bound exceeded");
                return;
            }
            const CutpointRange r = available_locations(T, cuts.back(), s, K, cfg.t_min);
            for (int xi = r.lo; xi <= r.hi; ++xi) {
                cuts.push_back(xi);
                self(self, s + 1);
                cuts.pop_back();
            }
        };
        recurse(recurse, 1);
    }
    return out;
}

}  // namespace specseg

#endif  // SPECSEG_PARTITION_HPP_
