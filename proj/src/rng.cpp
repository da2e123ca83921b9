#include "fplab/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace fplab {

BinomialSampler::BinomialSampler(int n, double p) : n_(n) {
    if (n < 0 || p < 0.0 || p > 1.0) throw std::invalid_argument("BinomialSampler: bad n or p");
    pmf_.assign(static_cast<size_t>(n) + 1, 0.0);
    cdf_.assign(static_cast<size_t>(n) + 1, 0.0);
    if (p == 0.0) {
        pmf_[0] = 1.0;
    } else if (p == 1.0) {
        pmf_[static_cast<size_t>(n)] = 1.0;
    } else {
        const int mode = static_cast<int>(std::floor((n + 1) * p));
        const double odds = p / (1.0 - p);
        pmf_[static_cast<size_t>(mode)] = 1.0;  // relative scale; normalized below
        for (int k = mode; k < n; ++k)
            pmf_[static_cast<size_t>(k) + 1] = pmf_[static_cast<size_t>(k)] * odds * (n - k) / (k + 1);
        for (int k = mode; k > 0; --k)
            pmf_[static_cast<size_t>(k) - 1] = pmf_[static_cast<size_t>(k)] / odds * k / (n - k + 1);
        double total = 0.0;
        for (double v : pmf_) total += v;
        for (double& v : pmf_) v /= total;
    }
    double acc = 0.0;
    for (size_t k = 0; k < pmf_.size(); ++k) {
        acc += pmf_[k];
        cdf_[k] = acc;
    }
    cdf_.back() = 1.0;
}

int BinomialSampler::sample(Rng& rng) const {
    const double u = rng.uniform();
    // binary search for the first k with cdf[k] > u
    int lo = 0, hi = n_;
    while (lo < hi) {
        const int mid = (lo + hi) / 2;
        if (cdf_[static_cast<size_t>(mid)] > u)
            hi = mid;
        else
            lo = mid + 1;
    }
    return lo;
}

}  // namespace fplab
