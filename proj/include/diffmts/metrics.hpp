#pragma once

#include <cstddef>
#include <vector>

#include "diffmts/dataset.hpp"

namespace diffmts {

// Dynamic time warping with symmetric match/insert/delete steps; the local
// cost is the Euclidean norm over the channel vector. Lengths may differ.
double dtw(const Array& x, const Array& y);

// Discrete Frechet distance: min over monotone couplings of the maximum
// pointwise link length.
double frechet(const Array& x, const Array& y);

struct DistanceReport {
    double dtw_mean = 0.0;
    double frechet_mean = 0.0;
    std::size_t pairs = 0;
};

// Pairs every synthetic window with the real window whose condition is
// nearest (ties broken by original dataset order) and averages both
// distances over the pairs. `jobs` > 1 fans the pure pairwise computations
// out to that many threads.
DistanceReport distance_report(const WindowSet& real, const WindowSet& synth,
                               std::size_t jobs = 1);

struct Projection {
    // row i holds the k coordinates of sample i
    std::vector<std::vector<double>> coords;
    std::vector<double> explained_variance_ratio;  // non-increasing
    std::vector<std::vector<double>> components;   // k rows of dimension D
    std::vector<double> mean;                      // feature mean, dimension D
};

// Principal components of the flattened windows: mean-centered eigen
// decomposition, components ordered by decreasing explained variance, sign
// fixed so each component's largest-magnitude loading is positive.
Projection pca_project(const std::vector<Array>& data, std::size_t k);

double pearson_correlation(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace diffmts
