#include "diffmts/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <thread>

namespace diffmts {

namespace {

void check_pair(const Array& x, const Array& y, const char* what) {
    if (x.rank() != 2 || y.rank() != 2) {
        throw ShapeError(std::string(what) + ": windows must be (channels, length)");
    }
    if (x.dim(0) != y.dim(0)) {
        throw ShapeError(std::string(what) + ": channel mismatch " + std::to_string(x.dim(0)) +
                         " vs " + std::to_string(y.dim(0)));
    }
    if (x.dim(1) == 0 || y.dim(1) == 0) {
        throw ValidationError(std::string(what) + ": empty sequence");
    }
}

double point_distance(const Array& x, std::size_t i, const Array& y, std::size_t j) {
    double acc = 0.0;
    for (std::size_t c = 0; c < x.dim(0); ++c) {
        const double d = x.at(c, i) - y.at(c, j);
        acc += d * d;
    }
    return std::sqrt(acc);
}

}  // namespace

double dtw(const Array& x, const Array& y) {
    check_pair(x, y, "dtw");
    const std::size_t n = x.dim(1), m = y.dim(1);
    constexpr double inf = std::numeric_limits<double>::infinity();
    std::vector<double> prev(m + 1, inf), curr(m + 1, inf);
    prev[0] = 0.0;
    for (std::size_t i = 1; i <= n; ++i) {
        curr[0] = inf;
        for (std::size_t j = 1; j <= m; ++j) {
            const double cost = point_distance(x, i - 1, y, j - 1);
            curr[j] = cost + std::min({prev[j], curr[j - 1], prev[j - 1]});
        }
        std::swap(prev, curr);
    }
    return prev[m];
}

double frechet(const Array& x, const Array& y) {
    check_pair(x, y, "frechet");
    const std::size_t n = x.dim(1), m = y.dim(1);
    constexpr double inf = std::numeric_limits<double>::infinity();
    std::vector<double> prev(m, inf), curr(m, inf);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            const double cost = point_distance(x, i, y, j);
            double reach;
            if (i == 0 && j == 0) {
                reach = cost;
            } else if (i == 0) {
                reach = std::max(curr[j - 1], cost);
            } else if (j == 0) {
                reach = std::max(prev[j], cost);
            } else {
                reach = std::max(std::min({prev[j], curr[j - 1], prev[j - 1]}), cost);
            }
            curr[j] = reach;
        }
        std::swap(prev, curr);
    }
    return prev[m - 1];
}

DistanceReport distance_report(const WindowSet& real, const WindowSet& synth, std::size_t jobs) {
    if (real.windows.empty() || synth.windows.empty()) {
        throw ValidationError("distance_report: both window sets must be non-empty");
    }
    if (real.conditions.size() != real.windows.size() ||
        synth.conditions.size() != synth.windows.size()) {
        throw ValidationError("distance_report: windows must carry conditions");
    }

    // condition-matched pairing: nearest real condition, first index on ties
    std::vector<std::size_t> partner(synth.windows.size());
    for (std::size_t s = 0; s < synth.windows.size(); ++s) {
        double best = std::numeric_limits<double>::infinity();
        std::size_t best_idx = 0;
        for (std::size_t r = 0; r < real.windows.size(); ++r) {
            const double d = std::abs(real.conditions[r] - synth.conditions[s]);
            if (d < best) {
                best = d;
                best_idx = r;
            }
        }
        partner[s] = best_idx;
    }

    std::vector<double> dtw_vals(synth.windows.size()), fr_vals(synth.windows.size());
    auto run_range = [&](std::size_t from, std::size_t to) {
        for (std::size_t s = from; s < to; ++s) {
            dtw_vals[s] = dtw(synth.windows[s], real.windows[partner[s]]);
            fr_vals[s] = frechet(synth.windows[s], real.windows[partner[s]]);
        }
    };
    const std::size_t workers = std::max<std::size_t>(1, std::min(jobs, synth.windows.size()));
    if (workers == 1) {
        run_range(0, synth.windows.size());
    } else {
        std::vector<std::thread> threads;
        const std::size_t chunk = (synth.windows.size() + workers - 1) / workers;
        for (std::size_t w = 0; w < workers; ++w) {
            const std::size_t from = w * chunk;
            const std::size_t to = std::min(from + chunk, synth.windows.size());
            if (from >= to) break;
            threads.emplace_back(run_range, from, to);
        }
        for (std::thread& t : threads) t.join();
    }

    DistanceReport report;
    report.pairs = synth.windows.size();
    for (std::size_t s = 0; s < synth.windows.size(); ++s) {
        report.dtw_mean += dtw_vals[s];
        report.frechet_mean += fr_vals[s];
    }
    report.dtw_mean /= static_cast<double>(report.pairs);
    report.frechet_mean /= static_cast<double>(report.pairs);
    return report;
}

namespace {

// Cyclic Jacobi eigendecomposition of a symmetric matrix (row-major n x n).
// Returns eigenvalues descending with matching eigenvectors as rows.
void jacobi_eigen(std::vector<double>& a, std::size_t n, std::vector<double>& eigvals,
                  std::vector<double>& eigvecs) {
    eigvecs.assign(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) eigvecs[i * n + i] = 1.0;

    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) off += a[p * n + q] * a[p * n + q];
        if (off < 1e-24 * static_cast<double>(n * n)) break;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a[p * n + q];
                if (std::abs(apq) < 1e-300) continue;
                const double app = a[p * n + p], aqq = a[q * n + q];
                const double theta = 0.5 * (aqq - app) / apq;
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a[k * n + p], akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a[p * n + k], aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double vpk = eigvecs[p * n + k], vqk = eigvecs[q * n + k];
                    eigvecs[p * n + k] = c * vpk - s * vqk;
                    eigvecs[q * n + k] = s * vpk + c * vqk;
                }
            }
        }
    }
    eigvals.resize(n);
    for (std::size_t i = 0; i < n; ++i) eigvals[i] = a[i * n + i];

    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t x, std::size_t y) { return eigvals[x] > eigvals[y]; });
    std::vector<double> sorted_vals(n);
    std::vector<double> sorted_vecs(n * n);
    for (std::size_t i = 0; i < n; ++i) {
        sorted_vals[i] = eigvals[order[i]];
        for (std::size_t k = 0; k < n; ++k) sorted_vecs[i * n + k] = eigvecs[order[i] * n + k];
    }
    eigvals = std::move(sorted_vals);
    eigvecs = std::move(sorted_vecs);
}

}  // namespace

Projection pca_project(const std::vector<Array>& data, std::size_t k) {
    if (data.empty()) throw ValidationError("pca: no samples");
    const std::size_t n = data.size();
    const std::size_t dim = data.front().size();
    for (const Array& a : data) {
        if (a.size() != dim) throw ValidationError("pca: samples must flatten to equal dimension");
    }
    if (k == 0 || k > dim) {
        throw ValidationError("pca: k = " + std::to_string(k) + " exceeds dimension " +
                              std::to_string(dim));
    }
    if (n < k) throw ValidationError("pca: need at least k samples");

    Projection proj;
    proj.mean.assign(dim, 0.0);
    for (const Array& a : data)
        for (std::size_t j = 0; j < dim; ++j) proj.mean[j] += a[j];
    for (double& v : proj.mean) v /= static_cast<double>(n);

    std::vector<double> centered(n * dim);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < dim; ++j) centered[i * dim + j] = data[i][j] - proj.mean[j];

    double total_var = 0.0;
    for (double v : centered) total_var += v * v;
    total_var /= static_cast<double>(n);

    std::vector<double> eigvals, eigvecs;
    proj.components.assign(k, std::vector<double>(dim, 0.0));

    if (dim <= n) {
        // covariance route: D x D
        std::vector<double> cov(dim * dim, 0.0);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t p = 0; p < dim; ++p) {
                const double v = centered[i * dim + p];
                if (v == 0.0) continue;
                for (std::size_t q = p; q < dim; ++q) cov[p * dim + q] += v * centered[i * dim + q];
            }
        for (std::size_t p = 0; p < dim; ++p)
            for (std::size_t q = p; q < dim; ++q) {
                cov[p * dim + q] /= static_cast<double>(n);
                cov[q * dim + p] = cov[p * dim + q];
            }
        jacobi_eigen(cov, dim, eigvals, eigvecs);
        for (std::size_t c = 0; c < k; ++c)
            for (std::size_t j = 0; j < dim; ++j) proj.components[c][j] = eigvecs[c * dim + j];
    } else {
        // Gram route: N x N shares the covariance spectrum
        std::vector<double> gram(n * n, 0.0);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i; j < n; ++j) {
                double acc = 0.0;
                for (std::size_t p = 0; p < dim; ++p)
                    acc += centered[i * dim + p] * centered[j * dim + p];
                gram[i * n + j] = acc / static_cast<double>(n);
                gram[j * n + i] = gram[i * n + j];
            }
        jacobi_eigen(gram, n, eigvals, eigvecs);
        for (std::size_t c = 0; c < k; ++c) {
            if (eigvals[c] <= 0.0) continue;  // rank-deficient tail stays zero
            for (std::size_t j = 0; j < dim; ++j) {
                double acc = 0.0;
                for (std::size_t i = 0; i < n; ++i)
                    acc += eigvecs[c * n + i] * centered[i * dim + j];
                proj.components[c][j] = acc;
            }
            double norm = 0.0;
            for (double v : proj.components[c]) norm += v * v;
            norm = std::sqrt(norm);
            if (norm > 0.0)
                for (double& v : proj.components[c]) v /= norm;
        }
    }

    // deterministic sign: largest-magnitude loading positive
    for (std::size_t c = 0; c < k; ++c) {
        std::size_t arg = 0;
        for (std::size_t j = 1; j < dim; ++j) {
            if (std::abs(proj.components[c][j]) > std::abs(proj.components[c][arg])) arg = j;
        }
        if (proj.components[c][arg] < 0.0) {
            for (double& v : proj.components[c]) v = -v;
        }
    }

    proj.explained_variance_ratio.resize(k);
    for (std::size_t c = 0; c < k; ++c) {
        const double ev = std::max(eigvals[c], 0.0);
        proj.explained_variance_ratio[c] = total_var > 0.0 ? ev / total_var : 0.0;
    }

    proj.coords.assign(n, std::vector<double>(k, 0.0));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t c = 0; c < k; ++c) {
            double acc = 0.0;
            for (std::size_t j = 0; j < dim; ++j)
                acc += centered[i * dim + j] * proj.components[c][j];
            proj.coords[i][c] = acc;
        }
    return proj;
}

double pearson_correlation(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size() || a.size() < 2) {
        throw ValidationError("pearson: need two equal-length series of size >= 2");
    }
    const double n = static_cast<double>(a.size());
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= n;
    mb /= n;
    double cov = 0.0, va = 0.0, vb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        cov += (a[i] - ma) * (b[i] - mb);
        va += (a[i] - ma) * (a[i] - ma);
        vb += (b[i] - mb) * (b[i] - mb);
    }
    if (va == 0.0 || vb == 0.0) return 0.0;
    return cov / std::sqrt(va * vb);
}

}  // namespace diffmts
