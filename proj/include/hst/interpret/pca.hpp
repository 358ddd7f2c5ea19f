#pragma once

#include <cmath>
#include <vector>

#include "hst/core/rng.hpp"
#include "hst/interpret/gradcam.hpp"

namespace hst {

struct PcaResult {
    std::vector<double> component;  // unit norm
    double explained_variance = 0.0;  // ratio in [0, 1]
};

// First principal component of mean-centered rows via power iteration on the
// implicit covariance X^T X / (n-1). Sign is fixed so the component
// correlates nonnegatively with the row mean.
inline PcaResult pca_first_component(const std::vector<std::vector<double>>& rows) {
    if (rows.size() < 2) throw ContractError("pca: need at least 2 rows");
    const std::size_t n = rows.size();
    const std::size_t d = rows[0].size();
    for (const auto& r : rows) {
        if (r.size() != d) throw ShapeError("pca: rows must share one dimension");
    }

    std::vector<double> mean(d, 0.0);
    for (const auto& r : rows) {
        for (std::size_t j = 0; j < d; ++j) mean[j] += r[j];
    }
    for (auto& m : mean) m /= double(n);

    std::vector<std::vector<double>> x(n, std::vector<double>(d));
    double total_var = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < d; ++j) {
            x[i][j] = rows[i][j] - mean[j];
            total_var += x[i][j] * x[i][j];
        }
    }
    total_var /= double(n - 1);
    if (total_var <= 1e-30) throw InputError("pca: rows are identical (zero variance)");

    Rng rng(derive_seed(0x9c417u, "pca-power-init"));
    std::vector<double> v(d);
    double norm = 0.0;
    for (auto& e : v) {
        e = rng.normal();
        norm += e * e;
    }
    norm = std::sqrt(norm);
    for (auto& e : v) e /= norm;

    std::vector<double> proj(n), next(d);
    double lambda = 0.0;
    for (std::size_t iter = 0; iter < 1000; ++iter) {
        for (std::size_t i = 0; i < n; ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < d; ++j) s += x[i][j] * v[j];
            proj[i] = s;
        }
        std::fill(next.begin(), next.end(), 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < d; ++j) next[j] += proj[i] * x[i][j];
        }
        double nn = 0.0;
        for (double e : next) nn += e * e;
        nn = std::sqrt(nn);
        if (nn <= 0.0) break;  // started orthogonal to all variance
        double drift = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            const double e = next[j] / nn;
            drift += std::abs(e - v[j]);
            v[j] = e;
        }
        lambda = nn / double(n - 1);
        if (drift < 1e-13 && iter > 2) break;
    }

    double corr = 0.0;
    for (std::size_t j = 0; j < d; ++j) corr += v[j] * mean[j];
    if (corr < 0.0) {
        for (auto& e : v) e = -e;
    }

    PcaResult out;
    out.component = std::move(v);
    out.explained_variance = lambda / total_var;
    return out;
}

inline PcaResult pca_first_component(const std::vector<ActivationMap>& maps) {
    std::vector<std::vector<double>> rows;
    rows.reserve(maps.size());
    for (const auto& m : maps) rows.push_back(m.values);
    return pca_first_component(rows);
}

}  // namespace hst
