#pragma once

// Independent reference implementations used to check the library.  These
// deliberately take different computational routes from the production
// code: the connectivity check is a plain BFS over raw edge lists, and the
// regression oracle solves the raw 2x2 normal equations with explicit
// matrix products instead of the centered-coordinate form.

#include <cmath>
#include <cstdint>
#include <queue>
#include <span>
#include <utility>
#include <vector>

namespace oracles {

// True when every group of the assignment induces a connected subgraph of
// the (undirected) edge list.
inline bool groups_connected(std::size_t n,
                             const std::vector<std::pair<std::uint32_t, std::uint32_t>>& edges,
                             const std::vector<std::uint32_t>& assignment) {
    if (assignment.size() != n) return false;
    std::vector<std::vector<std::uint32_t>> adj(n);
    for (const auto& [a, b] : edges) {
        adj[a].push_back(b);
        adj[b].push_back(a);
    }
    std::uint32_t groups = 0;
    for (std::uint32_t g : assignment) groups = std::max(groups, g + 1);
    for (std::uint32_t g = 0; g < groups; ++g) {
        std::uint32_t start = 0xffffffffu;
        std::size_t member_count = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (assignment[i] == g) {
                ++member_count;
                if (start == 0xffffffffu) start = static_cast<std::uint32_t>(i);
            }
        }
        if (member_count == 0) return false;
        std::vector<char> seen(n, 0);
        std::queue<std::uint32_t> queue;
        queue.push(start);
        seen[start] = 1;
        std::size_t reached = 0;
        while (!queue.empty()) {
            const std::uint32_t u = queue.front();
            queue.pop();
            ++reached;
            for (std::uint32_t v : adj[u])
                if (!seen[v] && assignment[v] == g) {
                    seen[v] = 1;
                    queue.push(v);
                }
        }
        if (reached != member_count) return false;
    }
    return true;
}

struct BruteWls {
    double slope = 0.0;
    double intercept = 0.0;
    double se_slope = 0.0;
    double se_intercept = 0.0;
    double t_slope = 0.0;
    double t_intercept = 0.0;
    double adj_r_squared = 0.0;
};

// Weighted least squares via raw normal equations (X'WX)b = X'Wy and the
// HC0 sandwich assembled from explicit 2x2 matrix products.
inline BruteWls brute_wls(std::span<const double> x, std::span<const double> y,
                          std::span<const double> w) {
    const std::size_t n = x.size();
    double a00 = 0.0, a01 = 0.0, a11 = 0.0, b0 = 0.0, b1 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        a00 += w[i];
        a01 += w[i] * x[i];
        a11 += w[i] * x[i] * x[i];
        b0 += w[i] * y[i];
        b1 += w[i] * x[i] * y[i];
    }
    const double det = a00 * a11 - a01 * a01;
    BruteWls out;
    out.intercept = (a11 * b0 - a01 * b1) / det;
    out.slope = (a00 * b1 - a01 * b0) / det;

    // Meat: X'W diag(e^2) WX.
    double m00 = 0.0, m01 = 0.0, m11 = 0.0, ssr = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double e = y[i] - out.intercept - out.slope * x[i];
        const double we2 = w[i] * e * w[i] * e;
        m00 += we2;
        m01 += we2 * x[i];
        m11 += we2 * x[i] * x[i];
        ssr += w[i] * e * e;
    }
    // Bread inverse, explicit adjugate.
    const double i00 = a11 / det;
    const double i01 = -a01 / det;
    const double i11 = a00 / det;
    // V = Ainv * M * Ainv, element by element.
    const double v00 =
        i00 * (m00 * i00 + m01 * i01) + i01 * (m01 * i00 + m11 * i01);
    const double v11 =
        i01 * (m00 * i01 + m01 * i11) + i11 * (m01 * i01 + m11 * i11);
    out.se_intercept = std::sqrt(v00);
    out.se_slope = std::sqrt(v11);
    out.t_intercept = out.intercept / out.se_intercept;
    out.t_slope = out.slope / out.se_slope;

    const double ybar = b0 / a00;
    double sst = 0.0;
    for (std::size_t i = 0; i < n; ++i) sst += w[i] * (y[i] - ybar) * (y[i] - ybar);
    const double r2 = 1.0 - ssr / sst;
    out.adj_r_squared =
        1.0 - (1.0 - r2) * (static_cast<double>(n) - 1.0) / (static_cast<double>(n) - 2.0);
    return out;
}

inline double relative_gap(double a, double b) {
    const double scale = std::fmax(std::fabs(a), std::fabs(b));
    if (scale == 0.0) return 0.0;
    return std::fabs(a - b) / scale;
}

}  // namespace oracles
