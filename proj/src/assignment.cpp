#include "tubekit/assignment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace tubekit {

namespace {

// Square-or-wide Hungarian (rows <= cols), 1-based internal arrays.
std::vector<int> hungarian(const std::vector<std::vector<double>>& a, int n, int m) {
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0), minv(m + 1);
    std::vector<int> p(m + 1, 0), way(m + 1, 0);
    std::vector<char> used(m + 1);
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::fill(minv.begin(), minv.end(), inf);
        std::fill(used.begin(), used.end(), 0);
        do {
            used[j0] = 1;
            const int i0 = p[j0];
            double delta = inf;
            int j1 = 0;
            for (int j = 1; j <= m; ++j) {
                if (used[j]) {
                    continue;
                }
                const double cur = a[i0 - 1][j - 1] - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= m; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const int j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    std::vector<int> row_to_col(n, -1);
    for (int j = 1; j <= m; ++j) {
        if (p[j] != 0) {
            row_to_col[p[j] - 1] = j - 1;
        }
    }
    return row_to_col;
}

}  // namespace

std::vector<int> min_cost_assignment(const std::vector<std::vector<double>>& cost,
                                     const std::vector<std::vector<bool>>& allowed) {
    const int rows = static_cast<int>(cost.size());
    if (rows == 0) {
        return {};
    }
    const int cols = static_cast<int>(cost.front().size());
    if (cols == 0) {
        return std::vector<int>(rows, -1);
    }
    if (static_cast<int>(allowed.size()) != rows) {
        throw std::invalid_argument("min_cost_assignment: mask shape mismatch");
    }

    // Forbidden pairs cost more than any assignment made only of allowed
    // pairs, so the solver first minimizes how many forbidden pairs it uses.
    double span = 0.0;
    for (int i = 0; i < rows; ++i) {
        if (static_cast<int>(cost[i].size()) != cols || static_cast<int>(allowed[i].size()) != cols) {
            throw std::invalid_argument("min_cost_assignment: ragged cost matrix");
        }
        for (int j = 0; j < cols; ++j) {
            if (allowed[i][j]) {
                span = std::max(span, std::abs(cost[i][j]));
            }
        }
    }
    const double forbidden = (span + 1.0) * (std::min(rows, cols) + 1) * 2.0;

    const bool transpose = rows > cols;
    const int n = transpose ? cols : rows;
    const int m = transpose ? rows : cols;
    std::vector<std::vector<double>> a(n, std::vector<double>(m));
    for (int i = 0; i < rows; ++i) {
        for (int j = 0; j < cols; ++j) {
            const double c = allowed[i][j] ? cost[i][j] : forbidden;
            if (transpose) {
                a[j][i] = c;
            } else {
                a[i][j] = c;
            }
        }
    }

    const std::vector<int> solved = hungarian(a, n, m);
    std::vector<int> result(rows, -1);
    for (int r = 0; r < n; ++r) {
        const int c = solved[r];
        if (c < 0) {
            continue;
        }
        const int i = transpose ? c : r;
        const int j = transpose ? r : c;
        if (allowed[i][j]) {
            result[i] = j;
        }
    }
    return result;
}

}  // namespace tubekit
