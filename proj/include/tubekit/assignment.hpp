#pragma once

#include <vector>

namespace tubekit {

/// Rectangular min-cost one-to-one assignment (Hungarian method with
/// potentials). `allowed[i][j] == false` marks forbidden pairs. The result
/// first maximizes the number of assigned pairs, then minimizes their total
/// cost. Returns the column for each row, or -1.
std::vector<int> min_cost_assignment(const std::vector<std::vector<double>>& cost,
                                     const std::vector<std::vector<bool>>& allowed);

}  // namespace tubekit
