#pragma once

#include <set>
#include <utility>
#include <vector>

#include "formguard/matrix.hpp"

namespace formguard {

/// Undirected communication graph for one mode. Agent indices are 1-based.
struct Topology {
    int n_agents = 0;
    int mode_id = 1;
    std::set<std::pair<int, int>> edges;  // normalized (i, j) with i < j

    /// Insert an undirected edge; rejects self-loops and out-of-range indices.
    void add_edge(int i, int j);
    /// Structural validation: edge indices in range, no self-loops, connected.
    void validate() const;
};

/// Mode schedule of the right-continuous switching signal. The system starts in
/// mode 1; each entry (t, m) switches to mode m at time t.
struct SwitchingPlan {
    std::vector<std::pair<double, int>> schedule;  // strictly increasing times

    void validate(const std::set<int>& known_modes) const;
};

num::Matrix adjacency(const Topology& topo);
num::Matrix laplacian(const Topology& topo);
std::set<int> neighbors(const Topology& topo, int i);
bool is_connected(const Topology& topo);

/// Mode active at time t (right-continuous: at a switch instant the new mode).
int active_mode(const SwitchingPlan& plan, double t);

}  // namespace formguard
