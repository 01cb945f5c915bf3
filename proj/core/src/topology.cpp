#include "formguard/topology.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace formguard {

void Topology::add_edge(int i, int j) {
    if (i == j) throw DomainError("topology: self-loop rejected");
    if (i < 1 || i > n_agents || j < 1 || j > n_agents) {
        throw DomainError("topology: edge index out of range");
    }
    edges.insert({std::min(i, j), std::max(i, j)});
}

void Topology::validate() const {
    if (n_agents < 1) throw DomainError("topology: need at least one agent");
    for (const auto& [i, j] : edges) {
        if (i == j) throw DomainError("topology: self-loop rejected");
        if (i < 1 || i > n_agents || j < 1 || j > n_agents) {
            throw DomainError("topology: edge index out of range");
        }
    }
    if (!is_connected(*this)) {
        throw DomainError("topology: mode " + std::to_string(mode_id) +
                          " graph is not connected");
    }
}

void SwitchingPlan::validate(const std::set<int>& known_modes) const {
    double prev = -1.0;
    for (const auto& [t, m] : schedule) {
        if (!(t > prev)) throw DomainError("switching plan: times must be strictly increasing");
        if (!known_modes.count(m)) {
            throw DomainError("switching plan: unknown mode " + std::to_string(m));
        }
        prev = t;
    }
}

num::Matrix adjacency(const Topology& topo) {
    num::Matrix a = num::Matrix::Zero(topo.n_agents, topo.n_agents);
    for (const auto& [i, j] : topo.edges) {
        a(i - 1, j - 1) = 1.0;
        a(j - 1, i - 1) = 1.0;
    }
    return a;
}

num::Matrix laplacian(const Topology& topo) {
    num::Matrix a = adjacency(topo);
    num::Matrix l = -a;
    for (int i = 0; i < topo.n_agents; ++i) l(i, i) = a.row(i).sum();
    return l;
}

std::set<int> neighbors(const Topology& topo, int i) {
    if (i < 1 || i > topo.n_agents) throw DomainError("neighbors: agent index out of range");
    std::set<int> out;
    for (const auto& [a, b] : topo.edges) {
        if (a == i) out.insert(b);
        if (b == i) out.insert(a);
    }
    return out;
}

bool is_connected(const Topology& topo) {
    if (topo.n_agents <= 1) return true;
    std::vector<char> seen(topo.n_agents + 1, 0);
    std::vector<int> stack{1};
    seen[1] = 1;
    int count = 1;
    while (!stack.empty()) {
        const int u = stack.back();
        stack.pop_back();
        for (const auto& [a, b] : topo.edges) {
            int v = -1;
            if (a == u) v = b;
            else if (b == u) v = a;
            if (v > 0 && !seen[v]) {
                seen[v] = 1;
                ++count;
                stack.push_back(v);
            }
        }
    }
    return count == topo.n_agents;
}

int active_mode(const SwitchingPlan& plan, double t) {
    if (t < 0.0 || std::isnan(t)) throw DomainError("active_mode: time must be non-negative");
    int mode = 1;
    for (const auto& [st, m] : plan.schedule) {
        if (st <= t) mode = m;
        else break;
    }
    return mode;
}

}  // namespace formguard
