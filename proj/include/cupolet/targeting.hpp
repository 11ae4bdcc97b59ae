#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <queue>
#include <string>
#include <utility>
#include <vector>

#include "cupolet/cupolet.hpp"

namespace cupolet {

/// Directed cupolet-switching graph. An edge A -> B weighs the transient
/// (in crossings) the system spends between dropping A's control word and
/// settling on B's cycle.
struct TransitionGraph {
    std::vector<std::string> nodes;  // catalog keys, sorted
    std::map<std::pair<std::string, std::string>, long long> edges;
    std::uint64_t fingerprint = 0;

    std::optional<long long> weight(const std::string& a, const std::string& b) const {
        auto it = edges.find({a, b});
        if (it == edges.end()) return std::nullopt;
        return it->second;
    }
};

namespace detail {

/// Point of the cycle from which the next crossing consumes control bit 0.
/// Switching from here makes transition weights well-defined and replayable.
inline State phase0_start(const Cupolet& cup, const SectionSet& ss) {
    const long long P = cup.period_crossings;
    for (long long i = 0; i < P; ++i) {
        if (phase_at(cup, (i + 1) % P) == 0) {
            const CycleNode& nd = cup.bin_cycle[static_cast<std::size_t>(i)];
            return bin_center(nd.plane, nd.bin, ss);
        }
    }
    throw NotStabilized("cycle never reaches control phase 0");  // unreachable by construction
}

}  // namespace detail

struct EdgeFailure {
    std::string from, to, reason;
};

/// Measures every ordered transition by simulation. Edges whose run fails to
/// stabilize (or stabilizes on the wrong cycle) are omitted and logged.
inline TransitionGraph build_graph(const Catalog& cat, const SectionSet& ss,
                                   const CodingTable& ct, const SystemConfig& cfg,
                                   int workers = 0,
                                   std::vector<EdgeFailure>* failures = nullptr) {
    if (cat.entries.empty()) throw EmptyCatalog("transition graph needs a non-empty catalog");
    TransitionGraph g;
    g.fingerprint = cat.fingerprint;
    for (const auto& [key, cup] : cat.entries) g.nodes.push_back(key);

    struct Task {
        const Cupolet* from;
        const Cupolet* to;
    };
    std::vector<Task> tasks;
    for (const auto& [ka, a] : cat.entries)
        for (const auto& [kb, b] : cat.entries)
            if (ka != kb) tasks.push_back(Task{&a, &b});

    std::vector<std::optional<long long>> weights(tasks.size());
    std::vector<std::string> errors(tasks.size());
    parallel_for(tasks.size(), workers, [&](std::size_t i) {
        const Cupolet& a = *tasks[i].from;
        const Cupolet& b = *tasks[i].to;
        try {
            State start = detail::phase0_start(a, ss);
            RunResult run = run_controlled(start, ControlWord(b.control), cfg.max_crossings,
                                           ss, ct, cfg);
            std::vector<CycleNode> nodes;
            nodes.reserve(static_cast<std::size_t>(run.period));
            for (long long k = 0; k < run.period; ++k) {
                const CrossingRecord& r =
                    run.records[static_cast<std::size_t>(run.transient + k)];
                nodes.push_back(CycleNode{r.plane, r.bin, r.phase});
            }
            if (least_rotation(nodes) != b.bin_cycle)
                errors[i] = "stabilized onto a different cycle";
            else
                weights[i] = run.transient;
        } catch (const Error& e) {
            errors[i] = e.what();
        }
    });

    for (const auto& [key, cup] : cat.entries) g.edges[{key, key}] = 0;
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        if (weights[i])
            g.edges[{tasks[i].from->control, tasks[i].to->control}] = *weights[i];
        else if (failures)
            failures->push_back(
                EdgeFailure{tasks[i].from->control, tasks[i].to->control, errors[i]});
    }
    return g;
}

struct Path {
    std::vector<std::string> nodes;  // includes both endpoints; single node when a == b
    long long cost = 0;
};

/// Dijkstra over the transition graph. Ties break by fewer hops, then by
/// lexicographic node sequence, so the result is unique and reproducible.
inline std::optional<Path> shortest_path(const TransitionGraph& g, const std::string& a,
                                         const std::string& b) {
    auto is_node = [&](const std::string& k) {
        return std::find(g.nodes.begin(), g.nodes.end(), k) != g.nodes.end();
    };
    if (!is_node(a) || !is_node(b))
        throw FormatError("shortest_path endpoints must be graph nodes");
    if (a == b) return Path{{a}, 0};

    struct Label {
        long long cost;
        long long hops;
        std::vector<std::string> path;
        bool operator>(const Label& o) const {
            if (cost != o.cost) return cost > o.cost;
            if (hops != o.hops) return hops > o.hops;
            return path > o.path;
        }
    };
    std::map<std::string, Label> best;
    std::priority_queue<Label, std::vector<Label>, std::greater<>> pq;
    pq.push(Label{0, 0, {a}});
    while (!pq.empty()) {
        Label cur = pq.top();
        pq.pop();
        const std::string& node = cur.path.back();
        if (best.count(node)) continue;  // already settled with a better label
        best.emplace(node, cur);
        if (node == b) return Path{cur.path, cur.cost};
        for (const auto& [edge, w] : g.edges) {
            if (edge.first != node || edge.second == node) continue;
            if (best.count(edge.second)) continue;
            Label nxt{cur.cost + w, cur.hops + 1, cur.path};
            nxt.path.push_back(edge.second);
            pq.push(std::move(nxt));
        }
    }
    return std::nullopt;
}

struct ExecutionReport {
    bool success = false;
    long long realized_transient = 0;
    std::vector<long long> hop_transients;
    int failed_hop = -1;
};

/// Simulates the switching schedule along a path and verifies arrival. The
/// realized transient is the sum over hops of crossings spent off-cycle.
inline ExecutionReport execute_path(const Path& path, const Catalog& cat, const SectionSet& ss,
                                    const CodingTable& ct, const SystemConfig& cfg) {
    ExecutionReport rep;
    if (path.nodes.empty()) throw FormatError("path must contain at least one node");
    for (const auto& n : path.nodes)
        if (cat.entries.find(n) == cat.entries.end())
            throw FormatError("path node " + n + " is not in the catalog");
    if (path.nodes.size() == 1) {
        rep.success = true;
        return rep;
    }
    for (std::size_t hop = 0; hop + 1 < path.nodes.size(); ++hop) {
        const Cupolet& from = cat.entries.at(path.nodes[hop]);
        const Cupolet& to = cat.entries.at(path.nodes[hop + 1]);
        try {
            State start = detail::phase0_start(from, ss);
            RunResult run = run_controlled(start, ControlWord(to.control), cfg.max_crossings,
                                           ss, ct, cfg);
            std::vector<CycleNode> nodes;
            nodes.reserve(static_cast<std::size_t>(run.period));
            for (long long k = 0; k < run.period; ++k) {
                const CrossingRecord& r = run.records[static_cast<std::size_t>(run.transient + k)];
                nodes.push_back(CycleNode{r.plane, r.bin, r.phase});
            }
            if (least_rotation(nodes) != to.bin_cycle)
                throw TargetingFailed("hop stabilized onto a different cycle",
                                      static_cast<int>(hop));
            rep.hop_transients.push_back(run.transient);
            rep.realized_transient += run.transient;
        } catch (const TargetingFailed&) {
            throw;
        } catch (const Error& e) {
            throw TargetingFailed(std::string("hop failed: ") + e.what(),
                                  static_cast<int>(hop));
        }
    }
    rep.success = true;
    return rep;
}

}  // namespace cupolet
