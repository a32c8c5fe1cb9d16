#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "json.hpp"

namespace volumetrack {

enum class DescriptorKind : std::uint8_t { none = 0, color_histogram, height_profile };

// Appearance payload attached to trajectories and candidates. Distances are
// only defined between like kinds.
struct Descriptor {
    DescriptorKind kind = DescriptorKind::none;
    std::vector<float> values;
};

inline double descriptor_distance(const Descriptor& a, const Descriptor& b) {
    if (a.kind == DescriptorKind::none || b.kind == DescriptorKind::none) return 0.0;
    if (a.kind != b.kind)
        throw std::invalid_argument("descriptor_distance: mixed descriptor kinds");
    if (a.values.size() != b.values.size())
        throw std::invalid_argument("descriptor_distance: descriptor lengths differ");
    double s = 0;
    for (std::size_t i = 0; i < a.values.size(); ++i) {
        const double d = double(a.values[i]) - double(b.values[i]);
        s += d * d;
    }
    return std::sqrt(s);
}

struct MatchWeights {
    double dist = 1.0;  // lambda_D, per voxel
    double app = 5.0;   // lambda_A
    double cover = 20.0; // lambda_P
};

struct AssignmentEdge {
    int row = 0; // trajectory
    int col = 0; // candidate
    double dist = 0;
    double app = 0;
};

// Sparse trajectory/candidate matching problem with per-candidate coverage
// rewards. Energy of a matching X is
//   lambda_D * sum d + lambda_A * sum a - lambda_P * sum_{matched j} p_j .
struct AssignmentProblem {
    int rows = 0;
    int cols = 0;
    std::vector<AssignmentEdge> edges;
    std::vector<double> coverage; // p_j in [0,1], size == cols
    MatchWeights weights;
};

struct Matching {
    std::vector<std::pair<int, int>> pairs; // sorted by row
    double energy = 0;
    std::int64_t energy_scaled = 0;
};

// Costs are scaled to integers inside the solver so optima compare exactly.
inline constexpr double kCostScale = 1e6;

inline std::int64_t scaled_edge_weight(const AssignmentProblem& p, const AssignmentEdge& e) {
    return std::llround(kCostScale * (p.weights.dist * e.dist + p.weights.app * e.app -
                                      p.weights.cover * p.coverage[std::size_t(e.col)]));
}

struct BuildConfig {
    double gating_radius = 10.0;  // voxels
    int max_edges_per_row = 10;
    MatchWeights weights;
};

// d_ij = Euclidean xy distance between predicted trajectory position and
// candidate, gated at the radius; only the nearest max_edges_per_row gated
// candidates are kept per row. a_ij from appearance descriptors.
inline AssignmentProblem build_problem(const std::vector<Eigen::Vector2d>& track_pos,
                                       const std::vector<Descriptor>& track_desc,
                                       const std::vector<Eigen::Vector2d>& cand_pos,
                                       const std::vector<Descriptor>& cand_desc,
                                       const std::vector<double>& cand_prob,
                                       const BuildConfig& cfg = {}) {
    AssignmentProblem p;
    p.rows = int(track_pos.size());
    p.cols = int(cand_pos.size());
    p.coverage = cand_prob;
    p.coverage.resize(std::size_t(p.cols), 0.0);
    p.weights = cfg.weights;
    const Descriptor kNone{};
    for (int i = 0; i < p.rows; ++i) {
        std::vector<AssignmentEdge> row_edges;
        for (int j = 0; j < p.cols; ++j) {
            const double d = (track_pos[std::size_t(i)] - cand_pos[std::size_t(j)]).norm();
            if (d > cfg.gating_radius) continue;
            const Descriptor& td =
                i < int(track_desc.size()) ? track_desc[std::size_t(i)] : kNone;
            const Descriptor& cd =
                j < int(cand_desc.size()) ? cand_desc[std::size_t(j)] : kNone;
            row_edges.push_back({i, j, d, descriptor_distance(td, cd)});
        }
        std::stable_sort(row_edges.begin(), row_edges.end(),
                         [](const AssignmentEdge& a, const AssignmentEdge& b) {
                             return a.dist < b.dist;
                         });
        if (int(row_edges.size()) > cfg.max_edges_per_row)
            row_edges.resize(std::size_t(cfg.max_edges_per_row));
        std::sort(row_edges.begin(), row_edges.end(),
                  [](const AssignmentEdge& a, const AssignmentEdge& b) { return a.col < b.col; });
        p.edges.insert(p.edges.end(), row_edges.begin(), row_edges.end());
    }
    return p;
}

inline std::int64_t assignment_energy_scaled(const AssignmentProblem& p,
                                             const std::vector<std::pair<int, int>>& pairs) {
    std::int64_t total = 0;
    for (const auto& [i, j] : pairs) {
        bool found = false;
        for (const auto& e : p.edges)
            if (e.row == i && e.col == j) {
                total += scaled_edge_weight(p, e);
                found = true;
                break;
            }
        if (!found) throw std::invalid_argument("assignment energy: pair is not an edge");
    }
    return total;
}

inline double assignment_energy(const AssignmentProblem& p,
                                const std::vector<std::pair<int, int>>& pairs) {
    double d_sum = 0, a_sum = 0, p_sum = 0;
    for (const auto& [i, j] : pairs) {
        bool found = false;
        for (const auto& e : p.edges)
            if (e.row == i && e.col == j) {
                d_sum += e.dist;
                a_sum += e.app;
                found = true;
                break;
            }
        if (!found) throw std::invalid_argument("assignment energy: pair is not an edge");
        p_sum += p.coverage[std::size_t(j)];
    }
    return p.weights.dist * d_sum + p.weights.app * a_sum - p.weights.cover * p_sum;
}

namespace detail {

// Successive shortest augmenting paths with node potentials over the edge
// list, restricted to rows >= first_row and unblocked columns. Edge weights
// are shifted to be nonnegative; the shift is cardinality-neutral, so the
// argmin among maximum matchings is unchanged.
struct SspOutcome {
    int cardinality = 0;
    std::int64_t cost = 0; // sum of unshifted scaled weights
    std::vector<int> match_row; // row -> col or -1
};

inline SspOutcome ssp_solve(const AssignmentProblem& p,
                            const std::vector<std::vector<std::pair<int, std::int64_t>>>& adj,
                            std::int64_t shift, int first_row,
                            const std::vector<char>& col_blocked) {
    const int m = p.rows, n = p.cols;
    constexpr std::int64_t kInf = std::numeric_limits<std::int64_t>::max() / 4;
    std::vector<int> match_row(std::size_t(m), -1), match_col(std::size_t(n), -1);
    std::vector<std::int64_t> phi(std::size_t(m + n), 0); // potentials, rows then cols

    for (;;) {
        // multi-source Dijkstra from all free rows over reduced lengths
        std::vector<std::int64_t> dist(std::size_t(m + n), kInf);
        std::vector<int> parent_col(std::size_t(n), -1); // col -> row used to reach it
        std::vector<char> done(std::size_t(m + n), 0);
        for (int i = first_row; i < m; ++i)
            if (match_row[std::size_t(i)] < 0) dist[std::size_t(i)] = 0;
        for (;;) {
            int best = -1;
            std::int64_t bd = kInf;
            for (int v = 0; v < m + n; ++v)
                if (!done[std::size_t(v)] && dist[std::size_t(v)] < bd) {
                    bd = dist[std::size_t(v)];
                    best = v;
                }
            if (best < 0) break;
            done[std::size_t(best)] = 1;
            if (best < m) {
                const int i = best;
                for (const auto& [j, w] : adj[std::size_t(i)]) {
                    if (col_blocked[std::size_t(j)] || match_row[std::size_t(i)] == j) continue;
                    const std::int64_t len =
                        (w + shift) + phi[std::size_t(i)] - phi[std::size_t(m + j)];
                    if (dist[std::size_t(i)] + len < dist[std::size_t(m + j)]) {
                        dist[std::size_t(m + j)] = dist[std::size_t(i)] + len;
                        parent_col[std::size_t(j)] = i;
                    }
                }
            } else {
                const int j = best - m;
                const int i = match_col[std::size_t(j)];
                if (i >= 0) {
                    // traverse the matched edge backward at reduced length 0
                    if (dist[std::size_t(m + j)] < dist[std::size_t(i)])
                        dist[std::size_t(i)] = dist[std::size_t(m + j)];
                }
            }
        }
        int target = -1;
        std::int64_t target_dist = kInf;
        for (int j = 0; j < n; ++j)
            if (match_col[std::size_t(j)] < 0 && !col_blocked[std::size_t(j)] &&
                dist[std::size_t(m + j)] < target_dist) {
                target_dist = dist[std::size_t(m + j)];
                target = j;
            }
        if (target < 0) break;

        for (int v = 0; v < m + n; ++v)
            phi[std::size_t(v)] += std::min(dist[std::size_t(v)], target_dist);

        // walk the augmenting path back through parent pointers
        int j = target;
        while (j >= 0) {
            const int i = parent_col[std::size_t(j)];
            const int prev = match_row[std::size_t(i)];
            match_row[std::size_t(i)] = j;
            match_col[std::size_t(j)] = i;
            j = prev;
        }
    }

    SspOutcome out;
    out.match_row = std::move(match_row);
    for (int i = first_row; i < m; ++i) {
        const int j = out.match_row[std::size_t(i)];
        if (j < 0) continue;
        ++out.cardinality;
        for (const auto& [jj, w] : adj[std::size_t(i)])
            if (jj == j) {
                out.cost += w;
                break;
            }
    }
    return out;
}

} // namespace detail

// Maximum-cardinality matching over the sparse edge set minimizing the
// energy among all maximum-cardinality matchings; the coverage reward is
// folded into every edge incident to a candidate. Ties are broken by the
// lexicographically smallest pair list.
inline Matching solve_assignment(const AssignmentProblem& p) {
    Matching result;
    if (p.rows <= 0 || p.cols <= 0 || p.edges.empty()) return result;
    if (int(p.coverage.size()) != p.cols)
        throw std::invalid_argument("solve_assignment: coverage size != cols");

    std::vector<std::vector<std::pair<int, std::int64_t>>> adj(std::size_t(p.rows));
    std::int64_t min_w = 0;
    for (const auto& e : p.edges) {
        if (e.row < 0 || e.row >= p.rows || e.col < 0 || e.col >= p.cols)
            throw std::invalid_argument("solve_assignment: edge out of range");
        const std::int64_t w = scaled_edge_weight(p, e);
        adj[std::size_t(e.row)].push_back({e.col, w});
        min_w = std::min(min_w, w);
    }
    for (auto& row : adj)
        std::sort(row.begin(), row.end());
    const std::int64_t shift = -min_w; // min_w <= 0

    std::vector<char> blocked(std::size_t(p.cols), 0);
    const auto base = detail::ssp_solve(p, adj, shift, 0, blocked);

    // Lexicographic refinement: fix rows in order, keeping optimality. A row
    // is matched to its smallest feasible column whenever some optimal
    // maximum matching extends the decisions made so far with that pair.
    int forced_card = 0;
    std::int64_t forced_cost = 0;
    for (int i = 0; i < p.rows; ++i) {
        const int need_card = base.cardinality - forced_card;
        for (const auto& [j, w] : adj[std::size_t(i)]) {
            if (blocked[std::size_t(j)]) continue;
            blocked[std::size_t(j)] = 1;
            const auto sub = detail::ssp_solve(p, adj, shift, i + 1, blocked);
            if (sub.cardinality == need_card - 1 &&
                forced_cost + w + sub.cost == base.cost) {
                result.pairs.emplace_back(i, j);
                forced_cost += w;
                ++forced_card;
                break;
            }
            blocked[std::size_t(j)] = 0;
        }
    }

    result.energy_scaled = forced_cost;
    result.energy = assignment_energy(p, result.pairs);
    return result;
}

// Exhaustive oracle: enumerates every maximal-cardinality partial injection
// over the edge set; same objective and tie-break as solve_assignment.
// Guarded to small problems.
inline Matching brute_force_assignment(const AssignmentProblem& p) {
    if (p.rows > 7 || p.cols > 7)
        throw std::invalid_argument("brute_force_assignment: guarded to rows,cols <= 7");
    Matching best;
    if (p.rows <= 0 || p.cols <= 0 || p.edges.empty()) return best;

    std::vector<std::vector<std::pair<int, std::int64_t>>> adj(std::size_t(p.rows));
    for (const auto& e : p.edges)
        adj[std::size_t(e.row)].push_back({e.col, scaled_edge_weight(p, e)});
    for (auto& row : adj) std::sort(row.begin(), row.end());

    int best_card = -1;
    std::int64_t best_cost = 0;
    std::vector<std::pair<int, int>> best_pairs, cur;
    std::vector<char> used(std::size_t(p.cols), 0);

    auto consider = [&](std::int64_t cost) {
        const int card = int(cur.size());
        if (card > best_card || (card == best_card && cost < best_cost) ||
            (card == best_card && cost == best_cost && cur < best_pairs)) {
            best_card = card;
            best_cost = cost;
            best_pairs = cur;
        }
    };

    auto recurse = [&](auto&& self, int row, std::int64_t cost) -> void {
        if (row == p.rows) {
            consider(cost);
            return;
        }
        self(self, row + 1, cost); // row left unmatched
        for (const auto& [j, w] : adj[std::size_t(row)]) {
            if (used[std::size_t(j)]) continue;
            used[std::size_t(j)] = 1;
            cur.emplace_back(row, j);
            self(self, row + 1, cost + w);
            cur.pop_back();
            used[std::size_t(j)] = 0;
        }
    };
    recurse(recurse, 0, 0);

    best.pairs = best_pairs;
    best.energy_scaled = best_cost;
    best.energy = assignment_energy(p, best.pairs);
    return best;
}

// Failure-triage dump.
inline nlohmann::ordered_json assignment_to_json(const AssignmentProblem& p,
                                                 const Matching* matching = nullptr) {
    nlohmann::ordered_json j;
    j["m"] = p.rows;
    j["n"] = p.cols;
    j["edges"] = nlohmann::ordered_json::array();
    for (const auto& e : p.edges)
        j["edges"].push_back({{"i", e.row}, {"j", e.col}, {"d", e.dist}, {"a", e.app}});
    j["p"] = p.coverage;
    j["lambda"] = {p.weights.dist, p.weights.app, p.weights.cover};
    if (matching) {
        j["pairs"] = nlohmann::ordered_json::array();
        for (const auto& [a, b] : matching->pairs) j["pairs"].push_back({a, b});
        j["energy"] = matching->energy;
    }
    return j;
}

} // namespace volumetrack
