#include "ibstress/sdecm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>

#include "ibstress/csv.hpp"
#include "ibstress/errors.hpp"
#include "ibstress/rng.hpp"
#include "ibstress/version.hpp"

namespace ibstress {

namespace {

constexpr double kIntTol = 1e-9;

double logistic_pair(double x, double y) {
    const double t = x * y;
    return t / (1.0 + t);
}

}  // namespace

FitTargets FitTargets::from_margins(std::vector<BankId> banks, const NodeMargins& margins) {
    FitTargets t;
    t.banks = std::move(banks);
    const std::size_t n = t.banks.size();
    t.k_out.resize(n);
    t.k_in.resize(n);
    t.s_out = margins.s_out;
    t.s_in = margins.s_in;
    for (std::size_t i = 0; i < n; ++i) {
        t.k_out[i] = static_cast<double>(margins.k_out[i]);
        t.k_in[i] = static_cast<double>(margins.k_in[i]);
    }
    t.validate();
    return t;
}

FitTargets FitTargets::from_network(const InterbankNetwork& net) {
    return from_margins(net.banks(), net.margins());
}

void FitTargets::validate() const {
    const int nb = n();
    if (nb < 1) throw ValidationError("targets need at least one bank");
    if (static_cast<int>(k_out.size()) != nb || static_cast<int>(k_in.size()) != nb ||
        static_cast<int>(s_out.size()) != nb || static_cast<int>(s_in.size()) != nb)
        throw ValidationError("target vectors must all have length n");
    double k_out_total = 0.0;
    double k_in_total = 0.0;
    double s_out_total = 0.0;
    double s_in_total = 0.0;
    for (int i = 0; i < nb; ++i) {
        const auto idx = static_cast<std::size_t>(i);
        const double max_degree = static_cast<double>(nb - 1);
        if (k_out[idx] < 0.0 || k_out[idx] > max_degree + kIntTol)
            throw ValidationError("bank " + banks[idx] + ": out-degree target " +
                                  format_double(k_out[idx]) + " outside [0, n-1]");
        if (k_in[idx] < 0.0 || k_in[idx] > max_degree + kIntTol)
            throw ValidationError("bank " + banks[idx] + ": in-degree target " +
                                  format_double(k_in[idx]) + " outside [0, n-1]");
        if (s_out[idx] < 0.0 || s_in[idx] < 0.0)
            throw ValidationError("bank " + banks[idx] + ": negative strength target");
        if (k_out[idx] > 0.0 && !(s_out[idx] > 0.0))
            throw ValidationError("bank " + banks[idx] +
                                  ": out-links but zero lending volume is infeasible "
                                  "under exponential weights");
        if (k_in[idx] > 0.0 && !(s_in[idx] > 0.0))
            throw ValidationError("bank " + banks[idx] +
                                  ": in-links but zero borrowing volume is infeasible "
                                  "under exponential weights");
        if (k_out[idx] == 0.0 && s_out[idx] > 0.0)
            throw ValidationError("bank " + banks[idx] + ": lending volume without links");
        if (k_in[idx] == 0.0 && s_in[idx] > 0.0)
            throw ValidationError("bank " + banks[idx] + ": borrowing volume without links");
        k_out_total += k_out[idx];
        k_in_total += k_in[idx];
        s_out_total += s_out[idx];
        s_in_total += s_in[idx];
    }
    if (std::abs(k_out_total - k_in_total) > 1e-9 * std::max(1.0, k_out_total))
        throw ValidationError("total out-degree != total in-degree");
    if (std::abs(s_out_total - s_in_total) > 1e-9 * std::max(1.0, s_out_total))
        throw ValidationError("total lending != total borrowing");
}

double SdecmParams::link_probability(int i, int j) const {
    if (i == j) throw ValidationError("link probability undefined for i == j");
    const std::int8_t pinned = pin_at(i, j);
    if (pinned < 0) return 0.0;
    if (pinned > 0) return 1.0;
    return logistic_pair(x_out[static_cast<std::size_t>(i)], x_in[static_cast<std::size_t>(j)]);
}

double SdecmParams::pair_rate(int i, int j) const {
    const double rate =
        beta_out[static_cast<std::size_t>(i)] + beta_in[static_cast<std::size_t>(j)];
    if (!(rate > 0.0))
        throw ValidationError("non-positive weight rate on pair (" +
                              banks[static_cast<std::size_t>(i)] + "," +
                              banks[static_cast<std::size_t>(j)] + ")");
    return rate;
}

double SdecmParams::expected_weight(int i, int j) const {
    if (i == j) throw ValidationError("expected weight undefined for i == j");
    return 1.0 / pair_rate(i, j);
}

ExpectedMargins analytic_margins(const SdecmParams& params) {
    const int n = params.n();
    ExpectedMargins m;
    m.k_out.assign(static_cast<std::size_t>(n), 0.0);
    m.k_in.assign(static_cast<std::size_t>(n), 0.0);
    m.s_out.assign(static_cast<std::size_t>(n), 0.0);
    m.s_in.assign(static_cast<std::size_t>(n), 0.0);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            if (i == j) continue;
            const double p = params.link_probability(i, j);
            if (p == 0.0) continue;
            m.k_out[static_cast<std::size_t>(i)] += p;
            m.k_in[static_cast<std::size_t>(j)] += p;
            const double mean_w = p / params.pair_rate(i, j);
            m.s_out[static_cast<std::size_t>(i)] += mean_w;
            m.s_in[static_cast<std::size_t>(j)] += mean_w;
        }
    }
    return m;
}

// ---------------------------------------------------------------------------
// Binary layer
// ---------------------------------------------------------------------------

namespace {

// Unit-capacity Dinic flow for the degree-realizability screen.
class MaxFlow {
public:
    explicit MaxFlow(int nodes) : adjacency_(static_cast<std::size_t>(nodes)) {}

    int add_edge(int from, int to, int capacity) {
        const int id = static_cast<int>(edges_.size());
        edges_.push_back({to, capacity, 0});
        adjacency_[static_cast<std::size_t>(from)].push_back(id);
        edges_.push_back({from, 0, 0});
        adjacency_[static_cast<std::size_t>(to)].push_back(id + 1);
        return id;
    }

    int flow_on(int edge_id) const { return edges_[static_cast<std::size_t>(edge_id)].flow; }

    long long run(int source, int sink) {
        long long total = 0;
        while (bfs(source, sink)) {
            iter_.assign(adjacency_.size(), 0);
            while (true) {
                const int pushed = dfs(source, sink, std::numeric_limits<int>::max());
                if (pushed == 0) break;
                total += pushed;
            }
        }
        return total;
    }

private:
    struct Edge {
        int to;
        int capacity;
        int flow;
    };

    bool bfs(int source, int sink) {
        level_.assign(adjacency_.size(), -1);
        std::queue<int> queue;
        queue.push(source);
        level_[static_cast<std::size_t>(source)] = 0;
        while (!queue.empty()) {
            const int u = queue.front();
            queue.pop();
            for (const int id : adjacency_[static_cast<std::size_t>(u)]) {
                const auto& e = edges_[static_cast<std::size_t>(id)];
                if (e.capacity - e.flow > 0 && level_[static_cast<std::size_t>(e.to)] < 0) {
                    level_[static_cast<std::size_t>(e.to)] =
                        level_[static_cast<std::size_t>(u)] + 1;
                    queue.push(e.to);
                }
            }
        }
        return level_[static_cast<std::size_t>(sink)] >= 0;
    }

    int dfs(int u, int sink, int limit) {
        if (u == sink) return limit;
        for (auto& it = iter_[static_cast<std::size_t>(u)];
             it < adjacency_[static_cast<std::size_t>(u)].size(); ++it) {
            const int id = adjacency_[static_cast<std::size_t>(u)][it];
            auto& e = edges_[static_cast<std::size_t>(id)];
            if (e.capacity - e.flow <= 0 ||
                level_[static_cast<std::size_t>(e.to)] !=
                    level_[static_cast<std::size_t>(u)] + 1)
                continue;
            const int pushed = dfs(e.to, sink, std::min(limit, e.capacity - e.flow));
            if (pushed > 0) {
                e.flow += pushed;
                edges_[static_cast<std::size_t>(id ^ 1)].flow -= pushed;
                return pushed;
            }
        }
        return 0;
    }

    std::vector<Edge> edges_;
    std::vector<std::vector<int>> adjacency_;
    std::vector<int> level_;
    std::vector<std::size_t> iter_;
};

// Iterative Kosaraju strongly-connected components.
std::vector<int> strongly_connected_components(const std::vector<std::vector<int>>& graph) {
    const int n = static_cast<int>(graph.size());
    std::vector<std::vector<int>> reverse(static_cast<std::size_t>(n));
    for (int u = 0; u < n; ++u)
        for (const int v : graph[static_cast<std::size_t>(u)])
            reverse[static_cast<std::size_t>(v)].push_back(u);

    std::vector<int> order;
    order.reserve(static_cast<std::size_t>(n));
    std::vector<char> seen(static_cast<std::size_t>(n), 0);
    std::vector<std::pair<int, std::size_t>> stack;
    for (int start = 0; start < n; ++start) {
        if (seen[static_cast<std::size_t>(start)]) continue;
        stack.emplace_back(start, 0);
        seen[static_cast<std::size_t>(start)] = 1;
        while (!stack.empty()) {
            auto& [u, it] = stack.back();
            if (it < graph[static_cast<std::size_t>(u)].size()) {
                const int v = graph[static_cast<std::size_t>(u)][it++];
                if (!seen[static_cast<std::size_t>(v)]) {
                    seen[static_cast<std::size_t>(v)] = 1;
                    stack.emplace_back(v, 0);
                }
            } else {
                order.push_back(u);
                stack.pop_back();
            }
        }
    }

    std::vector<int> component(static_cast<std::size_t>(n), -1);
    int components = 0;
    std::vector<int> dfs_stack;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        if (component[static_cast<std::size_t>(*it)] >= 0) continue;
        dfs_stack.push_back(*it);
        component[static_cast<std::size_t>(*it)] = components;
        while (!dfs_stack.empty()) {
            const int u = dfs_stack.back();
            dfs_stack.pop_back();
            for (const int v : reverse[static_cast<std::size_t>(u)]) {
                if (component[static_cast<std::size_t>(v)] < 0) {
                    component[static_cast<std::size_t>(v)] = components;
                    dfs_stack.push_back(v);
                }
            }
        }
        ++components;
    }
    return component;
}

bool integral_targets(const FitTargets& targets) {
    for (int i = 0; i < targets.n(); ++i) {
        const auto idx = static_cast<std::size_t>(i);
        if (std::abs(targets.k_out[idx] - std::round(targets.k_out[idx])) > kIntTol) return false;
        if (std::abs(targets.k_in[idx] - std::round(targets.k_in[idx])) > kIntTol) return false;
    }
    return true;
}

// Realizability screen for integer degree sequences. Runs a max flow
// (source -> lender, capacity k_out; lender -> borrower, capacity 1;
// borrower -> sink, capacity k_in) and classifies each ordered pair by the
// residual graph: a pair whose endpoints fall in different strongly
// connected components carries the same value in every realization, so its
// probability is pinned there; the rest form the strictly interior system
// the multipliers can actually represent.
void pin_forced_pairs(SdecmParams& params, const FitTargets& targets) {
    const int n = targets.n();
    const int source = 2 * n;
    const int sink = 2 * n + 1;
    MaxFlow flow(2 * n + 2);
    long long demand = 0;
    std::vector<std::vector<int>> pair_edge(static_cast<std::size_t>(n),
                                            std::vector<int>(static_cast<std::size_t>(n), -1));
    for (int i = 0; i < n; ++i) {
        const int k = static_cast<int>(std::llround(targets.k_out[static_cast<std::size_t>(i)]));
        if (k > 0) flow.add_edge(source, i, k);
        demand += k;
    }
    for (int j = 0; j < n; ++j) {
        const int k = static_cast<int>(std::llround(targets.k_in[static_cast<std::size_t>(j)]));
        if (k > 0) flow.add_edge(n + j, sink, k);
    }
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (i != j)
                pair_edge[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
                    flow.add_edge(i, n + j, 1);

    if (flow.run(source, sink) != demand)
        throw ValidationError("infeasible degree targets: no directed graph realizes them");

    // residual arcs among lender/borrower nodes decide which pairs are free
    std::vector<std::vector<int>> residual(static_cast<std::size_t>(2 * n));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            if (i == j) continue;
            const int id = pair_edge[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
            if (flow.flow_on(id) > 0)
                residual[static_cast<std::size_t>(n + j)].push_back(i);
            else
                residual[static_cast<std::size_t>(i)].push_back(n + j);
        }
    const auto component = strongly_connected_components(residual);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            if (i == j) continue;
            if (component[static_cast<std::size_t>(i)] ==
                component[static_cast<std::size_t>(n + j)])
                continue;  // on a residual cycle: genuinely probabilistic
            const int id = pair_edge[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
            params.pin[static_cast<std::size_t>(i) * static_cast<std::size_t>(n) +
                       static_cast<std::size_t>(j)] =
                flow.flow_on(id) > 0 ? std::int8_t{1} : std::int8_t{-1};
        }
}

// Hard node-level screen for non-integer targets: k = 0 or k = n-1 still
// forces a node's whole row/column. Boundary block cases of fractional
// targets are not detected and surface as reported non-convergence.
void pin_saturated_nodes(SdecmParams& params, const FitTargets& targets) {
    const int n = targets.n();
    auto pin_row = [&](int i, std::int8_t value) {
        for (int j = 0; j < n; ++j)
            if (j != i)
                params.pin[static_cast<std::size_t>(i) * static_cast<std::size_t>(n) +
                           static_cast<std::size_t>(j)] = value;
    };
    auto pin_col = [&](int j, std::int8_t value) {
        for (int i = 0; i < n; ++i)
            if (i != j)
                params.pin[static_cast<std::size_t>(i) * static_cast<std::size_t>(n) +
                           static_cast<std::size_t>(j)] = value;
    };
    for (int i = 0; i < n; ++i) {
        const auto idx = static_cast<std::size_t>(i);
        if (targets.k_out[idx] <= kIntTol) pin_row(i, -1);
        if (targets.k_in[idx] <= kIntTol) pin_col(i, -1);
    }
    for (int i = 0; i < n; ++i) {
        const auto idx = static_cast<std::size_t>(i);
        if (targets.k_out[idx] >= n - 1 - kIntTol) {
            for (int j = 0; j < n; ++j) {
                if (j == i) continue;
                auto& p = params.pin[idx * static_cast<std::size_t>(n) +
                                     static_cast<std::size_t>(j)];
                if (p == -1)
                    throw ValidationError("infeasible degree targets around bank " +
                                          params.banks[idx]);
                p = 1;
            }
        }
        if (targets.k_in[idx] >= n - 1 - kIntTol) {
            for (int j = 0; j < n; ++j) {
                if (j == i) continue;
                auto& p = params.pin[static_cast<std::size_t>(j) * static_cast<std::size_t>(n) +
                                     idx];
                if (p == -1)
                    throw ValidationError("infeasible degree targets around bank " +
                                          params.banks[idx]);
                p = 1;
            }
        }
    }
}

struct BinarySystem {
    std::vector<int> active_rows;
    std::vector<int> active_cols;
    std::vector<std::vector<int>> free_out;  // per row: borrower candidates left free
    std::vector<std::vector<int>> free_in;   // per col: lender candidates left free
    std::vector<double> row_resid;           // degree left for the free block
    std::vector<double> col_resid;
};

BinarySystem build_binary_system(const SdecmParams& params, const FitTargets& targets) {
    const int n = params.n();
    BinarySystem sys;
    sys.free_out.assign(static_cast<std::size_t>(n), {});
    sys.free_in.assign(static_cast<std::size_t>(n), {});
    sys.row_resid.assign(static_cast<std::size_t>(n), 0.0);
    sys.col_resid.assign(static_cast<std::size_t>(n), 0.0);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            if (i == j) continue;
            const std::int8_t pinned = params.pin_at(i, j);
            if (pinned == 0) {
                sys.free_out[static_cast<std::size_t>(i)].push_back(j);
                sys.free_in[static_cast<std::size_t>(j)].push_back(i);
            } else if (pinned > 0) {
                sys.row_resid[static_cast<std::size_t>(i)] -= 1.0;
                sys.col_resid[static_cast<std::size_t>(j)] -= 1.0;
            }
        }
    }
    for (int i = 0; i < n; ++i) {
        const auto idx = static_cast<std::size_t>(i);
        sys.row_resid[idx] += targets.k_out[idx];
        sys.col_resid[idx] += targets.k_in[idx];
        const double row_slots = static_cast<double>(sys.free_out[idx].size());
        const double col_slots = static_cast<double>(sys.free_in[idx].size());
        if (sys.row_resid[idx] < -kIntTol || sys.row_resid[idx] > row_slots + kIntTol ||
            sys.col_resid[idx] < -kIntTol || sys.col_resid[idx] > col_slots + kIntTol)
            throw ValidationError("infeasible degree targets around bank " + params.banks[idx]);
        if (sys.row_resid[idx] > kIntTol) sys.active_rows.push_back(i);
        if (sys.col_resid[idx] > kIntTol) sys.active_cols.push_back(i);
    }
    return sys;
}

// Residual of the degree system: max abs deviation of expected from target.
// Degrees only; the weight layer may not be fitted yet.
double binary_residual(const SdecmParams& params, const FitTargets& targets) {
    const int n = params.n();
    std::vector<double> k_out(static_cast<std::size_t>(n), 0.0);
    std::vector<double> k_in(static_cast<std::size_t>(n), 0.0);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            if (i == j) continue;
            const double p = params.link_probability(i, j);
            k_out[static_cast<std::size_t>(i)] += p;
            k_in[static_cast<std::size_t>(j)] += p;
        }
    double worst = 0.0;
    for (int i = 0; i < n; ++i) {
        const auto idx = static_cast<std::size_t>(i);
        worst = std::max(worst, std::abs(k_out[idx] - targets.k_out[idx]));
        worst = std::max(worst, std::abs(k_in[idx] - targets.k_in[idx]));
    }
    return worst;
}

// One damped Jacobi step of x_i <- k_i / sum_j y_j/(1 + x_i y_j).
void binary_fixed_point_step(SdecmParams& params, const BinarySystem& sys, double damping) {
    std::vector<double> new_x_out(params.x_out);
    std::vector<double> new_x_in(params.x_in);
    for (const int i : sys.active_rows) {
        const auto idx = static_cast<std::size_t>(i);
        double denom = 0.0;
        for (const int j : sys.free_out[idx]) {
            const double y = params.x_in[static_cast<std::size_t>(j)];
            denom += y / (1.0 + params.x_out[idx] * y);
        }
        if (denom > 0.0) {
            const double prop = sys.row_resid[idx] / denom;
            new_x_out[idx] = damping * params.x_out[idx] + (1.0 - damping) * prop;
        }
    }
    for (const int j : sys.active_cols) {
        const auto jdx = static_cast<std::size_t>(j);
        double denom = 0.0;
        for (const int i : sys.free_in[jdx]) {
            const double x = params.x_out[static_cast<std::size_t>(i)];
            denom += x / (1.0 + params.x_in[jdx] * x);
        }
        if (denom > 0.0) {
            const double prop = sys.col_resid[jdx] / denom;
            new_x_in[jdx] = damping * params.x_in[jdx] + (1.0 - damping) * prop;
        }
    }
    params.x_out = std::move(new_x_out);
    params.x_in = std::move(new_x_in);
}

// Safeguarded 1-D Newton on g(x) = sum_j x y_j/(1+x y_j) - resid, increasing
// in x with g(0) < 0. Bracketed by doubling; Newton steps fall back to
// bisection when they leave the bracket.
double solve_binary_coordinate(double x_start, double resid,
                               const std::vector<double>& partner_factors) {
    auto g = [&](double x) {
        double s = 0.0;
        for (const double y : partner_factors) s += x * y / (1.0 + x * y);
        return s - resid;
    };
    auto gprime = [&](double x) {
        double s = 0.0;
        for (const double y : partner_factors) {
            const double d = 1.0 + x * y;
            s += y / (d * d);
        }
        return s;
    };
    double lo = 0.0;
    double hi = std::max(x_start, 1.0);
    while (g(hi) < 0.0) {
        lo = hi;
        hi *= 2.0;
        if (hi > 1e300) return hi;  // numerically saturated; residual check reports it
    }
    double x = std::clamp(x_start, lo, hi);
    for (int it = 0; it < 60; ++it) {
        const double val = g(x);
        if (std::abs(val) < 1e-14 * std::max(1.0, resid)) break;
        if (val > 0.0)
            hi = x;
        else
            lo = x;
        const double deriv = gprime(x);
        double next = deriv > 0.0 ? x - val / deriv : x;
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        x = next;
    }
    return x;
}

void binary_newton_sweep(SdecmParams& params, const BinarySystem& sys) {
    std::vector<double> partners;
    for (const int i : sys.active_rows) {
        const auto idx = static_cast<std::size_t>(i);
        partners.clear();
        for (const int j : sys.free_out[idx])
            partners.push_back(params.x_in[static_cast<std::size_t>(j)]);
        params.x_out[idx] = solve_binary_coordinate(params.x_out[idx], sys.row_resid[idx],
                                                    partners);
    }
    for (const int j : sys.active_cols) {
        const auto jdx = static_cast<std::size_t>(j);
        partners.clear();
        for (const int i : sys.free_in[jdx])
            partners.push_back(params.x_out[static_cast<std::size_t>(i)]);
        params.x_in[jdx] = solve_binary_coordinate(params.x_in[jdx], sys.col_resid[jdx],
                                                   partners);
    }
}

}  // namespace

void fit_binary(SdecmParams& params, const FitTargets& targets, const FitOptions& opts) {
    targets.validate();
    const int n = targets.n();
    params.banks = targets.banks;
    params.x_out.assign(static_cast<std::size_t>(n), 0.0);
    params.x_in.assign(static_cast<std::size_t>(n), 0.0);
    params.pin.assign(static_cast<std::size_t>(n) * static_cast<std::size_t>(n), 0);
    params.beta_out.assign(static_cast<std::size_t>(n), 0.0);
    params.beta_in.assign(static_cast<std::size_t>(n), 0.0);
    params.seed_scheme = kSeedScheme;

    if (n > 1) {
        if (integral_targets(targets))
            pin_forced_pairs(params, targets);
        else
            pin_saturated_nodes(params, targets);
    }

    BinarySystem sys = build_binary_system(params, targets);

    // Factorized start: p_ij ~ x_i y_j with x_i = k_i / sqrt(total degree).
    double total_degree = 0.0;
    for (const int i : sys.active_rows) total_degree += sys.row_resid[static_cast<std::size_t>(i)];
    if (total_degree > 0.0) {
        const double scale = std::sqrt(total_degree);
        for (const int i : sys.active_rows)
            params.x_out[static_cast<std::size_t>(i)] =
                sys.row_resid[static_cast<std::size_t>(i)] / scale;
        for (const int j : sys.active_cols)
            params.x_in[static_cast<std::size_t>(j)] =
                sys.col_resid[static_cast<std::size_t>(j)] / scale;
    }

    FitDiagnostics diag;
    double best = std::numeric_limits<double>::infinity();
    long best_iteration = 0;
    bool newton = false;
    long iteration = 0;
    double residual = binary_residual(params, targets);
    while (residual > opts.tolerance && iteration < opts.max_iterations) {
        ++iteration;
        if (newton)
            binary_newton_sweep(params, sys);
        else
            binary_fixed_point_step(params, sys, opts.damping);
        residual = binary_residual(params, targets);
        if (residual < best * (1.0 - 1e-3)) {
            best = residual;
            best_iteration = iteration;
        }
        // slow linear tail or outright stall: hand over to the coordinate solver
        if (!newton && (iteration - best_iteration > 100 || iteration >= 500)) {
            newton = true;
            diag.newton_fallback = true;
        }
    }
    diag.residual = residual;
    diag.iterations = iteration;
    diag.converged = residual <= opts.tolerance;
    params.binary_fit = diag;
    if (!diag.converged)
        throw ConvergenceError("degree fit did not converge: residual " +
                               format_double(residual) + " after " + std::to_string(iteration) +
                               " iterations");
}

// ---------------------------------------------------------------------------
// Weight layer
// ---------------------------------------------------------------------------

namespace {

double weight_residual(const SdecmParams& params, const FitTargets& targets) {
    const auto m = analytic_margins(params);
    double worst = 0.0;
    for (int i = 0; i < params.n(); ++i) {
        const auto idx = static_cast<std::size_t>(i);
        if (targets.s_out[idx] > 0.0)
            worst = std::max(worst,
                             std::abs(m.s_out[idx] - targets.s_out[idx]) / targets.s_out[idx]);
        if (targets.s_in[idx] > 0.0)
            worst = std::max(worst, std::abs(m.s_in[idx] - targets.s_in[idx]) / targets.s_in[idx]);
    }
    return worst;
}

struct WeightSystem {
    std::vector<int> rows;  // banks with lending volume (beta_out unknowns)
    std::vector<int> cols;  // banks with borrowing volume (beta_in unknowns)
    // probabilities cached once; p[i][j] over the full matrix
    std::vector<std::vector<double>> p;
};

bool rates_positive(const SdecmParams& params, const WeightSystem& sys) {
    for (const int i : sys.rows) {
        for (const int j : sys.cols) {
            if (i == j || sys.p[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] == 0.0)
                continue;
            if (params.beta_out[static_cast<std::size_t>(i)] +
                    params.beta_in[static_cast<std::size_t>(j)] <=
                0.0)
                return false;
        }
    }
    return true;
}

void weight_fixed_point_step(SdecmParams& params, const WeightSystem& sys,
                             const FitTargets& targets, double damping) {
    const std::vector<double> old_out = params.beta_out;
    const std::vector<double> old_in = params.beta_in;
    std::vector<double> prop_out = params.beta_out;
    std::vector<double> prop_in = params.beta_in;
    for (const int i : sys.rows) {
        const auto idx = static_cast<std::size_t>(i);
        double expected_degree = 0.0;
        double tail = 0.0;
        for (const int j : sys.cols) {
            if (j == i) continue;
            const double pij = sys.p[idx][static_cast<std::size_t>(j)];
            if (pij == 0.0) continue;
            const double b = old_in[static_cast<std::size_t>(j)];
            expected_degree += pij;
            tail += pij * b / (old_out[idx] + b);
        }
        prop_out[idx] = (expected_degree - tail) / targets.s_out[idx];
    }
    for (const int j : sys.cols) {
        const auto jdx = static_cast<std::size_t>(j);
        double expected_degree = 0.0;
        double tail = 0.0;
        for (const int i : sys.rows) {
            if (i == j) continue;
            const double pij = sys.p[static_cast<std::size_t>(i)][jdx];
            if (pij == 0.0) continue;
            const double b = old_out[static_cast<std::size_t>(i)];
            expected_degree += pij;
            tail += pij * b / (old_in[jdx] + b);
        }
        prop_in[jdx] = (expected_degree - tail) / targets.s_in[jdx];
    }
    // Damped mix; backtrack toward the previous (feasible) iterate if the
    // step would push any pair rate non-positive.
    double step = 1.0 - damping;
    for (int attempt = 0; attempt < 60; ++attempt) {
        for (const int i : sys.rows) {
            const auto idx = static_cast<std::size_t>(i);
            params.beta_out[idx] = old_out[idx] + step * (prop_out[idx] - old_out[idx]);
        }
        for (const int j : sys.cols) {
            const auto jdx = static_cast<std::size_t>(j);
            params.beta_in[jdx] = old_in[jdx] + step * (prop_in[jdx] - old_in[jdx]);
        }
        if (rates_positive(params, sys)) return;
        step *= 0.5;
    }
    params.beta_out = old_out;
    params.beta_in = old_in;
}

// Safeguarded Newton on f(b) = sum_j p_j/(b + partner_j) - s, decreasing in b
// over (max(-partner_j), inf).
double solve_weight_coordinate(double b_start, double target,
                               const std::vector<std::pair<double, double>>& partners) {
    if (partners.empty()) return b_start;
    double lo_limit = -std::numeric_limits<double>::infinity();
    for (const auto& [p, b] : partners) {
        (void)p;
        lo_limit = std::max(lo_limit, -b);
    }
    auto f = [&](double b) {
        double s = 0.0;
        for (const auto& [pj, bj] : partners) s += pj / (b + bj);
        return s - target;
    };
    auto fprime = [&](double b) {
        double s = 0.0;
        for (const auto& [pj, bj] : partners) {
            const double d = b + bj;
            s -= pj / (d * d);
        }
        return s;
    };
    // Bracket the root: f -> +inf at lo_limit+, f -> -target < 0 at +inf.
    const double span = std::max(1.0, std::abs(lo_limit));
    double lo = lo_limit + 1e-12 * span;
    double hi = std::max(b_start, lo + span);
    while (f(hi) > 0.0) hi = lo_limit + (hi - lo_limit) * 2.0;
    while (f(lo) < 0.0) lo = lo_limit + (lo - lo_limit) * 0.5;
    double b = std::clamp(b_start, lo, hi);
    for (int it = 0; it < 80; ++it) {
        const double val = f(b);
        if (std::abs(val) < 1e-13 * std::max(1.0, target)) break;
        if (val > 0.0)
            lo = b;
        else
            hi = b;
        const double deriv = fprime(b);
        double next = deriv < 0.0 ? b - val / deriv : b;
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        b = next;
    }
    return b;
}

void weight_newton_sweep(SdecmParams& params, const WeightSystem& sys, const FitTargets& targets) {
    std::vector<std::pair<double, double>> partners;
    for (const int i : sys.rows) {
        const auto idx = static_cast<std::size_t>(i);
        partners.clear();
        for (const int j : sys.cols) {
            if (j == i) continue;
            const double pij = sys.p[idx][static_cast<std::size_t>(j)];
            if (pij > 0.0) partners.emplace_back(pij, params.beta_in[static_cast<std::size_t>(j)]);
        }
        params.beta_out[idx] = solve_weight_coordinate(params.beta_out[idx], targets.s_out[idx],
                                                       partners);
    }
    for (const int j : sys.cols) {
        const auto jdx = static_cast<std::size_t>(j);
        partners.clear();
        for (const int i : sys.rows) {
            if (i == j) continue;
            const double pij = sys.p[static_cast<std::size_t>(i)][jdx];
            if (pij > 0.0) partners.emplace_back(pij, params.beta_out[static_cast<std::size_t>(i)]);
        }
        params.beta_in[jdx] = solve_weight_coordinate(params.beta_in[jdx], targets.s_in[jdx],
                                                      partners);
    }
}

}  // namespace

void fit_weights(SdecmParams& params, const FitTargets& targets, const FitOptions& opts) {
    if (params.n() != targets.n() || params.x_out.empty())
        throw ValidationError("weight fit requires a fitted binary layer");

    const int n = params.n();
    WeightSystem sys;
    sys.p.assign(static_cast<std::size_t>(n), std::vector<double>(static_cast<std::size_t>(n), 0.0));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (i != j)
                sys.p[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
                    params.link_probability(i, j);
    for (int i = 0; i < n; ++i) {
        const auto idx = static_cast<std::size_t>(i);
        if (targets.s_out[idx] > 0.0) sys.rows.push_back(i);
        if (targets.s_in[idx] > 0.0) sys.cols.push_back(i);
    }

    // Split the homogeneous estimate rate ~ k/s evenly between the two ends.
    for (const int i : sys.rows) {
        const auto idx = static_cast<std::size_t>(i);
        params.beta_out[idx] = targets.k_out[idx] / (2.0 * targets.s_out[idx]);
    }
    for (const int j : sys.cols) {
        const auto jdx = static_cast<std::size_t>(j);
        params.beta_in[jdx] = targets.k_in[jdx] / (2.0 * targets.s_in[jdx]);
    }

    FitDiagnostics diag;
    double best = std::numeric_limits<double>::infinity();
    long best_iteration = 0;
    bool newton = false;
    long iteration = 0;
    double residual = weight_residual(params, targets);
    while (residual > opts.tolerance && iteration < opts.max_iterations) {
        ++iteration;
        if (newton)
            weight_newton_sweep(params, sys, targets);
        else
            weight_fixed_point_step(params, sys, targets, opts.damping);
        residual = weight_residual(params, targets);
        if (residual < best * (1.0 - 1e-3)) {
            best = residual;
            best_iteration = iteration;
        }
        if (!newton && (iteration - best_iteration > 100 || iteration >= 500)) {
            newton = true;
            diag.newton_fallback = true;
        }
    }
    diag.residual = residual;
    diag.iterations = iteration;
    diag.converged = residual <= opts.tolerance;
    params.weight_fit = diag;
    if (!diag.converged)
        throw ConvergenceError("strength fit did not converge: residual " +
                               format_double(residual) + " after " + std::to_string(iteration) +
                               " iterations");
}

SdecmParams fit_sdecm(const FitTargets& targets, const FitOptions& opts) {
    SdecmParams params;
    fit_binary(params, targets, opts);
    fit_weights(params, targets, opts);
    return params;
}

// ---------------------------------------------------------------------------
// Sampling and serialization
// ---------------------------------------------------------------------------

InterbankNetwork sample_network(const SdecmParams& params, std::uint64_t seed) {
    const int n = params.n();
    Rng rng(seed);
    std::vector<std::tuple<int, int, double>> edges;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            if (i == j) continue;
            const double u = rng.uniform();  // consumed for every pair
            const double p = params.link_probability(i, j);
            if (u < p) edges.emplace_back(i, j, rng.exponential(params.pair_rate(i, j)));
        }
    }
    return InterbankNetwork(params.banks, std::move(edges));
}

namespace {

nlohmann::ordered_json diag_to_json(const FitDiagnostics& d) {
    return {{"residual", d.residual},
            {"iterations", d.iterations},
            {"converged", d.converged},
            {"newton_fallback", d.newton_fallback}};
}

FitDiagnostics diag_from_json(const nlohmann::json& j) {
    FitDiagnostics d;
    d.residual = j.at("residual").get<double>();
    d.iterations = j.at("iterations").get<long>();
    d.converged = j.at("converged").get<bool>();
    d.newton_fallback = j.at("newton_fallback").get<bool>();
    return d;
}

}  // namespace

nlohmann::ordered_json SdecmParams::to_json() const {
    nlohmann::ordered_json j;
    j["schema"] = "sdecm-params/1";
    j["seed_scheme"] = seed_scheme;
    j["banks"] = banks;
    nlohmann::ordered_json ones = nlohmann::ordered_json::array();
    nlohmann::ordered_json zeros = nlohmann::ordered_json::array();
    for (int i = 0; i < n(); ++i)
        for (int jj = 0; jj < n(); ++jj) {
            if (i == jj) continue;
            const std::int8_t p = pin_at(i, jj);
            if (p > 0)
                ones.push_back(nlohmann::ordered_json::array({i, jj}));
            else if (p < 0)
                zeros.push_back(nlohmann::ordered_json::array({i, jj}));
        }
    j["binary"] = {{"x_out", x_out},
                   {"x_in", x_in},
                   {"pinned_one", ones},
                   {"pinned_zero", zeros},
                   {"fit", diag_to_json(binary_fit)}};
    j["weights"] = {{"beta_out", beta_out},
                    {"beta_in", beta_in},
                    {"fit", diag_to_json(weight_fit)}};
    return j;
}

SdecmParams SdecmParams::from_json(const nlohmann::json& j) {
    if (j.value("schema", "") != "sdecm-params/1")
        throw ValidationError("unrecognized parameter file schema");
    SdecmParams p;
    p.seed_scheme = j.at("seed_scheme").get<std::uint32_t>();
    p.banks = j.at("banks").get<std::vector<BankId>>();
    const auto nb = p.banks.size();
    const auto& b = j.at("binary");
    p.x_out = b.at("x_out").get<std::vector<double>>();
    p.x_in = b.at("x_in").get<std::vector<double>>();
    p.pin.assign(nb * nb, 0);
    auto apply_pins = [&](const nlohmann::json& arr, std::int8_t value) {
        for (const auto& e : arr) {
            const auto i = e.at(0).get<std::size_t>();
            const auto jj = e.at(1).get<std::size_t>();
            if (i >= nb || jj >= nb || i == jj)
                throw ValidationError("parameter file has an invalid pinned pair");
            p.pin[i * nb + jj] = value;
        }
    };
    apply_pins(b.at("pinned_one"), 1);
    apply_pins(b.at("pinned_zero"), -1);
    p.binary_fit = diag_from_json(b.at("fit"));
    const auto& w = j.at("weights");
    p.beta_out = w.at("beta_out").get<std::vector<double>>();
    p.beta_in = w.at("beta_in").get<std::vector<double>>();
    p.weight_fit = diag_from_json(w.at("fit"));
    if (p.x_out.size() != nb || p.x_in.size() != nb || p.beta_out.size() != nb ||
        p.beta_in.size() != nb)
        throw ValidationError("parameter file arrays have inconsistent lengths");
    return p;
}

}  // namespace ibstress
