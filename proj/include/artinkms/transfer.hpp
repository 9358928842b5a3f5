#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "artinkms/graph.hpp"
#include "artinkms/linalg.hpp"
#include "artinkms/monoid.hpp"

namespace artinkms {

// ---------------------------------------------------------------------------
// A transfer system: one nonnegative d x d matrix per generator, acting on
// trace coordinate vectors, with matrices of edge-adjacent generators
// required to commute so that products along words are word-independent.
// ---------------------------------------------------------------------------

struct TransferSystem {
    GraphPtr graph;
    int dim = 0;
    std::vector<Matrix> F;                       // per generator
    WeightMap N;                                 // per generator, positive
    std::vector<std::optional<int>> rank_hint;   // minimal generator counts m(s), if known
    bool integer_entries = false;                // all F entries integral; commutation checked exactly

    int generators() const { return graph ? graph->vertex_count() : 0; }
};

struct ValidationIssue {
    std::string message;
};

struct ValidationReport {
    bool ok = true;
    std::vector<ValidationIssue> issues;
    // max |F_s F_t - F_t F_s| entry per edge, keyed by (s, t) with s < t
    std::vector<std::tuple<int, int, double>> edge_commutators;
};

inline ValidationReport validate(const TransferSystem& sys) {
    ValidationReport rep;
    auto fail = [&](std::string msg) {
        rep.ok = false;
        rep.issues.push_back({std::move(msg)});
    };
    if (!sys.graph) {
        fail("system: missing graph");
        return rep;
    }
    const int n = sys.generators();
    if (sys.dim <= 0) fail("system: dimension must be positive");
    if (static_cast<int>(sys.F.size()) != n) fail("system: one matrix per generator required");
    if (sys.N.size() != n) fail("system: one weight per generator required");
    if (static_cast<int>(sys.rank_hint.size()) != n && !sys.rank_hint.empty())
        fail("system: rank hints must be absent or one per generator");
    if (!rep.ok) return rep;

    for (int s = 0; s < n; ++s) {
        const Matrix& m = sys.F[s];
        if (m.rows() != sys.dim || m.cols() != sys.dim)
            fail("system: matrix for '" + sys.graph->name(s) + "' has wrong shape");
        else if ((m.array() < 0.0).any())
            fail("system: matrix for '" + sys.graph->name(s) + "' has a negative entry");
    }
    if (!rep.ok) return rep;

    const double tol = sys.integer_entries ? 0.0 : 1e-9;
    for (int s = 0; s < n; ++s) {
        for (int t = s + 1; t < n; ++t) {
            if (!sys.graph->adjacent(s, t)) continue;
            double comm = (sys.F[s] * sys.F[t] - sys.F[t] * sys.F[s]).cwiseAbs().maxCoeff();
            rep.edge_commutators.emplace_back(s, t, comm);
            if (comm > tol)
                fail("system: matrices for edge {" + sys.graph->name(s) + "," + sys.graph->name(t)
                     + "} do not commute (max commutator entry " + std::to_string(comm) + ")");
        }
    }
    return rep;
}

inline void ensure_valid(const TransferSystem& sys) {
    ValidationReport rep = validate(sys);
    if (!rep.ok) throw std::invalid_argument("transfer: " + rep.issues.front().message);
}

/// F_p tau: the matrices of the letters of p applied right-to-left, so that
/// F_{pq} = F_p F_q. Word-independence is guaranteed by edge commutation.
inline TraceVec apply_Fp(const TransferSystem& sys, const MonoidElement& p, const TraceVec& tau) {
    if (tau.size() != sys.dim) throw std::invalid_argument("transfer: trace dimension mismatch");
    TraceVec v = tau;
    const auto& w = p.word();
    for (auto it = w.rbegin(); it != w.rend(); ++it) v = sys.F[*it] * v;
    return v;
}

/// Product of the generator matrices over a clique mask (order irrelevant).
inline Matrix clique_matrix(const TransferSystem& sys, std::uint32_t mask) {
    Matrix m = Matrix::Identity(sys.dim, sys.dim);
    for (int s = 0; s < sys.generators(); ++s)
        if ((mask >> s) & 1u) m = m * sys.F[s];
    return m;
}

// ---------------------------------------------------------------------------
// Builders.
// ---------------------------------------------------------------------------

struct KGraphModel {
    int vertex_count = 0;
    std::vector<Eigen::MatrixXi> adjacency;  // one nonnegative integer matrix per colour
};

struct LocalMapModel {
    int state_count = 0;
    std::vector<std::vector<int>> maps;  // each maps[i][z] in [0, state_count)
};

namespace detail {

inline std::vector<std::string> numbered_names(const std::string& prefix, int n) {
    std::vector<std::string> out;
    out.reserve(n);
    for (int i = 1; i <= n; ++i) out.push_back(prefix + std::to_string(i));
    return out;
}

}  // namespace detail

/// Transfer system of a k-graph given its colour adjacency matrices: the
/// monoid is free abelian on k generators and F_i acts by A_i on vertex
/// vectors. The rank hint for colour i is the total edge count of A_i.
inline TransferSystem from_kgraph(const KGraphModel& model, const WeightMap& N) {
    const int k = static_cast<int>(model.adjacency.size());
    if (k == 0) throw std::invalid_argument("kgraph: no adjacency matrices");
    if (N.size() != k) throw std::invalid_argument("kgraph: one weight per colour required");
    const int d = model.vertex_count;
    for (const auto& a : model.adjacency) {
        if (a.rows() != d || a.cols() != d)
            throw std::invalid_argument("kgraph: adjacency matrix has wrong shape");
        if ((a.array() < 0).any())
            throw std::invalid_argument("kgraph: adjacency entries must be nonnegative");
    }
    for (int i = 0; i < k; ++i)
        for (int j = i + 1; j < k; ++j)
            if (model.adjacency[i] * model.adjacency[j] != model.adjacency[j] * model.adjacency[i])
                throw std::invalid_argument("kgraph: adjacency matrices for colours "
                                            + std::to_string(i + 1) + " and " + std::to_string(j + 1)
                                            + " do not commute");

    TransferSystem sys;
    sys.graph = share(SimpleGraph::complete(detail::numbered_names("e", k)));
    sys.dim = d;
    sys.N = N;
    sys.integer_entries = true;
    sys.F.reserve(k);
    sys.rank_hint.reserve(k);
    for (const auto& a : model.adjacency) {
        sys.F.push_back(a.cast<double>());
        sys.rank_hint.push_back(static_cast<int>(a.sum()));
    }
    ensure_valid(sys);
    return sys;
}

/// Transfer system of commuting surjective self-maps of a finite state set:
/// F_i[z][w] = 1 exactly when h_i(w) = z.
inline TransferSystem from_local_maps(const LocalMapModel& model, const WeightMap& N) {
    const int n = static_cast<int>(model.maps.size());
    if (n == 0) throw std::invalid_argument("local_maps: no maps");
    if (N.size() != n) throw std::invalid_argument("local_maps: one weight per map required");
    const int d = model.state_count;
    if (d <= 0) throw std::invalid_argument("local_maps: empty state set");
    for (int i = 0; i < n; ++i) {
        if (static_cast<int>(model.maps[i].size()) != d)
            throw std::invalid_argument("local_maps: map " + std::to_string(i + 1)
                                        + " has wrong domain size");
        std::vector<bool> hit(d, false);
        for (int z = 0; z < d; ++z) {
            int img = model.maps[i][z];
            if (img < 0 || img >= d)
                throw std::invalid_argument("local_maps: map value out of range");
            hit[img] = true;
        }
        for (int z = 0; z < d; ++z)
            if (!hit[z])
                throw std::invalid_argument("local_maps: map " + std::to_string(i + 1)
                                            + " is not surjective");
    }
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            for (int z = 0; z < d; ++z)
                if (model.maps[i][model.maps[j][z]] != model.maps[j][model.maps[i][z]])
                    throw std::invalid_argument("local_maps: maps " + std::to_string(i + 1) + " and "
                                                + std::to_string(j + 1) + " do not commute");

    TransferSystem sys;
    sys.graph = share(SimpleGraph::complete(detail::numbered_names("h", n)));
    sys.dim = d;
    sys.N = N;
    sys.integer_entries = true;
    for (int i = 0; i < n; ++i) {
        Matrix f = Matrix::Zero(d, d);
        for (int w = 0; w < d; ++w) f(model.maps[i][w], w) = 1.0;
        sys.F.push_back(std::move(f));
        sys.rank_hint.push_back(d);
    }
    ensure_valid(sys);
    return sys;
}

/// One-dimensional fibers: F_s = [1] for every generator.
inline TransferSystem trivial_system(GraphPtr graph, const WeightMap& N) {
    TransferSystem sys;
    sys.graph = std::move(graph);
    sys.dim = 1;
    sys.N = N;
    sys.integer_entries = true;
    sys.F.assign(sys.graph->vertex_count(), Matrix::Ones(1, 1));
    sys.rank_hint.assign(sys.graph->vertex_count(), 1);
    ensure_valid(sys);
    return sys;
}

/// The two-point shift family on the free abelian monoid: coordinates in I
/// act by the swap matrix S = [[0,2],[2,0]] with weight alpha, the rest by
/// 2I with weight 2. Comes with the distinguished vector
/// mu = (1 - S/alpha)^{1-|I|} (0,1), positive for alpha > 2.
struct OptimalExample {
    TransferSystem system;
    TraceVec mu;
};

inline OptimalExample example_optimal(int n, const std::vector<int>& I, double alpha) {
    if (n < 2) throw std::invalid_argument("example_optimal: n must be at least 2");
    if (!(alpha > 2.0)) throw std::invalid_argument("example_optimal: alpha must exceed 2");
    if (I.empty()) throw std::invalid_argument("example_optimal: I must be nonempty");
    std::vector<bool> in_I(n, false);
    for (int i : I) {
        if (i < 1 || i > n) throw std::invalid_argument("example_optimal: index outside 1..n");
        in_I[i - 1] = true;
    }

    Matrix swap2(2, 2);
    swap2 << 0, 2, 2, 0;
    TransferSystem sys;
    sys.graph = share(SimpleGraph::complete(detail::numbered_names("e", n)));
    sys.dim = 2;
    std::vector<double> weights(n);
    for (int i = 0; i < n; ++i) {
        sys.F.push_back(in_I[i] ? swap2 : Matrix(2 * Matrix::Identity(2, 2)));
        weights[i] = in_I[i] ? alpha : 2.0;
    }
    sys.N = WeightMap(weights);
    sys.rank_hint.assign(n, 2);
    ensure_valid(sys);

    int card = 0;
    for (bool b : in_I) card += b;
    Matrix factor = Matrix::Identity(2, 2) - swap2 / alpha;
    TraceVec mu(2);
    mu << 0, 1;
    for (int k = 0; k < card - 1; ++k) mu = solve_checked(factor, mu);
    return {std::move(sys), std::move(mu)};
}

// ---------------------------------------------------------------------------
// Level sums over normal forms. Words grow by appending letters, so a step
// multiplies by N(s)^-beta F_s on the right and the recursion carries
// matrices, read off against a trace at the end. The automaton state is the
// set of letters that may be appended next: t survives an appended letter s
// when they are non-adjacent, dies when they are adjacent with s > t, and
// otherwise keeps its previous bit.
// ---------------------------------------------------------------------------

class LevelAutomaton {
public:
    explicit LevelAutomaton(const TransferSystem& sys, double beta)
        : sys_(&sys), n_(sys.generators()) {
        step_.reserve(n_);
        for (int s = 0; s < n_; ++s)
            step_.push_back(std::pow(sys.N.of(s), -beta) * sys.F[s]);
    }

    std::uint32_t initial_state() const { return (n_ == 0) ? 0u : (std::uint32_t{1} << n_) - 1u; }

    std::uint32_t transition(std::uint32_t state, int s) const {
        std::uint32_t next = 0;
        const std::uint32_t nbr = sys_->graph->neighbours(s);
        for (int t = 0; t < n_; ++t) {
            bool ok;
            if (!((nbr >> t) & 1u))
                ok = true;
            else if (s > t)
                ok = false;
            else
                ok = (state >> t) & 1u;
            if (ok) next |= (std::uint32_t{1} << t);
        }
        return next;
    }

    const Matrix& step(int s) const { return step_[s]; }
    int letters() const { return n_; }
    int dim() const { return sys_->dim; }

private:
    const TransferSystem* sys_;
    int n_;
    std::vector<Matrix> step_;
};

/// One length level: per automaton state, the matrix sum of N(p)^-beta F_p
/// over the normal forms p of this length landing in that state, plus their
/// count.
struct LevelState {
    std::map<std::uint32_t, std::pair<Matrix, double>> by_state;

    Matrix total(int dim) const {
        Matrix t = Matrix::Zero(dim, dim);
        for (const auto& [mask, mc] : by_state) t += mc.first;
        return t;
    }
    double count() const {
        double c = 0;
        for (const auto& [mask, mc] : by_state) c += mc.second;
        return c;
    }
};

inline LevelState level_initial(const LevelAutomaton& aut) {
    LevelState st;
    st.by_state.emplace(aut.initial_state(),
                        std::make_pair(Matrix::Identity(aut.dim(), aut.dim()), 1.0));
    return st;
}

inline LevelState level_advance(const LevelAutomaton& aut, const LevelState& cur) {
    LevelState next;
    for (const auto& [mask, mc] : cur.by_state) {
        for (int s = 0; s < aut.letters(); ++s) {
            if (!((mask >> s) & 1u)) continue;
            std::uint32_t nmask = aut.transition(mask, s);
            Matrix nm = mc.first * aut.step(s);
            auto it = next.by_state.find(nmask);
            if (it == next.by_state.end())
                next.by_state.emplace(nmask, std::make_pair(std::move(nm), mc.second));
            else {
                it->second.first += nm;
                it->second.second += mc.second;
            }
        }
    }
    return next;
}

struct SeriesResult {
    TraceVec total;
    bool converged = false;
    int levels = 0;
    double elements = 0;          // normal forms accumulated
    double last_level_mass = 0;
    double tail_bound = 0;        // ratio-test bound on the dropped tail, if available
};

/// Sum over all p of N(p)^-beta F_p tau0, accumulated level by level until
/// the level mass drops below tol. Budget counts enumerated normal forms;
/// exceeding it leaves converged = false.
inline SeriesResult sum_series(const TransferSystem& sys, double beta, const TraceVec& tau0,
                               double tol, double element_budget = 1e6, int level_cap = 100000) {
    if (tau0.size() != sys.dim) throw std::invalid_argument("transfer: trace dimension mismatch");
    LevelAutomaton aut(sys, beta);
    LevelState level = level_initial(aut);
    SeriesResult out;
    out.total = TraceVec::Zero(sys.dim);
    double prev_mass = -1.0;
    while (true) {
        TraceVec level_vec = level.total(sys.dim) * tau0;
        double level_mass = mass(level_vec);
        out.total += level_vec;
        out.elements += level.count();
        out.last_level_mass = level_mass;
        if (level_mass < tol) {
            out.converged = true;
            if (prev_mass > 0 && level_mass < prev_mass) {
                double ratio = level_mass / prev_mass;
                out.tail_bound = level_mass * ratio / (1.0 - ratio);
            } else {
                out.tail_bound = level_mass;
            }
            break;
        }
        if (out.elements > element_budget || out.levels >= level_cap) break;
        prev_mass = level_mass;
        level = level_advance(aut, level);
        ++out.levels;
    }
    return out;
}

/// Growth rate of the level sums sum_{|p|=l} N(p)^-beta (entry sum of F_p):
/// the spectral radius of the level-advance operator on its reachable
/// orbit, by shifted power iteration. The entry sum is linear on
/// nonnegative matrices, so the state sums compute it exactly.
inline double level_growth_rate(const TransferSystem& sys, double beta, double tol = 1e-10,
                                int max_iter = 20000) {
    LevelAutomaton aut(sys, beta);
    LevelState x = level_initial(aut);
    double nx = entry_norm(x.total(sys.dim));
    if (nx <= 0.0) return 0.0;
    for (auto& [mask, mc] : x.by_state) mc.first /= nx;
    double est = 0.0;
    for (int it = 0; it < max_iter; ++it) {
        LevelState y = level_advance(aut, x);
        for (const auto& [mask, mc] : x.by_state) {  // shift: y + x
            auto jt = y.by_state.find(mask);
            if (jt == y.by_state.end())
                y.by_state.emplace(mask, mc);
            else
                jt->second.first += mc.first;
        }
        double ny = entry_norm(y.total(sys.dim));
        if (ny <= 0.0) return 0.0;
        if (!std::isfinite(ny)) return std::numeric_limits<double>::infinity();
        for (auto& [mask, mc] : y.by_state) mc.first /= ny;
        x = std::move(y);
        if (it > 10 && std::abs(ny - est) <= tol * std::max(1.0, ny)) {
            est = ny;
            break;
        }
        est = ny;
    }
    return est - 1.0;
}

/// Visits every normal form p with |p| <= max_length, handing over the
/// weight N(p) and the row vector 1^T F_p (enough to evaluate any
/// (F_p tau)(1)). Returns false when the budget cuts the walk short.
inline bool for_each_element(const TransferSystem& sys, int max_length, double element_budget,
                             const std::function<void(const MonoidElement&, double,
                                                      const Eigen::RowVectorXd&)>& fn) {
    struct Frame {
        std::uint32_t state;
        std::vector<int> word;
        double weight;
        Eigen::RowVectorXd row;
    };
    LevelAutomaton aut(sys, 0.0);  // transitions only; weights handled explicitly
    double budget = element_budget;
    std::vector<Frame> stack;
    stack.push_back({aut.initial_state(), {}, 1.0, Eigen::RowVectorXd::Ones(sys.dim)});
    while (!stack.empty()) {
        Frame f = std::move(stack.back());
        stack.pop_back();
        if (budget-- <= 0) return false;
        fn(normalize(sys.graph, f.word), f.weight, f.row);
        if (static_cast<int>(f.word.size()) >= max_length) continue;
        for (int s = aut.letters() - 1; s >= 0; --s) {
            if (!((f.state >> s) & 1u)) continue;
            Frame g;
            g.state = aut.transition(f.state, s);
            g.word = f.word;
            g.word.push_back(s);
            g.weight = f.weight * sys.N.of(s);
            g.row = f.row * sys.F[s];
            stack.push_back(std::move(g));
        }
    }
    return true;
}

}  // namespace artinkms
