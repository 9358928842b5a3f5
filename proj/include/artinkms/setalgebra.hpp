#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <vector>

#include "artinkms/kms.hpp"
#include "artinkms/monoid.hpp"
#include "artinkms/transfer.hpp"

namespace artinkms {

// ---------------------------------------------------------------------------
// The set algebra generated by the cones pP. Every member decomposes into
// disjoint cells p Omega_J with J a set of generators: the cone pP itself
// (J empty) or pP minus the translated subcones p s P, s in J.
// ---------------------------------------------------------------------------

struct Cell {
    MonoidElement base;
    std::uint32_t carve = 0;  // generator mask J; empty mask means the full cone

    bool operator==(const Cell& o) const { return base == o.base && carve == o.carve; }
    bool operator<(const Cell& o) const {
        if (!(base == o.base)) return base < o.base;
        return carve < o.carve;
    }
};

class CellSet {
public:
    CellSet() = default;
    explicit CellSet(std::vector<Cell> cells) : cells_(std::move(cells)) {
        std::sort(cells_.begin(), cells_.end());
        cells_.erase(std::unique(cells_.begin(), cells_.end()), cells_.end());
    }

    const std::vector<Cell>& cells() const { return cells_; }
    bool empty() const { return cells_.empty(); }
    std::size_t size() const { return cells_.size(); }

private:
    std::vector<Cell> cells_;
};

inline CellSet cone(const MonoidElement& p) { return CellSet({Cell{p, 0}}); }

inline CellSet empty_set() { return CellSet(); }

inline bool cell_contains(const Cell& c, const MonoidElement& p) {
    if (!leq(c.base, p)) return false;
    const auto& graph = c.base.graph();
    for (int s = 0; s < graph->vertex_count(); ++s) {
        if (!((c.carve >> s) & 1u)) continue;
        if (leq(multiply(c.base, generator(graph, s)), p)) return false;
    }
    return true;
}

inline bool contains(const CellSet& a, const MonoidElement& p) {
    for (const auto& c : a.cells())
        if (cell_contains(c, p)) return true;
    return false;
}

namespace detail {

inline std::optional<MonoidElement> left_divide(const MonoidElement& p, const MonoidElement& q) {
    MonoidElement rest = q;
    for (int s : p.word()) {
        auto next = left_divide_generator(s, rest);
        if (!next) return std::nullopt;
        rest = *next;
    }
    return rest;
}

}  // namespace detail

/// Cell-by-cell intersection. The cone parts meet in the cone of the join;
/// a carve constraint s at base b collapses against r = b^{-1} j into one of
/// three outcomes: the whole cell dies when s divides r, survives as a carve
/// at j when r v s = r s, and is vacuous when r v s is infinite.
inline std::optional<Cell> intersect_cells(const Cell& a, const Cell& b) {
    ExtendedElement je = join(a.base, b.base);
    if (je.is_infinite()) return std::nullopt;
    const MonoidElement& j = je.value();
    std::uint32_t carve = 0;
    for (const Cell* c : {&a, &b}) {
        auto r = detail::left_divide(c->base, j);
        const auto& graph = j.graph();
        for (int s = 0; s < graph->vertex_count(); ++s) {
            if (!((c->carve >> s) & 1u)) continue;
            ExtendedElement rs = join_generator(*r, s);
            if (rs.is_infinite()) continue;       // constraint vacuous past j
            if (rs.value() == *r) return std::nullopt;  // s divides r: cell empty
            carve |= (1u << s);                   // survives as a carve at j
        }
    }
    return Cell{j, carve};
}

inline CellSet intersect(const CellSet& a, const CellSet& b) {
    std::vector<Cell> out;
    for (const auto& ca : a.cells())
        for (const auto& cb : b.cells()) {
            if (ca.base.graph() && cb.base.graph())
                detail::check_same_graph(ca.base, cb.base);
            if (auto c = intersect_cells(ca, cb)) out.push_back(std::move(*c));
        }
    return CellSet(std::move(out));
}

/// Disjoint cells covering the complement of a single cell in all of P.
inline std::vector<Cell> complement_cells(const Cell& c) {
    const auto& graph = c.base.graph();
    std::vector<Cell> out;
    // P minus baseP: peel the normal form one letter at a time
    MonoidElement prefix = identity(graph);
    for (int s : c.base.word()) {
        out.push_back(Cell{prefix, std::uint32_t{1} << s});
        prefix = multiply(prefix, generator(graph, s));
    }
    // base (P minus Omega_J): the carved subcones, disjointified in letter order
    std::vector<int> letters;
    for (int s = 0; s < graph->vertex_count(); ++s)
        if ((c.carve >> s) & 1u) letters.push_back(s);
    for (std::size_t k = 0; k < letters.size(); ++k) {
        std::uint32_t earlier = 0;
        for (std::size_t i = 0; i < k; ++i)
            if (graph->adjacent(letters[i], letters[k])) earlier |= (1u << letters[i]);
        out.push_back(Cell{multiply(c.base, generator(graph, letters[k])), earlier});
    }
    return out;
}

/// Complement of a whole cell set within P.
inline CellSet complement(const CellSet& a, const GraphPtr& graph) {
    CellSet acc = cone(identity(graph));
    for (const auto& c : a.cells()) acc = intersect(acc, CellSet(complement_cells(c)));
    return acc;
}

/// parent minus a. Containment a within parent is audited on an enumeration
/// sample; violations throw.
inline CellSet complement_in(const CellSet& parent, const CellSet& a, const GraphPtr& graph,
                             int sample_length = 6, double sample_budget = 20000) {
    double count = 0;
    for (const auto& p : enumerate(graph, sample_length)) {
        if (++count > sample_budget) break;
        if (contains(a, p) && !contains(parent, p))
            throw std::invalid_argument("setalgebra: set is not contained in the parent "
                                        "(witness " + (p.is_identity() ? std::string("e") : p.str())
                                        + ")");
    }
    return intersect(parent, complement(a, graph));
}

/// The trace-valued measure determined by mu(pP) = N(p)^-beta F_p tau,
/// evaluated cell by cell through the clique inclusion-exclusion vector.
inline TraceVec measure(const CellSet& a, const TransferSystem& sys, const TraceVec& tau,
                        double beta) {
    ensure_valid(sys);
    if (tau.size() != sys.dim) throw std::invalid_argument("setalgebra: trace dimension mismatch");
    TraceVec out = TraceVec::Zero(sys.dim);
    for (const auto& c : a.cells()) {
        TraceVec inner = inclusion_exclusion_vector(sys, tau, beta, c.carve);
        out += std::pow(weight(c.base, sys.N), -beta) * apply_Fp(sys, c.base, inner);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Atom weights: in the summable regime the measure is purely atomic with
// w_p = N(p)^-beta (F_p tau0)(1), tau0 the generating trace at the full
// generator set.
// ---------------------------------------------------------------------------

struct AtomWeights {
    std::map<MonoidElement, double> weights;
    double total = 0;
    double tail_bound = 0;   // ratio-test bound on the mass beyond the cutoff
    double level_ratio = 0;  // last observed level-sum ratio
};

inline AtomWeights atom_weights(const TransferSystem& sys, const TraceVec& tau, double beta,
                                int up_to_length, const Tolerances& opts = {}) {
    SubinvarianceReport rep = check_subinvariance(sys, tau, beta, std::nullopt, opts);
    if (!rep.pass)
        throw std::domain_error("setalgebra: trace is not subinvariant; no atomic extension");
    TraceVec tau0 = T_beta(sys, beta) * tau;

    AtomWeights out;
    std::vector<double> level_sums(up_to_length + 2, 0.0);
    bool complete = for_each_element(
        sys, up_to_length + 1, opts.budget,
        [&](const MonoidElement& p, double w, const Eigen::RowVectorXd& row) {
            double wp = std::pow(w, -beta) * (row * tau0)(0);
            level_sums[p.length()] += wp;
            if (p.length() <= up_to_length) {
                out.weights.emplace(p, wp);
                out.total += wp;
            }
        });
    if (!complete)
        throw std::runtime_error("setalgebra: atom enumeration exceeded its budget");

    double last = level_sums[up_to_length + 1];
    double prev = level_sums[up_to_length];
    if (prev > 0) out.level_ratio = last / prev;
    if (last > 0 && out.level_ratio >= 1.0 - 1e-10)
        throw std::runtime_error("setalgebra: atom series shows no decay at the cutoff "
                                 "(level ratio " + std::to_string(out.level_ratio) + ")");
    out.tail_bound = (out.level_ratio < 1.0 && out.level_ratio > 0)
                         ? last / (1.0 - out.level_ratio)
                         : last;
    return out;
}

/// Audit helper: checks pairwise disjointness of the cells on an
/// enumeration sample.
inline bool audit_disjoint(const CellSet& a, const GraphPtr& graph, int sample_length = 8,
                           double sample_budget = 20000) {
    double count = 0;
    for (const auto& p : enumerate(graph, sample_length)) {
        if (++count > sample_budget) break;
        int hits = 0;
        for (const auto& c : a.cells())
            if (cell_contains(c, p)) ++hits;
        if (hits > 1) return false;
    }
    return true;
}

}  // namespace artinkms
