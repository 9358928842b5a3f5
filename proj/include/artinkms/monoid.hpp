#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "artinkms/graph.hpp"

namespace artinkms {

// ---------------------------------------------------------------------------
// Elements of the graph monoid P_Gamma, kept in canonical normal form: the
// lexicographically smallest word of the commutation class under the vertex
// order. Two letters commute exactly when their vertices share an edge.
// ---------------------------------------------------------------------------

class MonoidElement {
public:
    MonoidElement() = default;
    explicit MonoidElement(GraphPtr graph) : graph_(std::move(graph)) {}

    const std::vector<int>& word() const { return word_; }
    const GraphPtr& graph() const { return graph_; }
    int length() const { return static_cast<int>(word_.size()); }
    bool is_identity() const { return word_.empty(); }

    std::string str() const {
        std::string s;
        for (std::size_t i = 0; i < word_.size(); ++i) {
            if (i) s += '.';
            s += graph_->name(word_[i]);
        }
        return s;
    }

    bool operator==(const MonoidElement& o) const { return word_ == o.word_; }
    bool operator!=(const MonoidElement& o) const { return word_ != o.word_; }

    /// Length-then-lex order; used for deterministic containers and output.
    bool operator<(const MonoidElement& o) const {
        if (word_.size() != o.word_.size()) return word_.size() < o.word_.size();
        return word_ < o.word_;
    }

private:
    friend MonoidElement normalize(const GraphPtr&, const std::vector<int>&);
    friend MonoidElement multiply(const MonoidElement&, const MonoidElement&);
    friend class ExtendedElement;
    friend std::optional<MonoidElement> left_divide_generator(int, const MonoidElement&);

    GraphPtr graph_;
    std::vector<int> word_;
};

namespace detail {

inline void check_same_graph(const MonoidElement& p, const MonoidElement& q) {
    if (!p.graph() || !q.graph() || *p.graph() != *q.graph())
        throw std::invalid_argument("monoid: elements belong to different graphs");
}

/// Inserts letter s into the normal word u, keeping it normal. s slides left
/// through the maximal commuting suffix and lands after the letters of that
/// suffix that are smaller than s.
inline void normal_insert(const SimpleGraph& g, std::vector<int>& u, int s) {
    int lo = static_cast<int>(u.size());
    while (lo > 0 && g.adjacent(u[lo - 1], s)) --lo;
    int pos = lo;
    while (pos < static_cast<int>(u.size()) && u[pos] < s) ++pos;
    u.insert(u.begin() + pos, s);
}

/// True when the word stays normal after appending s: no letter in the
/// commuting suffix of u exceeds s.
inline bool can_append(const SimpleGraph& g, const std::vector<int>& u, int s) {
    for (int i = static_cast<int>(u.size()) - 1; i >= 0; --i) {
        if (!g.adjacent(u[i], s)) return true;
        if (u[i] > s) return false;
    }
    return true;
}

/// Position of an occurrence of s in w that commutes with everything before
/// it, or -1. Such an occurrence exists iff s left-divides the element of w.
inline int front_movable_occurrence(const SimpleGraph& g, const std::vector<int>& w, int s) {
    for (std::size_t i = 0; i < w.size(); ++i) {
        if (w[i] == s) return static_cast<int>(i);
        if (!g.adjacent(w[i], s)) return -1;
    }
    return -1;
}

}  // namespace detail

/// Canonical representative of a letter sequence. Unknown letters throw.
inline MonoidElement normalize(const GraphPtr& graph, const std::vector<int>& letters) {
    if (!graph) throw std::invalid_argument("monoid: null graph");
    MonoidElement out(graph);
    out.word_.reserve(letters.size());
    for (int s : letters) {
        if (s < 0 || s >= graph->vertex_count())
            throw std::invalid_argument("monoid: unknown letter index");
        detail::normal_insert(*graph, out.word_, s);
    }
    return out;
}

inline MonoidElement normalize(const GraphPtr& graph, const std::vector<std::string>& letters) {
    std::vector<int> idx;
    idx.reserve(letters.size());
    for (const auto& name : letters) idx.push_back(graph->index_of(name));
    return normalize(graph, idx);
}

inline MonoidElement identity(const GraphPtr& graph) { return MonoidElement(graph); }

inline MonoidElement generator(const GraphPtr& graph, int s) {
    return normalize(graph, std::vector<int>{s});
}

inline MonoidElement multiply(const MonoidElement& p, const MonoidElement& q) {
    detail::check_same_graph(p, q);
    MonoidElement out(p.graph());
    out.word_ = p.word();
    for (int s : q.word()) detail::normal_insert(*p.graph(), out.word_, s);
    return out;
}

/// Left-divisibility: true iff p r = q for some r. Strips the letters of p
/// off q one by one; each must be movable to the front of the remainder.
inline bool leq(const MonoidElement& p, const MonoidElement& q) {
    detail::check_same_graph(p, q);
    const auto& g = *p.graph();
    std::vector<int> rest = q.word();
    for (int s : p.word()) {
        int k = detail::front_movable_occurrence(g, rest, s);
        if (k < 0) return false;
        rest.erase(rest.begin() + k);
    }
    return true;
}

/// q with the front-movable occurrence of generator s removed, or nullopt
/// when s does not left-divide q.
inline std::optional<MonoidElement> left_divide_generator(int s, const MonoidElement& q) {
    int k = detail::front_movable_occurrence(*q.graph(), q.word(), s);
    if (k < 0) return std::nullopt;
    MonoidElement out(q.graph());
    out.word_ = q.word();
    out.word_.erase(out.word_.begin() + k);
    return out;
}

// ---------------------------------------------------------------------------
// Joins. The least upper bound of two elements in the left-divisibility
// order may not exist; Infinity is an explicit variant, never a sentinel.
// ---------------------------------------------------------------------------

class ExtendedElement {
public:
    static ExtendedElement infinity() { return ExtendedElement(); }
    ExtendedElement(MonoidElement m) : v_(std::move(m)) {}  // NOLINT(google-explicit-constructor)

    bool is_infinite() const { return !v_.has_value(); }
    bool is_finite() const { return v_.has_value(); }

    const MonoidElement& value() const {
        if (!v_) throw std::domain_error("monoid: value() on infinite element");
        return *v_;
    }

    bool operator==(const ExtendedElement& o) const { return v_ == o.v_; }
    bool operator!=(const ExtendedElement& o) const { return !(*this == o); }

private:
    ExtendedElement() = default;
    std::optional<MonoidElement> v_;
};

/// p v s for a single generator s. Three cases: s already left-divides p;
/// s is fresh and commutes with every letter of p; otherwise no common
/// upper bound exists.
inline ExtendedElement join_generator(const MonoidElement& p, int s) {
    const auto& g = *p.graph();
    if (detail::front_movable_occurrence(g, p.word(), s) >= 0) return p;
    bool fresh = true, commutes_all = true;
    for (int t : p.word()) {
        if (t == s) fresh = false;
        if (t != s && !g.adjacent(t, s)) commutes_all = false;
    }
    if (fresh && commutes_all) return multiply(p, generator(p.graph(), s));
    return ExtendedElement::infinity();
}

/// Least upper bound, by peeling the first letter s of q:
///   p v (s q') = s ((s^{-1}(p v s)) v q'),
/// with infinity absorbing.
inline ExtendedElement join(const MonoidElement& p, const MonoidElement& q) {
    detail::check_same_graph(p, q);
    if (q.is_identity()) return p;
    int s = q.word().front();
    ExtendedElement ps = join_generator(p, s);
    if (ps.is_infinite()) return ExtendedElement::infinity();
    auto reduced = left_divide_generator(s, ps.value());
    MonoidElement qrest(q.graph());
    {
        std::vector<int> rest(q.word().begin() + 1, q.word().end());
        qrest = normalize(q.graph(), rest);
    }
    ExtendedElement sub = join(*reduced, qrest);
    if (sub.is_infinite()) return ExtendedElement::infinity();
    return multiply(generator(p.graph(), s), sub.value());
}

inline ExtendedElement join(const ExtendedElement& a, const ExtendedElement& b) {
    if (a.is_infinite() || b.is_infinite()) return ExtendedElement::infinity();
    return join(a.value(), b.value());
}

/// Join of a set of generators: the product when the set is a clique of the
/// graph, infinity otherwise.
inline ExtendedElement join_of_set(const GraphPtr& graph, const std::vector<int>& K) {
    if (K.empty()) throw std::invalid_argument("monoid: join_of_set of empty set");
    std::uint32_t mask = 0;
    for (int s : K) {
        if (s < 0 || s >= graph->vertex_count())
            throw std::invalid_argument("monoid: unknown generator index");
        mask |= (1u << s);
    }
    if (!graph->is_clique(mask)) return ExtendedElement::infinity();
    return normalize(graph, K);
}

// ---------------------------------------------------------------------------
// Cliques and enumeration.
// ---------------------------------------------------------------------------

/// All nonempty cliques, ordered by size then lexicographically. An optional
/// restriction mask limits the vertices considered.
inline std::vector<std::vector<int>> cliques(const SimpleGraph& g,
                                             std::optional<std::uint32_t> restrict_to = std::nullopt) {
    std::uint32_t allowed = restrict_to.value_or(g.full_mask());
    std::vector<std::vector<int>> out;
    std::vector<int> cur;
    auto extend = [&](auto&& self, int from, std::uint32_t candidates) -> void {
        for (int v = from; v < g.vertex_count(); ++v) {
            if (!((candidates >> v) & 1u)) continue;
            cur.push_back(v);
            out.push_back(cur);
            self(self, v + 1, candidates & g.neighbours(v));
            cur.pop_back();
        }
    };
    extend(extend, 0, allowed & g.full_mask());
    std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        if (a.size() != b.size()) return a.size() < b.size();
        return a < b;
    });
    return out;
}

/// All distinct normal forms of length at most the bound, by length then
/// lexicographically. Each element appears exactly once.
inline std::vector<MonoidElement> enumerate(const GraphPtr& graph, int up_to_length) {
    if (up_to_length < 0) throw std::invalid_argument("monoid: negative enumeration bound");
    std::vector<MonoidElement> out{identity(graph)};
    std::vector<std::vector<int>> level{{}};
    for (int len = 1; len <= up_to_length; ++len) {
        std::vector<std::vector<int>> next;
        for (const auto& w : level) {
            for (int s = 0; s < graph->vertex_count(); ++s) {
                if (!detail::can_append(*graph, w, s)) continue;
                auto ext = w;
                ext.push_back(s);
                next.push_back(std::move(ext));
            }
        }
        for (const auto& w : next) out.push_back(normalize(graph, w));
        level = std::move(next);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Weights: a multiplicative map into (0, inf) given per generator.
// ---------------------------------------------------------------------------

class WeightMap {
public:
    WeightMap() = default;
    explicit WeightMap(std::vector<double> per_generator) : n_(std::move(per_generator)) {
        for (double x : n_)
            if (!(x > 0.0)) throw std::invalid_argument("weights: N(s) must be positive");
    }

    int size() const { return static_cast<int>(n_.size()); }

    double of(int s) const {
        if (s < 0 || s >= size()) throw std::invalid_argument("weights: generator out of range");
        return n_[s];
    }

    const std::vector<double>& values() const { return n_; }

    bool all_greater_one() const {
        for (double x : n_)
            if (!(x > 1.0)) return false;
        return true;
    }

    bool all_at_least_one() const {
        for (double x : n_)
            if (!(x >= 1.0)) return false;
        return true;
    }

private:
    std::vector<double> n_;
};

inline double weight(const MonoidElement& p, const WeightMap& N) {
    double w = 1.0;
    for (int s : p.word()) w *= N.of(s);
    return w;
}

inline double weight_of_mask(std::uint32_t mask, const WeightMap& N) {
    double w = 1.0;
    for (int s = 0; s < N.size(); ++s)
        if ((mask >> s) & 1u) w *= N.of(s);
    return w;
}

}  // namespace artinkms
