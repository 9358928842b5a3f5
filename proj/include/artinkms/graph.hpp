#pragma once

#include <algorithm>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace artinkms {

/// Simple undirected graph on named vertices. Vertex indices follow the
/// declaration order of the vertex list, which fixes the letter order used
/// by normal forms downstream.
class SimpleGraph {
public:
    SimpleGraph() = default;

    SimpleGraph(std::vector<std::string> vertices,
                const std::vector<std::pair<std::string, std::string>>& edges)
        : vertices_(std::move(vertices)) {
        if (vertices_.size() > kMaxVertices)
            throw std::invalid_argument("graph: too many vertices (max 31)");
        for (std::size_t i = 0; i < vertices_.size(); ++i)
            for (std::size_t j = i + 1; j < vertices_.size(); ++j)
                if (vertices_[i] == vertices_[j])
                    throw std::invalid_argument("graph: duplicate vertex '" + vertices_[i] + "'");
        adj_.assign(vertices_.size(), 0u);
        for (const auto& [a, b] : edges) add_edge(index_of(a), index_of(b));
    }

    static SimpleGraph complete(std::vector<std::string> vertices) {
        SimpleGraph g(std::move(vertices), {});
        for (int i = 0; i < g.vertex_count(); ++i)
            for (int j = i + 1; j < g.vertex_count(); ++j) g.add_edge(i, j);
        return g;
    }

    static SimpleGraph edgeless(std::vector<std::string> vertices) {
        return SimpleGraph(std::move(vertices), {});
    }

    int vertex_count() const { return static_cast<int>(vertices_.size()); }

    const std::string& name(int v) const {
        check_vertex(v);
        return vertices_[v];
    }

    const std::vector<std::string>& names() const { return vertices_; }

    int index_of(const std::string& name) const {
        auto it = std::find(vertices_.begin(), vertices_.end(), name);
        if (it == vertices_.end())
            throw std::invalid_argument("graph: unknown vertex '" + name + "'");
        return static_cast<int>(it - vertices_.begin());
    }

    bool adjacent(int a, int b) const {
        check_vertex(a);
        check_vertex(b);
        return (adj_[a] >> b) & 1u;
    }

    /// Neighbourhood of v as a bitmask over vertex indices.
    std::uint32_t neighbours(int v) const {
        check_vertex(v);
        return adj_[v];
    }

    bool is_clique(std::uint32_t mask) const {
        for (int i = 0; i < vertex_count(); ++i) {
            if (!((mask >> i) & 1u)) continue;
            std::uint32_t rest = mask & ~((2u << i) - 1u);
            if ((rest & ~adj_[i]) != 0) return false;
        }
        return true;
    }

    bool is_complete() const {
        const std::uint32_t all = full_mask();
        for (int i = 0; i < vertex_count(); ++i)
            if ((adj_[i] | (1u << i)) != all) return false;
        return true;
    }

    std::uint32_t full_mask() const {
        return vertex_count() == 0 ? 0u : (std::uint32_t{1} << vertex_count()) - 1u;
    }

    bool operator==(const SimpleGraph& o) const {
        return vertices_ == o.vertices_ && adj_ == o.adj_;
    }
    bool operator!=(const SimpleGraph& o) const { return !(*this == o); }

private:
    static constexpr std::size_t kMaxVertices = 31;

    void check_vertex(int v) const {
        if (v < 0 || v >= vertex_count())
            throw std::invalid_argument("graph: vertex index out of range");
    }

    void add_edge(int a, int b) {
        if (a == b) throw std::invalid_argument("graph: self-loop on '" + vertices_[a] + "'");
        adj_[a] |= (1u << b);
        adj_[b] |= (1u << a);
    }

    std::vector<std::string> vertices_;
    std::vector<std::uint32_t> adj_;
};

using GraphPtr = std::shared_ptr<const SimpleGraph>;

inline GraphPtr share(SimpleGraph g) { return std::make_shared<const SimpleGraph>(std::move(g)); }

}  // namespace artinkms
