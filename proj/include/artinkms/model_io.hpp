#pragma once

#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "artinkms/report.hpp"
#include "artinkms/transfer.hpp"

namespace artinkms {

struct ModelError : std::runtime_error {
    explicit ModelError(const std::string& what) : std::runtime_error("model: " + what) {}
};

struct LoadedModel {
    TransferSystem system;
    std::map<std::string, TraceVec> traces;
    std::string summary;  // one-line description for reports
};

namespace detail {

inline double require_number(const Json& j, const std::string& where) {
    if (!j.is_number()) throw ModelError(where + " must be a number");
    return j.get<double>();
}

inline SimpleGraph parse_graph(const Json& j, const std::string& where) {
    if (!j.is_object()) throw ModelError(where + " must be an object");
    if (!j.contains("vertices") || !j["vertices"].is_array())
        throw ModelError(where + ".vertices must be an array of names");
    std::vector<std::string> vertices;
    for (const auto& v : j["vertices"]) {
        if (!v.is_string()) throw ModelError(where + ".vertices entries must be strings");
        vertices.push_back(v.get<std::string>());
    }
    std::vector<std::pair<std::string, std::string>> edges;
    if (j.contains("edges")) {
        if (!j["edges"].is_array()) throw ModelError(where + ".edges must be an array of pairs");
        for (const auto& e : j["edges"]) {
            if (!e.is_array() || e.size() != 2 || !e[0].is_string() || !e[1].is_string())
                throw ModelError(where + ".edges entries must be two-element name pairs");
            edges.emplace_back(e[0].get<std::string>(), e[1].get<std::string>());
        }
    }
    try {
        return SimpleGraph(vertices, edges);
    } catch (const std::exception& ex) {
        throw ModelError(where + ": " + ex.what());
    }
}

inline Matrix parse_matrix(const Json& j, int dim, const std::string& where, bool& integral) {
    if (!j.is_array() || static_cast<int>(j.size()) != dim)
        throw ModelError(where + " must be a " + std::to_string(dim) + "x" + std::to_string(dim)
                         + " array");
    Matrix m(dim, dim);
    for (int r = 0; r < dim; ++r) {
        if (!j[r].is_array() || static_cast<int>(j[r].size()) != dim)
            throw ModelError(where + " row " + std::to_string(r) + " has wrong length");
        for (int c = 0; c < dim; ++c) {
            double v = require_number(j[r][c], where + "[" + std::to_string(r) + "]["
                                                   + std::to_string(c) + "]");
            if (v != std::floor(v) || !j[r][c].is_number_integer()) integral = false;
            m(r, c) = v;
        }
    }
    return m;
}

inline TraceVec parse_trace(const Json& j, int dim, const std::string& where) {
    if (!j.is_array() || static_cast<int>(j.size()) != dim)
        throw ModelError(where + " must be an array of " + std::to_string(dim) + " numbers");
    TraceVec v(dim);
    for (int i = 0; i < dim; ++i) v(i) = require_number(j[i], where + "[" + std::to_string(i) + "]");
    return v;
}

inline TransferSystem build_from_builder(const Json& b, std::map<std::string, TraceVec>& traces,
                                         std::string& summary) {
    if (!b.is_object() || !b.contains("kind") || !b["kind"].is_string())
        throw ModelError("builder.kind must name one of trivial|kgraph|local_maps|example_optimal");
    const std::string kind = b["kind"].get<std::string>();

    if (kind == "trivial") {
        SimpleGraph g = parse_graph(b.at("graph"), "builder.graph");
        if (!b.contains("N") || !b["N"].is_object())
            throw ModelError("builder.N must map generator names to weights");
        std::vector<double> w(g.vertex_count());
        for (const auto& [name, val] : b["N"].items())
            w[g.index_of(name)] = require_number(val, "builder.N." + name);
        summary = "trivial fibers on " + std::to_string(g.vertex_count()) + " generators";
        return trivial_system(share(std::move(g)), WeightMap(w));
    }

    if (kind == "kgraph") {
        if (!b.contains("matrices") || !b["matrices"].is_array() || b["matrices"].empty())
            throw ModelError("builder.matrices must be a nonempty array of integer matrices");
        KGraphModel m;
        const auto& mats = b["matrices"];
        m.vertex_count = static_cast<int>(mats[0].size());
        for (std::size_t i = 0; i < mats.size(); ++i) {
            bool integral = true;
            Matrix a = parse_matrix(mats[i], m.vertex_count,
                                    "builder.matrices[" + std::to_string(i) + "]", integral);
            if (!integral) throw ModelError("builder.matrices entries must be integers");
            m.adjacency.push_back(a.cast<int>());
        }
        if (!b.contains("N") || !b["N"].is_array() || b["N"].size() != mats.size())
            throw ModelError("builder.N must be an array with one weight per colour");
        std::vector<double> w;
        for (std::size_t i = 0; i < b["N"].size(); ++i)
            w.push_back(require_number(b["N"][i], "builder.N[" + std::to_string(i) + "]"));
        summary = std::to_string(mats.size()) + "-colour graph on "
                  + std::to_string(m.vertex_count) + " vertices";
        return from_kgraph(m, WeightMap(w));
    }

    if (kind == "local_maps") {
        if (!b.contains("states")) throw ModelError("builder.states must give the state count");
        LocalMapModel m;
        m.state_count = static_cast<int>(require_number(b["states"], "builder.states"));
        if (!b.contains("maps") || !b["maps"].is_array() || b["maps"].empty())
            throw ModelError("builder.maps must be a nonempty array of maps");
        for (std::size_t i = 0; i < b["maps"].size(); ++i) {
            const auto& arr = b["maps"][i];
            if (!arr.is_array())
                throw ModelError("builder.maps[" + std::to_string(i) + "] must be an array");
            std::vector<int> mp;
            for (const auto& v : arr)
                mp.push_back(static_cast<int>(require_number(v, "builder.maps entry")));
            m.maps.push_back(std::move(mp));
        }
        if (!b.contains("N") || !b["N"].is_array() || b["N"].size() != m.maps.size())
            throw ModelError("builder.N must be an array with one weight per map");
        std::vector<double> w;
        for (std::size_t i = 0; i < b["N"].size(); ++i)
            w.push_back(require_number(b["N"][i], "builder.N[" + std::to_string(i) + "]"));
        summary = std::to_string(m.maps.size()) + " commuting self-maps of "
                  + std::to_string(m.state_count) + " states";
        return from_local_maps(m, WeightMap(w));
    }

    if (kind == "example_optimal") {
        if (!b.contains("n") || !b.contains("I") || !b.contains("alpha"))
            throw ModelError("builder example_optimal needs n, I and alpha");
        int n = static_cast<int>(require_number(b["n"], "builder.n"));
        if (!b["I"].is_array()) throw ModelError("builder.I must be an array of coordinates");
        std::vector<int> I;
        for (const auto& v : b["I"])
            I.push_back(static_cast<int>(require_number(v, "builder.I entry")));
        double alpha = require_number(b["alpha"], "builder.alpha");
        OptimalExample ex = example_optimal(n, I, alpha);
        traces.emplace("mu", ex.mu);
        std::ostringstream os;
        os << "two-point shift family, n=" << n << ", |I|=" << I.size() << ", alpha=" << alpha;
        summary = os.str();
        return std::move(ex.system);
    }

    throw ModelError("unknown builder kind '" + kind + "'");
}

}  // namespace detail

inline LoadedModel parse_model(const Json& j) {
    if (!j.is_object()) throw ModelError("top level must be an object");
    LoadedModel out;

    const bool has_builder = j.contains("builder");
    const bool has_explicit = j.contains("generators") || j.contains("graph") || j.contains("dimension");
    if (has_builder && has_explicit)
        throw ModelError("give either a builder directive or explicit matrices, not both");
    if (!has_builder && !has_explicit)
        throw ModelError("model needs a builder directive or explicit matrices");

    if (has_builder) {
        out.system = detail::build_from_builder(j["builder"], out.traces, out.summary);
    } else {
        if (!j.contains("graph")) throw ModelError("missing graph");
        if (!j.contains("dimension")) throw ModelError("missing dimension");
        if (!j.contains("generators") || !j["generators"].is_object())
            throw ModelError("generators must map names to {N, F, rank}");
        SimpleGraph g = detail::parse_graph(j["graph"], "graph");
        int dim = static_cast<int>(detail::require_number(j["dimension"], "dimension"));
        if (dim <= 0) throw ModelError("dimension must be positive");

        TransferSystem sys;
        sys.dim = dim;
        sys.F.resize(g.vertex_count());
        sys.rank_hint.assign(g.vertex_count(), std::nullopt);
        std::vector<double> weights(g.vertex_count(), 0.0);
        std::vector<bool> seen(g.vertex_count(), false);
        bool integral = true;
        for (const auto& [name, spec] : j["generators"].items()) {
            int s = g.index_of(name);
            seen[s] = true;
            if (!spec.is_object() || !spec.contains("N") || !spec.contains("F"))
                throw ModelError("generators." + name + " needs N and F");
            weights[s] = detail::require_number(spec["N"], "generators." + name + ".N");
            sys.F[s] = detail::parse_matrix(spec["F"], dim, "generators." + name + ".F", integral);
            if (spec.contains("rank")) {
                int r = static_cast<int>(
                    detail::require_number(spec["rank"], "generators." + name + ".rank"));
                if (r < 0) throw ModelError("generators." + name + ".rank must be nonnegative");
                sys.rank_hint[s] = r;
            }
        }
        for (int s = 0; s < g.vertex_count(); ++s)
            if (!seen[s]) throw ModelError("generators missing entry for '" + g.name(s) + "'");
        sys.graph = share(std::move(g));
        sys.N = WeightMap(weights);
        sys.integer_entries = integral;
        out.summary = "explicit system, d=" + std::to_string(dim) + ", "
                      + std::to_string(sys.generators()) + " generators";
        ValidationReport rep = validate(sys);
        if (!rep.ok) throw ModelError(rep.issues.front().message);
        out.system = std::move(sys);
    }

    if (j.contains("traces")) {
        if (!j["traces"].is_object()) throw ModelError("traces must map names to vectors");
        for (const auto& [name, arr] : j["traces"].items())
            out.traces.emplace(name,
                               detail::parse_trace(arr, out.system.dim, "traces." + name));
    }
    return out;
}

inline LoadedModel load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ModelError("cannot open '" + path + "'");
    Json j;
    try {
        j = Json::parse(in);
    } catch (const nlohmann::json::parse_error& ex) {
        throw ModelError("parse error in '" + path + "': " + ex.what());
    }
    return parse_model(j);
}

inline TraceVec parse_inline_trace(const std::string& csv, int dim) {
    std::vector<double> vals;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            vals.push_back(std::stod(item));
        } catch (const std::exception&) {
            throw ModelError("bad inline trace entry '" + item + "'");
        }
    }
    if (static_cast<int>(vals.size()) != dim)
        throw ModelError("inline trace has " + std::to_string(vals.size()) + " entries, expected "
                         + std::to_string(dim));
    TraceVec v(dim);
    for (int i = 0; i < dim; ++i) v(i) = vals[i];
    return v;
}

inline TraceVec resolve_trace(const LoadedModel& model, const std::optional<std::string>& name,
                              const std::optional<std::string>& inline_csv) {
    if (name && inline_csv) throw ModelError("give --trace or --trace-inline, not both");
    if (inline_csv) return parse_inline_trace(*inline_csv, model.system.dim);
    if (name) {
        auto it = model.traces.find(*name);
        if (it == model.traces.end()) throw ModelError("no trace named '" + *name + "' in the model");
        return it->second;
    }
    if (model.traces.size() == 1) return model.traces.begin()->second;
    throw ModelError("a trace is required (--trace NAME or --trace-inline CSV)");
}

}  // namespace artinkms
