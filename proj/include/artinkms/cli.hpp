#pragma once

#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "artinkms/kms.hpp"
#include "artinkms/model_io.hpp"
#include "artinkms/report.hpp"
#include "artinkms/setalgebra.hpp"

namespace artinkms {

struct CommandResult {
    int exit_code = 0;
    std::string output;
};

namespace detail {

inline Json mask_names(const SimpleGraph& g, std::uint32_t mask) {
    Json arr = Json::array();
    for (int s = 0; s < g.vertex_count(); ++s)
        if ((mask >> s) & 1u) arr.push_back(g.name(s));
    return arr;
}

inline Json system_summary(const LoadedModel& model) {
    const TransferSystem& sys = model.system;
    Json j;
    j["summary"] = model.summary;
    j["dimension"] = sys.dim;
    Json gens = Json::array();
    for (int s = 0; s < sys.generators(); ++s) {
        Json g;
        g["name"] = sys.graph->name(s);
        g["N"] = json_number(sys.N.of(s));
        if (s < static_cast<int>(sys.rank_hint.size()) && sys.rank_hint[s])
            g["rank"] = *sys.rank_hint[s];
        gens.push_back(std::move(g));
    }
    j["generators"] = std::move(gens);
    Json edges = Json::array();
    for (int s = 0; s < sys.generators(); ++s)
        for (int t = s + 1; t < sys.generators(); ++t)
            if (sys.graph->adjacent(s, t))
                edges.push_back(Json::array({sys.graph->name(s), sys.graph->name(t)}));
    j["edges"] = std::move(edges);
    return j;
}

inline Json tolerance_block(const Tolerances& opts) {
    Json j;
    j["positivity"] = json_number(opts.positivity);
    j["residual"] = json_number(opts.residual);
    j["series"] = json_number(opts.series);
    j["budget"] = json_number(opts.budget);
    return j;
}

inline std::string element_name(const MonoidElement& p) {
    return p.is_identity() ? "e" : p.str();
}

}  // namespace detail

// ---------------------------------------------------------------------------
// check
// ---------------------------------------------------------------------------

inline CommandResult run_check(const LoadedModel& model, const TraceVec& tau, double beta,
                               std::optional<double> tol = std::nullopt,
                               const Tolerances& opts = {}) {
    SubinvarianceReport rep = check_subinvariance(model.system, tau, beta, tol, opts);
    Json j;
    j["command"] = "check";
    j["parameters"] = {{"beta", json_number(beta)}, {"tol", json_number(rep.tol)}};
    j["system"] = detail::system_summary(model);
    j["trace"] = json_vector(tau);
    Json result;
    result["pass"] = rep.pass;
    result["worst_J"] = detail::mask_names(*model.system.graph, rep.worst_J);
    result["worst_min"] = json_number(rep.worst_min);
    if (model.system.generators() <= 12) {
        Json rows = Json::array();
        for (const auto& row : rep.rows) {
            Json r;
            r["J"] = detail::mask_names(*model.system.graph, row.J);
            r["min"] = json_number(row.min_entry);
            r["value"] = json_vector(row.value);
            rows.push_back(std::move(r));
        }
        result["subsets"] = std::move(rows);
    }
    j["result"] = std::move(result);
    j["tolerances"] = detail::tolerance_block(opts);
    return {rep.pass ? 0 : 1, j.dump(2) + "\n"};
}

// ---------------------------------------------------------------------------
// wold
// ---------------------------------------------------------------------------

inline CommandResult run_wold(const LoadedModel& model, const TraceVec& tau, double beta,
                              const Tolerances& opts = {}) {
    WoldResult w = wold(model.system, tau, beta, opts);
    Json j;
    j["command"] = "wold";
    j["parameters"] = {{"beta", json_number(beta)}};
    j["system"] = detail::system_summary(model);
    j["trace"] = json_vector(tau);
    Json result;
    result["type"] = to_string(w.type);
    result["tau0"] = json_vector(w.tau0);
    result["tau_f"] = json_vector(w.tau_f);
    result["tau_inf"] = json_vector(w.tau_inf);
    result["tau0_mass"] = json_number(mass(w.tau0));
    result["tau_f_mass"] = json_number(mass(w.tau_f));
    result["tau_inf_mass"] = json_number(mass(w.tau_inf));
    result["series_levels"] = w.levels;
    result["series_tail_bound"] = json_number(w.series_tail_bound);
    result["min_entry"] = json_number(w.min_entry);
    j["result"] = std::move(result);
    j["tolerances"] = detail::tolerance_block(opts);
    return {0, j.dump(2) + "\n"};
}

// ---------------------------------------------------------------------------
// critical
// ---------------------------------------------------------------------------

inline CommandResult run_critical(const LoadedModel& model, const Tolerances& opts = {}) {
    CriticalBeta cb = critical_beta(model.system);
    Json j;
    j["command"] = "critical";
    j["parameters"] = Json::object();
    j["system"] = detail::system_summary(model);
    Json result;
    result["beta_c"] = cb.beta_c ? Json(json_number(*cb.beta_c)) : Json(nullptr);
    result["route"] = cb.route;
    if (!cb.spectral_radii.empty()) {
        Json radii = Json::object();
        for (int s = 0; s < model.system.generators(); ++s)
            radii[model.system.graph->name(s)] = json_number(cb.spectral_radii[s]);
        result["spectral_radii"] = std::move(radii);
    }
    if (cb.growth_route) result["growth_route"] = json_number(*cb.growth_route);
    if (cb.tbeta_route) result["tbeta_route"] = json_number(*cb.tbeta_route);
    result["routes_disagree"] = cb.routes_disagree;
    if (cb.beta_c) {
        CriticalWitness w = infinite_type_at_critical(model.system, opts);
        if (w.witness) {
            result["witness"] = json_vector(*w.witness);
            result["witness_residual"] = json_number(w.residual);
        } else {
            result["witness"] = nullptr;
        }
    }
    j["result"] = std::move(result);
    j["tolerances"] = detail::tolerance_block(opts);
    return {0, j.dump(2) + "\n"};
}

// ---------------------------------------------------------------------------
// sweep
// ---------------------------------------------------------------------------

inline CommandResult run_sweep(const LoadedModel& model, const TraceVec& tau, double beta_from,
                               double beta_to, int steps, const Tolerances& opts = {}) {
    if (!(beta_from < beta_to)) throw std::invalid_argument("sweep: need beta_from < beta_to");
    if (steps < 2) throw std::invalid_argument("sweep: need at least two steps");
    std::ostringstream out;
    out << "beta,subinvariant,min_slack,tau0_mass,tau_inf_mass,tbeta_sigma_min\n";
    for (int k = 0; k < steps; ++k) {
        double beta = beta_from + (beta_to - beta_from) * k / (steps - 1);
        SubinvarianceReport rep = check_subinvariance(model.system, tau, beta, std::nullopt, opts);
        Matrix t = T_beta(model.system, beta);
        double tau0_mass = mass(TraceVec(t * tau));
        double tau_inf_mass = std::numeric_limits<double>::quiet_NaN();
        if (rep.pass) {
            try {
                WoldResult w = wold(model.system, tau, beta, opts);
                tau_inf_mass = mass(w.tau_inf);
            } catch (const std::runtime_error&) {
                // series did not settle at this beta; leave the column empty
            }
        }
        out << format_csv(beta) << ',' << (rep.pass ? 1 : 0) << ',' << format_csv(rep.worst_min)
            << ',' << format_csv(tau0_mass) << ',' << format_csv(tau_inf_mass) << ','
            << format_csv(smallest_singular_value(t)) << '\n';
    }
    return {0, out.str()};
}

// ---------------------------------------------------------------------------
// decompose
// ---------------------------------------------------------------------------

inline CommandResult run_decompose(const LoadedModel& model, const TraceVec& tau, double beta,
                                   const Tolerances& opts = {}) {
    ProductDecomposition dec = product_decompose(model.system, tau, beta, opts);
    Json j;
    j["command"] = "decompose";
    j["parameters"] = {{"beta", json_number(beta)}};
    j["system"] = detail::system_summary(model);
    j["trace"] = json_vector(tau);
    Json comps = Json::array();
    for (const auto& c : dec.components) {
        Json e;
        e["finite_coords"] = detail::mask_names(*model.system.graph, c.finite_coords);
        e["tau_F"] = json_vector(c.tau_F);
        e["tau_F_mass"] = json_number(mass(c.tau_F));
        e["tau_F0"] = json_vector(c.tau_F0);
        e["fixed_point_residual"] = json_number(c.fixed_point_residual);
        comps.push_back(std::move(e));
    }
    Json result;
    result["components"] = std::move(comps);
    result["reconstruction_residual"] = json_number(dec.reconstruction_residual);
    j["result"] = std::move(result);
    j["tolerances"] = detail::tolerance_block(opts);
    return {0, j.dump(2) + "\n"};
}

// ---------------------------------------------------------------------------
// atoms
// ---------------------------------------------------------------------------

inline CommandResult run_atoms(const LoadedModel& model, const TraceVec& tau, double beta,
                               int up_to_length, const Tolerances& opts = {}) {
    AtomWeights aw = atom_weights(model.system, tau, beta, up_to_length, opts);
    Json j;
    j["command"] = "atoms";
    j["parameters"] = {{"beta", json_number(beta)}, {"length", up_to_length}};
    j["system"] = detail::system_summary(model);
    j["trace"] = json_vector(tau);
    Json weights = Json::array();
    for (const auto& [p, w] : aw.weights) {
        Json e;
        e["p"] = detail::element_name(p);
        e["length"] = p.length();
        e["w"] = json_number(w);
        weights.push_back(std::move(e));
    }
    Json result;
    result["weights"] = std::move(weights);
    result["total"] = json_number(aw.total);
    result["tail_bound"] = json_number(aw.tail_bound);
    result["level_ratio"] = json_number(aw.level_ratio);
    result["mass_defect"] = json_number(mass(tau) - aw.total);
    j["result"] = std::move(result);
    j["tolerances"] = detail::tolerance_block(opts);
    return {0, j.dump(2) + "\n"};
}

// ---------------------------------------------------------------------------
// verify-example: built-in sanity checks for three model families.
// ---------------------------------------------------------------------------

namespace detail {

/// Walk counts in a coloured multigraph: number of edge paths from v with
/// the given per-colour step budget, colours consumed in ascending order,
/// tallied by end vertex. Each concrete parallel edge is walked separately.
inline void count_walks(const KGraphModel& m, int v, std::vector<int>& remaining,
                        std::vector<long long>& ends) {
    int colour = -1;
    for (std::size_t c = 0; c < remaining.size(); ++c)
        if (remaining[c] > 0) {
            colour = static_cast<int>(c);
            break;
        }
    if (colour < 0) {
        ++ends[v];
        return;
    }
    --remaining[colour];
    for (int w = 0; w < m.vertex_count; ++w)
        for (int copy = 0; copy < m.adjacency[colour](v, w); ++copy)
            count_walks(m, w, remaining, ends);
    ++remaining[colour];
}

inline Json verify_optimal_case(int n, const std::vector<int>& I, double alpha) {
    OptimalExample ex = example_optimal(n, I, alpha);
    SubinvarianceReport rep = check_subinvariance(ex.system, ex.mu, 1.0);
    std::uint32_t i_mask = 0;
    for (int i : I) i_mask |= (1u << (i - 1));
    bool fails_exactly_at_I = true;
    for (const auto& row : rep.rows) {
        bool should_fail = (row.J == i_mask);
        bool does_fail = row.min_entry < -rep.tol;
        if (should_fail != does_fail) fails_exactly_at_I = false;
    }

    // the symmetric family (lambda, 1-lambda): admissible exactly within
    // a band around 1/2 whose width is pinned by alpha and |I|
    double bound = 0.5 * std::pow((alpha - 2.0) / (alpha + 2.0), static_cast<double>(I.size()));
    bool band_ok = true;
    for (int k = 0; k <= 1000; ++k) {
        double lambda = k / 1000.0;
        if (std::abs(std::abs(lambda - 0.5) - bound) <= 1e-9) continue;  // boundary: either way
        TraceVec t(2);
        t << lambda, 1.0 - lambda;
        bool pass = check_subinvariance(ex.system, t, 1.0).pass;
        bool expected = std::abs(lambda - 0.5) <= bound;
        if (pass != expected) band_ok = false;
    }

    Json c;
    c["n"] = n;
    c["I"] = I;
    c["alpha"] = json_number(alpha);
    c["fails_exactly_at_I"] = fails_exactly_at_I;
    c["lambda_band"] = json_number(bound);
    c["lambda_band_ok"] = band_ok;
    c["pass"] = fails_exactly_at_I && band_ok;
    return c;
}

inline Json verify_optimal() {
    Json cases = Json::array();
    cases.push_back(verify_optimal_case(2, {1}, 3.0));
    cases.push_back(verify_optimal_case(3, {1, 2}, 4.0));
    cases.push_back(verify_optimal_case(3, {1, 2, 3}, 3.0));
    bool all = true;
    for (const auto& c : cases) all = all && c["pass"].get<bool>();
    Json j;
    j["example"] = "optimal";
    j["cases"] = std::move(cases);
    j["pass"] = all;
    return j;
}

inline Json verify_kgraph() {
    std::mt19937_64 rng(20240501);
    Json cases = Json::array();
    bool all = true;
    for (int trial = 0; trial < 20; ++trial) {
        int k = 1 + static_cast<int>(rng() % 2);
        int d = 1 + static_cast<int>(rng() % 4);
        KGraphModel m;
        m.vertex_count = d;
        Eigen::MatrixXi a1(d, d);
        for (int r = 0; r < d; ++r)
            for (int c = 0; c < d; ++c)
                a1(r, c) = static_cast<int>(rng() % (k == 2 ? 2 : 3));  // entries <= 2
        m.adjacency.push_back(a1);
        if (k == 2) {
            int c0 = static_cast<int>(rng() % 2), c1 = static_cast<int>(rng() % 2);
            Eigen::MatrixXi a2 = c0 * Eigen::MatrixXi::Identity(d, d) + c1 * a1;
            m.adjacency.push_back(a2);
        }
        std::vector<double> w(k, 2.0);
        TransferSystem sys = from_kgraph(m, WeightMap(w));

        bool ok = true;
        std::vector<int> deg(k, 0);
        int total = 1 + static_cast<int>(rng() % 4);
        for (int i = 0; i < total; ++i) ++deg[rng() % k];
        std::vector<int> letters;
        for (int c = 0; c < k; ++c)
            for (int i = 0; i < deg[c]; ++i) letters.push_back(c);
        MonoidElement p = normalize(sys.graph, letters);
        for (int v = 0; v < d && ok; ++v) {
            std::vector<long long> ends(d, 0);
            std::vector<int> rem = deg;
            count_walks(m, v, rem, ends);
            for (int wv = 0; wv < d && ok; ++wv) {
                TraceVec basis = TraceVec::Zero(d);
                basis(wv) = 1.0;
                double via_fp = apply_Fp(sys, p, basis)(v);
                if (via_fp != static_cast<double>(ends[wv])) ok = false;
            }
        }
        Json c;
        c["trial"] = trial;
        c["k"] = k;
        c["vertices"] = d;
        c["degree"] = deg;
        c["pass"] = ok;
        cases.push_back(std::move(c));
        all = all && ok;
    }
    Json j;
    j["example"] = "kgraph";
    j["cases"] = std::move(cases);
    j["pass"] = all;
    return j;
}

inline Json verify_blrs() {
    auto g = share(SimpleGraph::edgeless({"a", "b"}));
    TransferSystem sys = trivial_system(g, WeightMap({2.0, 2.0}));
    CriticalBeta cb = critical_beta(sys);
    bool beta_ok = cb.beta_c && std::abs(*cb.beta_c - 1.0) <= 1e-8;
    TraceVec tau(1);
    tau << 1.0;
    WoldResult above = wold(sys, tau, 1.5);
    WoldResult at = wold(sys, tau, 1.0);
    bool class_ok = above.type == TraceType::Finite && at.type == TraceType::Infinite;
    Json j;
    j["example"] = "blrs";
    j["beta_c"] = cb.beta_c ? Json(json_number(*cb.beta_c)) : Json(nullptr);
    j["route"] = cb.route;
    j["beta_c_ok"] = beta_ok;
    j["finite_above"] = to_string(above.type);
    j["infinite_at"] = to_string(at.type);
    j["classification_ok"] = class_ok;
    j["pass"] = beta_ok && class_ok;
    return j;
}

}  // namespace detail

inline CommandResult run_verify_example(const std::string& which) {
    Json j;
    if (which == "optimal")
        j = detail::verify_optimal();
    else if (which == "kgraph")
        j = detail::verify_kgraph();
    else if (which == "blrs")
        j = detail::verify_blrs();
    else
        throw std::invalid_argument("verify-example: unknown example '" + which
                                    + "' (expected optimal|kgraph|blrs)");
    bool pass = j["pass"].get<bool>();
    return {pass ? 0 : 1, j.dump(2) + "\n"};
}

}  // namespace artinkms
