#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "artinkms/linalg.hpp"
#include "artinkms/monoid.hpp"
#include "artinkms/transfer.hpp"

namespace artinkms {

struct Tolerances {
    double positivity = 1e-9;   // slack for entrywise >= 0 checks, relative to mass
    double residual = 1e-8;     // norm tolerance for residuals and classification
    double series = 1e-12;      // level-mass cutoff for series summation
    double budget = 1e6;        // normal forms a series may enumerate
};

inline double positivity_slack(const Tolerances& t, const TraceVec& tau) {
    return t.positivity * std::max(1.0, mass(tau));
}

// ---------------------------------------------------------------------------
// Subinvariance. For a generator subset J the checked vector is
//   tau + sum over nonempty cliques K inside J of (-1)^|K| N(s_K)^-beta F_{s_K} tau,
// joins outside the clique set contribute nothing. The recursion below
// computes all 2^n of them in one sweep:
//   m_J = m_{J \ {s}} - N(s)^-beta F_s m_{J & nbr(s)},  s the lowest bit of J.
// ---------------------------------------------------------------------------

inline std::vector<TraceVec> subinvariance_table(const TransferSystem& sys, const TraceVec& tau,
                                                 double beta) {
    const int n = sys.generators();
    if (n > 20) throw std::invalid_argument("kms: generator count exceeds the subset-check cap (20)");
    std::vector<double> w(n);
    for (int s = 0; s < n; ++s) w[s] = std::pow(sys.N.of(s), -beta);
    std::vector<TraceVec> m(std::size_t{1} << n);
    m[0] = tau;
    for (std::uint32_t J = 1; J < m.size(); ++J) {
        int s = std::countr_zero(J);
        std::uint32_t rest = J & (J - 1);
        m[J] = m[rest] - w[s] * (sys.F[s] * m[rest & sys.graph->neighbours(s)]);
    }
    return m;
}

/// The checked vector for one generator subset.
inline TraceVec inclusion_exclusion_vector(const TransferSystem& sys, const TraceVec& tau,
                                           double beta, std::uint32_t J) {
    TraceVec v = tau;
    for (const auto& K : cliques(*sys.graph, J)) {
        std::uint32_t mask = 0;
        double nk = 1.0;
        for (int s : K) {
            mask |= (1u << s);
            nk *= sys.N.of(s);
        }
        double sign = (K.size() % 2 == 0) ? 1.0 : -1.0;
        v += sign * std::pow(nk, -beta) * (clique_matrix(sys, mask) * tau);
    }
    return v;
}

struct SubinvarianceRow {
    std::uint32_t J = 0;
    TraceVec value;
    double min_entry = 0;
};

struct SubinvarianceReport {
    bool pass = false;
    double tol = 0;
    std::uint32_t worst_J = 0;
    double worst_min = 0;
    std::vector<SubinvarianceRow> rows;  // every nonempty J, ascending mask order

    std::vector<std::string> worst_J_names(const SimpleGraph& g) const {
        std::vector<std::string> out;
        for (int s = 0; s < g.vertex_count(); ++s)
            if ((worst_J >> s) & 1u) out.push_back(g.name(s));
        return out;
    }
};

inline SubinvarianceReport check_subinvariance(const TransferSystem& sys, const TraceVec& tau,
                                               double beta,
                                               std::optional<double> tol = std::nullopt,
                                               const Tolerances& opts = {}) {
    ensure_valid(sys);
    if (tau.size() != sys.dim) throw std::invalid_argument("kms: trace dimension mismatch");
    if (!is_nonneg(tau, positivity_slack(opts, tau)))
        throw std::invalid_argument("kms: trace must be nonnegative");
    SubinvarianceReport rep;
    rep.tol = tol.value_or(positivity_slack(opts, tau));
    auto table = subinvariance_table(sys, tau, beta);
    rep.pass = true;
    rep.worst_min = std::numeric_limits<double>::infinity();
    rep.rows.reserve(table.size() - 1);
    for (std::uint32_t J = 1; J < table.size(); ++J) {
        double mn = table[J].minCoeff();
        if (mn < rep.worst_min) {
            rep.worst_min = mn;
            rep.worst_J = J;
        }
        if (mn < -rep.tol) rep.pass = false;
        rep.rows.push_back({J, std::move(table[J]), mn});
    }
    if (rep.rows.empty()) {  // no generators: nothing to check
        rep.worst_min = 0;
        rep.pass = true;
    }
    return rep;
}

// ---------------------------------------------------------------------------
// The general form of the condition quantifies over finite sets of arbitrary
// monoid elements, with q_K the join of K. Truncated here to elements of
// bounded length and sets of bounded size; serves as a cross-validation
// oracle for the clique reduction.
// ---------------------------------------------------------------------------

struct GeneralCheckReport {
    bool pass = true;
    double tol = 0;
    double worst_min = std::numeric_limits<double>::infinity();
    std::vector<std::string> worst_J;
    long long subsets_checked = 0;
};

inline GeneralCheckReport check_subinvariance_general(const TransferSystem& sys, const TraceVec& tau,
                                                      double beta, int length_cap,
                                                      int max_subset_size = 4,
                                                      long long subset_budget = 5000000,
                                                      std::optional<double> tol = std::nullopt,
                                                      const Tolerances& opts = {}) {
    ensure_valid(sys);
    if (!is_nonneg(tau, positivity_slack(opts, tau)))
        throw std::invalid_argument("kms: trace must be nonnegative");
    GeneralCheckReport rep;
    rep.tol = tol.value_or(positivity_slack(opts, tau));

    std::vector<MonoidElement> elems = enumerate(sys.graph, length_cap);
    elems.erase(elems.begin());  // drop the identity
    const int m = static_cast<int>(elems.size());

    std::map<std::vector<int>, TraceVec> u_cache;
    auto u_of = [&](const MonoidElement& p) -> const TraceVec& {
        auto it = u_cache.find(p.word());
        if (it == u_cache.end()) {
            TraceVec v = std::pow(weight(p, sys.N), -beta) * apply_Fp(sys, p, tau);
            it = u_cache.emplace(p.word(), std::move(v)).first;
        }
        return it->second;
    };

    std::map<std::pair<int, int>, std::optional<MonoidElement>> join_cache;
    auto join_pair = [&](int i, int j) -> const std::optional<MonoidElement>& {
        auto key = std::minmax(i, j);
        auto it = join_cache.find(key);
        if (it == join_cache.end()) {
            ExtendedElement e = join(elems[key.first], elems[key.second]);
            it = join_cache
                     .emplace(key, e.is_finite() ? std::optional<MonoidElement>(e.value())
                                                 : std::nullopt)
                     .first;
        }
        return it->second;
    };

    std::vector<int> J;
    // folds q_K = join of the elements picked by bitmask K, reusing the
    // pairwise cache for the first two factors
    auto fold_join = [&](const std::vector<int>& idx, std::uint32_t K) -> std::optional<MonoidElement> {
        std::optional<MonoidElement> q;
        int taken = 0, first = -1;
        for (int b = 0; b < static_cast<int>(idx.size()); ++b) {
            if (!((K >> b) & 1u)) continue;
            if (taken == 0) {
                first = idx[b];
                q = elems[first];
            } else if (taken == 1) {
                q = join_pair(first, idx[b]);
            } else {
                if (!q) return std::nullopt;
                ExtendedElement e = join(*q, elems[idx[b]]);
                if (e.is_infinite()) return std::nullopt;
                q = e.value();
            }
            if (!q) return std::nullopt;
            ++taken;
        }
        return q;
    };
    auto consider = [&](const std::vector<int>& idx) {
        if (++rep.subsets_checked > subset_budget)
            throw std::runtime_error("kms: general subinvariance check exceeded its subset budget");
        TraceVec v = tau;
        const int k = static_cast<int>(idx.size());
        for (std::uint32_t K = 1; K < (1u << k); ++K) {
            std::optional<MonoidElement> q = fold_join(idx, K);
            if (!q) continue;
            double sign = (std::popcount(K) % 2 == 0) ? 1.0 : -1.0;
            v += sign * u_of(*q);
        }
        double mn = v.minCoeff();
        if (mn < rep.worst_min) {
            rep.worst_min = mn;
            rep.worst_J.clear();
            for (int i : idx) rep.worst_J.push_back(elems[i].str());
        }
        if (mn < -rep.tol) rep.pass = false;
    };

    auto rec = [&](auto&& self, int from, int remaining) -> void {
        if (!J.empty()) consider(J);
        if (remaining == 0) return;
        for (int i = from; i < m; ++i) {
            J.push_back(i);
            self(self, i + 1, remaining - 1);
            J.pop_back();
        }
    };
    rec(rec, 0, std::min(max_subset_size, m));
    if (rep.subsets_checked == 0) rep.worst_min = 0;
    return rep;
}

// ---------------------------------------------------------------------------
// T_beta, the Gibbs inverse, and the Wold split.
// ---------------------------------------------------------------------------

/// I + sum over nonempty cliques K of (-1)^|K| N(s_K)^-beta F_{s_K}. On a
/// complete graph this is the product of the factors I - N(e_i)^-beta F_i.
inline Matrix T_beta(const TransferSystem& sys, double beta) {
    ensure_valid(sys);
    Matrix t = Matrix::Identity(sys.dim, sys.dim);
    for (const auto& K : cliques(*sys.graph)) {
        std::uint32_t mask = 0;
        double nk = 1.0;
        for (int s : K) {
            mask |= (1u << s);
            nk *= sys.N.of(s);
        }
        double sign = (K.size() % 2 == 0) ? 1.0 : -1.0;
        t += sign * std::pow(nk, -beta) * clique_matrix(sys, mask);
    }
    return t;
}

/// Solves T_beta x = tau0 and cross-checks x against the truncated series
/// sum N(p)^-beta F_p tau0. Divergence of the series (at or below the
/// critical temperature) and solver trouble surface as exceptions.
inline TraceVec S_beta_solve(const TransferSystem& sys, double beta, const TraceVec& tau0,
                             const Tolerances& opts = {}) {
    ensure_valid(sys);
    if (!is_nonneg(tau0, positivity_slack(opts, tau0)))
        throw std::invalid_argument("kms: tau0 must be nonnegative");
    Matrix t = T_beta(sys, beta);
    TraceVec x = solve_checked(t, tau0);
    double scale = std::max(1.0, mass(x));
    if (!is_nonneg(x, opts.positivity * scale))
        throw std::domain_error("kms: Gibbs solve produced negative entries");
    SeriesResult series = sum_series(sys, beta, tau0, opts.series * std::max(1.0, mass(tau0)),
                                     opts.budget);
    if (!series.converged)
        throw std::runtime_error("kms: Gibbs series did not converge within budget "
                                 "(beta at or below the critical temperature?)");
    double err = (series.total - x).cwiseAbs().maxCoeff();
    if (err > std::max(series.tail_bound * 10.0, opts.residual * scale))
        throw std::runtime_error("kms: Gibbs series and linear solve disagree (err="
                                 + std::to_string(err) + ")");
    return x;
}

enum class TraceType { Finite, Infinite, Mixed };

inline const char* to_string(TraceType t) {
    switch (t) {
        case TraceType::Finite: return "finite";
        case TraceType::Infinite: return "infinite";
        default: return "mixed";
    }
}

struct WoldResult {
    TraceVec tau0;
    TraceVec tau_f;
    TraceVec tau_inf;
    TraceType type = TraceType::Finite;
    double series_tail_bound = 0;
    double min_entry = 0;  // most negative entry across the three parts
    int levels = 0;
};

/// Splits a subinvariant trace into its Gibbs part and the remainder:
/// tau0 = T_beta tau, tau_f = sum N(p)^-beta F_p tau0, tau_inf = tau - tau_f.
inline WoldResult wold(const TransferSystem& sys, const TraceVec& tau, double beta,
                       const Tolerances& opts = {}) {
    SubinvarianceReport rep = check_subinvariance(sys, tau, beta, std::nullopt, opts);
    if (!rep.pass)
        throw std::domain_error("kms: trace is not subinvariant at beta="
                                + std::to_string(beta));
    WoldResult out;
    out.tau0 = T_beta(sys, beta) * tau;
    SeriesResult series = sum_series(sys, beta, out.tau0,
                                     opts.series * std::max(1.0, mass(tau)), opts.budget);
    if (!series.converged)
        throw std::runtime_error("kms: Wold series exceeded its budget before converging");
    out.tau_f = series.total;
    out.tau_inf = tau - out.tau_f;
    out.series_tail_bound = series.tail_bound;
    out.levels = series.levels;
    out.min_entry = std::min({out.tau0.minCoeff(), out.tau_f.minCoeff(), out.tau_inf.minCoeff()});
    double ctol = opts.residual * std::max(1.0, mass(tau));
    if (mass(out.tau_inf) <= ctol)
        out.type = TraceType::Finite;
    else if (mass(out.tau0) <= ctol)
        out.type = TraceType::Infinite;
    else
        out.type = TraceType::Mixed;
    return out;
}

// ---------------------------------------------------------------------------
// Product decomposition over a free abelian monoid: iterate the single
// coordinate split. The infinite part along coordinate i is
// lim_k (N_i^-beta F_i)^k rho, the finite part the complement.
// ---------------------------------------------------------------------------

struct ProductComponent {
    std::uint32_t finite_coords = 0;  // bitmask over generators
    TraceVec tau_F;
    TraceVec tau_F0;
    double fixed_point_residual = 0;  // max over infinite coordinates
};

struct ProductDecomposition {
    std::vector<ProductComponent> components;  // all 2^n masks, ascending
    double reconstruction_residual = 0;
};

namespace detail {

inline TraceVec coordinate_infinite_part(const Matrix& step, const TraceVec& rho, double tol,
                                         int iter_cap = 200000) {
    TraceVec v = rho;
    double prev = mass(v);
    for (int it = 0; it < iter_cap; ++it) {
        v = step * v;
        double cur = mass(v);
        if (prev - cur < tol && it > 2) break;
        prev = cur;
    }
    return v;
}

}  // namespace detail

inline ProductDecomposition product_decompose(const TransferSystem& sys, const TraceVec& tau,
                                              double beta, const Tolerances& opts = {}) {
    ensure_valid(sys);
    if (!sys.graph->is_complete())
        throw std::invalid_argument("kms: product decomposition needs a complete graph");
    SubinvarianceReport rep = check_subinvariance(sys, tau, beta, std::nullopt, opts);
    if (!rep.pass) throw std::domain_error("kms: trace is not subinvariant");

    const int n = sys.generators();
    const double tol = opts.series * std::max(1.0, mass(tau));
    std::vector<std::pair<std::uint32_t, TraceVec>> parts{{0u, tau}};
    for (int i = 0; i < n; ++i) {
        Matrix step = std::pow(sys.N.of(i), -beta) * sys.F[i];
        std::vector<std::pair<std::uint32_t, TraceVec>> next;
        next.reserve(parts.size() * 2);
        for (auto& [mask, rho] : parts) {
            TraceVec inf_part = detail::coordinate_infinite_part(step, rho, tol);
            next.emplace_back(mask, inf_part);                          // infinite along i
            next.emplace_back(mask | (1u << i), rho - inf_part);        // finite along i
        }
        parts = std::move(next);
    }

    ProductDecomposition out;
    out.components.resize(std::size_t{1} << n);
    TraceVec sum = TraceVec::Zero(sys.dim);
    for (auto& [mask, rho] : parts) {
        ProductComponent comp;
        comp.finite_coords = mask;
        comp.tau_F = rho;
        sum += rho;
        TraceVec t0 = rho;
        for (int i = 0; i < n; ++i)
            if ((mask >> i) & 1u)
                t0 = t0 - std::pow(sys.N.of(i), -beta) * (sys.F[i] * t0);
        comp.tau_F0 = t0;
        double res = 0;
        for (int i = 0; i < n; ++i) {
            if ((mask >> i) & 1u) continue;
            TraceVec fx = std::pow(sys.N.of(i), -beta) * (sys.F[i] * t0);
            res = std::max(res, (fx - t0).cwiseAbs().maxCoeff());
        }
        comp.fixed_point_residual = res;
        out.components[mask] = std::move(comp);
    }
    out.reconstruction_residual = (sum - tau).cwiseAbs().maxCoeff();
    return out;
}

// ---------------------------------------------------------------------------
// Critical inverse temperature.
// ---------------------------------------------------------------------------

struct CriticalBeta {
    std::optional<double> beta_c;           // nullopt means minus infinity
    std::string route;                      // "spectral" | "clique-polynomial" | "level-growth"
    std::vector<double> spectral_radii;     // complete-graph route only
    std::optional<double> growth_route;     // level-growth estimate, when computed
    std::optional<double> tbeta_route;      // T_beta near-singularity location, when found
    bool routes_disagree = false;
};

namespace detail {

/// Scalar clique polynomial 1 + sum (-1)^|K| f_K N(s_K)^-beta for d = 1.
inline double clique_polynomial(const TransferSystem& sys, double beta) {
    double t = 1.0;
    for (const auto& K : cliques(*sys.graph)) {
        double nk = 1.0, fk = 1.0;
        for (int s : K) {
            nk *= sys.N.of(s);
            fk *= sys.F[s](0, 0);
        }
        double sign = (K.size() % 2 == 0) ? 1.0 : -1.0;
        t += sign * fk * std::pow(nk, -beta);
    }
    return t;
}

inline double clique_polynomial_derivative(const TransferSystem& sys, double beta) {
    double t = 0.0;
    for (const auto& K : cliques(*sys.graph)) {
        double nk = 1.0, fk = 1.0;
        for (int s : K) {
            nk *= sys.N.of(s);
            fk *= sys.F[s](0, 0);
        }
        double sign = (K.size() % 2 == 0) ? 1.0 : -1.0;
        t += sign * fk * std::pow(nk, -beta) * (-std::log(nk));
    }
    return t;
}

/// Root of g(beta) = 1 for the strictly decreasing level growth rate.
inline std::optional<double> growth_rate_root(const TransferSystem& sys, double beta_tol = 1e-6) {
    bool all_zero = true;
    for (const auto& f : sys.F)
        if (f.cwiseAbs().sum() > 0) all_zero = false;
    if (all_zero) return std::nullopt;
    double hi = 1.0, step = 1.0;
    while (level_growth_rate(sys, hi) >= 1.0) {
        hi += step;
        step *= 2;
        if (hi > 1e6) throw std::runtime_error("kms: growth-rate bracketing failed (upper)");
    }
    double lo = hi - 1.0;
    step = 1.0;
    while (level_growth_rate(sys, lo) <= 1.0) {
        lo -= step;
        step *= 2;
        if (lo < -1e6) throw std::runtime_error("kms: growth-rate bracketing failed (lower)");
    }
    while (hi - lo > beta_tol) {
        double mid = 0.5 * (lo + hi);
        if (level_growth_rate(sys, mid) >= 1.0)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace detail

inline CriticalBeta critical_beta(const TransferSystem& sys, double spectral_tol = 1e-10) {
    ensure_valid(sys);
    if (!sys.N.all_greater_one())
        throw std::invalid_argument("kms: critical temperature requires N(s) > 1 for every generator");
    CriticalBeta out;

    if (sys.graph->is_complete()) {
        out.route = "spectral";
        double best = -std::numeric_limits<double>::infinity();
        for (int s = 0; s < sys.generators(); ++s) {
            double r = spectral_radius(sys.F[s], spectral_tol);
            out.spectral_radii.push_back(r);
            if (r > 0) best = std::max(best, std::log(r) / std::log(sys.N.of(s)));
        }
        if (std::isfinite(best)) out.beta_c = best;
        return out;
    }

    std::optional<double> groot = detail::growth_rate_root(sys);
    out.growth_route = groot;
    if (!groot) {
        out.route = "level-growth";
        return out;  // zero system: no finite critical temperature
    }

    if (sys.dim == 1) {
        // polish the growth-rate estimate on the scalar clique polynomial
        out.route = "clique-polynomial";
        double b = *groot;
        for (int it = 0; it < 100; ++it) {
            double t = detail::clique_polynomial(sys, b);
            double dt = detail::clique_polynomial_derivative(sys, b);
            if (dt == 0.0) break;
            double nb = b - t / dt;
            if (!std::isfinite(nb) || std::abs(nb - *groot) > 0.1) break;
            if (std::abs(nb - b) < 1e-14) {
                b = nb;
                break;
            }
            b = nb;
        }
        out.beta_c = (std::abs(detail::clique_polynomial(sys, b)) <= 1e-8 &&
                      std::abs(b - *groot) <= 0.1)
                         ? b
                         : *groot;
        return out;
    }

    out.route = "level-growth";
    out.beta_c = groot;
    // probe T_beta near-singularity as the independent route
    double best_sigma = std::numeric_limits<double>::infinity();
    double best_beta = *groot;
    for (int k = -20; k <= 20; ++k) {
        double b = *groot + 0.01 * k;
        double s = smallest_singular_value(T_beta(sys, b));
        if (s < best_sigma) {
            best_sigma = s;
            best_beta = b;
        }
    }
    if (best_sigma <= 1e-6) {
        out.tbeta_route = best_beta;
        out.routes_disagree = std::abs(best_beta - *groot) > 1e-3;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Witness at the critical temperature: a nonnegative mass-one vector in the
// kernel of T_{beta_c}.
// ---------------------------------------------------------------------------

struct CriticalWitness {
    std::optional<TraceVec> witness;
    double residual = std::numeric_limits<double>::infinity();
    double beta_c = 0;
};

inline CriticalWitness infinite_type_at_critical(const TransferSystem& sys,
                                                 const Tolerances& opts = {}) {
    CriticalBeta cb = critical_beta(sys);
    if (!cb.beta_c) throw std::domain_error("kms: no finite critical temperature");
    CriticalWitness out;
    out.beta_c = *cb.beta_c;
    Matrix t = T_beta(sys, out.beta_c);

    if (sys.graph->is_complete()) {
        int best = -1;
        double best_val = -std::numeric_limits<double>::infinity();
        for (int s = 0; s < sys.generators(); ++s) {
            if (cb.spectral_radii[s] <= 0) continue;
            double val = std::log(cb.spectral_radii[s]) / std::log(sys.N.of(s));
            if (val > best_val) {
                best_val = val;
                best = s;
            }
        }
        if (best >= 0) {
            TraceVec v = perron_vector(sys.F[best]);
            double m = mass(v);
            if (m > 0) {
                v /= m;
                double res = (t * v).cwiseAbs().maxCoeff();
                if (res <= opts.residual && is_nonneg(v, opts.positivity)) {
                    out.witness = v;
                    out.residual = res;
                    return out;
                }
            }
        }
    }

    // kernel extraction with a nonnegative refinement
    TraceVec x = smallest_singular_vector(t);
    if (x.sum() < 0) x = -x;
    x = x.cwiseMax(0.0);
    if (mass(x) <= 0) return out;
    x /= mass(x);
    Eigen::JacobiSVD<Matrix> svd(t);
    double smax = svd.singularValues()(0);
    double eta = smax > 0 ? 1.0 / (smax * smax) : 1.0;
    Matrix tt = t.transpose() * t;
    for (int it = 0; it < 2000; ++it) {
        x = (x - eta * (tt * x)).cwiseMax(0.0);
        double m = mass(x);
        if (m <= 0) return out;
        x /= m;
    }
    double res = (t * x).cwiseAbs().maxCoeff();
    if (res <= opts.residual && is_nonneg(x, opts.positivity)) {
        out.witness = x;
        out.residual = res;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Further per-trace conditions.
// ---------------------------------------------------------------------------

struct NOConditionReport {
    bool pass = true;
    double tol = 0;
    double max_residual = 0;
    std::vector<double> per_generator;  // |N(s)^-beta F_s tau - tau| in max norm
};

/// Full fixed-point test N(s)^-beta F_s tau = tau for every generator; valid
/// for models whose left actions are injective and by compacts.
inline NOConditionReport check_NO_condition(const TransferSystem& sys, const TraceVec& tau,
                                            double beta, std::optional<double> tol = std::nullopt,
                                            const Tolerances& opts = {}) {
    ensure_valid(sys);
    NOConditionReport rep;
    rep.tol = tol.value_or(opts.residual * std::max(1.0, mass(tau)));
    for (int s = 0; s < sys.generators(); ++s) {
        TraceVec fx = std::pow(sys.N.of(s), -beta) * (sys.F[s] * tau);
        double r = (fx - tau).cwiseAbs().maxCoeff();
        rep.per_generator.push_back(r);
        rep.max_residual = std::max(rep.max_residual, r);
    }
    rep.pass = rep.max_residual <= rep.tol;
    return rep;
}

enum class GaugeVerdict { Guaranteed, Decay, NoDecay };

inline const char* to_string(GaugeVerdict v) {
    switch (v) {
        case GaugeVerdict::Guaranteed: return "guaranteed";
        case GaugeVerdict::Decay: return "decay";
        default: return "no decay";
    }
}

struct GaugeReport {
    GaugeVerdict verdict = GaugeVerdict::NoDecay;
    bool bound_available = false;   // all rank hints present
    bool bound_holds = false;       // N(s)^beta >= (1+delta) m(s) for all s
    std::vector<double> profile;    // profile[l] = max_{|p|=l} N(p)^-beta (F_p tau)(1)
    bool profile_complete = true;   // false when the enumeration budget ran out
};

/// Two pieces of evidence for gauge-invariance: an exact generator bound
/// from the rank hints, and a decay profile over word length (heuristic,
/// reported as such).
inline GaugeReport check_gauge_sufficient(const TransferSystem& sys, const TraceVec& tau,
                                          double beta, int max_length, double delta = 0.1,
                                          double element_budget = 500000) {
    ensure_valid(sys);
    if (max_length < 1) throw std::invalid_argument("kms: profile length must be at least 1");
    if (!is_nonneg(tau)) throw std::invalid_argument("kms: trace must be nonnegative");
    GaugeReport rep;
    rep.profile.assign(max_length + 1, 0.0);
    rep.profile_complete =
        for_each_element(sys, max_length, element_budget,
                         [&](const MonoidElement& p, double w, const Eigen::RowVectorXd& row) {
                             double val = std::pow(w, -beta) * (row * tau)(0);
                             auto& slot = rep.profile[p.length()];
                             slot = std::max(slot, val);
                         });

    rep.bound_available = !sys.rank_hint.empty();
    for (const auto& h : sys.rank_hint)
        if (!h) rep.bound_available = false;
    if (rep.bound_available) {
        rep.bound_holds = true;
        for (int s = 0; s < sys.generators(); ++s)
            if (std::pow(sys.N.of(s), beta) < (1.0 + delta) * (*sys.rank_hint[s]))
                rep.bound_holds = false;
    }

    if (rep.bound_available && rep.bound_holds)
        rep.verdict = GaugeVerdict::Guaranteed;
    else if (rep.profile[1] == 0.0 || rep.profile[max_length] < 1e-6 * rep.profile[1])
        rep.verdict = GaugeVerdict::Decay;
    else
        rep.verdict = GaugeVerdict::NoDecay;
    return rep;
}

struct MonotonicityReport {
    bool ok = true;
    std::vector<double> checked;
    std::vector<double> failures;  // betas where the check unexpectedly failed
};

/// Once subinvariant, always subinvariant at higher beta (for N >= 1); a
/// failure here indicates a bug, not a property of the input.
inline MonotonicityReport monotonicity_probe(const TransferSystem& sys, const TraceVec& tau,
                                             double beta0, const std::vector<double>& betas,
                                             const Tolerances& opts = {}) {
    ensure_valid(sys);
    if (!sys.N.all_at_least_one())
        throw std::invalid_argument("kms: monotonicity requires N(s) >= 1");
    SubinvarianceReport base = check_subinvariance(sys, tau, beta0, std::nullopt, opts);
    if (!base.pass)
        throw std::domain_error("kms: trace is not subinvariant at the base temperature");
    MonotonicityReport rep;
    for (double b : betas) {
        if (!(b > beta0)) continue;
        rep.checked.push_back(b);
        if (!check_subinvariance(sys, tau, b, std::nullopt, opts).pass) {
            rep.ok = false;
            rep.failures.push_back(b);
        }
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Inversion over an explicit finite quasi-lattice.
// ---------------------------------------------------------------------------

/// Given f on a finite quasi-lattice (join table: index, or -1 for no common
/// upper bound), returns fhat with
///   fhat(p) = f(p) + sum over nonempty K in {q > p} of (-1)^|K| f(join K),
/// joins without upper bound contributing zero, and verifies the inversion
/// identity f(p) = sum_{q >= p} fhat(q).
inline std::vector<double> mobius_invert(const std::vector<std::vector<int>>& join_table,
                                         const std::vector<double>& f) {
    const int n = static_cast<int>(f.size());
    if (static_cast<int>(join_table.size()) != n)
        throw std::invalid_argument("mobius: join table size mismatch");
    if (n > 24) throw std::invalid_argument("mobius: poset too large");
    for (int i = 0; i < n; ++i) {
        if (static_cast<int>(join_table[i].size()) != n)
            throw std::invalid_argument("mobius: join table is not square");
        if (join_table[i][i] != i)
            throw std::invalid_argument("mobius: join table not idempotent");
        for (int j = 0; j < n; ++j) {
            int v = join_table[i][j];
            if (v < -1 || v >= n) throw std::invalid_argument("mobius: join entry out of range");
            if (v != join_table[j][i])
                throw std::invalid_argument("mobius: join table not symmetric");
        }
    }
    auto leq_tab = [&](int a, int b) { return join_table[a][b] == b; };
    // least-upper-bound consistency against the order the table induces
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            int v = join_table[i][j];
            std::vector<int> ubs;
            for (int m = 0; m < n; ++m)
                if (leq_tab(i, m) && leq_tab(j, m)) ubs.push_back(m);
            if (ubs.empty()) {
                if (v != -1)
                    throw std::invalid_argument("mobius: join given for a pair with no upper bound");
                continue;
            }
            if (v == -1)
                throw std::invalid_argument("mobius: missing join for a pair with upper bounds");
            for (int u : ubs)
                if (!leq_tab(v, u))
                    throw std::invalid_argument("mobius: join entry is not the least upper bound");
        }

    std::vector<double> fhat(n);
    for (int p = 0; p < n; ++p) {
        std::vector<int> above;
        for (int q = 0; q < n; ++q)
            if (q != p && leq_tab(p, q)) above.push_back(q);
        double acc = f[p];
        const int k = static_cast<int>(above.size());
        for (std::uint32_t K = 1; K < (1u << k); ++K) {
            int q = -1;
            bool fin = true;
            for (int b = 0; b < k && fin; ++b) {
                if (!((K >> b) & 1u)) continue;
                if (q < 0)
                    q = above[b];
                else {
                    q = join_table[q][above[b]];
                    if (q == -1) fin = false;
                }
            }
            if (!fin) continue;
            acc += ((std::popcount(K) % 2 == 0) ? 1.0 : -1.0) * f[q];
        }
        fhat[p] = acc;
    }

    double scale = 1.0;
    for (double v : f) scale = std::max(scale, std::abs(v));
    for (int p = 0; p < n; ++p) {
        double sum = 0;
        for (int q = 0; q < n; ++q)
            if (leq_tab(p, q)) sum += fhat[q];
        if (std::abs(sum - f[p]) > 1e-9 * scale)
            throw std::invalid_argument("mobius: inversion identity failed; join table inconsistent");
    }
    return fhat;
}

}  // namespace artinkms
