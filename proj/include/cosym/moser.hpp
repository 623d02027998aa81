#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "cosym/coslinalg.hpp"
#include "cosym/errors.hpp"
#include "cosym/forms.hpp"
#include "cosym/gridding.hpp"
#include "cosym/report.hpp"

namespace cosym {

// A closed submanifold given as the zero locus of a subset of chart
// coordinates. The time coordinate is never allowed to vanish: the
// cosymplectic stages need the Reeb direction tangent to M.
struct SubmanifoldSpec {
    std::vector<std::string> vanishing;

    std::set<std::size_t> indices(const Chart& chart) const {
        std::set<std::size_t> s;
        for (const auto& label : vanishing) {
            std::size_t i = chart.require_index(label);
            if (chart.time_index() && *chart.time_index() == i)
                throw error(errc::parse_error, "time coordinate cannot be in the vanishing set");
            if (!s.insert(i).second)
                throw error(errc::parse_error, "duplicate vanishing coordinate '" + label + "'");
        }
        return s;
    }
};

// ---------------------------------------------------------------------------
// Relative Poincare primitives
// ---------------------------------------------------------------------------

// Homotopy operator for the radial scaling of the vanishing coordinates.
// For w = f(x) dx_I closed with zero pullback to M, the primitive is
//   phi = sum_{a : I_a in S} (-1)^a x_{I_a} [ integral of the scaled
//         coefficient ] dx_{I minus a},
// where each monomial integrates to coeff / (degS + c_a + 1). Everything is
// exact rational arithmetic; d(phi) = w is an identity, not an
// approximation.
inline PolyForm poincare_primitive(const PolyForm& w, const SubmanifoldSpec& m) {
    const Chart& chart = w.chart();
    std::set<std::size_t> scaled = m.indices(chart);
    if (!d(w).is_zero()) throw error(errc::not_closed, "form is not closed");
    if (!tangential_restriction(w, scaled).is_zero())
        throw error(errc::nonvanishing_on_m, "pullback of the form to M is nonzero");
    if (w.degree() == 0) return PolyForm(chart, 0);  // checks force w = 0

    PolyForm phi(chart, w.degree() - 1);
    for (const auto& [idx, f] : w.terms()) {
        for (std::size_t a = 0; a < idx.size(); ++a) {
            if (!scaled.count(idx[a])) continue;
            long c_a = 0;
            for (std::size_t b = 0; b < idx.size(); ++b)
                if (b != a && scaled.count(idx[b])) ++c_a;
            IndexTuple rest;
            rest.reserve(idx.size() - 1);
            for (std::size_t b = 0; b < idx.size(); ++b)
                if (b != a) rest.push_back(idx[b]);
            int sign = (a % 2 == 0) ? 1 : -1;
            for (const auto& [e, coeff] : f.terms()) {
                long deg_s = 0;
                for (std::size_t v : scaled) deg_s += e[v];
                Rational integrated = coeff / Rational(deg_s + c_a + 1);
                if (sign < 0) integrated = -integrated;
                PolyScalar::Exponents ee = e;
                ee[idx[a]] += 1;
                phi.add_term(rest, PolyScalar::monomial(chart.dim(), std::move(ee),
                                                        std::move(integrated)));
            }
        }
    }
    return phi;
}

// Variant that scales every direction except the Reeb coordinate. Since the
// vanishing set never contains the time coordinate the scaling is the same;
// what changes are the hypotheses: w must vanish as a tensor along M (not
// just tangentially) and must not see xi at all. The primitive then
// satisfies interior(xi, phi) = 0 on the nose.
inline PolyForm reeb_primitive(const PolyForm& w, const SubmanifoldSpec& m,
                               const PolyVectorField& xi) {
    if (xi.chart() != w.chart())
        throw error(errc::chart_mismatch, "xi and form on different charts");
    auto dir = xi.coordinate_direction();
    if (!dir) throw error(errc::xi_not_coordinate, "xi must be a single coordinate field");
    std::set<std::size_t> scaled = m.indices(w.chart());
    if (scaled.count(*dir))
        throw error(errc::xi_not_coordinate, "xi direction lies in the vanishing set");
    if (w.degree() >= 1 && !interior(xi, w).is_zero())
        throw error(errc::reeb_contraction_nonzero, "interior(xi, w) != 0");
    if (!vanishes_on_locus(w, scaled))
        throw error(errc::nonvanishing_on_m, "form does not vanish on T_M P");
    return poincare_primitive(w, m);
}

// ---------------------------------------------------------------------------
// Structure paths and Reeb interpolation
// ---------------------------------------------------------------------------

// Linear interpolation between two closed structures whose difference
// vanishes along M.
struct StructurePath {
    enum class Kind { eta_path, omega_path };
    Kind kind;
    PolyForm start;
    PolyForm end;
    PolyForm difference;
    std::optional<PolyForm> fixed_eta;

    PolyForm at(const Rational& t) const { return start + t * difference; }

    static StructurePath make_eta(const PolyForm& eta0, const PolyForm& eta1,
                                  const SubmanifoldSpec& m) {
        return make(Kind::eta_path, eta0, eta1, m, std::nullopt);
    }

    static StructurePath make_omega(const PolyForm& omega0, const PolyForm& omega1,
                                    const PolyForm& eta, const SubmanifoldSpec& m) {
        return make(Kind::omega_path, omega0, omega1, m, eta);
    }

  private:
    static StructurePath make(Kind kind, const PolyForm& a, const PolyForm& b,
                              const SubmanifoldSpec& m, std::optional<PolyForm> fixed) {
        a.require_same_chart(b);
        if (a.degree() != b.degree()) throw error(errc::degree_mismatch, "path degree mismatch");
        if (!d(a).is_zero() || !d(b).is_zero())
            throw error(errc::not_closed, "path endpoints must be closed");
        PolyForm diff = b - a;
        if (!vanishes_on_locus(diff, m.indices(a.chart())))
            throw error(errc::nonvanishing_on_m, "structure difference does not vanish at M");
        return StructurePath{kind, a, b, std::move(diff), std::move(fixed)};
    }
};

namespace detail {

// Unique polynomial solution of A x = b over the polynomial ring, via
// Gauss-Jordan with cross-multiplication and a final exact division. Returns
// nullopt when no unique polynomial solution exists.
inline std::optional<std::vector<PolyScalar>> solve_symbolic(
    std::vector<std::vector<PolyScalar>> a, std::vector<PolyScalar> b) {
    if (a.empty()) return std::vector<PolyScalar>{};
    std::size_t rows = a.size();
    std::size_t cols = a.front().size();
    std::vector<bool> used(rows, false);
    std::vector<std::size_t> pivot_row(cols, 0);
    for (std::size_t col = 0; col < cols; ++col) {
        std::optional<std::size_t> choice;
        for (std::size_t r = 0; r < rows; ++r) {
            if (used[r] || a[r][col].is_zero()) continue;
            if (a[r][col].is_constant()) { choice = r; break; }
            if (!choice) choice = r;
        }
        if (!choice) return std::nullopt;
        std::size_t pr = *choice;
        used[pr] = true;
        pivot_row[col] = pr;
        for (std::size_t q = 0; q < rows; ++q) {
            if (q == pr || a[q][col].is_zero()) continue;
            PolyScalar piv = a[pr][col];
            PolyScalar qe = a[q][col];
            for (std::size_t j = 0; j < cols; ++j) a[q][j] = piv * a[q][j] - qe * a[pr][j];
            b[q] = piv * b[q] - qe * b[pr];
        }
    }
    for (std::size_t r = 0; r < rows; ++r) {
        if (used[r]) continue;
        for (std::size_t j = 0; j < cols; ++j)
            if (!a[r][j].is_zero()) return std::nullopt;
        if (!b[r].is_zero()) return std::nullopt;
    }
    std::vector<PolyScalar> x;
    x.reserve(cols);
    for (std::size_t col = 0; col < cols; ++col) {
        std::size_t pr = pivot_row[col];
        auto q = try_divide_exact(b[pr], a[pr][col]);
        if (!q) return std::nullopt;
        x.push_back(std::move(*q));
    }
    return x;
}

inline std::vector<std::vector<PolyScalar>> omega_coefficient_matrix(const PolyForm& omega) {
    std::size_t n = omega.chart().dim();
    std::vector<std::vector<PolyScalar>> m(n, std::vector<PolyScalar>(n, PolyScalar(n)));
    for (const auto& [idx, c] : omega.terms()) {
        m[idx[0]][idx[1]] += c;
        m[idx[1]][idx[0]] -= c;
    }
    return m;
}

inline double ddot(const DVec& a, const DVec& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double dnorm_inf(const DVec& a) {
    double m = 0.0;
    for (double x : a) m = std::max(m, std::fabs(x));
    return m;
}

}  // namespace detail

// Attempts a closed-form polynomial Reeb field of the pair (omega, eta) by
// solving omega * xi = 0, eta(xi) = 1 symbolically. Rational-function Reeb
// fields are out of scope; callers fall back to pointwise solves.
inline std::optional<PolyVectorField> reeb_field(const PolyForm& omega, const PolyForm& eta) {
    omega.require_same_chart(eta);
    std::size_t n = omega.chart().dim();
    auto a = detail::omega_coefficient_matrix(omega);
    std::vector<PolyScalar> rhs(n + 1, PolyScalar(n));
    a.push_back(std::vector<PolyScalar>(n, PolyScalar(n)));
    for (const auto& [idx, c] : eta.terms()) a[n][idx[0]] = c;
    rhs[n] = PolyScalar::constant(n, Rational(1));
    auto sol = detail::solve_symbolic(std::move(a), std::move(rhs));
    if (!sol) return std::nullopt;
    return PolyVectorField(omega.chart(), std::move(*sol));
}

// Reeb interpolation data of the eta stage: xi_t = a(t) xi0 + b(t) xi1 with
//   a(t) = (1 - t + t c1)(1 - t),   c1 = eta1(xi0),
//   b(t) = (t + (1 - t) c0) t,      c0 = eta0(xi1),
// so that a(0) = 1, a(1) = 0, b(0) = 0, b(1) = 1 identically and
// eta_t(xi_t) stays positive near M. N_t = xi_t / eta_t(xi_t).
struct ReebInterpolation {
    PolyForm eta0;
    PolyForm eta1;
    std::optional<PolyVectorField> xi0;
    std::optional<PolyVectorField> xi1;

    // a and b as exact polynomials in (s, c0, c1).
    static Chart coefficient_chart() { return Chart({"s", "c0", "c1"}); }

    static PolyScalar a_coefficient() {
        PolyScalar s = PolyScalar::variable(3, 0);
        PolyScalar c1 = PolyScalar::variable(3, 2);
        PolyScalar one = PolyScalar::constant(3, Rational(1));
        return (one - s + s * c1) * (one - s);
    }

    static PolyScalar b_coefficient() {
        PolyScalar s = PolyScalar::variable(3, 0);
        PolyScalar c0 = PolyScalar::variable(3, 1);
        PolyScalar one = PolyScalar::constant(3, Rational(1));
        return (s + (one - s) * c0) * s;
    }

    static double a_value(double t, double c1) { return (1.0 - t + t * c1) * (1.0 - t); }
    static double b_value(double t, double c0) { return (t + (1.0 - t) * c0) * t; }
};

// ---------------------------------------------------------------------------
// Time-dependent flows
// ---------------------------------------------------------------------------

using TimeField = std::function<DVec(double, const DVec&)>;

struct FlowResult {
    std::vector<DVec> seeds;
    std::vector<std::vector<DVec>> trajectories;  // per seed, step_count + 1 points
    int step_count = 0;
    std::vector<DMat> jacobian_estimates;  // at t = 1
    std::vector<bool> diverged;

    const DVec& end(std::size_t i) const { return trajectories.at(i).back(); }
    bool any_diverged() const {
        for (bool d : diverged)
            if (d) return true;
        return false;
    }
};

namespace detail {

constexpr double kDivergenceGuard = 1e6;

inline DVec rk4_step(const TimeField& f, double t, const DVec& p, double h) {
    std::size_t n = p.size();
    DVec k1 = f(t, p);
    DVec q(n);
    for (std::size_t i = 0; i < n; ++i) q[i] = p[i] + 0.5 * h * k1[i];
    DVec k2 = f(t + 0.5 * h, q);
    for (std::size_t i = 0; i < n; ++i) q[i] = p[i] + 0.5 * h * k2[i];
    DVec k3 = f(t + 0.5 * h, q);
    for (std::size_t i = 0; i < n; ++i) q[i] = p[i] + h * k3[i];
    DVec k4 = f(t + h, q);
    DVec out(n);
    for (std::size_t i = 0; i < n; ++i)
        out[i] = p[i] + (h / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    return out;
}

}  // namespace detail

// Endpoint of the time-1 flow of dp/dt = field(t, p) from p, fixed-step RK4.
inline DVec flow_map(const TimeField& field, DVec p, int steps, bool* diverged = nullptr) {
    if (steps < 1) throw error(errc::parse_error, "flow needs steps >= 1");
    double h = 1.0 / steps;
    for (int s = 0; s < steps; ++s) {
        p = detail::rk4_step(field, s * h, p, h);
        if (detail::dnorm_inf(p) > detail::kDivergenceGuard) {
            if (diverged) *diverged = true;
            return p;
        }
    }
    if (diverged) *diverged = false;
    return p;
}

// Classical fixed-step RK4 over t in [0,1] with trajectory recording and
// central-difference Jacobians (step h = 1e-5) at t = 1.
inline FlowResult integrate_flow(const TimeField& field, const std::vector<DVec>& seeds,
                                 int steps, double jacobian_h = 1e-5) {
    if (steps < 1) throw error(errc::parse_error, "integrate_flow needs steps >= 1");
    FlowResult out;
    out.seeds = seeds;
    out.step_count = steps;
    double h = 1.0 / steps;
    for (const DVec& seed : seeds) {
        std::vector<DVec> traj;
        traj.reserve(steps + 1);
        traj.push_back(seed);
        bool div = false;
        DVec p = seed;
        for (int s = 0; s < steps; ++s) {
            if (!div) {
                p = detail::rk4_step(field, s * h, p, h);
                if (detail::dnorm_inf(p) > detail::kDivergenceGuard) div = true;
            }
            traj.push_back(p);
        }
        out.trajectories.push_back(std::move(traj));
        out.diverged.push_back(div);

        std::size_t n = seed.size();
        DMat jac(n, DVec(n, 0.0));
        if (!div) {
            for (std::size_t j = 0; j < n; ++j) {
                DVec plus = seed, minus = seed;
                plus[j] += jacobian_h;
                minus[j] -= jacobian_h;
                DVec fp = flow_map(field, plus, steps);
                DVec fm = flow_map(field, minus, steps);
                for (std::size_t i = 0; i < n; ++i)
                    jac[i][j] = (fp[i] - fm[i]) / (2.0 * jacobian_h);
            }
        }
        out.jacobian_estimates.push_back(std::move(jac));
    }
    return out;
}

inline FlowResult integrate_flow(const PolyVectorField& field, const std::vector<DVec>& seeds,
                                 int steps, double jacobian_h = 1e-5) {
    TimeField f = [&field](double, const DVec& p) {
        DVec v(field.components().size());
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = field.component(i).evaluate(p);
        return v;
    };
    return integrate_flow(f, seeds, steps, jacobian_h);
}

// ---------------------------------------------------------------------------
// Stage machinery
// ---------------------------------------------------------------------------

struct MoserOptions {
    Rational radius = Rational(1, 2);  // box half-width per axis
    int grid = 5;                      // points per axis
    int steps = 64;                    // RK4 steps
    double tol = 1e-5;                 // residual tolerance for pullback checks
    std::size_t max_points = 512;
    double jacobian_h = 1e-5;
    double fixed_point_tol = 1e-10;    // flows must fix M to this accuracy
};

namespace detail {

inline std::vector<QVec> stage_grid(const Chart& chart, const MoserOptions& opt) {
    std::vector<Rational> widths(chart.dim(), opt.radius);
    return sample_box(widths, opt.grid, opt.max_points);
}

inline std::vector<DVec> to_seed_list(const std::vector<QVec>& pts) {
    std::vector<DVec> seeds;
    seeds.reserve(pts.size());
    for (const auto& p : pts) seeds.push_back(to_doubles(p));
    return seeds;
}

inline std::vector<DVec> m_seeds(const std::vector<QVec>& pts, const std::set<std::size_t>& vanish) {
    std::set<QVec> uniq;
    for (QVec p : pts) {
        for (std::size_t v : vanish) p[v] = 0;
        uniq.insert(std::move(p));
    }
    std::vector<DVec> seeds;
    for (const auto& p : uniq) seeds.push_back(to_doubles(p));
    return seeds;
}

inline void require_cosymplectic_at(const PolyForm& omega, const PolyForm& eta,
                                    const std::vector<QVec>& pts, const std::string& which) {
    for (const QVec& pt : pts) {
        CosymplecticLinearData data(SkewForm(evaluate(omega, pt).skew_matrix()),
                                    evaluate(eta, pt).covector());
        if (classify(data).kind != Classification::Kind::cosymplectic)
            throw error(errc::not_cosymplectic, which + " pair degenerates at a sample point");
    }
}

// Pointwise Reeb solve in doubles: (omega^T + eta eta^T) xi = eta.
inline DVec numeric_reeb(const PolyForm& omega, const PolyForm& eta, const DVec& y) {
    std::size_t n = y.size();
    DMat om = evaluate_skew_d(omega, y);
    DVec e = evaluate_covector_d(eta, y);
    DMat m(n, DVec(n, 0.0));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) m[i][j] = om[j][i] + e[i] * e[j];
    auto sol = solve_lu(std::move(m), e);
    if (!sol) throw error(errc::not_cosymplectic, "pointwise Reeb solve is singular");
    return *sol;
}

inline DVec eval_field(const PolyVectorField& f, const DVec& y) {
    DVec v(f.components().size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = f.component(i).evaluate(y);
    return v;
}

}  // namespace detail

struct EtaStageResult {
    FlowResult flow;
    EquivalenceReport report;
    PolyForm nu;               // eta1 - eta0
    PolyForm phi;              // scalar primitive, d(phi) = nu, phi|_M = 0
    ReebInterpolation interpolation;
    TimeField field;           // Z_t, reusable for composition
};

// First stage: interpolate eta_t = eta0 + t nu, pick the scalar primitive
// phi of nu vanishing on M, set Z_t = -phi N_t with
// N_t = xi_t / eta_t(xi_t), and integrate. The flow g then satisfies
// g^* eta1 = eta0 with dg(xi0) = xi1, both certified numerically.
//
// omega1 supplies the Reeb field of the target pair; it defaults to omega0
// (the shared-kernel case).
inline EtaStageResult eta_stage(const PolyForm& eta0, const PolyForm& eta1,
                                const PolyForm& omega0, const SubmanifoldSpec& m,
                                const MoserOptions& opt = {},
                                const std::optional<PolyForm>& omega1 = std::nullopt) {
    eta0.require_same_chart(eta1);
    eta0.require_same_chart(omega0);
    const PolyForm& om1 = omega1 ? *omega1 : omega0;
    eta0.require_same_chart(om1);
    const Chart& chart = eta0.chart();
    std::set<std::size_t> vanish = m.indices(chart);

    StructurePath path = StructurePath::make_eta(eta0, eta1, m);
    PolyForm phi = poincare_primitive(path.difference, m);
    PolyScalar phi_scalar = phi.scalar_part();

    std::vector<QVec> grid = detail::stage_grid(chart, opt);
    detail::require_cosymplectic_at(omega0, eta0, grid, "(omega0, eta0)");
    detail::require_cosymplectic_at(om1, eta1, grid, "(omega1, eta1)");

    ReebInterpolation interp;
    interp.eta0 = eta0;
    interp.eta1 = eta1;
    interp.xi0 = reeb_field(omega0, eta0);
    interp.xi1 = reeb_field(om1, eta1);

    auto xi0_at = [omega0, eta0, xi0 = interp.xi0](const DVec& y) {
        return xi0 ? detail::eval_field(*xi0, y) : detail::numeric_reeb(omega0, eta0, y);
    };
    auto xi1_at = [om1 = om1, eta1, xi1 = interp.xi1](const DVec& y) {
        return xi1 ? detail::eval_field(*xi1, y) : detail::numeric_reeb(om1, eta1, y);
    };

    // Domain guarantee eta_t(xi_t) > 0, exact when the Reeb fields are
    // polynomial.
    double min_domain = std::numeric_limits<double>::infinity();
    for (const QVec& pt : grid) {
        QVec e0, e1;
        std::optional<QVec> x0q, x1q;
        if (interp.xi0 && interp.xi1) {
            e0 = evaluate(eta0, pt).covector();
            e1 = evaluate(eta1, pt).covector();
            x0q = QVec();
            x1q = QVec();
            for (const auto& c : interp.xi0->components()) x0q->push_back(c.evaluate(pt));
            for (const auto& c : interp.xi1->components()) x1q->push_back(c.evaluate(pt));
        }
        for (int j = 0; j <= opt.steps; ++j) {
            Rational t(j, opt.steps);
            t.canonicalize();
            if (x0q) {
                Rational c1 = dot(e1, *x0q), c0 = dot(e0, *x1q);
                Rational a = (1 - t + t * c1) * (1 - t);
                Rational b = (t + (1 - t) * c0) * t;
                QVec xt(chart.dim());
                for (std::size_t i = 0; i < chart.dim(); ++i)
                    xt[i] = a * (*x0q)[i] + b * (*x1q)[i];
                QVec et(chart.dim());
                for (std::size_t i = 0; i < chart.dim(); ++i)
                    et[i] = e0[i] + t * (e1[i] - e0[i]);
                Rational denom = dot(et, xt);
                min_domain = std::min(min_domain, to_double(denom));
                if (denom <= 0)
                    throw error(errc::domain_violation,
                                "eta_t(xi_t) <= 0 at a sampled (point, t); shrink the box");
            } else {
                DVec y = to_doubles(pt);
                DVec x0 = xi0_at(y), x1 = xi1_at(y);
                DVec e0d = evaluate_covector_d(eta0, y), e1d = evaluate_covector_d(eta1, y);
                double td = to_double(t);
                double c1 = detail::ddot(e1d, x0), c0 = detail::ddot(e0d, x1);
                double a = ReebInterpolation::a_value(td, c1);
                double b = ReebInterpolation::b_value(td, c0);
                double denom = 0.0;
                for (std::size_t i = 0; i < y.size(); ++i)
                    denom += (e0d[i] + td * (e1d[i] - e0d[i])) * (a * x0[i] + b * x1[i]);
                min_domain = std::min(min_domain, denom);
                if (denom <= 0)
                    throw error(errc::domain_violation,
                                "eta_t(xi_t) <= 0 at a sampled (point, t); shrink the box");
            }
        }
    }

    TimeField z_field = [phi_scalar, eta0, eta1, xi0_at, xi1_at](double t, const DVec& y) {
        std::size_t n = y.size();
        DVec out(n, 0.0);
        double ph = phi_scalar.evaluate(y);
        if (ph == 0.0) return out;  // vanishes identically on M
        DVec x0 = xi0_at(y), x1 = xi1_at(y);
        DVec e0 = evaluate_covector_d(eta0, y), e1 = evaluate_covector_d(eta1, y);
        double c1 = detail::ddot(e1, x0), c0 = detail::ddot(e0, x1);
        double a = ReebInterpolation::a_value(t, c1);
        double b = ReebInterpolation::b_value(t, c0);
        double denom = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            denom += (e0[i] + t * (e1[i] - e0[i])) * (a * x0[i] + b * x1[i]);
        double scale = -ph / denom;
        for (std::size_t i = 0; i < n; ++i) out[i] = scale * (a * x0[i] + b * x1[i]);
        return out;
    };

    std::vector<DVec> seeds = detail::to_seed_list(grid);
    FlowResult flow = integrate_flow(z_field, seeds, opt.steps, opt.jacobian_h);

    EquivalenceReport rep;
    rep.subject = "eta stage";
    ResidualMax pull_eta, reeb_push;
    for (std::size_t i = 0; i < seeds.size(); ++i) {
        const DVec& p = seeds[i];
        const DVec& q = flow.end(i);
        const DMat& jac = flow.jacobian_estimates[i];
        DVec e1q = evaluate_covector_d(eta1, q);
        DVec e0p = evaluate_covector_d(eta0, p);
        std::size_t n = p.size();
        double worst = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            double pulled = 0.0;
            for (std::size_t r = 0; r < n; ++r) pulled += jac[r][j] * e1q[r];
            worst = std::max(worst, std::fabs(pulled - e0p[j]));
        }
        pull_eta.update(worst, p);

        DVec x0 = xi0_at(p);
        DVec x1q_val = xi1_at(q);
        double worst_reeb = 0.0;
        for (std::size_t r = 0; r < n; ++r) {
            double push = 0.0;
            for (std::size_t j = 0; j < n; ++j) push += jac[r][j] * x0[j];
            worst_reeb = std::max(worst_reeb, std::fabs(push - x1q_val[r]));
        }
        reeb_push.update(worst_reeb, p);
    }
    rep.add(CheckResult::residual_check("pullback_eta", pull_eta.value, opt.tol, pull_eta.at));
    rep.add(CheckResult::residual_check("reeb_pushforward", reeb_push.value, opt.tol, reeb_push.at));

    ResidualMax fix;
    for (const DVec& p : detail::m_seeds(grid, vanish)) {
        DVec q = flow_map(z_field, p, opt.steps);
        double disp = 0.0;
        for (std::size_t j = 0; j < p.size(); ++j) disp = std::max(disp, std::fabs(q[j] - p[j]));
        fix.update(disp, p);
    }
    rep.add(CheckResult::residual_check("fixes_m", fix.value, opt.fixed_point_tol, fix.at));
    rep.add(CheckResult::exact_check("domain_eta_t_xi_t_positive", true, std::nullopt,
                                     "min sampled value " + std::to_string(min_domain)));

    return EtaStageResult{std::move(flow), std::move(rep), path.difference, phi,
                          std::move(interp), std::move(z_field)};
}

struct OmegaStageResult {
    FlowResult flow;
    EquivalenceReport report;
    PolyForm omega_diff;  // omega1 - omega0
    PolyForm phi;         // 1-form primitive with interior(xi, phi) = 0
    TimeField field;      // Y_t
};

// Second stage for structures sharing eta and the Reeb field xi:
// phi = reeb_primitive(omega1 - omega0), Y_t solves
// flat_{(Omega_t, eta)}(Y_t) = -phi pointwise, which forces eta(Y_t) = 0; the
// time-1 flow pulls omega1 back to omega0 and leaves eta untouched.
inline OmegaStageResult omega_stage(const PolyForm& omega0, const PolyForm& omega1,
                                    const PolyForm& eta, const PolyVectorField& xi,
                                    const SubmanifoldSpec& m, const MoserOptions& opt = {}) {
    omega0.require_same_chart(omega1);
    omega0.require_same_chart(eta);
    if (xi.chart() != omega0.chart())
        throw error(errc::chart_mismatch, "xi lives on a different chart");
    const Chart& chart = omega0.chart();
    std::set<std::size_t> vanish = m.indices(chart);

    if (!d(eta).is_zero()) throw error(errc::not_closed, "eta is not closed");
    if (!interior(xi, omega0).is_zero() || !interior(xi, omega1).is_zero())
        throw error(errc::reeb_mismatch, "xi is not in the kernel of both forms");
    PolyScalar eta_xi = interior(xi, eta).scalar_part();
    if (!(eta_xi.is_constant() && eta_xi.constant_value() == 1))
        throw error(errc::reeb_mismatch, "eta(xi) != 1");

    StructurePath path = StructurePath::make_omega(omega0, omega1, eta, m);
    PolyForm phi = reeb_primitive(path.difference, m, xi);

    std::vector<QVec> grid = detail::stage_grid(chart, opt);
    for (const QVec& pt : grid) {
        for (int j = 0; j <= 4; ++j) {
            Rational t(j, 4);
            t.canonicalize();
            CosymplecticLinearData data(SkewForm(evaluate(path.at(t), pt).skew_matrix()),
                                        evaluate(eta, pt).covector());
            if (classify(data).kind != Classification::Kind::cosymplectic)
                throw error(errc::not_cosymplectic_on_path,
                            "(omega_t, eta) degenerates at a sampled (point, t)");
        }
    }

    auto flat_residual = std::make_shared<double>(0.0);
    auto eta_of_y = std::make_shared<double>(0.0);
    PolyForm diff = path.difference;
    TimeField y_field = [omega0, diff, eta, phi, flat_residual, eta_of_y](double t,
                                                                          const DVec& y) {
        std::size_t n = y.size();
        DVec rhs = evaluate_covector_d(phi, y);
        bool all_zero = true;
        for (double v : rhs)
            if (v != 0.0) { all_zero = false; break; }
        DVec out(n, 0.0);
        if (all_zero) return out;  // phi vanishes identically on M
        DMat om0 = evaluate_skew_d(omega0, y);
        DMat dm = evaluate_skew_d(diff, y);
        DVec e = evaluate_covector_d(eta, y);
        DMat mt(n, DVec(n, 0.0));
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                mt[i][j] = (om0[j][i] + t * dm[j][i]) + e[i] * e[j];
        DVec neg_rhs(n);
        for (std::size_t i = 0; i < n; ++i) neg_rhs[i] = -rhs[i];
        auto sol = solve_lu(mt, neg_rhs);
        if (!sol)
            throw error(errc::not_cosymplectic_on_path, "flat solve singular along the path");
        double res = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double row = rhs[i];
            for (std::size_t j = 0; j < n; ++j) row += mt[i][j] * (*sol)[j];
            res = std::max(res, std::fabs(row));
        }
        *flat_residual = std::max(*flat_residual, res);
        *eta_of_y = std::max(*eta_of_y, std::fabs(detail::ddot(e, *sol)));
        return *sol;
    };

    std::vector<DVec> seeds = detail::to_seed_list(grid);
    FlowResult flow = integrate_flow(y_field, seeds, opt.steps, opt.jacobian_h);

    EquivalenceReport rep;
    rep.subject = "omega stage";
    ResidualMax pull_omega, pull_eta;
    for (std::size_t i = 0; i < seeds.size(); ++i) {
        const DVec& p = seeds[i];
        const DVec& q = flow.end(i);
        const DMat& jac = flow.jacobian_estimates[i];
        std::size_t n = p.size();
        DMat om1q = evaluate_skew_d(omega1, q);
        DMat om0p = evaluate_skew_d(omega0, p);
        double worst = 0.0;
        for (std::size_t a = 0; a < n; ++a)
            for (std::size_t b = 0; b < n; ++b) {
                double pulled = 0.0;
                for (std::size_t r = 0; r < n; ++r) {
                    double inner = 0.0;
                    for (std::size_t s = 0; s < n; ++s) inner += om1q[r][s] * jac[s][b];
                    pulled += jac[r][a] * inner;
                }
                worst = std::max(worst, std::fabs(pulled - om0p[a][b]));
            }
        pull_omega.update(worst, p);

        DVec eq = evaluate_covector_d(eta, q);
        DVec ep = evaluate_covector_d(eta, p);
        double worst_eta = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            double pulled = 0.0;
            for (std::size_t r = 0; r < n; ++r) pulled += jac[r][j] * eq[r];
            worst_eta = std::max(worst_eta, std::fabs(pulled - ep[j]));
        }
        pull_eta.update(worst_eta, p);
    }
    rep.add(CheckResult::residual_check("pullback_omega", pull_omega.value, opt.tol, pull_omega.at));
    rep.add(CheckResult::residual_check("pullback_eta_invariant", pull_eta.value,
                                        std::min(opt.tol, 1e-8), pull_eta.at));

    ResidualMax fix;
    for (const DVec& p : detail::m_seeds(grid, vanish)) {
        DVec q = flow_map(y_field, p, opt.steps);
        double disp = 0.0;
        for (std::size_t j = 0; j < p.size(); ++j) disp = std::max(disp, std::fabs(q[j] - p[j]));
        fix.update(disp, p);
    }
    rep.add(CheckResult::residual_check("fixes_m", fix.value, opt.fixed_point_tol, fix.at));
    rep.add(CheckResult::residual_check("flat_solve_residual", *flat_residual, 1e-12));
    rep.add(CheckResult::residual_check("eta_of_y", *eta_of_y, 1e-10));

    return OmegaStageResult{std::move(flow), std::move(rep), path.difference, phi,
                            std::move(y_field)};
}

struct MoserEquivalence {
    EquivalenceReport report;
    FlowResult eta_flow;
    FlowResult omega_flow;
};

// Two-stage neighbourhood equivalence of cosymplectic structures whose
// restrictions to T_M P agree. Stage one transports eta; the transported
// omega is sampled numerically through the inverse flow and must coincide
// with omega0 (within a tight tolerance) for the symbolic second stage to
// apply; the composed map is then certified directly.
inline MoserEquivalence verify_equivalence(const PolyForm& omega0, const PolyForm& eta0,
                                           const PolyForm& omega1, const PolyForm& eta1,
                                           const SubmanifoldSpec& m,
                                           const MoserOptions& opt = {}) {
    omega0.require_same_chart(eta0);
    omega0.require_same_chart(omega1);
    omega0.require_same_chart(eta1);
    const Chart& chart = omega0.chart();
    std::set<std::size_t> vanish = m.indices(chart);

    if (!vanishes_on_locus(eta1 - eta0, vanish) || !vanishes_on_locus(omega1 - omega0, vanish))
        throw error(errc::nonvanishing_on_m, "structures differ on T_M P");

    EtaStageResult st1 = eta_stage(eta0, eta1, omega0, m, opt, omega1);

    // Sample (g^{-1})^* omega0 on the grid through the reverse flow.
    std::vector<QVec> grid = detail::stage_grid(chart, opt);
    TimeField reverse = [field = st1.field](double s, const DVec& y) {
        DVec v = field(1.0 - s, y);
        for (double& x : v) x = -x;
        return v;
    };
    double transport_tol = std::max(1e-9, opt.tol / 100.0);
    ResidualMax transport;
    for (const QVec& ptq : grid) {
        DVec pt = to_doubles(ptq);
        std::size_t n = pt.size();
        DVec base = flow_map(reverse, pt, opt.steps);
        DMat jac(n, DVec(n, 0.0));
        for (std::size_t j = 0; j < n; ++j) {
            DVec plus = pt, minus = pt;
            plus[j] += opt.jacobian_h;
            minus[j] -= opt.jacobian_h;
            DVec fp = flow_map(reverse, plus, opt.steps);
            DVec fm = flow_map(reverse, minus, opt.steps);
            for (std::size_t i = 0; i < n; ++i)
                jac[i][j] = (fp[i] - fm[i]) / (2.0 * opt.jacobian_h);
        }
        DMat om0b = evaluate_skew_d(omega0, base);
        DMat om0p = evaluate_skew_d(omega0, pt);
        double worst = 0.0;
        for (std::size_t a = 0; a < n; ++a)
            for (std::size_t b = 0; b < n; ++b) {
                double pulled = 0.0;
                for (std::size_t r = 0; r < n; ++r) {
                    double inner = 0.0;
                    for (std::size_t s = 0; s < n; ++s) inner += om0b[r][s] * jac[s][b];
                    pulled += jac[r][a] * inner;
                }
                worst = std::max(worst, std::fabs(pulled - om0p[a][b]));
            }
        transport.update(worst, pt);
    }
    if (transport.value > transport_tol) {
        DVec at = transport.at.value_or(DVec{});
        std::string where;
        for (double v : at) where += (where.empty() ? "" : ", ") + std::to_string(v);
        throw error(errc::tolerance_exceeded,
                    "eta-transported omega deviates from omega0 by " +
                        std::to_string(transport.value) + " at (" + where + ")");
    }

    std::optional<PolyVectorField> xi = reeb_field(omega1, eta1);
    if (!xi) xi = reeb_field(omega0, eta1);
    if (!xi)
        throw error(errc::reeb_mismatch, "shared Reeb field is not polynomial on this chart");

    OmegaStageResult st2 = omega_stage(omega0, omega1, eta1, *xi, m, opt);

    EquivalenceReport rep;
    rep.subject = "neighbourhood equivalence";
    rep.add(CheckResult::residual_check("eta_transport_invariance", transport.value,
                                        transport_tol, transport.at));
    rep.absorb(st1.report, "eta_stage.");
    rep.absorb(st2.report, "omega_stage.");

    // Composed map psi = f o g, certified directly at the seeds.
    TimeField zf = st1.field, yf = st2.field;
    int steps = opt.steps;
    auto composed = [zf, yf, steps](const DVec& p) {
        return flow_map(yf, flow_map(zf, p, steps), steps);
    };
    ResidualMax comp_omega, comp_eta;
    for (const QVec& ptq : grid) {
        DVec p = to_doubles(ptq);
        std::size_t n = p.size();
        DVec q = composed(p);
        DMat jac(n, DVec(n, 0.0));
        for (std::size_t j = 0; j < n; ++j) {
            DVec plus = p, minus = p;
            plus[j] += opt.jacobian_h;
            minus[j] -= opt.jacobian_h;
            DVec fp = composed(plus);
            DVec fm = composed(minus);
            for (std::size_t i = 0; i < n; ++i)
                jac[i][j] = (fp[i] - fm[i]) / (2.0 * opt.jacobian_h);
        }
        DMat om1q = evaluate_skew_d(omega1, q);
        DMat om0p = evaluate_skew_d(omega0, p);
        double worst = 0.0;
        for (std::size_t a = 0; a < n; ++a)
            for (std::size_t b = 0; b < n; ++b) {
                double pulled = 0.0;
                for (std::size_t r = 0; r < n; ++r) {
                    double inner = 0.0;
                    for (std::size_t s = 0; s < n; ++s) inner += om1q[r][s] * jac[s][b];
                    pulled += jac[r][a] * inner;
                }
                worst = std::max(worst, std::fabs(pulled - om0p[a][b]));
            }
        comp_omega.update(worst, p);

        DVec e1q = evaluate_covector_d(eta1, q);
        DVec e0p = evaluate_covector_d(eta0, p);
        double worst_eta = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            double pulled = 0.0;
            for (std::size_t r = 0; r < n; ++r) pulled += jac[r][j] * e1q[r];
            worst_eta = std::max(worst_eta, std::fabs(pulled - e0p[j]));
        }
        comp_eta.update(worst_eta, p);
    }
    rep.add(CheckResult::residual_check("composed_pullback_omega", comp_omega.value, opt.tol,
                                        comp_omega.at));
    rep.add(CheckResult::residual_check("composed_pullback_eta", comp_eta.value, opt.tol,
                                        comp_eta.at));

    ResidualMax fix;
    for (const DVec& p : detail::m_seeds(grid, vanish)) {
        DVec q = composed(p);
        double disp = 0.0;
        for (std::size_t j = 0; j < p.size(); ++j) disp = std::max(disp, std::fabs(q[j] - p[j]));
        fix.update(disp, p);
    }
    rep.add(CheckResult::residual_check("composed_fixes_m", fix.value, 1e-8, fix.at));

    return MoserEquivalence{std::move(rep), std::move(st1.flow), std::move(st2.flow)};
}

}  // namespace cosym
