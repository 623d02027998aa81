#pragma once

#include <cstddef>
#include <optional>
#include <utility>
#include <vector>

#include "cosym/errors.hpp"
#include "cosym/linalg.hpp"

namespace cosym {

// Pointwise value of a 2-form: an exactly skew rational matrix.
class SkewForm {
  public:
    explicit SkewForm(QMat mat) : mat_(std::move(mat)) {
        if (mat_.rows() != mat_.cols()) throw error(errc::parse_error, "skew form must be square");
        for (std::size_t i = 0; i < mat_.rows(); ++i)
            for (std::size_t j = 0; j <= i; ++j)
                if (mat_(i, j) != -mat_(j, i))
                    throw error(errc::parse_error, "matrix is not exactly skew-symmetric");
    }

    std::size_t dim() const { return mat_.rows(); }
    const QMat& mat() const { return mat_; }
    Rational pair(const QVec& x, const QVec& y) const { return dot(x, mat_vec(mat_, y)); }

  private:
    QMat mat_;
};

// Pointwise value of a (pre)cosymplectic pair. Degeneracy is allowed; see
// classify().
struct CosymplecticLinearData {
    SkewForm omega;
    QVec eta;

    CosymplecticLinearData(SkewForm o, QVec e) : omega(std::move(o)), eta(std::move(e)) {
        if (eta.size() != omega.dim())
            throw error(errc::parse_error, "eta length != omega dimension");
    }

    std::size_t dim() const { return omega.dim(); }
    Rational eta_of(const QVec& x) const { return dot(eta, x); }
};

// Column span with independent columns.
class Subspace {
  public:
    Subspace(std::size_t ambient_dim, std::vector<QVec> basis_vectors)
        : basis_(basis_vectors.empty() ? QMat(ambient_dim, 0) : QMat::from_columns(basis_vectors)) {
        validate(ambient_dim);
    }

    explicit Subspace(QMat basis) : basis_(std::move(basis)) { validate(basis_.rows()); }

    std::size_t ambient_dim() const { return basis_.rows(); }
    std::size_t dim() const { return basis_.cols(); }
    const QMat& basis() const { return basis_; }

    bool contains(const QVec& v) const { return in_span(basis_, v); }

    bool contains_subspace(const Subspace& other) const {
        for (std::size_t j = 0; j < other.dim(); ++j)
            if (!contains(other.basis().column(j))) return false;
        return true;
    }

  private:
    void validate(std::size_t ambient) const {
        if (basis_.rows() != ambient)
            throw error(errc::parse_error, "subspace basis has wrong ambient dimension");
        if (rank(basis_) != basis_.cols())
            throw error(errc::parse_error, "subspace basis columns are dependent");
    }

    QMat basis_;
};

// Canonical presymplectic matrix: p standard 2x2 blocks [[0,1],[-1,0]] then
// zeros.
inline QMat canonical_presymplectic(std::size_t n, std::size_t p) {
    if (2 * p > n) throw error(errc::parse_error, "rank exceeds dimension");
    QMat m(n, n);
    for (std::size_t a = 0; a < p; ++a) {
        m(2 * a, 2 * a + 1) = 1;
        m(2 * a + 1, 2 * a) = -1;
    }
    return m;
}

// Canonical precosymplectic pair: blocks as above, eta dual to the column
// right after them (the time column), zeros on the remaining k columns.
inline CosymplecticLinearData canonical_precosymplectic(std::size_t p, std::size_t k) {
    std::size_t n = 2 * p + k + 1;
    QVec eta(n, Rational(0));
    eta[2 * p] = 1;
    return CosymplecticLinearData(SkewForm(canonical_presymplectic(n, p)), std::move(eta));
}

struct RankKernel {
    std::size_t rank;
    Subspace kernel;
};

inline RankKernel skew_rank_kernel(const SkewForm& f) {
    auto null_vectors = kernel_basis(f.mat());
    std::size_t r = f.dim() - null_vectors.size();
    return RankKernel{r, Subspace(f.dim(), std::move(null_vectors))};
}

// Darboux basis: columns split as (2p symplectic-pair columns, optional time
// column, k kernel columns). basis^T * omega * basis is canonical exactly.
struct DarbouxBasis {
    QMat basis;
    std::size_t p = 0;
    std::size_t k = 0;
    bool has_time = false;

    std::size_t time_column() const { return 2 * p; }
};

// Exact symplectic Gram-Schmidt. Pivot rule: at every elimination step take
// the lexicographically smallest index pair of the current working list with
// a nonzero pairing.
inline DarbouxBasis darboux_presymplectic(const SkewForm& f) {
    std::size_t n = f.dim();
    std::vector<QVec> remaining;
    remaining.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        QVec e(n, Rational(0));
        e[i] = 1;
        remaining.push_back(std::move(e));
    }

    std::vector<QVec> pair_columns;
    while (true) {
        std::optional<std::pair<std::size_t, std::size_t>> pivot;
        for (std::size_t i = 0; i < remaining.size() && !pivot; ++i)
            for (std::size_t j = i + 1; j < remaining.size() && !pivot; ++j)
                if (f.pair(remaining[i], remaining[j]) != 0) pivot = {i, j};
        if (!pivot) break;

        auto [i, j] = *pivot;
        QVec u = remaining[i];
        Rational val = f.pair(u, remaining[j]);
        QVec w = remaining[j];
        for (auto& x : w) x /= val;

        std::vector<QVec> next;
        next.reserve(remaining.size() - 2);
        for (std::size_t r = 0; r < remaining.size(); ++r) {
            if (r == i || r == j) continue;
            QVec v = remaining[r];
            Rational cu = f.pair(w, v);   // coefficient on u
            Rational cw = f.pair(u, v);   // coefficient on w
            for (std::size_t t = 0; t < n; ++t) v[t] += cu * u[t] - cw * w[t];
            next.push_back(std::move(v));
        }
        remaining = std::move(next);
        pair_columns.push_back(std::move(u));
        pair_columns.push_back(std::move(w));
    }

    DarbouxBasis out;
    out.p = pair_columns.size() / 2;
    out.k = remaining.size();
    out.has_time = false;
    std::vector<QVec> cols = pair_columns;
    for (auto& v : remaining) cols.push_back(std::move(v));
    out.basis = QMat::from_columns(cols);
    return out;
}

struct Classification {
    enum class Kind { cosymplectic, precosymplectic, not_precosymplectic };
    Kind kind;
    std::size_t p = 0;  // rank omega / 2
    std::size_t k = 0;  // corank within ker eta
};

inline Classification classify(const CosymplecticLinearData& data) {
    RankKernel rk = skew_rank_kernel(data.omega);
    Classification c;
    c.p = rk.rank / 2;
    bool eta_hits_kernel = false;
    for (std::size_t j = 0; j < rk.kernel.dim(); ++j)
        if (data.eta_of(rk.kernel.basis().column(j)) != 0) { eta_hits_kernel = true; break; }
    if (!eta_hits_kernel) {
        c.kind = Classification::Kind::not_precosymplectic;
        return c;
    }
    c.k = data.dim() - rk.rank - 1;
    c.kind = (c.k == 0) ? Classification::Kind::cosymplectic
                        : Classification::Kind::precosymplectic;
    return c;
}

// Solution of omega*v = 0, eta(v) = 1, normalised against the deterministic
// kernel basis: the first kernel direction eta sees carries the whole
// solution.
inline QVec reeb_linear(const CosymplecticLinearData& data) {
    RankKernel rk = skew_rank_kernel(data.omega);
    for (std::size_t j = 0; j < rk.kernel.dim(); ++j) {
        QVec v = rk.kernel.basis().column(j);
        Rational e = data.eta_of(v);
        if (e != 0) {
            for (auto& x : v) x /= e;
            return v;
        }
    }
    throw error(errc::no_reeb_vector, "no vector with omega*v = 0 and eta(v) = 1");
}

inline DarbouxBasis darboux_precosymplectic(const CosymplecticLinearData& data) {
    Classification cls = classify(data);
    if (cls.kind == Classification::Kind::not_precosymplectic)
        throw error(errc::not_precosymplectic, "eta vanishes on ker omega");

    std::size_t n = data.dim();
    QVec xi = reeb_linear(data);

    RankKernel rk = skew_rank_kernel(data.omega);
    std::vector<QVec> z_columns;
    bool pivot_used = false;
    for (std::size_t j = 0; j < rk.kernel.dim(); ++j) {
        QVec v = rk.kernel.basis().column(j);
        Rational e = data.eta_of(v);
        if (e != 0 && !pivot_used) {
            pivot_used = true;  // this direction became the time column
            continue;
        }
        for (std::size_t t = 0; t < n; ++t) v[t] -= e * xi[t];
        z_columns.push_back(std::move(v));
    }

    DarbouxBasis sym = darboux_presymplectic(data.omega);
    std::vector<QVec> cols;
    cols.reserve(n);
    for (std::size_t j = 0; j < 2 * sym.p; ++j) {
        QVec u = sym.basis.column(j);
        Rational e = data.eta_of(u);
        for (std::size_t t = 0; t < n; ++t) u[t] -= e * xi[t];
        cols.push_back(std::move(u));
    }
    cols.push_back(xi);
    for (auto& z : z_columns) cols.push_back(std::move(z));

    DarbouxBasis out;
    out.basis = QMat::from_columns(cols);
    out.p = sym.p;
    out.k = cls.k;
    out.has_time = true;
    if (rank(out.basis) != n)
        throw error(errc::not_precosymplectic, "darboux columns failed to span");
    return out;
}

// Flat map of Eq-style pairing: flat(X) = i_X omega + eta(X) eta, as a
// covector.
inline QVec flat(const CosymplecticLinearData& data, const QVec& x) {
    if (x.size() != data.dim()) throw error(errc::parse_error, "flat: vector dim mismatch");
    QVec cov = mat_vec(data.omega.mat().transpose(), x);
    Rational ex = data.eta_of(x);
    for (std::size_t i = 0; i < cov.size(); ++i) cov[i] += ex * data.eta[i];
    return cov;
}

inline QVec flat_inverse(const CosymplecticLinearData& data, const QVec& covector) {
    if (covector.size() != data.dim())
        throw error(errc::parse_error, "flat_inverse: covector dim mismatch");
    if (classify(data).kind != Classification::Kind::cosymplectic)
        throw error(errc::not_cosymplectic, "flat is not invertible on degenerate data");
    QMat m = data.omega.mat().transpose();
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) m(i, j) += data.eta[i] * data.eta[j];
    auto sol = solve(m, covector);
    if (!sol) throw error(errc::not_cosymplectic, "flat system inconsistent");
    return *sol;
}

// {X : f(X, w) = 0 for all w in W}
inline Subspace symplectic_complement(const SkewForm& f, const Subspace& w) {
    QMat constraints = (f.mat() * w.basis()).transpose();
    return Subspace(f.dim(), kernel_basis(constraints));
}

// {X : eta(X) = 0 and omega(X, w) = 0 for all w in W}; always inside ker eta.
inline Subspace cosymplectic_complement(const CosymplecticLinearData& data, const Subspace& w) {
    std::size_t n = data.dim();
    QMat ow = data.omega.mat() * w.basis();
    QMat constraints(w.dim() + 1, n);
    for (std::size_t j = 0; j < w.dim(); ++j)
        for (std::size_t i = 0; i < n; ++i) constraints(j, i) = ow(i, j);
    for (std::size_t i = 0; i < n; ++i) constraints(w.dim(), i) = data.eta[i];
    return Subspace(n, kernel_basis(constraints));
}

struct CoisotropyResult {
    bool coisotropic;
    std::optional<QVec> witness;  // a violating vector when not coisotropic
};

inline CoisotropyResult is_coisotropic(const CosymplecticLinearData& data, const Subspace& w) {
    if (classify(data).kind != Classification::Kind::cosymplectic)
        throw error(errc::not_cosymplectic, "coisotropy test needs cosymplectic data");
    QVec xi = reeb_linear(data);
    if (!w.contains(xi)) return {false, xi};
    Subspace comp = cosymplectic_complement(data, w);
    for (std::size_t j = 0; j < comp.dim(); ++j) {
        QVec v = comp.basis().column(j);
        if (!w.contains(v)) return {false, std::move(v)};
    }
    return {true, std::nullopt};
}

struct RankCheck {
    std::size_t restricted_rank;
    long predicted;
    bool match;
};

// Rank of omega pulled back to a coisotropic W against the dimension-count
// prediction 2 dim W - dim P - 1.
inline RankCheck direct_rank_check(const CosymplecticLinearData& data, const Subspace& w) {
    CoisotropyResult co = is_coisotropic(data, w);
    if (!co.coisotropic) throw error(errc::not_coisotropic, "W is not coisotropic");
    QMat restricted = w.basis().transpose() * data.omega.mat() * w.basis();
    std::size_t r = rank(restricted);
    long predicted = 2 * static_cast<long>(w.dim()) - static_cast<long>(data.dim()) - 1;
    return RankCheck{r, predicted, static_cast<long>(r) == predicted};
}

// Symplectic variant: omits eta and predicts 2 dim W - dim P.
inline RankCheck direct_rank_check_symplectic(const SkewForm& f, const Subspace& w) {
    if (skew_rank_kernel(f).rank != f.dim())
        throw error(errc::not_symplectic, "form is degenerate");
    Subspace comp = symplectic_complement(f, w);
    if (!w.contains_subspace(comp)) throw error(errc::not_coisotropic, "W is not coisotropic");
    QMat restricted = w.basis().transpose() * f.mat() * w.basis();
    std::size_t r = rank(restricted);
    long predicted = 2 * static_cast<long>(w.dim()) - static_cast<long>(f.dim());
    return RankCheck{r, predicted, static_cast<long>(r) == predicted};
}

struct LagrangianNormalForm {
    QMat phi;         // isomorphism onto L + L* coordinates; phi restricted to L is the identity
    QMat complement;  // the dual Lagrangian complement columns paired with L
};

// Normal form against the canonical pairing omega_L((l,l*),(m,m*)) =
// m*(l) - l*(m), whose matrix in (L, L*) coordinates is [[0, I], [-I, 0]].
inline LagrangianNormalForm lagrangian_normal_form(const SkewForm& f, const Subspace& l) {
    std::size_t n = f.dim();
    if (n % 2 != 0 || skew_rank_kernel(f).rank != n)
        throw error(errc::not_symplectic, "form must be nondegenerate on even dimension");
    std::size_t h = n / 2;
    if (l.dim() != h) throw error(errc::not_lagrangian, "subspace dimension is not n/2");
    QMat lfl = l.basis().transpose() * f.mat() * l.basis();
    if (!lfl.is_zero()) throw error(errc::not_lagrangian, "form does not vanish on L x L");

    // Particular M0 with L^T F M0 = I, then the symmetric correction
    // M = M0 + L (A/2), A = M0^T F M0, which kills the pairing on M x M.
    QMat lf = l.basis().transpose() * f.mat();
    std::vector<QVec> m0_cols;
    for (std::size_t j = 0; j < h; ++j) {
        QVec e(h, Rational(0));
        e[j] = 1;
        auto col = solve(lf, e);
        if (!col) throw error(errc::not_lagrangian, "dual pairing system inconsistent");
        m0_cols.push_back(std::move(*col));
    }
    QMat m0 = QMat::from_columns(m0_cols);
    QMat a = m0.transpose() * f.mat() * m0;
    QMat half_a(h, h);
    for (std::size_t i = 0; i < h; ++i)
        for (std::size_t j = 0; j < h; ++j) half_a(i, j) = a(i, j) / 2;
    QMat m = m0 + l.basis() * half_a;

    QMat c(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < h; ++j) {
            c(i, j) = l.basis()(i, j);
            c(i, h + j) = m(i, j);
        }
    auto phi = inverse(c);
    if (!phi) throw error(errc::not_lagrangian, "normal form columns are dependent");
    return LagrangianNormalForm{*phi, m};
}

inline QMat canonical_lagrangian_pairing(std::size_t h) {
    QMat w(2 * h, 2 * h);
    for (std::size_t i = 0; i < h; ++i) {
        w(i, h + i) = 1;
        w(h + i, i) = -1;
    }
    return w;
}

}  // namespace cosym
