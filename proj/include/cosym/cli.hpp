#pragma once

#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cosym/coslinalg.hpp"
#include "cosym/manifest.hpp"
#include "cosym/moser.hpp"
#include "cosym/thicken.hpp"

namespace cosym::cli {

// Machine-readable outcome of one command invocation.
struct Report {
    std::string command;
    std::string status;  // pass | fail | error
    json values = json::object();
    std::vector<CheckResult> checks;
    std::vector<std::string> artifacts;
    std::optional<std::pair<std::string, std::string>> error_info;  // code, message

    bool passed() const { return status == "pass"; }
    int exit_code() const { return passed() ? 0 : 1; }

    void finalize() {
        if (error_info) {
            status = "error";
            return;
        }
        status = "pass";
        for (const auto& c : checks)
            if (!c.passed) { status = "fail"; break; }
    }
};

inline json check_to_json(const CheckResult& c) {
    json j;
    j["name"] = c.name;
    j["kind"] = c.exact ? "exact" : "residual";
    j["passed"] = c.passed;
    if (!c.exact) {
        j["residual"] = c.residual;
        j["tolerance"] = c.tolerance;
    }
    if (c.worst_point) j["worst_point"] = *c.worst_point;
    if (!c.detail.empty()) j["detail"] = c.detail;
    return j;
}

// Stable structured emission: byte-identical for identical inputs.
inline std::string emit_structured(const Report& r) {
    json j;
    j["command"] = r.command;
    j["status"] = r.status;
    if (!r.values.empty()) j["values"] = r.values;
    json checks = json::array();
    for (const auto& c : r.checks) checks.push_back(check_to_json(c));
    j["checks"] = checks;
    if (!r.artifacts.empty()) j["artifacts"] = r.artifacts;
    if (r.error_info) {
        json e;
        e["code"] = r.error_info->first;
        e["message"] = r.error_info->second;
        j["error"] = e;
    }
    return j.dump(2) + "\n";
}

inline std::string emit_human(const Report& r) {
    std::ostringstream os;
    os << r.command << ": " << r.status << "\n";
    if (r.error_info)
        os << "  error " << r.error_info->first << ": " << r.error_info->second << "\n";
    for (const auto& c : r.checks) {
        os << "  [" << (c.passed ? "pass" : "FAIL") << "] " << c.name;
        if (!c.exact) {
            os << "  residual " << c.residual << " (tol " << c.tolerance << ")";
        } else {
            os << "  (exact)";
        }
        if (!c.detail.empty()) os << "  " << c.detail;
        os << "\n";
        if (!c.passed && c.worst_point) {
            os << "         at (";
            for (std::size_t i = 0; i < c.worst_point->size(); ++i)
                os << (i ? ", " : "") << (*c.worst_point)[i];
            os << ")\n";
        }
    }
    for (const auto& a : r.artifacts) os << "  wrote " << a << "\n";
    return os.str();
}

// Flag overrides for the manifest verification block.
struct Overrides {
    std::optional<Rational> radius;
    std::optional<int> grid;
    std::optional<int> steps;
    std::optional<double> tol;
    std::optional<long> max_points;

    VerificationParams apply(VerificationParams v) const {
        if (radius) v.radius = *radius;
        if (grid) v.grid = *grid;
        if (steps) v.steps = *steps;
        if (tol) v.tol = *tol;
        if (max_points) v.max_points = static_cast<std::size_t>(*max_points);
        return v;
    }
};

// ---------------------------------------------------------------------------
// check: closedness + pointwise classification of a structure manifest
// ---------------------------------------------------------------------------

inline Report execute_check(const Manifest& m, const Overrides& ov = {}) {
    Report r;
    r.command = "check";
    VerificationParams v = ov.apply(m.verification);

    bool closed_omega = d(m.omega).is_zero();
    bool closed_eta = d(m.eta).is_zero();
    r.checks.push_back(CheckResult::exact_check("closed_omega", closed_omega));
    r.checks.push_back(CheckResult::exact_check("closed_eta", closed_eta));

    std::vector<Rational> widths(m.chart.dim(), v.radius);
    std::vector<QVec> pts = sample_box(widths, v.grid, v.max_points);

    std::optional<std::size_t> common_rank;
    bool constant_rank = true, precosymplectic = true;
    std::optional<DVec> rank_bad, pre_bad;
    std::optional<QVec> common_reeb;
    bool reeb_constant = true;
    for (const QVec& pt : pts) {
        CosymplecticLinearData data = evaluate_pair(m.omega, m.eta, pt);
        Classification cls = classify(data);
        std::size_t rk = 2 * cls.p;
        if (!common_rank) common_rank = rk;
        if (*common_rank != rk && constant_rank) {
            constant_rank = false;
            rank_bad = to_doubles(pt);
        }
        if (cls.kind == Classification::Kind::not_precosymplectic) {
            if (precosymplectic) {
                precosymplectic = false;
                pre_bad = to_doubles(pt);
            }
            continue;
        }
        QVec xi = reeb_linear(data);
        if (!common_reeb) {
            common_reeb = xi;
        } else if (*common_reeb != xi) {
            reeb_constant = false;
        }
    }
    r.checks.push_back(CheckResult::exact_check("constant_rank", constant_rank, rank_bad));
    r.checks.push_back(
        CheckResult::exact_check("precosymplectic_at_samples", precosymplectic, pre_bad));

    r.values["dim"] = m.chart.dim();
    if (common_rank && constant_rank && precosymplectic) {
        std::size_t p = *common_rank / 2;
        r.values["p"] = p;
        r.values["k"] = m.chart.dim() - *common_rank - 1;
    }
    if (common_reeb && reeb_constant && precosymplectic) {
        json reeb = json::array();
        for (const auto& c : *common_reeb) reeb.push_back(format_rational(c));
        r.values["reeb"] = reeb;
        // name the coordinate direction when it is one
        for (std::size_t i = 0; i < m.chart.dim(); ++i) {
            QVec e(m.chart.dim(), Rational(0));
            e[i] = 1;
            if (*common_reeb == e) r.values["reeb_direction"] = "d/d" + m.chart.name(i);
        }
    }
    r.finalize();
    return r;
}

// ---------------------------------------------------------------------------
// darboux: canonical congruence of a matrix (+ optional covector) file
// ---------------------------------------------------------------------------

inline std::vector<Rational> parse_rational_list(const std::string& text, const std::string& where) {
    std::istringstream is(text);
    std::vector<Rational> out;
    std::string tok;
    while (is >> tok) {
        auto r = parse_rational(tok);
        if (!r) throw error(errc::parse_error, where + ": bad rational '" + tok + "'");
        out.push_back(*r);
    }
    return out;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw error(errc::parse_error, "cannot open '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline QMat parse_square_matrix(const std::string& text, const std::string& where) {
    std::vector<Rational> entries = parse_rational_list(text, where);
    std::size_t n = 0;
    while (n * n < entries.size()) ++n;
    if (n * n != entries.size())
        throw error(errc::parse_error, where + ": entry count is not a perfect square");
    QMat m(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) m(i, j) = entries[i * n + j];
    return m;
}

inline Report execute_darboux(const QMat& mat, const std::optional<QVec>& eta) {
    Report r;
    r.command = "darboux";
    SkewForm f(mat);
    std::size_t n = f.dim();
    DarbouxBasis basis;
    if (eta) {
        if (eta->size() != n) throw error(errc::parse_error, "eta length != matrix dimension");
        CosymplecticLinearData data(f, *eta);
        basis = darboux_precosymplectic(data);
        QMat cong = basis.basis.transpose() * f.mat() * basis.basis;
        bool omega_ok = cong == canonical_presymplectic(n, basis.p);
        QVec eta_b = mat_vec(basis.basis.transpose(), *eta);
        QVec e_t(n, Rational(0));
        e_t[basis.time_column()] = 1;
        bool eta_ok = eta_b == e_t;
        r.checks.push_back(CheckResult::exact_check("canonical_congruence", omega_ok && eta_ok));
        r.values["p"] = basis.p;
        r.values["k"] = basis.k;
    } else {
        basis = darboux_presymplectic(f);
        QMat cong = basis.basis.transpose() * f.mat() * basis.basis;
        bool ok = cong == canonical_presymplectic(n, basis.p);
        r.checks.push_back(CheckResult::exact_check("canonical_congruence", ok));
        r.values["p"] = basis.p;
        r.values["kernel_dim"] = basis.k;
    }
    json rows = json::array();
    for (std::size_t i = 0; i < n; ++i) {
        json row = json::array();
        for (std::size_t j = 0; j < n; ++j) row.push_back(format_rational(basis.basis(i, j)));
        rows.push_back(row);
    }
    r.values["basis"] = rows;
    r.finalize();
    return r;
}

// ---------------------------------------------------------------------------
// embed / verify-embed: the thickening construction and its verification
// ---------------------------------------------------------------------------

inline ComplementChoice complement_from_spec(const PrecosymplecticChartStructure& s,
                                             const std::optional<ComplementSpec>& spec) {
    if (!spec || spec->coordinate) return choose_complement(s);
    return choose_complement(s, spec->A, spec->C);
}

inline Report execute_embed(const Manifest& m, const std::optional<ComplementSpec>& complement,
                            const std::string& out_path, const Overrides& ov = {}) {
    Report r;
    r.command = "embed";
    VerificationParams v = ov.apply(m.verification);
    PrecosymplecticChartStructure s =
        PrecosymplecticChartStructure::from_forms(m.chart, m.omega, m.eta);
    std::optional<ComplementSpec> spec = complement ? complement : m.complement;
    ComplementChoice choice = complement_from_spec(s, spec);
    ThickenedStructure t = thickened_structure(s, choice);

    r.checks.push_back(CheckResult::exact_check("omega_g_closed", d(t.omega_g).is_zero()));
    PolyMap pi = t.projection(s.chart);
    r.checks.push_back(CheckResult::exact_check(
        "omega_g_decomposition", t.omega_g == pullback(pi, s.omega) + d(t.liouville)));
    r.checks.push_back(
        CheckResult::exact_check("eta_g_is_base_pullback", t.eta_g == pullback(pi, s.eta)));

    Manifest out = thickened_manifest(t, v);
    std::ofstream os(out_path);
    if (!os) throw error(errc::parse_error, "cannot write '" + out_path + "'");
    os << manifest_to_json(out).dump(2) << "\n";
    r.artifacts.push_back(out_path);
    r.values["thickened_dim"] = t.chart.dim();
    r.values["fiber_dim"] = t.fiber_dim;
    r.finalize();
    return r;
}

inline Report execute_verify_embed(const Manifest& base, const Manifest& thick,
                                   const Overrides& ov = {}) {
    Report r;
    r.command = "verify-embed";
    VerificationParams v = ov.apply(base.verification);
    PrecosymplecticChartStructure s =
        PrecosymplecticChartStructure::from_forms(base.chart, base.omega, base.eta);
    if (!thick.thickening)
        throw error(errc::parse_error, "second manifest lacks a 'thickening' block");

    ThickenedStructure t;
    t.chart = thick.chart;
    t.omega_g = thick.omega;
    t.eta_g = thick.eta;
    t.liouville = thick.thickening->liouville;
    t.base_dim = thick.thickening->base_dim;
    t.fiber_dim = thick.thickening->fiber_dim;
    t.p = s.p;
    t.k = s.k;
    if (t.base_dim != s.dim() || t.fiber_dim != s.k)
        throw error(errc::chart_mismatch, "thickened manifest does not extend the base manifest");
    for (std::size_t j = 0; j < t.base_dim; ++j)
        if (t.chart.name(j) != s.chart.name(j))
            throw error(errc::chart_mismatch, "thickened chart does not start with the base chart");

    r.checks.push_back(CheckResult::exact_check("omega_g_closed", d(t.omega_g).is_zero()));
    PolyMap pi = t.projection(s.chart);
    r.checks.push_back(CheckResult::exact_check(
        "omega_g_decomposition", t.omega_g == pullback(pi, s.omega) + d(t.liouville)));

    EmbeddingVerifyOptions opt;
    opt.radius = v.radius;
    opt.grid = v.grid;
    opt.max_points = v.max_points;
    EquivalenceReport rep = verify_embedding(t, s, opt);
    for (auto& c : rep.checks) r.checks.push_back(std::move(c));
    r.values["certified_box"] = "|b| <= " + format_rational(v.radius);
    r.values["grid"] = v.grid;
    r.finalize();
    return r;
}

// ---------------------------------------------------------------------------
// moser: two-structure neighbourhood equivalence
// ---------------------------------------------------------------------------

inline Report execute_moser(const Manifest& m0, const Manifest& m1, const Overrides& ov = {}) {
    Report r;
    r.command = "moser";
    if (m0.chart != m1.chart)
        throw error(errc::chart_mismatch, "moser requires both manifests on one chart");
    if (m0.submanifold.empty())
        throw error(errc::parse_error, "moser requires a submanifold block in the first manifest");
    VerificationParams v = ov.apply(m0.verification);
    MoserOptions opt;
    opt.radius = v.radius;
    opt.grid = v.grid;
    opt.steps = v.steps;
    opt.tol = v.tol;
    opt.max_points = v.max_points;
    SubmanifoldSpec m{m0.submanifold};
    MoserEquivalence eq = verify_equivalence(m0.omega, m0.eta, m1.omega, m1.eta, m, opt);
    r.checks = eq.report.checks;
    r.values["certified_box"] = "|coord| <= " + format_rational(v.radius);
    r.values["grid"] = v.grid;
    r.values["grid_points"] = eq.eta_flow.seeds.size();
    r.values["steps"] = v.steps;
    r.values["tol"] = v.tol;
    r.finalize();
    return r;
}

// ---------------------------------------------------------------------------
// entry point
// ---------------------------------------------------------------------------

inline int finish(const Report& r, bool human) {
    std::cout << emit_structured(r);
    if (human) std::cerr << emit_human(r);
    return r.exit_code();
}

inline Report error_report(const std::string& command, const error& e) {
    Report r;
    r.command = command;
    r.error_info = {errc_name(e.code()), e.what()};
    r.finalize();
    return r;
}

inline int run_cli(int argc, const char* const* argv) {
    CLI::App app{"exact cosymplectic geometry toolkit"};
    app.require_subcommand(1);

    std::string manifest_path, manifest2_path, matrix_path, eta_path, out_path, complement_arg;
    std::string radius_str;
    Overrides ov;
    bool human = false;
    int grid = 0, steps = 0;
    long max_points = 0;
    double tol = 0.0;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_flag("--human", human, "also print a human-readable report to stderr");
        cmd->add_option("--radius", radius_str, "box half-width, exact rational like 1/2");
        cmd->add_option("--grid", grid, "grid points per axis");
        cmd->add_option("--steps", steps, "RK4 steps");
        cmd->add_option("--tol", tol, "residual tolerance");
        cmd->add_option("--max-points", max_points, "cap on sampled grid points");
    };
    auto collect_overrides = [&]() {
        if (!radius_str.empty()) {
            auto r = parse_rational(radius_str);
            if (!r || *r <= 0) throw error(errc::parse_error, "--radius must be a positive rational");
            ov.radius = *r;
        }
        if (grid > 0) ov.grid = grid;
        if (steps > 0) ov.steps = steps;
        if (tol > 0) ov.tol = tol;
        if (max_points > 0) ov.max_points = max_points;
    };

    CLI::App* c_check = app.add_subcommand("check", "validate and classify a structure manifest");
    c_check->add_option("manifest", manifest_path)->required();
    add_common(c_check);

    CLI::App* c_darboux = app.add_subcommand("darboux", "canonical congruence of a skew matrix");
    c_darboux->add_option("matrix", matrix_path)->required();
    c_darboux->add_option("--eta", eta_path, "covector file for the precosymplectic variant");
    c_darboux->add_flag("--human", human);

    CLI::App* c_embed = app.add_subcommand("embed", "construct the coisotropic thickening");
    c_embed->add_option("manifest", manifest_path)->required();
    c_embed->add_option("--complement", complement_arg,
                        "'coordinate' or a JSON file with an A table");
    c_embed->add_option("-o,--output", out_path)->required();
    add_common(c_embed);

    CLI::App* c_verify = app.add_subcommand("verify-embed", "verify a thickening against its base");
    c_verify->add_option("manifest", manifest_path)->required();
    c_verify->add_option("thickened", manifest2_path)->required();
    add_common(c_verify);

    CLI::App* c_moser = app.add_subcommand("moser", "two-stage neighbourhood equivalence");
    c_moser->add_option("manifest0", manifest_path)->required();
    c_moser->add_option("manifest1", manifest2_path)->required();
    add_common(c_moser);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    std::string command = app.get_subcommands().front()->get_name();
    try {
        collect_overrides();
        if (c_check->parsed()) {
            Manifest m = load_manifest(manifest_path);
            return finish(execute_check(m, ov), human);
        }
        if (c_darboux->parsed()) {
            QMat mat = parse_square_matrix(read_file(matrix_path), "matrix");
            std::optional<QVec> eta;
            if (!eta_path.empty()) eta = parse_rational_list(read_file(eta_path), "eta");
            return finish(execute_darboux(mat, eta), human);
        }
        if (c_embed->parsed()) {
            Manifest m = load_manifest(manifest_path);
            std::optional<ComplementSpec> spec;
            if (!complement_arg.empty() && complement_arg != "coordinate") {
                json j;
                try {
                    j = json::parse(read_file(complement_arg));
                } catch (const std::exception& e) {
                    throw error(errc::parse_error, std::string("complement file: ") + e.what());
                }
                manifest_detail::reject_unknown(j, {"policy", "A", "C"}, "complement file");
                if (!j.contains("policy")) j["policy"] = "custom";
                spec = parse_complement(j, m.chart);
            } else if (complement_arg == "coordinate") {
                spec = ComplementSpec{};
            }
            return finish(execute_embed(m, spec, out_path, ov), human);
        }
        if (c_verify->parsed()) {
            Manifest base = load_manifest(manifest_path);
            Manifest thick = load_manifest(manifest2_path);
            return finish(execute_verify_embed(base, thick, ov), human);
        }
        if (c_moser->parsed()) {
            Manifest m0 = load_manifest(manifest_path);
            Manifest m1 = load_manifest(manifest2_path);
            return finish(execute_moser(m0, m1, ov), human);
        }
    } catch (const error& e) {
        if (e.code() == errc::parse_error) {
            std::cerr << e.what() << "\n";
            return 2;
        }
        return finish(error_report(command, e), human);
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}

}  // namespace cosym::cli
