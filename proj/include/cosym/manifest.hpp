#pragma once

#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cosym/errors.hpp"
#include "cosym/forms.hpp"
#include "cosym/moser.hpp"
#include "cosym/thicken.hpp"

namespace cosym {

using json = nlohmann::ordered_json;

// Verification knobs shared by all commands; defaults are part of the file
// format contract.
struct VerificationParams {
    Rational radius = Rational(1, 2);
    int grid = 5;
    int steps = 64;
    double tol = 1e-5;
    std::size_t max_points = 512;
};

struct ComplementSpec {
    bool coordinate = true;
    std::vector<std::vector<PolyScalar>> A;  // k rows of 2p entries
    std::optional<std::vector<PolyScalar>> C;
};

struct ThickeningInfo {
    std::size_t base_dim = 0;
    std::size_t fiber_dim = 0;
    PolyForm liouville;
};

// One structure per file: a chart, the pair (omega, eta), and optional
// submanifold / complement / verification blocks.
struct Manifest {
    Chart chart;
    PolyForm omega;
    PolyForm eta;
    std::vector<std::string> submanifold;
    std::optional<ComplementSpec> complement;
    VerificationParams verification;
    std::optional<ThickeningInfo> thickening;
};

namespace manifest_detail {

inline void reject_unknown(const json& j, std::initializer_list<const char*> allowed,
                           const std::string& where) {
    if (!j.is_object()) throw error(errc::parse_error, where + " must be an object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const char* a : allowed)
            if (it.key() == a) { ok = true; break; }
        if (!ok) throw error(errc::parse_error, "unknown field '" + it.key() + "' in " + where);
    }
}

inline Rational parse_coeff(const json& j, const std::string& where) {
    if (j.is_number_integer()) return Rational(j.get<long>());
    if (j.is_string()) {
        auto r = parse_rational(j.get<std::string>());
        if (r) return *r;
    }
    throw error(errc::parse_error, where + ": coefficients must be integers or \"p/q\" strings");
}

}  // namespace manifest_detail

inline Chart parse_chart(const json& j) {
    manifest_detail::reject_unknown(j, {"coordinates", "time"}, "chart");
    if (!j.contains("coordinates") || !j["coordinates"].is_array())
        throw error(errc::parse_error, "chart.coordinates must be an array of labels");
    std::vector<std::string> names;
    for (const auto& n : j["coordinates"]) {
        if (!n.is_string()) throw error(errc::parse_error, "coordinate labels must be strings");
        names.push_back(n.get<std::string>());
    }
    std::optional<std::size_t> time;
    if (j.contains("time")) {
        if (!j["time"].is_string()) throw error(errc::parse_error, "chart.time must be a label");
        std::string t = j["time"].get<std::string>();
        for (std::size_t i = 0; i < names.size(); ++i)
            if (names[i] == t) time = i;
        if (!time) throw error(errc::parse_error, "chart.time label '" + t + "' not in coordinates");
    }
    return Chart(std::move(names), time);
}

inline json chart_to_json(const Chart& chart) {
    json j;
    j["coordinates"] = chart.names();
    if (chart.time_index()) j["time"] = chart.name(*chart.time_index());
    return j;
}

// coeff_terms: [{"monomial": {label: exponent}, "coeff": "p/q"}]
inline PolyScalar parse_polyscalar(const json& j, const Chart& chart) {
    if (!j.is_array()) throw error(errc::parse_error, "coeff_terms must be an array");
    PolyScalar p(chart.dim());
    for (const auto& rec : j) {
        manifest_detail::reject_unknown(rec, {"monomial", "coeff"}, "coeff_terms record");
        if (!rec.contains("coeff"))
            throw error(errc::parse_error, "coeff_terms record missing 'coeff'");
        Rational c = manifest_detail::parse_coeff(rec["coeff"], "coeff_terms");
        PolyScalar::Exponents e(chart.dim(), 0);
        if (rec.contains("monomial")) {
            if (!rec["monomial"].is_object())
                throw error(errc::parse_error, "monomial must be an object {label: exponent}");
            for (auto it = rec["monomial"].begin(); it != rec["monomial"].end(); ++it) {
                std::size_t idx = chart.require_index(it.key());
                if (!it.value().is_number_integer() || it.value().get<long>() < 0)
                    throw error(errc::parse_error, "monomial exponents must be nonnegative integers");
                e[idx] = static_cast<std::uint32_t>(it.value().get<long>());
            }
        }
        p.add_term(e, c);
    }
    return p;
}

inline json polyscalar_to_json(const PolyScalar& p, const Chart& chart) {
    json arr = json::array();
    for (const auto& [e, c] : p.terms()) {
        json rec;
        json mono = json::object();
        for (std::size_t i = 0; i < chart.dim(); ++i)
            if (e[i] != 0) mono[chart.name(i)] = e[i];
        rec["monomial"] = mono;
        rec["coeff"] = format_rational(c);
        arr.push_back(rec);
    }
    return arr;
}

// [{"indices": [labels], "coeff_terms": [...]}]
inline PolyForm parse_form(const json& j, const Chart& chart, unsigned degree,
                           const std::string& where) {
    if (!j.is_array()) throw error(errc::parse_error, where + " must be an array of records");
    PolyForm f(chart, degree);
    for (const auto& rec : j) {
        manifest_detail::reject_unknown(rec, {"indices", "coeff_terms"}, where + " record");
        if (!rec.contains("indices") || !rec["indices"].is_array())
            throw error(errc::parse_error, where + " record missing 'indices'");
        IndexTuple idx;
        for (const auto& lbl : rec["indices"]) {
            if (!lbl.is_string()) throw error(errc::parse_error, where + " indices must be labels");
            idx.push_back(static_cast<std::uint32_t>(chart.require_index(lbl.get<std::string>())));
        }
        if (idx.size() != degree)
            throw error(errc::parse_error,
                        where + " record has " + std::to_string(idx.size()) +
                            " indices, expected " + std::to_string(degree));
        if (!rec.contains("coeff_terms"))
            throw error(errc::parse_error, where + " record missing 'coeff_terms'");
        PolyScalar c = parse_polyscalar(rec["coeff_terms"], chart);
        f.add_term(std::move(idx), std::move(c));
    }
    return f;
}

inline json form_to_json(const PolyForm& f) {
    json arr = json::array();
    for (const auto& [idx, c] : f.terms()) {
        json rec;
        json indices = json::array();
        for (auto i : idx) indices.push_back(f.chart().name(i));
        rec["indices"] = indices;
        rec["coeff_terms"] = polyscalar_to_json(c, f.chart());
        arr.push_back(rec);
    }
    return arr;
}

inline VerificationParams parse_verification(const json& j) {
    manifest_detail::reject_unknown(j, {"radius", "grid", "steps", "tol", "max_points"},
                                    "verification");
    VerificationParams v;
    if (j.contains("radius")) v.radius = manifest_detail::parse_coeff(j["radius"], "radius");
    if (v.radius <= 0) throw error(errc::parse_error, "radius must be positive");
    if (j.contains("grid")) {
        if (!j["grid"].is_number_integer() || j["grid"].get<int>() < 1)
            throw error(errc::parse_error, "grid must be a positive integer");
        v.grid = j["grid"].get<int>();
    }
    if (j.contains("steps")) {
        if (!j["steps"].is_number_integer() || j["steps"].get<int>() < 1)
            throw error(errc::parse_error, "steps must be a positive integer");
        v.steps = j["steps"].get<int>();
    }
    if (j.contains("tol")) {
        if (!j["tol"].is_number()) throw error(errc::parse_error, "tol must be a number");
        v.tol = j["tol"].get<double>();
        if (v.tol <= 0) throw error(errc::parse_error, "tol must be positive");
    }
    if (j.contains("max_points")) {
        if (!j["max_points"].is_number_integer() || j["max_points"].get<long>() < 1)
            throw error(errc::parse_error, "max_points must be a positive integer");
        v.max_points = static_cast<std::size_t>(j["max_points"].get<long>());
    }
    return v;
}

inline json verification_to_json(const VerificationParams& v) {
    json j;
    j["radius"] = format_rational(v.radius);
    j["grid"] = v.grid;
    j["steps"] = v.steps;
    j["tol"] = v.tol;
    j["max_points"] = v.max_points;
    return j;
}

inline ComplementSpec parse_complement(const json& j, const Chart& chart) {
    manifest_detail::reject_unknown(j, {"policy", "A", "C"}, "complement");
    ComplementSpec c;
    std::string policy = "coordinate";
    if (j.contains("policy")) {
        if (!j["policy"].is_string()) throw error(errc::parse_error, "complement.policy");
        policy = j["policy"].get<std::string>();
    }
    if (policy == "coordinate") {
        if (j.contains("A") || j.contains("C"))
            throw error(errc::parse_error, "coordinate policy takes no A or C tables");
        c.coordinate = true;
        return c;
    }
    if (policy != "custom")
        throw error(errc::parse_error, "complement.policy must be 'coordinate' or 'custom'");
    c.coordinate = false;
    if (!j.contains("A") || !j["A"].is_array())
        throw error(errc::parse_error, "custom complement requires an A table");
    for (const auto& row : j["A"]) {
        if (!row.is_array()) throw error(errc::parse_error, "A table rows must be arrays");
        std::vector<PolyScalar> r;
        for (const auto& entry : row) r.push_back(parse_polyscalar(entry, chart));
        c.A.push_back(std::move(r));
    }
    if (j.contains("C")) {
        std::vector<PolyScalar> rows;
        for (const auto& entry : j["C"]) rows.push_back(parse_polyscalar(entry, chart));
        c.C = std::move(rows);
    }
    return c;
}

inline Manifest parse_manifest(const json& j) {
    manifest_detail::reject_unknown(
        j, {"chart", "omega", "eta", "submanifold", "complement", "verification", "thickening"},
        "manifest");
    if (!j.contains("chart")) throw error(errc::parse_error, "manifest missing 'chart'");
    Manifest m{parse_chart(j["chart"]), PolyForm(), PolyForm(), {}, std::nullopt, {}, std::nullopt};
    if (!j.contains("omega") || !j.contains("eta"))
        throw error(errc::parse_error, "manifest must provide 'omega' and 'eta'");
    m.omega = parse_form(j["omega"], m.chart, 2, "omega");
    m.eta = parse_form(j["eta"], m.chart, 1, "eta");
    if (j.contains("submanifold")) {
        if (!j["submanifold"].is_array())
            throw error(errc::parse_error, "submanifold must be an array of labels");
        for (const auto& lbl : j["submanifold"]) {
            if (!lbl.is_string()) throw error(errc::parse_error, "submanifold labels");
            m.submanifold.push_back(lbl.get<std::string>());
        }
        SubmanifoldSpec{m.submanifold}.indices(m.chart);  // validates
    }
    if (j.contains("complement")) m.complement = parse_complement(j["complement"], m.chart);
    if (j.contains("verification")) m.verification = parse_verification(j["verification"]);
    if (j.contains("thickening")) {
        manifest_detail::reject_unknown(j["thickening"], {"base_dim", "fiber_dim", "liouville"},
                                        "thickening");
        ThickeningInfo t;
        if (!j["thickening"].contains("base_dim") || !j["thickening"].contains("fiber_dim"))
            throw error(errc::parse_error, "thickening requires base_dim and fiber_dim");
        t.base_dim = j["thickening"]["base_dim"].get<std::size_t>();
        t.fiber_dim = j["thickening"]["fiber_dim"].get<std::size_t>();
        if (t.base_dim + t.fiber_dim != m.chart.dim())
            throw error(errc::parse_error, "thickening dims do not add up to the chart dim");
        if (j["thickening"].contains("liouville"))
            t.liouville = parse_form(j["thickening"]["liouville"], m.chart, 1, "liouville");
        else
            t.liouville = PolyForm(m.chart, 1);
        m.thickening = std::move(t);
    }
    return m;
}

inline Manifest parse_manifest_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const std::exception& e) {
        throw error(errc::parse_error, std::string("invalid JSON: ") + e.what());
    }
    return parse_manifest(j);
}

inline json manifest_to_json(const Manifest& m) {
    json j;
    j["chart"] = chart_to_json(m.chart);
    j["omega"] = form_to_json(m.omega);
    j["eta"] = form_to_json(m.eta);
    if (!m.submanifold.empty()) j["submanifold"] = m.submanifold;
    if (m.complement) {
        json c;
        c["policy"] = m.complement->coordinate ? "coordinate" : "custom";
        if (!m.complement->coordinate) {
            json rows = json::array();
            for (const auto& row : m.complement->A) {
                json r = json::array();
                for (const auto& entry : row) r.push_back(polyscalar_to_json(entry, m.chart));
                rows.push_back(r);
            }
            c["A"] = rows;
        }
        j["complement"] = c;
    }
    j["verification"] = verification_to_json(m.verification);
    if (m.thickening) {
        json t;
        t["base_dim"] = m.thickening->base_dim;
        t["fiber_dim"] = m.thickening->fiber_dim;
        t["liouville"] = form_to_json(m.thickening->liouville);
        j["thickening"] = t;
    }
    return j;
}

inline Manifest load_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw error(errc::parse_error, "cannot open manifest '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_manifest_text(ss.str());
}

// Thickened manifest produced by the embed command; re-parses through
// parse_manifest and re-verifies through verify-embed.
inline Manifest thickened_manifest(const ThickenedStructure& t,
                                   const VerificationParams& params) {
    Manifest m{t.chart, t.omega_g, t.eta_g, {}, std::nullopt, params, std::nullopt};
    m.thickening = ThickeningInfo{t.base_dim, t.fiber_dim, t.liouville};
    return m;
}

}  // namespace cosym
