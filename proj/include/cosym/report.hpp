#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cosym/linalg.hpp"

namespace cosym {

// One verified assertion: either an exact identity (passed/failed) or a
// numeric residual against a tolerance.
struct CheckResult {
    std::string name;
    bool passed = false;
    bool exact = false;
    double residual = 0.0;
    double tolerance = 0.0;
    std::optional<DVec> worst_point;
    std::string detail;

    static CheckResult exact_check(std::string name, bool ok,
                                   std::optional<DVec> worst = std::nullopt,
                                   std::string detail = {}) {
        CheckResult c;
        c.name = std::move(name);
        c.passed = ok;
        c.exact = true;
        c.worst_point = std::move(worst);
        c.detail = std::move(detail);
        return c;
    }

    static CheckResult residual_check(std::string name, double residual, double tol,
                                      std::optional<DVec> worst = std::nullopt,
                                      std::string detail = {}) {
        CheckResult c;
        c.name = std::move(name);
        c.exact = false;
        c.residual = residual;
        c.tolerance = tol;
        c.passed = residual <= tol;
        c.worst_point = std::move(worst);
        c.detail = std::move(detail);
        return c;
    }
};

// Residual norms, rank profiles and verdicts for the conclusions of one
// theorem-level verification.
struct EquivalenceReport {
    std::string subject;
    std::vector<CheckResult> checks;

    bool passed() const {
        for (const auto& c : checks)
            if (!c.passed) return false;
        return true;
    }

    const CheckResult* find(const std::string& name) const {
        for (const auto& c : checks)
            if (c.name == name) return &c;
        return nullptr;
    }

    void add(CheckResult c) { checks.push_back(std::move(c)); }

    void absorb(const EquivalenceReport& other, const std::string& prefix) {
        for (CheckResult c : other.checks) {
            c.name = prefix + c.name;
            checks.push_back(std::move(c));
        }
    }
};

// Tracks the worst (largest) residual seen together with where it happened.
struct ResidualMax {
    double value = 0.0;
    std::optional<DVec> at;

    void update(double v, const DVec& point) {
        if (!at || v > value) {
            value = v;
            at = point;
        }
    }
};

}  // namespace cosym
