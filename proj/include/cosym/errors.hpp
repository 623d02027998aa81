#pragma once

#include <stdexcept>
#include <string>

namespace cosym {

enum class errc {
    chart_mismatch,
    degree_mismatch,
    label_clash,
    not_precosymplectic,
    not_cosymplectic,
    no_reeb_vector,
    not_coisotropic,
    not_lagrangian,
    not_symplectic,
    not_darboux,
    not_closed,
    nonvanishing_on_m,
    xi_not_coordinate,
    reeb_contraction_nonzero,
    reeb_mismatch,
    domain_violation,
    not_cosymplectic_on_path,
    tolerance_exceeded,
    complement_invalid,
    parse_error,
};

inline const char* errc_name(errc c) {
    switch (c) {
        case errc::chart_mismatch: return "ChartMismatch";
        case errc::degree_mismatch: return "DegreeMismatch";
        case errc::label_clash: return "LabelClash";
        case errc::not_precosymplectic: return "NotPrecosymplectic";
        case errc::not_cosymplectic: return "NotCosymplectic";
        case errc::no_reeb_vector: return "NoReebVector";
        case errc::not_coisotropic: return "NotCoisotropic";
        case errc::not_lagrangian: return "NotLagrangian";
        case errc::not_symplectic: return "NotSymplectic";
        case errc::not_darboux: return "NotDarboux";
        case errc::not_closed: return "NotClosed";
        case errc::nonvanishing_on_m: return "NonvanishingOnM";
        case errc::xi_not_coordinate: return "XiNotCoordinate";
        case errc::reeb_contraction_nonzero: return "ReebContractionNonzero";
        case errc::reeb_mismatch: return "ReebMismatch";
        case errc::domain_violation: return "DomainViolation";
        case errc::not_cosymplectic_on_path: return "NotCosymplecticOnPath";
        case errc::tolerance_exceeded: return "ToleranceExceeded";
        case errc::complement_invalid: return "ComplementInvalid";
        case errc::parse_error: return "ParseError";
    }
    return "Unknown";
}

class error : public std::runtime_error {
  public:
    error(errc code, const std::string& what)
        : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

    errc code() const { return code_; }

  private:
    errc code_;
};

}  // namespace cosym
