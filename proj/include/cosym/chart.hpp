#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "cosym/errors.hpp"

namespace cosym {

// A single coordinate chart: an ordered list of coordinate labels with an
// optional distinguished time coordinate.
class Chart {
  public:
    Chart() = default;

    explicit Chart(std::vector<std::string> names,
                   std::optional<std::size_t> time_index = std::nullopt)
        : names_(std::move(names)), time_index_(time_index) {
        std::set<std::string> seen;
        for (const auto& n : names_) {
            if (n.empty()) throw error(errc::parse_error, "empty coordinate label");
            if (!seen.insert(n).second)
                throw error(errc::parse_error, "duplicate coordinate label '" + n + "'");
        }
        if (time_index_ && *time_index_ >= names_.size())
            throw error(errc::parse_error, "time index out of range");
    }

    std::size_t dim() const { return names_.size(); }
    const std::string& name(std::size_t i) const { return names_.at(i); }
    const std::vector<std::string>& names() const { return names_; }
    std::optional<std::size_t> time_index() const { return time_index_; }

    std::optional<std::size_t> index_of(const std::string& label) const {
        for (std::size_t i = 0; i < names_.size(); ++i)
            if (names_[i] == label) return i;
        return std::nullopt;
    }

    std::size_t require_index(const std::string& label) const {
        auto i = index_of(label);
        if (!i) throw error(errc::parse_error, "unknown coordinate label '" + label + "'");
        return *i;
    }

    Chart with_appended(const std::vector<std::string>& extra) const {
        std::vector<std::string> all = names_;
        for (const auto& n : extra) {
            if (index_of(n)) throw error(errc::label_clash, "label '" + n + "' already in chart");
            all.push_back(n);
        }
        return Chart(all, time_index_);
    }

    bool operator==(const Chart& o) const {
        return names_ == o.names_ && time_index_ == o.time_index_;
    }
    bool operator!=(const Chart& o) const { return !(*this == o); }

  private:
    std::vector<std::string> names_;
    std::optional<std::size_t> time_index_;
};

}  // namespace cosym
