#pragma once

#include <Eigen/Core>
#include <optional>
#include <string>
#include <vector>

#include "ecgforge/errors.hpp"

namespace ecgforge {

/// Canonical 12-lead order. Records with fewer leads keep this relative order.
inline const std::vector<std::string>& canonical_lead_names() {
    static const std::vector<std::string> names = {
        "I", "II", "III", "aVR", "aVL", "aVF",
        "V1", "V2", "V3", "V4", "V5", "V6"};
    return names;
}

/// Index of a lead in the canonical order, or -1 if the name is unknown.
int canonical_lead_index(const std::string& name);

struct Lead {
    std::string name;
    Eigen::VectorXd samples;  // millivolts
};

/// A multi-lead ECG record. Immutable by convention after validate().
struct EcgRecord {
    std::string record_id;
    double sample_rate_hz = 0.0;
    std::vector<Lead> leads;
    std::optional<std::string> report_text;
    std::optional<std::vector<std::string>> labels;

    Eigen::Index sample_count() const {
        return leads.empty() ? 0 : leads.front().samples.size();
    }
    double duration_s() const {
        return sample_rate_hz > 0 ? static_cast<double>(sample_count()) / sample_rate_hz : 0.0;
    }
    const Lead* find_lead(const std::string& name) const;

    /// Enforces every structural invariant; throws on violation.
    void validate() const;
};

}  // namespace ecgforge
