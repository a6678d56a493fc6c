#include "ecgforge/record.hpp"

#include <cmath>
#include <set>

namespace ecgforge {

int canonical_lead_index(const std::string& name) {
    const auto& names = canonical_lead_names();
    for (size_t i = 0; i < names.size(); ++i) {
        if (names[i] == name) return static_cast<int>(i);
    }
    return -1;
}

const Lead* EcgRecord::find_lead(const std::string& name) const {
    for (const auto& lead : leads) {
        if (lead.name == name) return &lead;
    }
    return nullptr;
}

void EcgRecord::validate() const {
    if (sample_rate_hz <= 0.0 || !std::isfinite(sample_rate_hz)) {
        throw MalformedInput("record '" + record_id + "': sample_rate_hz must be positive");
    }
    if (leads.empty() || leads.size() > 12) {
        throw MalformedInput("record '" + record_id + "': lead count must be in [1, 12]");
    }
    const Eigen::Index n = leads.front().samples.size();
    if (static_cast<double>(n) < 2.0 * sample_rate_hz) {
        throw TooShort("record '" + record_id + "': need at least 2 s of signal");
    }
    std::set<std::string> seen;
    int last_index = -1;
    for (const auto& lead : leads) {
        const int idx = canonical_lead_index(lead.name);
        if (idx < 0) throw UnknownLead("unknown lead name '" + lead.name + "'");
        if (!seen.insert(lead.name).second) {
            throw MalformedInput("duplicate lead '" + lead.name + "'");
        }
        if (idx <= last_index) {
            throw MalformedInput("leads not in canonical order at '" + lead.name + "'");
        }
        last_index = idx;
        if (lead.samples.size() != n) {
            throw MalformedInput("lead '" + lead.name + "' has mismatched sample count");
        }
        if (!lead.samples.allFinite()) {
            throw NonFiniteSample("lead '" + lead.name + "' contains a non-finite sample");
        }
    }
}

}  // namespace ecgforge
