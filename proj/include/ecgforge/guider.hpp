#pragma once

#include <filesystem>
#include <string>

#include "ecgforge/features.hpp"

namespace ecgforge {

struct GuiderPrompt {
    std::string template_version;
    std::string report_text;
    std::string measurements_text;
    std::string rendered;
};

/// Resource directory holding the versioned prompt templates. Defaults to
/// the checked-in resources/ directory; overridable via ECGFORGE_RESOURCES.
std::filesystem::path resource_dir();

std::string load_template(const std::string& file_name);

/// Substitutes each `{{placeholder}}` exactly once; throws ProtocolError if
/// a placeholder is missing from the template.
std::string substitute_placeholder(const std::string& tmpl, const std::string& placeholder,
                                   const std::string& value);

/// Canonical measurement text: leads in canonical order, the 14 features in
/// catalogue order, values with 1-decimal formatting, nulls as `null`,
/// ST forms as enum words. max_beats == 0 serializes every beat.
std::string serialize_measurements(const FeatureSequences& features, size_t max_beats = 0);

GuiderPrompt build_guider_prompt(const std::string& report,
                                 const std::string& measurements_text);

}  // namespace ecgforge
