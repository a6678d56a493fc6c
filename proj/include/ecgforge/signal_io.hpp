#pragma once

#include <filesystem>
#include <string>

#include "ecgforge/record.hpp"

namespace ecgforge {

/// Loads `<stem>.csv` (header = lead names, one row per sample) plus the
/// `<stem>.json` sidecar carrying record_id, sample_rate_hz, report, labels.
/// Leads are reordered into canonical order; values are millivolts.
EcgRecord load_record(const std::filesystem::path& csv_path);

/// Canonical writer: emits the same csv+sidecar pair load_record reads.
/// Sample values use shortest round-trip decimal formatting, so
/// load(write(r)) reproduces samples exactly.
void write_record(const EcgRecord& record, const std::filesystem::path& csv_path);

/// Linear-interpolation resampling of every lead to target_hz.
/// Duration is preserved to within one output sample period.
EcgRecord resample(const EcgRecord& record, double target_hz);

/// Subtracts a per-lead moving-median baseline (window ~0.6 s). Optional
/// preprocessing; off by default in the pipeline.
EcgRecord remove_baseline(const EcgRecord& record);

}  // namespace ecgforge
