#pragma once

#include <optional>

#include "favk/raster.hpp"

namespace favk {

/// Pixel-level annotation effort between a predicted mask and its human
/// correction. Percentages are relative to the final (corrected) vessel
/// count and unset when that count is zero.
struct DiffReport {
    int64_t added = 0;    // after & !before
    int64_t removed = 0;  // before & !after
    std::optional<double> pct_added, pct_removed;
};

DiffReport mask_diff(const BinaryMask& before, const BinaryMask& after);

struct ManifestEntry {
    std::string image_path;
    std::string label_path;
    std::string roi_path;
    std::string source;  // "transferred" | "corrected"
};

struct EffortRecord {
    int iteration = 0;
    DiffReport diff;
};

/// Bookkeeping for the iterate-predict-correct-retrain loop. The training
/// set only grows; the prediction step itself runs outside the library via
/// predict_command (substituting {image} and {out}).
struct IterationManifest {
    int iteration = 0;
    std::vector<ManifestEntry> entries;
    std::vector<EffortRecord> efforts;
    std::string predict_command;
};

/// Appends the corrected pairs, records one DiffReport per pair, and
/// increments the iteration counter. predicted/corrected/new_entries must be
/// aligned; new_entries may be empty when no path metadata exists.
IterationManifest advance_iteration(const IterationManifest& manifest,
                                    const std::vector<BinaryMask>& predicted,
                                    const std::vector<BinaryMask>& corrected,
                                    const std::vector<ManifestEntry>& new_entries = {});

void save_manifest(const IterationManifest& manifest, const std::string& path);
IterationManifest load_manifest(const std::string& path);

}  // namespace favk
