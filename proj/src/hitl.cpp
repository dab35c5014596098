#include "favk/hitl.hpp"

#include <fstream>

#include <json.hpp>

namespace favk {

DiffReport mask_diff(const BinaryMask& before, const BinaryMask& after) {
    if (before.width != after.width || before.height != after.height)
        throw Error("mask_diff: dimension mismatch");
    DiffReport r;
    int64_t after_count = 0;
    for (size_t i = 0; i < before.size(); ++i) {
        const bool b = before.data[i] != 0, a = after.data[i] != 0;
        if (a && !b) ++r.added;
        if (b && !a) ++r.removed;
        if (a) ++after_count;
    }
    if (after_count > 0) {
        r.pct_added = 100.0 * double(r.added) / double(after_count);
        r.pct_removed = 100.0 * double(r.removed) / double(after_count);
    }
    return r;
}

IterationManifest advance_iteration(const IterationManifest& manifest,
                                    const std::vector<BinaryMask>& predicted,
                                    const std::vector<BinaryMask>& corrected,
                                    const std::vector<ManifestEntry>& new_entries) {
    if (predicted.size() != corrected.size())
        throw Error("advance_iteration: predicted/corrected lists misaligned");
    if (!new_entries.empty() && new_entries.size() != corrected.size())
        throw Error("advance_iteration: entry metadata misaligned");

    IterationManifest next = manifest;
    next.iteration = manifest.iteration + 1;
    for (size_t i = 0; i < corrected.size(); ++i) {
        next.efforts.push_back({next.iteration, mask_diff(predicted[i], corrected[i])});
        ManifestEntry e = new_entries.empty() ? ManifestEntry{} : new_entries[i];
        e.source = "corrected";
        next.entries.push_back(std::move(e));
    }
    return next;
}

namespace {

nlohmann::json diff_to_json(const DiffReport& d) {
    nlohmann::json j{{"added", d.added}, {"removed", d.removed}};
    j["pct_added"] = d.pct_added ? nlohmann::json(*d.pct_added) : nlohmann::json();
    j["pct_removed"] = d.pct_removed ? nlohmann::json(*d.pct_removed) : nlohmann::json();
    return j;
}

DiffReport diff_from_json(const nlohmann::json& j) {
    DiffReport d;
    d.added = j.at("added").get<int64_t>();
    d.removed = j.at("removed").get<int64_t>();
    if (j.contains("pct_added") && !j["pct_added"].is_null())
        d.pct_added = j["pct_added"].get<double>();
    if (j.contains("pct_removed") && !j["pct_removed"].is_null())
        d.pct_removed = j["pct_removed"].get<double>();
    return d;
}

}  // namespace

void save_manifest(const IterationManifest& manifest, const std::string& path) {
    nlohmann::json j;
    j["iteration"] = manifest.iteration;
    j["predict_command"] = manifest.predict_command;
    j["entries"] = nlohmann::json::array();
    for (const auto& e : manifest.entries)
        j["entries"].push_back({{"image", e.image_path},
                                {"label", e.label_path},
                                {"roi", e.roi_path},
                                {"source", e.source}});
    j["efforts"] = nlohmann::json::array();
    for (const auto& rec : manifest.efforts) {
        nlohmann::json je = diff_to_json(rec.diff);
        je["iteration"] = rec.iteration;
        j["efforts"].push_back(je);
    }
    std::ofstream out(path);
    if (!out) throw Error("cannot open for writing: " + path);
    out << j.dump(2) << '\n';
}

IterationManifest load_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open manifest: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw Error("malformed manifest JSON: " + std::string(e.what()));
    }
    IterationManifest m;
    m.iteration = j.at("iteration").get<int>();
    m.predict_command = j.value("predict_command", std::string());
    for (const auto& je : j.value("entries", nlohmann::json::array()))
        m.entries.push_back({je.value("image", ""), je.value("label", ""), je.value("roi", ""),
                             je.value("source", "")});
    for (const auto& je : j.value("efforts", nlohmann::json::array()))
        m.efforts.push_back({je.value("iteration", 0), diff_from_json(je)});
    return m;
}

}  // namespace favk
