#include "favk/serialize.hpp"

#include <fstream>
#include <sstream>

namespace favk {

using nlohmann::json;

json transform_to_json(const TransformParams& t) {
    return json{{"model", model_name(t.model)}, {"beta", t.beta}};
}

TransformParams transform_from_json(const json& j) {
    TransformParams t;
    t.model = model_from_name(j.at("model").get<std::string>());
    t.beta = j.at("beta").get<std::vector<double>>();
    t.validate();
    return t;
}

json morph_params_to_json(const MorphParams& p) {
    return json{{"num_scales", p.num_scales},
                {"downsample_rate", p.downsample_rate},
                {"angles", p.angles},
                {"se_length_per_scale", p.se_length_per_scale},
                {"threshold_window", p.threshold_window},
                {"threshold_offset", p.threshold_offset},
                {"min_area", p.min_area}};
}

MorphParams morph_params_from_json(const json& j) {
    MorphParams p;
    p.num_scales = j.value("num_scales", p.num_scales);
    p.downsample_rate = j.value("downsample_rate", p.downsample_rate);
    p.angles = j.value("angles", p.angles);
    p.se_length_per_scale = j.value("se_length_per_scale", p.se_length_per_scale);
    p.threshold_window = j.value("threshold_window", p.threshold_window);
    p.threshold_offset = j.value("threshold_offset", p.threshold_offset);
    p.min_area = j.value("min_area", p.min_area);
    p.validate();
    return p;
}

json em_config_to_json(const EmConfig& cfg) {
    json j{{"d_max", cfg.d_max},
           {"pi0", cfg.pi0},
           {"lambda0", cfg.lambda0},
           {"em_tol", cfg.em_tol},
           {"em_max_iters", cfg.em_max_iters},
           {"lm_sigma0", cfg.lm_sigma0},
           {"lm_factor", cfg.lm_factor},
           {"lm_max_iters", cfg.lm_max_iters},
           {"max_points", cfg.max_points},
           {"em_enabled", cfg.em_enabled}};
    if (cfg.grid_init) {
        j["grid_init"] = json{{"trans_range_px", cfg.grid_init->trans_range_px},
                              {"trans_step_px", cfg.grid_init->trans_step_px},
                              {"rot_range_deg", cfg.grid_init->rot_range_deg},
                              {"rot_step_deg", cfg.grid_init->rot_step_deg}};
    } else {
        j["grid_init"] = nullptr;
    }
    return j;
}

EmConfig em_config_from_json(const json& j) {
    EmConfig cfg;
    cfg.d_max = j.value("d_max", cfg.d_max);
    cfg.pi0 = j.value("pi0", cfg.pi0);
    cfg.lambda0 = j.value("lambda0", cfg.lambda0);
    cfg.em_tol = j.value("em_tol", cfg.em_tol);
    cfg.em_max_iters = j.value("em_max_iters", cfg.em_max_iters);
    cfg.lm_sigma0 = j.value("lm_sigma0", cfg.lm_sigma0);
    cfg.lm_factor = j.value("lm_factor", cfg.lm_factor);
    cfg.lm_max_iters = j.value("lm_max_iters", cfg.lm_max_iters);
    cfg.max_points = j.value("max_points", cfg.max_points);
    cfg.em_enabled = j.value("em_enabled", cfg.em_enabled);
    if (j.contains("grid_init") && !j["grid_init"].is_null()) {
        GridInitSpec g;
        const json& jg = j["grid_init"];
        g.trans_range_px = jg.value("trans_range_px", g.trans_range_px);
        g.trans_step_px = jg.value("trans_step_px", g.trans_step_px);
        g.rot_range_deg = jg.value("rot_range_deg", g.rot_range_deg);
        g.rot_step_deg = jg.value("rot_step_deg", g.rot_step_deg);
        cfg.grid_init = g;
    }
    cfg.validate();
    return cfg;
}

json phantom_spec_to_json(const PhantomSpec& spec) {
    return json{{"seed", spec.seed},
                {"width", spec.width},
                {"height", spec.height},
                {"branches", spec.branches},
                {"depth", spec.depth},
                {"root_width", spec.root_width},
                {"width_decay", spec.width_decay},
                {"contrast_falloff", spec.contrast_falloff},
                {"noise_sigma", spec.noise_sigma}};
}

PhantomSpec phantom_spec_from_json(const json& j) {
    PhantomSpec spec;
    spec.seed = j.value("seed", spec.seed);
    spec.width = j.value("width", spec.width);
    spec.height = j.value("height", spec.height);
    spec.branches = j.value("branches", spec.branches);
    spec.depth = j.value("depth", spec.depth);
    spec.root_width = j.value("root_width", spec.root_width);
    spec.width_decay = j.value("width_decay", spec.width_decay);
    spec.contrast_falloff = j.value("contrast_falloff", spec.contrast_falloff);
    spec.noise_sigma = j.value("noise_sigma", spec.noise_sigma);
    spec.validate();
    return spec;
}

json warp_spec_to_json(const WarpSpec& spec) {
    return json{{"truth", transform_to_json(spec.truth)},
                {"jitter_sigma", spec.jitter_sigma},
                {"outlier_fraction", spec.outlier_fraction},
                {"drop_fraction", spec.drop_fraction},
                {"seed", spec.seed}};
}

WarpSpec warp_spec_from_json(const json& j) {
    WarpSpec spec;
    if (j.contains("truth")) spec.truth = transform_from_json(j["truth"]);
    spec.jitter_sigma = j.value("jitter_sigma", spec.jitter_sigma);
    spec.outlier_fraction = j.value("outlier_fraction", spec.outlier_fraction);
    spec.drop_fraction = j.value("drop_fraction", spec.drop_fraction);
    spec.seed = j.value("seed", spec.seed);
    spec.validate();
    return spec;
}

json registration_report_to_json(const RegistrationReport& report, const EmConfig& cfg) {
    json stages = json::array();
    for (const StageReport& s : report.stages)
        stages.push_back({{"model", model_name(s.model)},
                          {"iterations", s.iterations},
                          {"weighted_error", s.weighted_error}});
    return json{{"format_version", kFormatVersion},
                {"config", em_config_to_json(cfg)},
                {"final", transform_to_json(report.final_transform)},
                {"stages", stages},
                {"pi", report.pi},
                {"lambda", report.lambda},
                {"converged", report.converged},
                {"points_used", report.points_used}};
}

json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open JSON file: " + path);
    try {
        json j;
        in >> j;
        return j;
    } catch (const json::exception& e) {
        throw Error("malformed JSON in " + path + ": " + e.what());
    }
}

void save_json_file(const json& j, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open for writing: " + path);
    out << j.dump(2) << '\n';
}

void save_points_csv(const PointSet& points, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open for writing: " + path);
    out << "x,y\n";
    out.precision(17);
    for (const Point& p : points.points) out << p.x << ',' << p.y << '\n';
}

PointSet load_points_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open points CSV: " + path);
    PointSet ps;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (first) {
            first = false;
            if (line.rfind("x,", 0) == 0) continue;  // header
        }
        std::istringstream row(line);
        std::string sx, sy;
        if (!std::getline(row, sx, ',') || !std::getline(row, sy))
            throw Error("malformed points CSV row: " + line);
        try {
            ps.points.push_back({std::stod(sx), std::stod(sy)});
        } catch (const std::exception&) {
            throw Error("malformed points CSV row: " + line);
        }
    }
    return ps;
}

}  // namespace favk
