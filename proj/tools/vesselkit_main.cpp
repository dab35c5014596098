// vesselkit: composable CLI over the vessel-transfer pipeline.
// Subcommands: detect, register, transfer, eval, diff, synth.
// Exit codes: 0 success, 1 domain error (one JSON object on stderr), 2 usage.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include "favk/chamfer_em.hpp"
#include "favk/hitl.hpp"
#include "favk/metrics.hpp"
#include "favk/morph.hpp"
#include "favk/png_io.hpp"
#include "favk/serialize.hpp"
#include "favk/synth.hpp"
#include "favk/transfer.hpp"

using nlohmann::json;

namespace {

int resolve_thread_cap() {
    const char* env = std::getenv("FA_VESSELKIT_THREADS");
    if (!env || !*env) return 0;
    char* end = nullptr;
    long v = std::strtol(env, &end, 10);
    if (*end != '\0' || v < 0)
        throw favk::Error("FA_VESSELKIT_THREADS must be a non-negative integer");
    return int(v);
}

bool ends_with(const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() &&
           s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

struct DetectArgs {
    std::string in, params, out_mask, out_soft;
};

int run_detect(const DetectArgs& a) {
    if (a.out_mask.empty() && a.out_soft.empty())
        throw favk::Error("detect: nothing to do, pass --out-mask and/or --out-soft");
    favk::MorphParams params;
    if (!a.params.empty()) params = favk::morph_params_from_json(favk::load_json_file(a.params));
    favk::GrayImage img = favk::load_gray(a.in);
    favk::DetectResult res = favk::detect_vessels(img, params);
    if (!a.out_mask.empty()) favk::save_mask(res.mask, a.out_mask);
    if (!a.out_soft.empty()) favk::save_soft(res.soft, a.out_soft);
    return 0;
}

struct RegisterArgs {
    std::string reference, moving, config, out_transform, report;
};

int run_register(const RegisterArgs& a) {
    favk::EmConfig cfg;
    if (!a.config.empty()) cfg = favk::em_config_from_json(favk::load_json_file(a.config));
    favk::BinaryMask reference = favk::load_mask(a.reference);

    favk::RegistrationReport rep;
    if (ends_with(a.moving, ".csv")) {
        favk::PointSet moving = favk::load_points_csv(a.moving);
        rep = favk::register_points(reference, moving, cfg);
    } else {
        favk::BinaryMask moving = favk::load_mask(a.moving);
        rep = favk::register_masks(reference, moving, cfg);
    }

    favk::save_json_file(favk::transform_to_json(rep.final_transform), a.out_transform);
    if (!a.report.empty())
        favk::save_json_file(favk::registration_report_to_json(rep, cfg), a.report);
    return 0;
}

struct TransferArgs {
    std::string fa, cf_vessels, cf_fov, fa_fov, transform, out_prefix;
};

int run_transfer(const TransferArgs& a) {
    favk::GrayImage fa = favk::load_gray(a.fa);
    favk::BinaryMask vessels = favk::load_mask(a.cf_vessels);
    favk::TransformParams t = favk::transform_from_json(favk::load_json_file(a.transform));
    favk::BinaryMask cf_fov = a.cf_fov.empty()
                                  ? favk::BinaryMask(vessels.width, vessels.height, true)
                                  : favk::load_mask(a.cf_fov);
    favk::BinaryMask fa_fov = a.fa_fov.empty() ? favk::BinaryMask(fa.width, fa.height, true)
                                               : favk::load_mask(a.fa_fov);

    favk::TrainingPair pair = favk::make_training_pair(fa, vessels, cf_fov, fa_fov, t);
    favk::save_gray(pair.image, a.out_prefix + "_img.png");
    favk::save_mask(pair.labels, a.out_prefix + "_lbl.png");
    favk::save_mask(pair.roi, a.out_prefix + "_roi.png");

    json manifest{{"format_version", favk::kFormatVersion},
                  {"config",
                   {{"fa", a.fa},
                    {"cf_vessels", a.cf_vessels},
                    {"cf_fov", a.cf_fov.empty() ? json() : json(a.cf_fov)},
                    {"fa_fov", a.fa_fov.empty() ? json() : json(a.fa_fov)},
                    {"transform", favk::transform_to_json(t)}}},
                  {"image", a.out_prefix + "_img.png"},
                  {"label", a.out_prefix + "_lbl.png"},
                  {"roi", a.out_prefix + "_roi.png"},
                  {"label_pixels", pair.labels.popcount()},
                  {"roi_pixels", pair.roi.popcount()}};
    favk::save_json_file(manifest, a.out_prefix + "_manifest.json");
    return 0;
}

struct EvalArgs {
    std::string soft, gt, roi, out_curves, out_summary;
};

int run_eval(const EvalArgs& a) {
    if (a.out_curves.empty() && a.out_summary.empty())
        throw favk::Error("eval: nothing to do, pass --out-curves and/or --out-summary");
    favk::SoftMap soft = favk::load_soft(a.soft);
    favk::BinaryMask gt = favk::load_mask(a.gt);
    favk::BinaryMask roi = a.roi.empty() ? favk::BinaryMask(soft.width, soft.height, true)
                                         : favk::load_mask(a.roi);

    favk::Curve roc = favk::curve(soft, gt, roi, favk::CurveKind::Roc);
    favk::Curve pr = favk::curve(soft, gt, roi, favk::CurveKind::Pr);
    favk::MaxDice md = favk::max_dice(soft, gt, roi);

    if (!a.out_curves.empty()) favk::write_curves_csv({roc, pr}, a.out_curves);
    if (!a.out_summary.empty()) {
        json summary{{"format_version", favk::kFormatVersion},
                     {"config",
                      {{"soft", a.soft},
                       {"gt", a.gt},
                       {"roi", a.roi.empty() ? json() : json(a.roi)},
                       {"thresholds", 257}}},
                     {"auc_roc", favk::auc(roc)},
                     {"auc_pr", favk::auc(pr)},
                     {"max_dice", md.dice},
                     {"argmax_threshold", md.threshold}};
        favk::save_json_file(summary, a.out_summary);
    }
    return 0;
}

struct DiffArgs {
    std::string before, after;
};

int run_diff(const DiffArgs& a) {
    favk::BinaryMask before = favk::load_mask(a.before);
    favk::BinaryMask after = favk::load_mask(a.after);
    favk::DiffReport d = favk::mask_diff(before, after);
    json j{{"format_version", favk::kFormatVersion},
           {"config", {{"before", a.before}, {"after", a.after}}},
           {"added", d.added},
           {"removed", d.removed},
           {"pct_added", d.pct_added ? json(*d.pct_added) : json()},
           {"pct_removed", d.pct_removed ? json(*d.pct_removed) : json()}};
    std::cout << j.dump() << '\n';
    std::cout << "added " << d.added << " px, removed " << d.removed << " px";
    if (d.pct_added)
        std::cout << " (" << *d.pct_added << "% / " << *d.pct_removed
                  << "% of the corrected vessel count)";
    std::cout << '\n';
    return 0;
}

struct SynthArgs {
    std::string spec, out_prefix;
};

int run_synth(const SynthArgs& a) {
    json spec_json = favk::load_json_file(a.spec);
    favk::PhantomSpec spec = favk::phantom_spec_from_json(spec_json);
    favk::WarpSpec warp;
    if (spec_json.contains("warp") && !spec_json["warp"].is_null())
        warp = favk::warp_spec_from_json(spec_json["warp"]);

    favk::Phantom phantom = favk::gen_phantom(spec);
    favk::Perturbed pert = favk::perturb(phantom.mask, warp);

    favk::save_gray(phantom.image, a.out_prefix + "_img.png");
    favk::save_mask(phantom.mask, a.out_prefix + "_mask.png");
    favk::save_points_csv(pert.points, a.out_prefix + "_points.csv");

    // rasterized moving points, the CF-side vessel map of the phantom pair
    favk::BinaryMask moving(phantom.mask.width, phantom.mask.height);
    for (const favk::Point& p : pert.points.points) {
        long px = std::lround(p.x), py = std::lround(p.y);
        if (px >= 0 && px < moving.width && py >= 0 && py < moving.height)
            moving.set(int(px), int(py), true);
    }
    favk::save_mask(moving, a.out_prefix + "_moving.png");

    json truth{{"format_version", favk::kFormatVersion},
               {"config",
                {{"phantom", favk::phantom_spec_to_json(spec)},
                 {"warp", favk::warp_spec_to_json(warp)}}},
               {"truth", favk::transform_to_json(pert.truth)},
               {"inlier_count", pert.inlier_count},
               {"point_count", pert.points.count()},
               {"mask_pixels", phantom.mask.popcount()}};
    favk::save_json_file(truth, a.out_prefix + "_truth.json");
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"vessel map transfer toolkit"};
    app.require_subcommand(1);

    DetectArgs detect_args;
    CLI::App* detect = app.add_subcommand("detect", "unsupervised vessel detection");
    detect->add_option("--in", detect_args.in)->required();
    detect->add_option("--params", detect_args.params);
    detect->add_option("--out-mask", detect_args.out_mask);
    detect->add_option("--out-soft", detect_args.out_soft);

    RegisterArgs register_args;
    CLI::App* reg = app.add_subcommand("register", "EM-weighted chamfer registration");
    reg->add_option("--reference", register_args.reference)->required();
    reg->add_option("--moving", register_args.moving)->required();
    reg->add_option("--config", register_args.config);
    reg->add_option("--out-transform", register_args.out_transform)->required();
    reg->add_option("--report", register_args.report);

    TransferArgs transfer_args;
    CLI::App* transfer =
        app.add_subcommand("transfer", "warp labels and build the training pair");
    transfer->add_option("--fa", transfer_args.fa)->required();
    transfer->add_option("--cf-vessels", transfer_args.cf_vessels)->required();
    transfer->add_option("--cf-fov", transfer_args.cf_fov);
    transfer->add_option("--fa-fov", transfer_args.fa_fov);
    transfer->add_option("--transform", transfer_args.transform)->required();
    transfer->add_option("--out-prefix", transfer_args.out_prefix)->required();

    EvalArgs eval_args;
    CLI::App* eval = app.add_subcommand("eval", "segmentation metrics and curves");
    eval->add_option("--soft", eval_args.soft)->required();
    eval->add_option("--gt", eval_args.gt)->required();
    eval->add_option("--roi", eval_args.roi);
    eval->add_option("--out-curves", eval_args.out_curves);
    eval->add_option("--out-summary", eval_args.out_summary);

    DiffArgs diff_args;
    CLI::App* diff = app.add_subcommand("diff", "annotation effort between two masks");
    diff->add_option("--before", diff_args.before)->required();
    diff->add_option("--after", diff_args.after)->required();

    SynthArgs synth_args;
    CLI::App* synth = app.add_subcommand("synth", "synthetic phantom generation");
    synth->add_option("--spec", synth_args.spec)->required();
    synth->add_option("--out-prefix", synth_args.out_prefix)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    const std::string cmd = app.get_subcommands().front()->get_name();
    try {
        resolve_thread_cap();  // validated; execution is single-threaded (<= any cap)
        if (detect->parsed()) return run_detect(detect_args);
        if (reg->parsed()) return run_register(register_args);
        if (transfer->parsed()) return run_transfer(transfer_args);
        if (eval->parsed()) return run_eval(eval_args);
        if (diff->parsed()) return run_diff(diff_args);
        if (synth->parsed()) return run_synth(synth_args);
        return 2;
    } catch (const favk::Error& e) {
        std::cerr << json{{"error", e.what()}, {"command", cmd}}.dump() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << json{{"error", e.what()}, {"command", cmd}}.dump() << '\n';
        return 1;
    }
}
