#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "favk/png_io.hpp"
#include "favk/serialize.hpp"
#include "favk/synth.hpp"

using namespace favk;
namespace fs = std::filesystem;

namespace {

int run_cli(const std::string& args) {
    const std::string cmd = std::string(FAVK_CLI_PATH) + " " + args + " >/dev/null 2>/dev/null";
    int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / "favk_cli_test";
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string operator/(const std::string& name) const { return (path / name).string(); }
};

}  // namespace

TEST_CASE("cli: usage errors exit 2, domain errors exit 1") {
    CHECK(run_cli("frobnicate") == 2);
    CHECK(run_cli("register --reference only.png") == 2);  // missing required flags
    TempDir tmp;
    CHECK(run_cli("diff --before /nonexistent_a.png --after /nonexistent_b.png") == 1);
    std::ofstream(tmp / "bad.json") << "{ not json";
    std::ofstream(tmp / "img.png") << "not a png";
    CHECK(run_cli("synth --spec " + (tmp / "bad.json") + " --out-prefix " + (tmp / "x")) == 1);
}

TEST_CASE("cli: diff on identical masks reports zero changes") {
    TempDir tmp;
    BinaryMask m(16, 16);
    for (int i = 0; i < 16; ++i) m.set(i, i, true);
    save_mask(m, tmp / "a.png");
    save_mask(m, tmp / "b.png");

    const std::string out = tmp / "diff_out.txt";
    const std::string cmd = std::string(FAVK_CLI_PATH) + " diff --before " + (tmp / "a.png") +
                            " --after " + (tmp / "b.png") + " > " + out + " 2>/dev/null";
    int status = std::system(cmd.c_str());
    REQUIRE(WIFEXITED(status));
    CHECK(WEXITSTATUS(status) == 0);

    std::ifstream in(out);
    std::string json_line;
    std::getline(in, json_line);
    auto j = nlohmann::json::parse(json_line);
    CHECK(j["added"] == 0);
    CHECK(j["removed"] == 0);
    CHECK(j["format_version"] == kFormatVersion);
}

TEST_CASE("cli: synth -> register -> transfer -> eval chain") {
    TempDir tmp;

    nlohmann::json spec{{"seed", 7},
                        {"width", 256},
                        {"height", 256},
                        {"branches", 4},
                        {"depth", 4},
                        {"root_width", 2.0},
                        {"width_decay", 0.8},
                        {"contrast_falloff", 0.9},
                        {"noise_sigma", 0.01},
                        {"warp",
                         {{"truth",
                           {{"model", "similarity"},
                            {"beta", {1.02, 0.02, 5.0, -3.0}}}},
                          {"jitter_sigma", 0.4},
                          {"outlier_fraction", 0.15},
                          {"drop_fraction", 0.0},
                          {"seed", 11}}}};
    save_json_file(spec, tmp / "spec.json");

    REQUIRE(run_cli("synth --spec " + (tmp / "spec.json") + " --out-prefix " + (tmp / "ph")) == 0);
    for (const char* suffix : {"_img.png", "_mask.png", "_points.csv", "_moving.png",
                               "_truth.json"})
        CHECK(fs::exists(tmp / ("ph" + std::string(suffix))));

    REQUIRE(run_cli("register --reference " + (tmp / "ph_mask.png") + " --moving " +
                    (tmp / "ph_points.csv") + " --out-transform " + (tmp / "t.json") +
                    " --report " + (tmp / "r.json")) == 0);
    auto report = load_json_file(tmp / "r.json");
    CHECK(report["format_version"] == kFormatVersion);
    CHECK(report["stages"].size() == 5);
    CHECK(report.contains("config"));

    REQUIRE(run_cli("transfer --fa " + (tmp / "ph_img.png") + " --cf-vessels " +
                    (tmp / "ph_moving.png") + " --transform " + (tmp / "t.json") +
                    " --out-prefix " + (tmp / "pair")) == 0);
    for (const char* suffix : {"_img.png", "_lbl.png", "_roi.png", "_manifest.json"})
        CHECK(fs::exists(tmp / ("pair" + std::string(suffix))));

    REQUIRE(run_cli("eval --soft " + (tmp / "pair_lbl.png") + " --gt " + (tmp / "ph_mask.png") +
                    " --roi " + (tmp / "pair_roi.png") + " --out-curves " + (tmp / "curves.csv") +
                    " --out-summary " + (tmp / "sum.json")) == 0);
    auto summary = load_json_file(tmp / "sum.json");
    CHECK(summary["format_version"] == kFormatVersion);
    CHECK(summary["max_dice"].get<double>() > 0.3);  // labels land on the phantom
    CHECK(summary["auc_roc"].get<double>() > 0.5);
    CHECK(fs::file_size(tmp / "curves.csv") > 0);
}

TEST_CASE("cli: register on self is near identity") {
    TempDir tmp;
    PhantomSpec spec;
    spec.seed = 3;
    spec.width = 200;
    spec.height = 200;
    spec.branches = 3;
    spec.depth = 4;
    spec.root_width = 2.5;
    spec.noise_sigma = 0.0;
    Phantom ph = gen_phantom(spec);
    save_mask(ph.mask, tmp / "m.png");

    REQUIRE(run_cli("register --reference " + (tmp / "m.png") + " --moving " + (tmp / "m.png") +
                    " --out-transform " + (tmp / "t.json")) == 0);
    TransformParams t = transform_from_json(load_json_file(tmp / "t.json"));
    REQUIRE(t.model == Model::Poly2);
    PointSet pts = mask_to_points(ph.mask);
    double gap = 0.0;
    for (const Point& q : pts.points) {
        Point p = apply(t, q);
        gap += std::hypot(p.x - q.x, p.y - q.y);
    }
    CHECK(gap / double(pts.count()) < 0.1);
}

TEST_CASE("cli: detect writes mask and soft map") {
    TempDir tmp;
    PhantomSpec spec;
    spec.seed = 5;
    spec.width = 128;
    spec.height = 128;
    spec.branches = 3;
    spec.depth = 3;
    spec.root_width = 2.0;
    spec.noise_sigma = 0.01;
    Phantom ph = gen_phantom(spec);
    save_gray(ph.image, tmp / "fa.png");

    REQUIRE(run_cli("detect --in " + (tmp / "fa.png") + " --out-mask " + (tmp / "m.png") +
                    " --out-soft " + (tmp / "s.png")) == 0);
    BinaryMask m = load_mask(tmp / "m.png");
    SoftMap s = load_soft(tmp / "s.png");
    CHECK(m.width == 128);
    CHECK(s.width == 128);
    CHECK(m.popcount() > 0);

    CHECK(run_cli("detect --in " + (tmp / "fa.png")) == 1);  // no outputs requested
}

TEST_CASE("cli: FA_VESSELKIT_THREADS is validated") {
    TempDir tmp;
    BinaryMask m(8, 8);
    m.set(4, 4, true);
    save_mask(m, tmp / "m.png");
    const std::string base = std::string("diff --before ") + (tmp / "m.png") + " --after " +
                             (tmp / "m.png");
    const std::string cmd_ok = std::string("FA_VESSELKIT_THREADS=4 ") + FAVK_CLI_PATH + " " +
                               base + " >/dev/null 2>/dev/null";
    const std::string cmd_bad = std::string("FA_VESSELKIT_THREADS=banana ") + FAVK_CLI_PATH +
                                " " + base + " >/dev/null 2>/dev/null";
    int ok_status = std::system(cmd_ok.c_str());
    int bad_status = std::system(cmd_bad.c_str());
    CHECK(WEXITSTATUS(ok_status) == 0);
    CHECK(WEXITSTATUS(bad_status) == 1);
}
