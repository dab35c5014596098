#include "favk/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>

namespace favk {

namespace {

void check_dims(int w, int h, const BinaryMask& m, const char* what) {
    if (m.width != w || m.height != h) throw Error(std::string(what) + ": dimension mismatch");
}

// Histogram of "largest threshold index k (t = k/256) at which the pixel is
// still predicted positive", split by ground-truth class. Suffix sums then
// give tp/fp for every threshold in one pass.
struct ThresholdCounts {
    std::array<int64_t, 257> pos_hist{};  // gt positive, index = floor(256 v), clamped to 256
    std::array<int64_t, 257> neg_hist{};
    int64_t total_pos = 0, total_neg = 0;
};

ThresholdCounts count_levels(const SoftMap& soft, const BinaryMask& gt, const BinaryMask& roi) {
    check_dims(soft.width, soft.height, gt, "metrics");
    check_dims(soft.width, soft.height, roi, "metrics");
    ThresholdCounts tc;
    for (size_t i = 0; i < soft.size(); ++i) {
        if (!roi.data[i]) continue;
        double v = soft.data[i];
        if (!(v >= 0.0 && v <= 1.0)) throw Error("metrics: soft value outside [0,1]");
        int level = std::min(256, int(std::floor(v * 256.0)));
        if (gt.data[i]) {
            ++tc.pos_hist[level];
            ++tc.total_pos;
        } else {
            ++tc.neg_hist[level];
            ++tc.total_neg;
        }
    }
    return tc;
}

// Cumulative (descending threshold) tp/fp tables: index k in [0,256] is the
// threshold k/256; index 257 stands for the all-negative sentinel.
struct SweepTables {
    std::array<int64_t, 257> tp{}, fp{};
    int64_t total_pos = 0, total_neg = 0;
};

SweepTables sweep_tables(const ThresholdCounts& tc) {
    SweepTables st;
    st.total_pos = tc.total_pos;
    st.total_neg = tc.total_neg;
    int64_t tp = 0, fp = 0;
    for (int k = 256; k >= 0; --k) {
        tp += tc.pos_hist[k];
        fp += tc.neg_hist[k];
        st.tp[k] = tp;
        st.fp[k] = fp;
    }
    return st;
}

}  // namespace

Confusion confusion(const BinaryMask& pred, const BinaryMask& gt, const BinaryMask& roi) {
    check_dims(pred.width, pred.height, gt, "confusion");
    check_dims(pred.width, pred.height, roi, "confusion");
    Confusion c;
    for (size_t i = 0; i < pred.size(); ++i) {
        if (!roi.data[i]) continue;
        const bool p = pred.data[i] != 0, g = gt.data[i] != 0;
        if (p && g) ++c.tp;
        else if (p && !g) ++c.fp;
        else if (!p && g) ++c.fn;
        else ++c.tn;
    }
    return c;
}

Scores scores(const Confusion& c) {
    Scores s;
    if (c.tp + c.fn > 0) s.recall = double(c.tp) / double(c.tp + c.fn);
    if (c.fp + c.tn > 0) s.fpr = double(c.fp) / double(c.fp + c.tn);
    if (c.tp + c.fp > 0) s.precision = double(c.tp) / double(c.tp + c.fp);
    if (2 * c.tp + c.fp + c.fn > 0) s.dice = double(2 * c.tp) / double(2 * c.tp + c.fp + c.fn);
    return s;
}

Curve curve(const SoftMap& soft, const BinaryMask& gt, const BinaryMask& roi, CurveKind kind) {
    ThresholdCounts tc = count_levels(soft, gt, roi);
    if (tc.total_pos == 0 || tc.total_neg == 0)
        throw Error("curve: single-class ground truth inside roi");
    SweepTables st = sweep_tables(tc);

    Curve c;
    c.kind = kind;
    c.points.reserve(258);
    auto emit = [&](double threshold, int64_t tp, int64_t fp) {
        if (kind == CurveKind::Roc) {
            c.points.push_back({threshold, double(fp) / double(st.total_neg),
                                double(tp) / double(st.total_pos)});
        } else {
            double recall = double(tp) / double(st.total_pos);
            double precision = tp + fp > 0 ? double(tp) / double(tp + fp) : 1.0;
            c.points.push_back({threshold, recall, precision});
        }
    };
    emit(2.0, 0, 0);  // all-negative endpoint
    for (int k = 256; k >= 0; --k) emit(double(k) / 256.0, st.tp[k], st.fp[k]);
    return c;
}

double auc(const Curve& c) {
    if (c.points.size() < 2) throw Error("auc: degenerate curve");
    double area = 0.0;
    for (size_t i = 1; i < c.points.size(); ++i)
        area += (c.points[i].x - c.points[i - 1].x) *
                (c.points[i].y + c.points[i - 1].y) * 0.5;
    return area;
}

MaxDice max_dice(const SoftMap& soft, const BinaryMask& gt, const BinaryMask& roi) {
    ThresholdCounts tc = count_levels(soft, gt, roi);
    if (tc.total_pos == 0) throw Error("max_dice: ground truth has no positives inside roi");
    SweepTables st = sweep_tables(tc);

    MaxDice best{-1.0, 0.0};
    for (int k = 0; k <= 256; ++k) {  // ascending: ties keep the lowest threshold
        const int64_t tp = st.tp[k], fp = st.fp[k];
        const int64_t fn = st.total_pos - tp;
        const double dice = double(2 * tp) / double(2 * tp + fp + fn);
        if (dice > best.dice) best = {dice, double(k) / 256.0};
    }
    return best;
}

namespace {

OtsuResult otsu_impl(const std::vector<double>& values) {
    if (values.empty()) throw Error("otsu_threshold: empty image");
    double lo = values[0], hi = values[0];
    for (double v : values) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    if (lo == hi) return {0.5, true};

    std::array<int64_t, 256> hist{};
    for (double v : values) hist[std::min(255, int(std::floor(v * 256.0)))]++;

    const double total = double(values.size());
    double sum_all = 0.0;
    for (int i = 0; i < 256; ++i) sum_all += i * double(hist[i]);

    double best_var = -1.0;
    int best_k = 0;
    double w0 = 0.0, sum0 = 0.0;
    for (int k = 0; k < 255; ++k) {
        w0 += double(hist[k]);
        sum0 += k * double(hist[k]);
        if (w0 == 0.0) continue;
        const double w1 = total - w0;
        if (w1 == 0.0) break;
        const double mu0 = sum0 / w0, mu1 = (sum_all - sum0) / w1;
        const double var = w0 * w1 * (mu0 - mu1) * (mu0 - mu1);
        if (var > best_var) {  // strict: ties keep the lower threshold
            best_var = var;
            best_k = k;
        }
    }
    return {double(best_k + 1) / 256.0, false};
}

}  // namespace

OtsuResult otsu_threshold(const SoftMap& img) { return otsu_impl(img.data); }
OtsuResult otsu_threshold(const GrayImage& img) { return otsu_impl(img.data); }

void write_curves_csv(const std::vector<Curve>& curves, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open for writing: " + path);
    out << "kind,threshold,x,y\n";
    out.precision(17);
    for (const Curve& c : curves) {
        const char* kind = c.kind == CurveKind::Roc ? "roc" : "pr";
        for (const CurvePoint& p : c.points)
            out << kind << ',' << p.threshold << ',' << p.x << ',' << p.y << '\n';
    }
}

}  // namespace favk
