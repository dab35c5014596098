#pragma once

#include <optional>

#include "favk/raster.hpp"

namespace favk {

struct Confusion {
    int64_t tp = 0, fp = 0, tn = 0, fn = 0;
};

/// Pixel counts over roi-true pixels only.
Confusion confusion(const BinaryMask& pred, const BinaryMask& gt, const BinaryMask& roi);

/// Recall, FPR, precision, Dice. A zero denominator leaves the score unset
/// rather than silently zero.
struct Scores {
    std::optional<double> recall, fpr, precision, dice;
};
Scores scores(const Confusion& c);

enum class CurveKind { Roc, Pr };

struct CurvePoint {
    double threshold;
    double x, y;  // ROC: (FPR, recall); PR: (recall, precision)
};

struct Curve {
    CurveKind kind = CurveKind::Roc;
    std::vector<CurvePoint> points;  // thresholds strictly decreasing
};

/// Descending sweep over the 257 levels {k/256} prefixed by an all-negative
/// sentinel threshold of 2, prediction = (soft >= threshold). Ground truth
/// must contain both classes inside the roi.
Curve curve(const SoftMap& soft, const BinaryMask& gt, const BinaryMask& roi, CurveKind kind);

/// Trapezoidal area over the curve's x axis.
double auc(const Curve& c);

struct MaxDice {
    double dice = 0.0;
    double threshold = 0.0;
};
/// Sweeps the same 257 levels; ties resolve to the lowest threshold.
MaxDice max_dice(const SoftMap& soft, const BinaryMask& gt, const BinaryMask& roi);

struct OtsuResult {
    double threshold = 0.5;
    bool degenerate = false;  // constant input
};
/// 256-bin Otsu. Returns (k*+1)/256 where k* maximizes the between-class
/// variance (ties to the lower bin); binarize as value >= threshold.
OtsuResult otsu_threshold(const SoftMap& img);
OtsuResult otsu_threshold(const GrayImage& img);

void write_curves_csv(const std::vector<Curve>& curves, const std::string& path);

}  // namespace favk
