#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace gxe {

// Region-level detection score: -log10 of the smallest usable p-value.
// NaN entries (failed fits) are skipped; NaN when nothing is usable.
double summary_min_p(std::span<const double> p_values);

struct RocCurve {
    std::vector<double> fpr, tpr, thresholds;
};

// Tie-grouped ROC curve sweeping thresholds from +inf downwards; always
// starts at (0,0) and ends at (1,1).
RocCurve roc(std::span<const double> h0_scores,
             std::span<const double> h1_scores);

double trapezoid_area(const RocCurve& curve);

struct AucResult {
    double auc = 0.0;
    double se = 0.0;
    double ci_lo = 0.0, ci_hi = 0.0;  // 95% DeLong interval, clamped to [0,1]
    std::size_t n_h0 = 0, n_h1 = 0;
};

// AUC with half credit for ties, computed from integer pair counts so that
// auc(a,b) + auc(b,a) == 1 holds exactly; the variance is DeLong's
// placement-based estimator.
AucResult auc_delong(std::span<const double> h0_scores,
                     std::span<const double> h1_scores);

// fail (<=0.6), poor, fair, good, excellent (>0.9).
std::string qualitative_label(double auc);

struct ScoreSet {
    std::vector<double> h0, h1;
};

// TSV with columns replicate, hypothesis, score. Replicates of each
// hypothesis must number 0..k-1 with no gaps or duplicates; this is also
// the import format for scores produced outside the toolkit (e.g.
// tree-ensemble variable importances).
ScoreSet read_scores(const std::filesystem::path& path);
void write_scores(const ScoreSet& scores, const std::filesystem::path& path,
                  const std::vector<std::string>& comments = {});

void write_roc(const RocCurve& curve, const std::filesystem::path& path,
               const std::vector<std::string>& comments = {});

}  // namespace gxe
