#include "gxe/power.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>

#include "gxe/error.hpp"
#include "gxe/tsv.hpp"

namespace gxe {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kZ975 = 1.959963984540054;

void require_finite(std::span<const double> scores, const char* which) {
    for (double s : scores) {
        if (!std::isfinite(s)) {
            throw ConfigError(std::string("roc/auc: non-finite score in the ") +
                              which + " sample");
        }
    }
}
}  // namespace

double summary_min_p(std::span<const double> p_values) {
    double best = kNaN;
    for (double p : p_values) {
        if (!std::isfinite(p)) continue;
        if (!(p >= 0.0)) continue;
        if (std::isnan(best) || p < best) best = p;
    }
    if (std::isnan(best)) return kNaN;
    // Guard against p == 0 from underflow; cap at the smallest positive p.
    if (best <= 0.0) best = std::numeric_limits<double>::denorm_min();
    return -std::log10(best);
}

RocCurve roc(std::span<const double> h0_scores,
             std::span<const double> h1_scores) {
    if (h0_scores.empty() || h1_scores.empty()) {
        throw ConfigError("roc: both score samples must be non-empty");
    }
    require_finite(h0_scores, "H0");
    require_finite(h1_scores, "H1");

    std::vector<double> h0(h0_scores.begin(), h0_scores.end());
    std::vector<double> h1(h1_scores.begin(), h1_scores.end());
    std::sort(h0.begin(), h0.end());
    std::sort(h1.begin(), h1.end());

    std::vector<double> thresholds;
    thresholds.reserve(h0.size() + h1.size());
    thresholds.insert(thresholds.end(), h0.begin(), h0.end());
    thresholds.insert(thresholds.end(), h1.begin(), h1.end());
    std::sort(thresholds.begin(), thresholds.end(), std::greater<>());
    thresholds.erase(std::unique(thresholds.begin(), thresholds.end()),
                     thresholds.end());

    RocCurve curve;
    curve.fpr.push_back(0.0);
    curve.tpr.push_back(0.0);
    curve.thresholds.push_back(std::numeric_limits<double>::infinity());
    const double n0 = static_cast<double>(h0.size());
    const double n1 = static_cast<double>(h1.size());
    for (double t : thresholds) {
        const auto ge0 = h0.end() - std::lower_bound(h0.begin(), h0.end(), t);
        const auto ge1 = h1.end() - std::lower_bound(h1.begin(), h1.end(), t);
        curve.fpr.push_back(static_cast<double>(ge0) / n0);
        curve.tpr.push_back(static_cast<double>(ge1) / n1);
        curve.thresholds.push_back(t);
    }
    return curve;
}

double trapezoid_area(const RocCurve& curve) {
    double area = 0.0;
    for (std::size_t i = 1; i < curve.fpr.size(); ++i) {
        area += (curve.fpr[i] - curve.fpr[i - 1]) *
                0.5 * (curve.tpr[i] + curve.tpr[i - 1]);
    }
    return area;
}

AucResult auc_delong(std::span<const double> h0_scores,
                     std::span<const double> h1_scores) {
    if (h0_scores.size() < 2 || h1_scores.size() < 2) {
        throw ConfigError("auc: need at least two scores per hypothesis, got " +
                          std::to_string(h0_scores.size()) + " / " +
                          std::to_string(h1_scores.size()));
    }
    require_finite(h0_scores, "H0");
    require_finite(h1_scores, "H1");

    std::vector<double> h0(h0_scores.begin(), h0_scores.end());
    std::sort(h0.begin(), h0.end());
    const std::size_t n0 = h0.size();
    const std::size_t n1 = h1_scores.size();

    // Placement counts in half units: c_i = 2*#{y < x_i} + #{y == x_i}.
    // Their integer sum gives the AUC numerator exactly.
    std::vector<std::uint64_t> c10(n1);
    std::uint64_t half_units = 0;
    for (std::size_t i = 0; i < n1; ++i) {
        const double x = h1_scores[i];
        const std::uint64_t lt =
            std::lower_bound(h0.begin(), h0.end(), x) - h0.begin();
        const std::uint64_t le =
            std::upper_bound(h0.begin(), h0.end(), x) - h0.begin();
        c10[i] = lt + le;  // 2*lt + (le - lt)
        half_units += c10[i];
    }

    AucResult out;
    out.n_h0 = n0;
    out.n_h1 = n1;
    const std::uint64_t mn = static_cast<std::uint64_t>(n0) * n1;
    // Canonical rounding so that swapping the samples reflects the AUC about
    // 1/2 without floating-point drift.
    out.auc = half_units <= mn
                  ? static_cast<double>(half_units) / static_cast<double>(2 * mn)
                  : 1.0 - static_cast<double>(2 * mn - half_units) /
                              static_cast<double>(2 * mn);

    // DeLong placements V10 (per H1 score) and V01 (per H0 score).
    std::vector<double> h1s(h1_scores.begin(), h1_scores.end());
    std::sort(h1s.begin(), h1s.end());
    double s10 = 0.0, s01 = 0.0;
    {
        std::vector<double> v10(n1);
        for (std::size_t i = 0; i < n1; ++i) {
            v10[i] = static_cast<double>(c10[i]) / static_cast<double>(2 * n0);
        }
        double mean = 0.0;
        for (double v : v10) mean += v;
        mean /= static_cast<double>(n1);
        for (double v : v10) s10 += (v - mean) * (v - mean);
        s10 /= static_cast<double>(n1 - 1);
    }
    {
        std::vector<double> v01(n0);
        double mean = 0.0;
        for (std::size_t j = 0; j < n0; ++j) {
            const double y = h0[j];
            const std::uint64_t gt =
                h1s.end() - std::upper_bound(h1s.begin(), h1s.end(), y);
            const std::uint64_t ge =
                h1s.end() - std::lower_bound(h1s.begin(), h1s.end(), y);
            v01[j] = static_cast<double>(gt + ge) / static_cast<double>(2 * n1);
            mean += v01[j];
        }
        mean /= static_cast<double>(n0);
        for (double v : v01) s01 += (v - mean) * (v - mean);
        s01 /= static_cast<double>(n0 - 1);
    }
    const double var = s10 / static_cast<double>(n1) + s01 / static_cast<double>(n0);
    out.se = var > 0.0 ? std::sqrt(var) : 0.0;
    out.ci_lo = std::max(0.0, out.auc - kZ975 * out.se);
    out.ci_hi = std::min(1.0, out.auc + kZ975 * out.se);
    return out;
}

std::string qualitative_label(double auc) {
    if (!std::isfinite(auc)) {
        throw ConfigError("qualitative_label: AUC is not finite");
    }
    if (auc <= 0.6) return "fail";
    if (auc <= 0.7) return "poor";
    if (auc <= 0.8) return "fair";
    if (auc <= 0.9) return "good";
    return "excellent";
}

ScoreSet read_scores(const std::filesystem::path& path) {
    TsvTable table = TsvTable::read(path);
    const std::size_t i_rep = table.column_index("replicate");
    const std::size_t i_hyp = table.column_index("hypothesis");
    const std::size_t i_score = table.column_index("score");

    std::map<std::size_t, double> h0, h1;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        std::size_t rep = 0;
        try {
            rep = std::stoul(row[i_rep]);
        } catch (const std::exception&) {
            throw DataError(path.string() + ": bad replicate index '" +
                            row[i_rep] + "'");
        }
        std::map<std::size_t, double>* target = nullptr;
        if (row[i_hyp] == "H0") {
            target = &h0;
        } else if (row[i_hyp] == "H1") {
            target = &h1;
        } else {
            throw DataError(path.string() + ": hypothesis must be H0 or H1, got '" +
                            row[i_hyp] + "'");
        }
        if (!target->emplace(rep, parse_double(row[i_score])).second) {
            throw DataError(path.string() + ": duplicate score for " + row[i_hyp] +
                            " replicate " + std::to_string(rep));
        }
    }
    auto flatten = [&](const std::map<std::size_t, double>& by_rep,
                       const char* hyp) {
        std::vector<double> out;
        out.reserve(by_rep.size());
        std::size_t expect = 0;
        for (const auto& [rep, score] : by_rep) {
            if (rep != expect) {
                throw DataError(path.string() + ": " + hyp + " replicate " +
                                std::to_string(expect) +
                                " is missing (replicates must be contiguous from 0)");
            }
            out.push_back(score);
            ++expect;
        }
        return out;
    };
    ScoreSet set;
    set.h0 = flatten(h0, "H0");
    set.h1 = flatten(h1, "H1");
    return set;
}

void write_scores(const ScoreSet& scores, const std::filesystem::path& path,
                  const std::vector<std::string>& comments) {
    TsvTable table;
    table.comments = comments;
    table.header = {"replicate", "hypothesis", "score"};
    for (std::size_t r = 0; r < scores.h0.size(); ++r) {
        table.rows.push_back({std::to_string(r), "H0", format_double(scores.h0[r])});
    }
    for (std::size_t r = 0; r < scores.h1.size(); ++r) {
        table.rows.push_back({std::to_string(r), "H1", format_double(scores.h1[r])});
    }
    table.write(path);
}

void write_roc(const RocCurve& curve, const std::filesystem::path& path,
               const std::vector<std::string>& comments) {
    TsvTable table;
    table.comments = comments;
    table.header = {"threshold", "fpr", "tpr"};
    for (std::size_t i = 0; i < curve.fpr.size(); ++i) {
        table.rows.push_back({format_double(curve.thresholds[i]),
                              format_double(curve.fpr[i]),
                              format_double(curve.tpr[i])});
    }
    table.write(path);
}

}  // namespace gxe
