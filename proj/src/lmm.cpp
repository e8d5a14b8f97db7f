#include "gxe/lmm.hpp"

#include <cmath>
#include <limits>

#include "gxe/error.hpp"
#include "gxe/parallel.hpp"
#include "gxe/stats.hpp"
#include "gxe/tsv.hpp"

namespace gxe {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kLn2Pi = 1.8378770664093453;

struct GlsFit {
    Eigen::VectorXd beta;
    double sigma_g2 = 0.0;
    double log_lik = 0.0;
    Eigen::MatrixXd information;  // Xt W X, for standard errors
    bool degenerate = false;
};

// Generalized least squares in the rotated basis with W = diag(1/(S+delta)).
GlsFit gls_fit(const Eigen::VectorXd& S, const Eigen::MatrixXd& Xr,
               const Eigen::VectorXd& yr, double delta) {
    const Eigen::Index n = Xr.rows();
    const Eigen::Index p = Xr.cols();
    GlsFit fit;
    Eigen::ArrayXd w = 1.0 / (S.array() + delta);
    fit.information.noalias() = Xr.transpose() * w.matrix().asDiagonal() * Xr;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(fit.information);
    const auto& D = ldlt.vectorD();
    if (ldlt.info() != Eigen::Success ||
        D.minCoeff() <= D.maxCoeff() * 1e-12) {
        fit.degenerate = true;
        return fit;
    }
    fit.beta = ldlt.solve(Xr.transpose() * (w * yr.array()).matrix());
    const Eigen::ArrayXd r = (yr - Xr * fit.beta).array();
    fit.sigma_g2 = (w * r.square()).sum() / static_cast<double>(n);
    const double logdet = (S.array() + delta).log().sum();
    fit.log_lik = -0.5 * (static_cast<double>(n) * kLn2Pi + logdet +
                          static_cast<double>(n) * std::log(fit.sigma_g2) +
                          static_cast<double>(n));
    (void)p;
    return fit;
}
}  // namespace

SpectralKinship eigendecompose_kinship(const Eigen::MatrixXd& K) {
    if (K.rows() != K.cols()) {
        throw ConfigError("kinship matrix must be square, got " +
                          std::to_string(K.rows()) + "x" +
                          std::to_string(K.cols()));
    }
    const double scale = K.cwiseAbs().maxCoeff();
    const double asym = (K - K.transpose()).cwiseAbs().maxCoeff();
    if (asym > 1e-8 * (1.0 + scale)) {
        throw ConfigError("kinship matrix is not symmetric (max asymmetry " +
                          format_double(asym) + ")");
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(K);
    if (solver.info() != Eigen::Success) {
        throw DataError("kinship eigendecomposition failed to converge");
    }
    SpectralKinship spec;
    const Eigen::Index n = K.rows();
    spec.U.resize(n, n);
    spec.S.resize(n);
    // Eigen returns increasing eigenvalues; store them largest-first.
    for (Eigen::Index j = 0; j < n; ++j) {
        spec.S[j] = std::max(solver.eigenvalues()[n - 1 - j], 0.0);
        spec.U.col(j) = solver.eigenvectors().col(n - 1 - j);
    }
    return spec;
}

double lmm_profile_loglik(const SpectralKinship& spectral,
                          const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                          double delta, double* sigma_g2_out) {
    if (!(delta > 0.0)) {
        throw ConfigError("lmm: delta must be positive, got " +
                          format_double(delta));
    }
    const Eigen::MatrixXd Xr = spectral.U.transpose() * X;
    const Eigen::VectorXd yr = spectral.U.transpose() * y;
    const GlsFit fit = gls_fit(spectral.S, Xr, yr, delta);
    if (fit.degenerate) {
        throw ConfigError("lmm: design matrix is rank deficient");
    }
    if (sigma_g2_out) *sigma_g2_out = fit.sigma_g2;
    return fit.log_lik;
}

NullModelFit fit_null_delta(const SpectralKinship& spectral,
                            const Eigen::MatrixXd& X,
                            const Eigen::VectorXd& y) {
    const Eigen::MatrixXd Xr = spectral.U.transpose() * X;
    const Eigen::VectorXd yr = spectral.U.transpose() * y;

    auto neg_ll = [&](double ln_delta) {
        const GlsFit fit = gls_fit(spectral.S, Xr, yr, std::exp(ln_delta));
        if (fit.degenerate) {
            throw ConfigError("lmm: design matrix is rank deficient");
        }
        return -fit.log_lik;
    };

    constexpr int kGridPoints = 61;
    constexpr double kLo = -10.0, kHi = 10.0;
    int best = 0;
    double best_val = std::numeric_limits<double>::infinity();
    for (int i = 0; i < kGridPoints; ++i) {
        const double x = kLo + (kHi - kLo) * i / (kGridPoints - 1);
        const double v = neg_ll(x);
        if (v < best_val) {
            best_val = v;
            best = i;
        }
    }
    const double step = (kHi - kLo) / (kGridPoints - 1);
    NullModelFit out;
    out.at_grid_edge = best == 0 || best == kGridPoints - 1;
    double a = kLo + step * std::max(best - 1, 0);
    double b = kLo + step * std::min(best + 1, kGridPoints - 1);

    // Golden-section search inside the bracketing grid cells.
    constexpr double kInvPhi = 0.6180339887498949;
    double x1 = b - kInvPhi * (b - a);
    double x2 = a + kInvPhi * (b - a);
    double f1 = neg_ll(x1), f2 = neg_ll(x2);
    while (b - a > 1e-6 * (1.0 + std::abs(a) + std::abs(b))) {
        if (f1 < f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - kInvPhi * (b - a);
            f1 = neg_ll(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + kInvPhi * (b - a);
            f2 = neg_ll(x2);
        }
    }
    const double ln_delta = 0.5 * (a + b);
    out.delta = std::exp(ln_delta);
    const GlsFit fit = gls_fit(spectral.S, Xr, yr, out.delta);
    out.sigma_g2 = fit.sigma_g2;
    out.log_lik = fit.log_lik;
    return out;
}

Eigen::MatrixXd rotate_genotypes(const SpectralKinship& spectral,
                                 const GenotypeMatrix& matrix,
                                 IndexRange region, int threads) {
    const std::size_t n = matrix.n_individuals();
    if (region.size() == 0) region = {0, matrix.n_snps()};
    if (region.begin > region.end || region.end > matrix.n_snps()) {
        throw ConfigError("rotate_genotypes: region out of bounds");
    }
    if (static_cast<std::size_t>(spectral.U.rows()) != n) {
        throw ConfigError("rotate_genotypes: kinship size mismatch");
    }
    Eigen::MatrixXd rotated(n, region.size());
    const Eigen::MatrixXd Ut = spectral.U.transpose();
    parallel_for(region.size(), threads, [&](std::size_t c) {
        const auto col = matrix.column(region.begin + c);
        double sum = 0.0;
        std::size_t present = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (col[i] != GenotypeMatrix::kMissing) {
                sum += col[i];
                ++present;
            }
        }
        const double mean = present ? sum / static_cast<double>(present) : 0.0;
        Eigen::VectorXd g(n);
        for (std::size_t i = 0; i < n; ++i) {
            g[i] = col[i] == GenotypeMatrix::kMissing
                       ? mean
                       : static_cast<double>(col[i]);
        }
        rotated.col(c).noalias() = Ut * g;
    });
    return rotated;
}

LmmScanResult lmm_scan(const GenotypeDataset& ds,
                       const Eigen::MatrixXd& covariates,
                       std::span<const std::uint8_t> y,
                       const SpectralKinship& spectral,
                       const LmmOptions& opts) {
    const std::size_t n = ds.matrix.n_individuals();
    const std::size_t m = ds.matrix.n_snps();
    if (static_cast<std::size_t>(spectral.U.rows()) != n) {
        throw ConfigError("lmm_scan: kinship is for " +
                          std::to_string(spectral.U.rows()) +
                          " individuals, dataset has " + std::to_string(n));
    }
    if (y.size() != n) {
        throw ConfigError("lmm_scan: phenotype length mismatch");
    }
    if (static_cast<std::size_t>(covariates.rows()) != n &&
        !(covariates.size() == 0 && covariates.rows() == 0)) {
        throw ConfigError("lmm_scan: covariate rows do not match individuals");
    }
    IndexRange region = opts.region;
    if (region.size() == 0) region = {0, m};
    if (region.begin > region.end || region.end > m) {
        throw ConfigError("lmm_scan: region out of bounds");
    }

    const Eigen::Index q = covariates.cols();
    Eigen::MatrixXd X0(n, 1 + q);
    Eigen::VectorXd yv(n);
    for (std::size_t i = 0; i < n; ++i) {
        X0(i, 0) = 1.0;
        for (Eigen::Index j = 0; j < q; ++j) X0(i, 1 + j) = covariates(i, j);
        yv[i] = y[i] ? 1.0 : 0.0;
    }

    LmmScanResult result;
    if (opts.fixed_delta) {
        result.null_fit.delta = *opts.fixed_delta;
        result.null_fit.log_lik = lmm_profile_loglik(
            spectral, X0, yv, result.null_fit.delta, &result.null_fit.sigma_g2);
    } else {
        result.null_fit = fit_null_delta(spectral, X0, yv);
    }
    const double delta = result.null_fit.delta;

    const Eigen::MatrixXd Ut = spectral.U.transpose();
    const Eigen::MatrixXd X0r = Ut * X0;
    const Eigen::VectorXd yr = Ut * yv;
    if (opts.rotated_genotypes &&
        (static_cast<std::size_t>(opts.rotated_genotypes->rows()) != n ||
         static_cast<std::size_t>(opts.rotated_genotypes->cols()) !=
             region.size())) {
        throw ConfigError("lmm_scan: rotated genotype matrix does not match "
                          "the region");
    }

    result.rows.resize(region.size());
    parallel_for(region.size(), opts.threads, [&](std::size_t idx) {
        const std::size_t j = region.begin + idx;
        LmmAssociation out;
        const SnpRecord& rec = ds.snps[j];
        out.snp_id = rec.snp_id;
        out.chromosome = rec.chromosome;
        out.position = rec.bp_position;
        out.n_used = n;
        out.beta = out.se = out.p = kNaN;

        const Eigen::Index p = X0r.cols() + 1;
        Eigen::MatrixXd Xr(n, p);
        Xr.col(0) = X0r.col(0);
        if (opts.rotated_genotypes) {
            Xr.col(1) = opts.rotated_genotypes->col(idx);
        } else {
            // Mean-impute so the rotation keeps every individual.
            const auto col = ds.matrix.column(j);
            double sum = 0.0;
            std::size_t present = 0;
            for (std::size_t i = 0; i < n; ++i) {
                if (col[i] != GenotypeMatrix::kMissing) {
                    sum += col[i];
                    ++present;
                }
            }
            const double mean =
                present ? sum / static_cast<double>(present) : 0.0;
            Eigen::VectorXd g(n);
            for (std::size_t i = 0; i < n; ++i) {
                g[i] = col[i] == GenotypeMatrix::kMissing
                           ? mean
                           : static_cast<double>(col[i]);
            }
            Xr.col(1).noalias() = Ut * g;
        }
        for (Eigen::Index c = 1; c < X0r.cols(); ++c) {
            Xr.col(1 + c) = X0r.col(c);
        }

        const GlsFit fit = gls_fit(spectral.S, Xr, yr, delta);
        if (fit.degenerate) {
            out.status = FitStatus::degenerate;
            result.rows[idx] = std::move(out);
            return;
        }
        Eigen::LDLT<Eigen::MatrixXd> ldlt(fit.information);
        const Eigen::MatrixXd cov =
            ldlt.solve(Eigen::MatrixXd::Identity(p, p)) * fit.sigma_g2;
        out.beta = fit.beta[1];
        out.se = cov(1, 1) > 0.0 ? std::sqrt(cov(1, 1)) : kNaN;
        out.p = wald_p(out.beta, out.se);
        out.status = std::isfinite(out.p) ? FitStatus::ok : FitStatus::degenerate;
        result.rows[idx] = std::move(out);
    });
    return result;
}

void write_lmm_scan(const LmmScanResult& result,
                    const std::filesystem::path& path,
                    const std::vector<std::string>& comments) {
    TsvTable table;
    table.comments = comments;
    table.comments.push_back("test=lmm");
    table.comments.push_back("delta=" + format_double(result.null_fit.delta));
    table.comments.push_back("sigma_g2=" +
                             format_double(result.null_fit.sigma_g2));
    table.comments.push_back("null_log_lik=" +
                             format_double(result.null_fit.log_lik));
    table.header = {"snp_id", "chromosome", "position", "n_used",
                    "beta",   "se",         "p",        "status"};
    table.rows.reserve(result.rows.size());
    for (const auto& r : result.rows) {
        table.rows.push_back({r.snp_id, r.chromosome, std::to_string(r.position),
                              std::to_string(r.n_used), format_double(r.beta),
                              format_double(r.se), format_double(r.p),
                              fit_status_name(r.status)});
    }
    table.write(path);
}

LmmScanResult read_lmm_scan(const std::filesystem::path& path) {
    TsvTable table = TsvTable::read(path);
    LmmScanResult result;
    for (const auto& c : table.comments) {
        if (c.rfind("delta=", 0) == 0) {
            result.null_fit.delta = parse_double(c.substr(6));
        } else if (c.rfind("sigma_g2=", 0) == 0) {
            result.null_fit.sigma_g2 = parse_double(c.substr(9));
        } else if (c.rfind("null_log_lik=", 0) == 0) {
            result.null_fit.log_lik = parse_double(c.substr(13));
        }
    }
    const std::size_t i_id = table.column_index("snp_id");
    const std::size_t i_chrom = table.column_index("chromosome");
    const std::size_t i_pos = table.column_index("position");
    const std::size_t i_n = table.column_index("n_used");
    const std::size_t i_b = table.column_index("beta");
    const std::size_t i_s = table.column_index("se");
    const std::size_t i_p = table.column_index("p");
    const std::size_t i_st = table.column_index("status");
    for (const auto& row : table.rows) {
        LmmAssociation r;
        r.snp_id = row[i_id];
        r.chromosome = row[i_chrom];
        r.position = std::stoll(row[i_pos]);
        r.n_used = std::stoul(row[i_n]);
        r.beta = parse_double(row[i_b]);
        r.se = parse_double(row[i_s]);
        r.p = parse_double(row[i_p]);
        r.status = fit_status_from_name(row[i_st]);
        result.rows.push_back(std::move(r));
    }
    return result;
}

}  // namespace gxe
