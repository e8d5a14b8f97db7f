#include "gxe/assoc.hpp"

#include <cmath>
#include <limits>

#include "gxe/error.hpp"
#include "gxe/parallel.hpp"
#include "gxe/stats.hpp"
#include "gxe/tsv.hpp"

namespace gxe {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double log_likelihood(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                      const Eigen::VectorXd& beta, Eigen::VectorXd& eta) {
    eta.noalias() = X * beta;
    double ll = 0.0;
    for (Eigen::Index i = 0; i < eta.size(); ++i) {
        ll += y[i] * eta[i] - log1pexp(eta[i]);
    }
    return ll;
}

// sd of each design column (1 for constants) so the separation threshold is
// scale-free.
Eigen::VectorXd column_scales(const Eigen::MatrixXd& X) {
    const Eigen::Index n = X.rows();
    Eigen::VectorXd scales(X.cols());
    for (Eigen::Index j = 0; j < X.cols(); ++j) {
        const double mean = X.col(j).mean();
        const double ss = (X.col(j).array() - mean).square().sum();
        const double sd = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1)) : 0.0;
        scales[j] = sd > 0.0 ? sd : 1.0;
    }
    return scales;
}
}  // namespace

const char* fit_status_name(FitStatus s) {
    switch (s) {
        case FitStatus::ok: return "ok";
        case FitStatus::not_converged: return "not_converged";
        case FitStatus::separated: return "separated";
        case FitStatus::degenerate: return "degenerate";
    }
    return "degenerate";
}

FitStatus fit_status_from_name(const std::string& name) {
    if (name == "ok") return FitStatus::ok;
    if (name == "not_converged") return FitStatus::not_converged;
    if (name == "separated") return FitStatus::separated;
    if (name == "degenerate") return FitStatus::degenerate;
    throw DataError("unknown fit status '" + name + "'");
}

LogisticFit logistic_irls(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                          const LogisticOptions& opts) {
    const Eigen::Index n = X.rows();
    const Eigen::Index p = X.cols();
    if (y.size() != n) {
        throw ConfigError("logistic_irls: X has " + std::to_string(n) +
                          " rows but y has " + std::to_string(y.size()));
    }
    for (Eigen::Index i = 0; i < n; ++i) {
        if (y[i] != 0.0 && y[i] != 1.0) {
            throw ConfigError("logistic_irls: response must be 0/1");
        }
    }

    LogisticFit fit;
    fit.beta = (opts.warm_start && opts.warm_start->size() == p)
                   ? *opts.warm_start
                   : Eigen::VectorXd::Zero(p);
    fit.se = Eigen::VectorXd::Constant(p, kNaN);
    fit.status = FitStatus::not_converged;

    Eigen::VectorXd eta;
    double ll = log_likelihood(X, y, fit.beta, eta);
    Eigen::VectorXd mu(n), w(n), grad(p), delta(p), cand, eta_cand;
    Eigen::MatrixXd H(p, p);
    Eigen::LDLT<Eigen::MatrixXd> ldlt;

    auto information = [&](const Eigen::VectorXd& e) {
        for (Eigen::Index i = 0; i < n; ++i) {
            const double m = sigmoid(e[i]);
            mu[i] = m;
            w[i] = std::max(m * (1.0 - m), 1e-10);
        }
        H.noalias() = X.transpose() * w.asDiagonal() * X;
    };

    for (int iter = 1; iter <= opts.max_iter; ++iter) {
        fit.iterations = iter;
        information(eta);
        grad.noalias() = X.transpose() * (y - mu);
        ldlt.compute(H);
        const auto& D = ldlt.vectorD();
        if (ldlt.info() != Eigen::Success ||
            D.minCoeff() <= D.maxCoeff() * 1e-12) {
            fit.status = FitStatus::degenerate;
            return fit;
        }
        delta = ldlt.solve(grad);

        double t = 1.0;
        double ll_new = ll;
        for (int halve = 0; halve < 40; ++halve) {
            cand = fit.beta + t * delta;
            ll_new = log_likelihood(X, y, cand, eta_cand);
            if (ll_new >= ll) break;
            t *= 0.5;
        }
        const double max_step = (t * delta).cwiseAbs().maxCoeff();
        fit.beta = cand;
        eta.swap(eta_cand);
        ll = ll_new;
        if (max_step < opts.tol) {
            fit.status = FitStatus::ok;
            break;
        }
    }
    fit.log_lik = ll;

    const Eigen::VectorXd scales = column_scales(X);
    if ((fit.beta.cwiseAbs().cwiseProduct(scales)).maxCoeff() >
        opts.separation_threshold) {
        fit.status = FitStatus::separated;
        return fit;
    }
    if (fit.status != FitStatus::ok) return fit;

    information(eta);
    ldlt.compute(H);
    const auto& D = ldlt.vectorD();
    if (ldlt.info() != Eigen::Success || D.minCoeff() <= D.maxCoeff() * 1e-12) {
        fit.status = FitStatus::degenerate;
        return fit;
    }
    const Eigen::MatrixXd cov = ldlt.solve(Eigen::MatrixXd::Identity(p, p));
    for (Eigen::Index j = 0; j < p; ++j) {
        fit.se[j] = cov(j, j) > 0.0 ? std::sqrt(cov(j, j)) : kNaN;
    }
    return fit;
}

double wald_p(double beta, double se) {
    if (!std::isfinite(beta) || !std::isfinite(se) || se <= 0.0) return kNaN;
    return two_sided_p(beta / se);
}

ScanResult scan_logistic(const GenotypeDataset& ds,
                         const Eigen::MatrixXd& covariates,
                         std::span<const std::uint8_t> y,
                         const ScanOptions& opts) {
    const std::size_t n = ds.matrix.n_individuals();
    const std::size_t m = ds.matrix.n_snps();
    if (static_cast<std::size_t>(covariates.rows()) != n &&
        !(covariates.size() == 0 && covariates.rows() == 0)) {
        throw ConfigError("scan_logistic: covariate rows (" +
                          std::to_string(covariates.rows()) +
                          ") do not match individuals (" + std::to_string(n) + ")");
    }
    if (y.size() != n) {
        throw ConfigError("scan_logistic: phenotype length " +
                          std::to_string(y.size()) + " does not match " +
                          std::to_string(n) + " individuals");
    }
    const Eigen::Index q = covariates.cols();
    const int icov = opts.interaction_covariate;
    if (icov < -1 || icov >= q) {
        throw ConfigError("scan_logistic: interaction covariate index " +
                          std::to_string(icov) + " out of range for " +
                          std::to_string(q) + " covariates");
    }
    IndexRange region = opts.region;
    if (region.size() == 0) region = {0, m};
    if (region.begin > region.end || region.end > m) {
        throw ConfigError("scan_logistic: region [" + std::to_string(region.begin) +
                          ", " + std::to_string(region.end) +
                          ") out of bounds for " + std::to_string(m) + " SNPs");
    }

    const bool with_int = icov >= 0;
    const Eigen::Index p_full = 2 + q + (with_int ? 1 : 0);

    // Warm start from the covariate-only null fit on the full panel.
    Eigen::VectorXd warm = Eigen::VectorXd::Zero(p_full);
    {
        Eigen::MatrixXd X0(n, 1 + q);
        Eigen::VectorXd y0(n);
        for (std::size_t i = 0; i < n; ++i) {
            X0(i, 0) = 1.0;
            for (Eigen::Index j = 0; j < q; ++j) X0(i, 1 + j) = covariates(i, j);
            y0[i] = y[i] ? 1.0 : 0.0;
        }
        LogisticOptions null_opts;
        null_opts.max_iter = opts.max_iter;
        null_opts.tol = opts.tol;
        const LogisticFit null_fit = logistic_irls(X0, y0, null_opts);
        if (null_fit.status == FitStatus::ok) {
            warm[0] = null_fit.beta[0];
            for (Eigen::Index j = 0; j < q; ++j) warm[2 + j] = null_fit.beta[1 + j];
        }
    }

    ScanResult result;
    result.coding = opts.coding;
    result.has_interaction = with_int;
    result.rows.resize(region.size());

    parallel_for(region.size(), opts.threads, [&](std::size_t idx) {
        const std::size_t j = region.begin + idx;
        const auto col = ds.matrix.column(j);
        SnpAssociation out;
        const SnpRecord& rec = ds.snps[j];
        out.snp_id = rec.snp_id;
        out.chromosome = rec.chromosome;
        out.position = rec.bp_position;
        out.beta_snp = out.se_snp = out.p_snp = kNaN;
        out.beta_int = out.se_int = out.p_int = kNaN;

        std::vector<std::uint32_t> keep;
        keep.reserve(n);
        for (std::size_t i = 0; i < n; ++i) {
            if (col[i] != GenotypeMatrix::kMissing) {
                keep.push_back(static_cast<std::uint32_t>(i));
            }
        }
        out.n_used = keep.size();
        if (keep.size() <= static_cast<std::size_t>(p_full)) {
            out.status = FitStatus::degenerate;
            result.rows[idx] = std::move(out);
            return;
        }

        Eigen::MatrixXd X(keep.size(), p_full);
        Eigen::VectorXd yv(keep.size());
        for (std::size_t r = 0; r < keep.size(); ++r) {
            const std::size_t i = keep[r];
            const std::uint8_t d = col[i];
            const double g = opts.coding == GeneticCoding::dominant
                                 ? (d > 0 ? 1.0 : 0.0)
                                 : static_cast<double>(d);
            X(r, 0) = 1.0;
            X(r, 1) = g;
            for (Eigen::Index c = 0; c < q; ++c) X(r, 2 + c) = covariates(i, c);
            if (with_int) X(r, p_full - 1) = g * covariates(i, icov);
            yv[r] = y[i] ? 1.0 : 0.0;
        }

        LogisticOptions fit_opts;
        fit_opts.max_iter = opts.max_iter;
        fit_opts.tol = opts.tol;
        fit_opts.warm_start = &warm;
        const LogisticFit fit = logistic_irls(X, yv, fit_opts);
        out.status = fit.status;
        if (fit.status == FitStatus::ok) {
            out.beta_snp = fit.beta[1];
            out.se_snp = fit.se[1];
            out.p_snp = wald_p(out.beta_snp, out.se_snp);
            if (with_int) {
                out.beta_int = fit.beta[p_full - 1];
                out.se_int = fit.se[p_full - 1];
                out.p_int = wald_p(out.beta_int, out.se_int);
            }
        }
        result.rows[idx] = std::move(out);
    });
    return result;
}

double association_p(const SnpAssociation& row, bool has_interaction) {
    return has_interaction ? row.p_int : row.p_snp;
}

void write_scan_result(const ScanResult& result,
                       const std::filesystem::path& path,
                       const std::vector<std::string>& comments) {
    TsvTable table;
    table.comments = comments;
    table.comments.push_back(result.has_interaction ? "test=snp_x_cov"
                                                    : "test=snp");
    table.header = {"snp_id", "chromosome", "position", "coding",  "n_used",
                    "beta_snp", "se_snp",  "p_snp",    "beta_int", "se_int",
                    "p_int",    "status"};
    table.rows.reserve(result.rows.size());
    for (const auto& r : result.rows) {
        table.rows.push_back({r.snp_id, r.chromosome, std::to_string(r.position),
                              coding_name(result.coding),
                              std::to_string(r.n_used), format_double(r.beta_snp),
                              format_double(r.se_snp), format_double(r.p_snp),
                              format_double(r.beta_int), format_double(r.se_int),
                              format_double(r.p_int), fit_status_name(r.status)});
    }
    table.write(path);
}

ScanResult read_scan_result(const std::filesystem::path& path) {
    TsvTable table = TsvTable::read(path);
    ScanResult result;
    for (const auto& c : table.comments) {
        if (c == "test=snp_x_cov") result.has_interaction = true;
    }
    const std::size_t i_id = table.column_index("snp_id");
    const std::size_t i_chrom = table.column_index("chromosome");
    const std::size_t i_pos = table.column_index("position");
    const std::size_t i_coding = table.column_index("coding");
    const std::size_t i_n = table.column_index("n_used");
    const std::size_t i_bs = table.column_index("beta_snp");
    const std::size_t i_ss = table.column_index("se_snp");
    const std::size_t i_ps = table.column_index("p_snp");
    const std::size_t i_bi = table.column_index("beta_int");
    const std::size_t i_si = table.column_index("se_int");
    const std::size_t i_pi = table.column_index("p_int");
    const std::size_t i_st = table.column_index("status");
    result.rows.reserve(table.rows.size());
    for (const auto& row : table.rows) {
        SnpAssociation r;
        r.snp_id = row[i_id];
        r.chromosome = row[i_chrom];
        r.position = std::stoll(row[i_pos]);
        result.coding = row[i_coding] == "dominant" ? GeneticCoding::dominant
                                                    : GeneticCoding::additive;
        r.n_used = std::stoul(row[i_n]);
        r.beta_snp = parse_double(row[i_bs]);
        r.se_snp = parse_double(row[i_ss]);
        r.p_snp = parse_double(row[i_ps]);
        r.beta_int = parse_double(row[i_bi]);
        r.se_int = parse_double(row[i_si]);
        r.p_int = parse_double(row[i_pi]);
        r.status = fit_status_from_name(row[i_st]);
        result.rows.push_back(std::move(r));
    }
    return result;
}

}  // namespace gxe
