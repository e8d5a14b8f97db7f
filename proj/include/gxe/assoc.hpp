#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "gxe/genotype.hpp"

namespace gxe {

enum class FitStatus : std::uint8_t { ok, not_converged, separated, degenerate };

const char* fit_status_name(FitStatus s);
FitStatus fit_status_from_name(const std::string& name);

struct LogisticFit {
    Eigen::VectorXd beta;
    Eigen::VectorXd se;
    double log_lik = 0.0;
    int iterations = 0;
    FitStatus status = FitStatus::ok;
};

struct LogisticOptions {
    int max_iter = 25;
    double tol = 1e-8;                     // convergence on max |delta beta|
    double separation_threshold = 10.0;    // |beta| on sd-standardized columns
    const Eigen::VectorXd* warm_start = nullptr;
};

// Newton-Raphson with step halving, so the log-likelihood never decreases.
// Collinear designs are reported as degenerate, quasi-separated fits as
// separated; standard errors come from the inverse observed information.
LogisticFit logistic_irls(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                          const LogisticOptions& opts = {});

// Two-sided Wald p-value; NaN when se is not a positive finite number.
double wald_p(double beta, double se);

struct SnpAssociation {
    std::string snp_id;
    std::string chromosome;
    std::int64_t position = 0;
    std::size_t n_used = 0;
    double beta_snp = 0.0, se_snp = 0.0, p_snp = 1.0;
    double beta_int = 0.0, se_int = 0.0, p_int = 1.0;
    FitStatus status = FitStatus::ok;
};

struct ScanOptions {
    GeneticCoding coding = GeneticCoding::additive;
    // Column of the covariate matrix entering the SNP x covariate product
    // term; -1 scans main effects only.
    int interaction_covariate = -1;
    IndexRange region{0, 0};  // empty means the whole panel
    int threads = 1;
    int max_iter = 25;
    double tol = 1e-8;
};

struct ScanResult {
    std::vector<SnpAssociation> rows;
    GeneticCoding coding = GeneticCoding::additive;
    bool has_interaction = false;
};

// Per-SNP logistic regression of y on [1 | snp | covariates] plus, when
// requested, the snp x covariate product. Individuals missing the SNP are
// dropped for that SNP only. Covariate rows align with dataset samples.
ScanResult scan_logistic(const GenotypeDataset& ds,
                         const Eigen::MatrixXd& covariates,
                         std::span<const std::uint8_t> y,
                         const ScanOptions& opts = {});

// The p-value the downstream power stages should rank on: the interaction
// test when present, else the SNP main effect. NaN when not testable.
double association_p(const SnpAssociation& row, bool has_interaction);

void write_scan_result(const ScanResult& result,
                       const std::filesystem::path& path,
                       const std::vector<std::string>& comments = {});
ScanResult read_scan_result(const std::filesystem::path& path);

}  // namespace gxe
