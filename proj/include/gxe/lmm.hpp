#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gxe/assoc.hpp"
#include "gxe/genotype.hpp"

namespace gxe {

// K = U diag(S) U^T with eigenvalues in nonincreasing order.
struct SpectralKinship {
    Eigen::MatrixXd U;
    Eigen::VectorXd S;
};

// Symmetric eigendecomposition; tiny negative eigenvalues from rounding are
// clamped to zero.
SpectralKinship eigendecompose_kinship(const Eigen::MatrixXd& K);

struct NullModelFit {
    double delta = 1.0;      // sigma_e^2 / sigma_g^2
    double sigma_g2 = 0.0;
    double log_lik = 0.0;
    bool at_grid_edge = false;
};

// Profile ML log-likelihood of y ~ X at the given delta; optionally returns
// the profiled genetic variance.
double lmm_profile_loglik(const SpectralKinship& spectral,
                          const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                          double delta, double* sigma_g2_out = nullptr);

// Maximizes the profile likelihood over ln delta in [-10, 10]: coarse grid
// of 61 points, then golden-section refinement around the best point. A fit
// ending on a grid boundary is flagged, not an error.
NullModelFit fit_null_delta(const SpectralKinship& spectral,
                            const Eigen::MatrixXd& X,
                            const Eigen::VectorXd& y);

struct LmmOptions {
    IndexRange region{0, 0};  // empty means the whole panel
    int threads = 1;
    // Skips the null optimization and uses this variance ratio directly.
    std::optional<double> fixed_delta;
    // U^T * (mean-imputed dosages) for the scanned region, as produced by
    // rotate_genotypes; lets many replicates share one rotation pass.
    const Eigen::MatrixXd* rotated_genotypes = nullptr;
};

// Mean-imputes each region column and applies U^T once; column c holds SNP
// region.begin + c.
Eigen::MatrixXd rotate_genotypes(const SpectralKinship& spectral,
                                 const GenotypeMatrix& matrix,
                                 IndexRange region, int threads = 1);

struct LmmAssociation {
    std::string snp_id;
    std::string chromosome;
    std::int64_t position = 0;
    std::size_t n_used = 0;
    double beta = 0.0, se = 0.0, p = 1.0;
    FitStatus status = FitStatus::ok;
};

struct LmmScanResult {
    std::vector<LmmAssociation> rows;
    NullModelFit null_fit;
};

// Association scan in the rotated (eigenvector) basis: delta stays at its
// null value, the genetic variance is re-profiled per SNP, and Wald tests
// use the ML variance with a normal reference. The phenotype is fitted on
// the linear scale; missing genotypes are mean-imputed, so every row uses
// all individuals.
LmmScanResult lmm_scan(const GenotypeDataset& ds,
                       const Eigen::MatrixXd& covariates,
                       std::span<const std::uint8_t> y,
                       const SpectralKinship& spectral,
                       const LmmOptions& opts = {});

void write_lmm_scan(const LmmScanResult& result,
                    const std::filesystem::path& path,
                    const std::vector<std::string>& comments = {});
LmmScanResult read_lmm_scan(const std::filesystem::path& path);

}  // namespace gxe
