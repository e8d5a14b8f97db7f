#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "gxe/genotype.hpp"

namespace gxe {

struct StandardizedGenotypes {
    Eigen::MatrixXd matrix;           // n x m_used
    std::vector<std::size_t> used;    // original SNP indices of the columns
    std::vector<std::size_t> excluded;  // zero-variance columns dropped
};

// Mean-centers and scales each selected SNP column to unit sample variance
// (computed over non-missing entries); missing entries map to 0 after
// centering. Zero-variance columns are excluded.
StandardizedGenotypes standardize(const GenotypeMatrix& matrix,
                                  std::span<const std::size_t> indices);

struct PcaResult {
    Eigen::MatrixXd scores;      // n x k
    Eigen::MatrixXd loadings;    // m_used x k, orthonormal columns
    Eigen::VectorXd eigenvalues; // k, nonincreasing
    std::vector<std::size_t> snp_indices_used;
};

// PCA of the standardized, thinned genotype matrix. Loading signs are fixed
// so each column's largest-magnitude entry is positive.
PcaResult pca(const GenotypeMatrix& matrix, int k = 5,
              std::size_t thin_step = 1000);

// As above on an explicit SNP index set.
PcaResult pca_on_indices(const GenotypeMatrix& matrix, int k,
                         std::span<const std::size_t> indices);

struct Kinship {
    Eigen::MatrixXd matrix;  // n x n, symmetric PSD
};

// Genetic relatedness matrix K = S S^T / m_used over the standardized
// columns at `indices`.
Kinship grm(const GenotypeMatrix& matrix, std::span<const std::size_t> indices);

}  // namespace gxe
