#include "gxe/popstruct.hpp"

#include <cmath>

#include "gxe/error.hpp"

namespace gxe {

StandardizedGenotypes standardize(const GenotypeMatrix& matrix,
                                  std::span<const std::size_t> indices) {
    const std::size_t n = matrix.n_individuals();
    StandardizedGenotypes out;
    out.matrix.resize(n, indices.size());

    std::size_t kept = 0;
    for (std::size_t idx : indices) {
        const auto col = matrix.column(idx);
        double sum = 0.0;
        std::size_t count = 0;
        for (auto d : col) {
            if (d == GenotypeMatrix::kMissing) continue;
            sum += d;
            ++count;
        }
        if (count < 2) {
            out.excluded.push_back(idx);
            continue;
        }
        const double mean = sum / static_cast<double>(count);
        double ss = 0.0;
        for (auto d : col) {
            if (d == GenotypeMatrix::kMissing) continue;
            const double c = d - mean;
            ss += c * c;
        }
        const double var = ss / static_cast<double>(count - 1);
        if (var <= 0.0) {
            out.excluded.push_back(idx);
            continue;
        }
        const double inv_sd = 1.0 / std::sqrt(var);
        for (std::size_t i = 0; i < n; ++i) {
            const auto d = col[i];
            out.matrix(i, kept) =
                d == GenotypeMatrix::kMissing ? 0.0 : (d - mean) * inv_sd;
        }
        out.used.push_back(idx);
        ++kept;
    }
    out.matrix.conservativeResize(Eigen::NoChange, kept);
    return out;
}

PcaResult pca_on_indices(const GenotypeMatrix& matrix, int k,
                         std::span<const std::size_t> indices) {
    auto std_geno = standardize(matrix, indices);
    const auto n = std_geno.matrix.rows();
    const auto m = std_geno.matrix.cols();
    if (k < 1) throw ConfigError("pca: k must be >= 1");
    if (k > std::min(n, m))
        throw ConfigError("pca: k exceeds min(n_individuals, n_snps_used)");

    Eigen::BDCSVD<Eigen::MatrixXd> svd(
        std_geno.matrix, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();

    // Numerical rank; requesting components beyond it is an error.
    const double tol = sv.size() ? sv(0) * 1e-9 : 0.0;
    int rank = 0;
    for (Eigen::Index j = 0; j < sv.size(); ++j)
        if (sv(j) > tol) ++rank;
    if (k > rank)
        throw ConfigError("pca: requested " + std::to_string(k) +
                          " components but achievable rank is " +
                          std::to_string(rank));

    PcaResult res;
    res.snp_indices_used = std::move(std_geno.used);
    res.loadings = svd.matrixV().leftCols(k);
    res.scores = std_geno.matrix * res.loadings;
    res.eigenvalues.resize(k);
    for (int j = 0; j < k; ++j)
        res.eigenvalues(j) = sv(j) * sv(j) / static_cast<double>(n - 1);

    // Sign convention: largest-magnitude loading entry positive.
    for (int j = 0; j < k; ++j) {
        Eigen::Index imax = 0;
        double best = -1.0;
        for (Eigen::Index i = 0; i < res.loadings.rows(); ++i) {
            const double a = std::fabs(res.loadings(i, j));
            if (a > best) {
                best = a;
                imax = i;
            }
        }
        if (res.loadings(imax, j) < 0.0) {
            res.loadings.col(j) = -res.loadings.col(j);
            res.scores.col(j) = -res.scores.col(j);
        }
    }
    return res;
}

PcaResult pca(const GenotypeMatrix& matrix, int k, std::size_t thin_step) {
    const auto idx = thin_snps(matrix.n_snps(), thin_step);
    return pca_on_indices(matrix, k, idx);
}

Kinship grm(const GenotypeMatrix& matrix,
            std::span<const std::size_t> indices) {
    auto std_geno = standardize(matrix, indices);
    const auto m = std_geno.matrix.cols();
    if (m == 0) throw DataError("grm: no usable SNPs after standardization");
    Kinship k;
    k.matrix.noalias() =
        std_geno.matrix * std_geno.matrix.transpose() / static_cast<double>(m);
    return k;
}

}  // namespace gxe
