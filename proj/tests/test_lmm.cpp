#include <cmath>

#include "doctest.h"
#include "gxe/error.hpp"
#include "gxe/lmm.hpp"
#include "gxe/popstruct.hpp"
#include "support/testutil.hpp"

using namespace gxe;

namespace {

Eigen::MatrixXd random_kinship(int n, int rank, std::uint64_t seed) {
    Rng rng(seed);
    Eigen::MatrixXd A(n, rank);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < rank; ++j) A(i, j) = rng.normal();
    }
    Eigen::MatrixXd K = A * A.transpose() / static_cast<double>(rank);
    K.diagonal().array() += 0.05;  // keep it comfortably positive definite
    return K;
}

}  // namespace

TEST_CASE("eigendecomposition reconstructs the kinship") {
    const Eigen::MatrixXd K = random_kinship(15, 20, 1);
    const SpectralKinship sp = eigendecompose_kinship(K);
    REQUIRE(sp.S.size() == 15);
    for (int i = 1; i < sp.S.size(); ++i) CHECK(sp.S[i - 1] >= sp.S[i]);
    const Eigen::MatrixXd back =
        sp.U * sp.S.asDiagonal() * sp.U.transpose();
    CHECK((back - K).cwiseAbs().maxCoeff() < 1e-10);

    Eigen::MatrixXd asym = K;
    asym(0, 1) += 1.0;
    CHECK_THROWS_AS(eigendecompose_kinship(asym), ConfigError);
}

TEST_CASE("spectral likelihood equals the dense computation") {
    const int n = 20;
    const Eigen::MatrixXd K = random_kinship(n, 30, 7);
    const SpectralKinship sp = eigendecompose_kinship(K);
    Rng rng(11);
    Eigen::MatrixXd X(n, 2);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) {
        X(i, 0) = 1.0;
        X(i, 1) = rng.normal();
        y[i] = rng.normal() + 0.3 * X(i, 1);
    }
    for (const double delta : {0.05, 0.3, 1.0, 3.7, 25.0}) {
        const double dense = testutil::dense_lmm_ml_loglik(K, X, y, delta);
        const double spectral = lmm_profile_loglik(sp, X, y, delta);
        CHECK(std::fabs(spectral - dense) < 1e-8 * (1.0 + std::fabs(dense)));
    }
}

TEST_CASE("identity kinship scan reproduces OLS") {
    testutil::PanelSpec spec;
    spec.pops = {{"CEU", 50}};
    spec.m = 40;
    spec.fst = 0.0;
    spec.seed = 3;
    const GenotypeDataset ds = testutil::balding_nichols_panel(spec);
    std::vector<std::uint8_t> y(50);
    Rng rng(9);
    for (int i = 0; i < 50; ++i) y[i] = rng.uniform() < 0.4 ? 1 : 0;

    const SpectralKinship sp =
        eigendecompose_kinship(Eigen::MatrixXd::Identity(50, 50));
    const Eigen::MatrixXd cov(50, 0);
    const LmmScanResult res = lmm_scan(ds, cov, y, sp, {});
    REQUIRE(res.rows.size() == 40);

    Eigen::VectorXd yv(50);
    for (int i = 0; i < 50; ++i) yv[i] = y[i];
    for (std::size_t j = 0; j < res.rows.size(); ++j) {
        if (res.rows[j].status != FitStatus::ok) continue;
        Eigen::MatrixXd X(50, 2);
        for (int i = 0; i < 50; ++i) {
            X(i, 0) = 1.0;
            X(i, 1) = static_cast<double>(ds.matrix(i, j));
        }
        const testutil::Ols ols = testutil::ols_ml(X, yv);
        CHECK(std::fabs(res.rows[j].beta - ols.beta[1]) < 1e-8);
        CHECK(std::fabs(res.rows[j].p - ols.p[1]) < 1e-8);
    }
}

TEST_CASE("huge fixed delta collapses the mixed model to OLS") {
    testutil::PanelSpec spec;
    spec.pops = {{"CEU", 40}, {"YRI", 40}};
    spec.m = 60;
    spec.fst = 0.15;
    spec.seed = 21;
    const GenotypeDataset ds = testutil::balding_nichols_panel(spec);
    std::vector<std::size_t> all(ds.matrix.n_snps());
    for (std::size_t j = 0; j < all.size(); ++j) all[j] = j;
    const Kinship K = grm(ds.matrix, all);
    const SpectralKinship sp = eigendecompose_kinship(K.matrix);

    std::vector<std::uint8_t> y(80);
    Rng rng(5);
    for (int i = 0; i < 80; ++i) y[i] = rng.uniform() < 0.5 ? 1 : 0;
    Eigen::VectorXd yv(80);
    for (int i = 0; i < 80; ++i) yv[i] = y[i];

    LmmOptions opts;
    opts.fixed_delta = 1e8;
    const Eigen::MatrixXd cov(80, 0);
    const LmmScanResult res = lmm_scan(ds, cov, y, sp, opts);
    for (std::size_t j = 0; j < res.rows.size(); ++j) {
        if (res.rows[j].status != FitStatus::ok) continue;
        Eigen::MatrixXd X(80, 2);
        bool has_missing = false;
        for (int i = 0; i < 80; ++i) {
            X(i, 0) = 1.0;
            const std::uint8_t g = ds.matrix(i, j);
            if (g == GenotypeMatrix::kMissing) has_missing = true;
            X(i, 1) = g == GenotypeMatrix::kMissing ? 0.0 : g;
        }
        if (has_missing) continue;
        const testutil::Ols ols = testutil::ols_ml(X, yv);
        CHECK(std::fabs(res.rows[j].beta - ols.beta[1]) <
              1e-6 * (1.0 + std::fabs(ols.beta[1])));
        CHECK(std::fabs(res.rows[j].p - ols.p[1]) < 1e-6);
    }
}

TEST_CASE("null delta fit improves on arbitrary deltas") {
    const int n = 60;
    const Eigen::MatrixXd K = random_kinship(n, 25, 17);
    const SpectralKinship sp = eigendecompose_kinship(K);
    Rng rng(23);
    Eigen::MatrixXd X(n, 1);
    Eigen::VectorXd y(n);
    // Phenotype with a genuine genetic component along the kinship.
    const Eigen::LLT<Eigen::MatrixXd> llt(K);
    Eigen::VectorXd u(n);
    for (int i = 0; i < n; ++i) u[i] = rng.normal();
    const Eigen::VectorXd gcomp = llt.matrixL() * u;
    for (int i = 0; i < n; ++i) {
        X(i, 0) = 1.0;
        y[i] = gcomp[i] + 0.7 * rng.normal();
    }
    const NullModelFit fit = fit_null_delta(sp, X, y);
    CHECK(std::isfinite(fit.log_lik));
    CHECK(fit.sigma_g2 > 0.0);
    for (const double delta : {0.01, 0.1, 1.0, 10.0}) {
        CHECK(fit.log_lik >= lmm_profile_loglik(sp, X, y, delta) - 1e-9);
    }
}

TEST_CASE("rotated genotype reuse gives identical scan results") {
    testutil::PanelSpec spec;
    spec.pops = {{"CEU", 30}, {"JPT", 30}};
    spec.m = 25;
    spec.fst = 0.1;
    spec.seed = 8;
    spec.missing_rate = 0.05;
    const GenotypeDataset ds = testutil::balding_nichols_panel(spec);
    std::vector<std::size_t> all(ds.matrix.n_snps());
    for (std::size_t j = 0; j < all.size(); ++j) all[j] = j;
    const Kinship K = grm(ds.matrix, all);
    const SpectralKinship sp = eigendecompose_kinship(K.matrix);
    std::vector<std::uint8_t> y(60);
    Rng rng(91);
    for (int i = 0; i < 60; ++i) y[i] = rng.uniform() < 0.5 ? 1 : 0;
    const Eigen::MatrixXd cov(60, 0);

    const LmmScanResult direct = lmm_scan(ds, cov, y, sp, {});
    const Eigen::MatrixXd rotated =
        rotate_genotypes(sp, ds.matrix, {0, ds.matrix.n_snps()}, 2);
    LmmOptions opts;
    opts.rotated_genotypes = &rotated;
    const LmmScanResult shared = lmm_scan(ds, cov, y, sp, opts);
    REQUIRE(shared.rows.size() == direct.rows.size());
    // bitwise agreement, treating NaN (degenerate SNPs) as equal to itself
    const auto same = [](double a, double b) {
        return a == b || (std::isnan(a) && std::isnan(b));
    };
    for (std::size_t j = 0; j < direct.rows.size(); ++j) {
        CHECK(same(shared.rows[j].beta, direct.rows[j].beta));
        CHECK(same(shared.rows[j].se, direct.rows[j].se));
        CHECK(same(shared.rows[j].p, direct.rows[j].p));
    }
}

TEST_CASE("lmm scan round trips through TSV") {
    testutil::PanelSpec spec;
    spec.pops = {{"CEU", 40}};
    spec.m = 10;
    spec.seed = 2;
    const GenotypeDataset ds = testutil::balding_nichols_panel(spec);
    const SpectralKinship sp =
        eigendecompose_kinship(Eigen::MatrixXd::Identity(40, 40));
    std::vector<std::uint8_t> y(40);
    Rng rng(3);
    for (int i = 0; i < 40; ++i) y[i] = rng.uniform() < 0.5 ? 1 : 0;
    const Eigen::MatrixXd cov(40, 0);
    const LmmScanResult res = lmm_scan(ds, cov, y, sp, {});

    const auto dir = testutil::temp_dir("lmm_tsv");
    write_lmm_scan(res, dir / "lmm.tsv", {"config_hash=9 seed=9"});
    const LmmScanResult back = read_lmm_scan(dir / "lmm.tsv");
    REQUIRE(back.rows.size() == res.rows.size());
    CHECK(back.null_fit.delta == doctest::Approx(res.null_fit.delta));
    for (std::size_t j = 0; j < res.rows.size(); ++j) {
        CHECK(back.rows[j].snp_id == res.rows[j].snp_id);
        if (res.rows[j].status == FitStatus::ok) {
            CHECK(back.rows[j].p == doctest::Approx(res.rows[j].p).epsilon(1e-12));
        }
    }
}
