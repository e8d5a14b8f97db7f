#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "gxe/genotype.hpp"
#include "gxe/rng.hpp"

// Independent reference implementations and synthetic data generators used
// by the test suites. Everything here is deliberately written from the
// textbook formulas, not by calling back into the library under test.
namespace testutil {

// Regularized upper incomplete gamma Q(a, x).
double gammq(double a, double x);

// Upper tail of the chi-square distribution with df degrees of freedom.
double chi2_sf(double x, double df);

// Standard normal CDF.
double normal_cdf(double z);

// Two-sided Kolmogorov-Smirnov p-value against U(0,1) (asymptotic form).
double ks_uniform_p(std::vector<double> u);

// Chi-square goodness-of-fit p-value. Cells with expected count below 5
// are merged (smallest first) before computing the statistic; df is the
// merged cell count minus one.
double chi2_gof_p(const std::vector<double>& expected,
                  const std::vector<std::uint64_t>& observed);

// Gamma(alpha, 1) and Beta(a, b) draws (Marsaglia-Tsang squeeze).
double gamma_draw(gxe::Rng& rng, double alpha);
double beta_draw(gxe::Rng& rng, double a, double b);

// Synthetic genotype panel with allele-frequency-differentiated
// sub-populations (Balding-Nichols betas around a shared ancestral
// frequency). Family ids carry the population name; individual ids are
// "<pop>_<i>" and globally unique.
struct PanelSpec {
    std::vector<std::pair<std::string, std::size_t>> pops;
    std::size_t m = 100;
    double fst = 0.1;
    double maf_lo = 0.1, maf_hi = 0.9;
    double missing_rate = 0.0;
    std::uint64_t seed = 1;
};
gxe::GenotypeDataset balding_nichols_panel(const PanelSpec& spec);

// Redraws column j with the same allele frequency in every population so
// the SNP is undifferentiated with a known minor allele frequency.
void plant_causal(gxe::GenotypeDataset& ds, std::size_t j, double freq,
                  std::uint64_t seed);

// Ordinary least squares with the maximum-likelihood variance convention
// (residual sum of squares over n) and normal-approximation p-values.
struct Ols {
    Eigen::VectorXd beta;
    Eigen::VectorXd se;
    std::vector<double> p;
    double sigma2 = 0.0;
    double loglik = 0.0;
};
Ols ols_ml(const Eigen::MatrixXd& X, const Eigen::VectorXd& y);

// Profile ML log-likelihood of y ~ N(X b, s2 (K + delta I)) evaluated the
// dense way: Cholesky of the full covariance, no spectral shortcut.
double dense_lmm_ml_loglik(const Eigen::MatrixXd& K, const Eigen::MatrixXd& X,
                           const Eigen::VectorXd& y, double delta);

// Closed-form logistic regression for a 2x2 table with design [1, x].
// Arguments are the four cell counts.
struct TwoByTwo {
    double b0 = 0.0, b1 = 0.0;
    double se0 = 0.0, se1 = 0.0;
};
TwoByTwo logistic_2x2(double cases_x1, double controls_x1, double cases_x0,
                      double controls_x0);

// Fresh scratch directory under the current working directory; any
// previous content is removed.
std::filesystem::path temp_dir(const std::string& tag);

// Recursive file comparison; returns the relative paths that differ (or
// exist on one side only).
std::vector<std::string> tree_diff(const std::filesystem::path& a,
                                   const std::filesystem::path& b);

}  // namespace testutil
