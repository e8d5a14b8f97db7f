#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "gxe/genotype.hpp"
#include "gxe/rng.hpp"

namespace gxe {

enum class Subpop : std::uint8_t { european, african, asian };

const char* subpop_name(Subpop s);
Subpop subpop_from_name(const std::string& name);

// Smoking prevalence by (sub-population, sex).
struct SmokingRates {
    // [subpop][0=male, 1=female]
    double rate[3][2] = {};
    double get(Subpop s, Sex sex) const;
    void set(Subpop s, Sex sex, double p);
};

// European 37%/27%, African 43.8%/12.9%, Asian 45.7%/4.8% (men/women).
SmokingRates default_smoking_rates();

struct CovSimConfig {
    double heritability = 0.60;      // variance fraction of bmi from PCs
    double residual_sd = 4.0;        // bmi units
    double nonsmoker_offset = 1.5;   // added to bmi for non-smokers
    double bmi_baseline = 25.0;      // smoker average
    std::map<std::string, double> gamma;          // population -> shift
    std::map<std::string, Subpop> subpop_map;     // population -> subgroup
    std::uint64_t seed = 0;

    void validate() const;
};

// CEU,TSI,MEX -> European; YRI,ASW,MKK,LWK -> African;
// CHB,CHD,JPT,GIH -> Asian.
std::map<std::string, Subpop> default_subpop_map();

std::vector<std::uint8_t> simulate_smoking(
    const std::vector<SampleRecord>& samples,
    const std::map<std::string, Subpop>& subpop_map, const SmokingRates& rates,
    Rng& rng);

// bmi_i = baseline + offset*[nonsmoker] + g_i + e_i with e ~ N(0, sd^2) and
// g = pcs * beta rescaled so var(g) / (var(g) + sd^2) equals the configured
// heritability exactly (sample variances, n-1 denominator).
std::vector<double> simulate_bmi(const Eigen::MatrixXd& pcs,
                                 std::span<const std::uint8_t> smoking,
                                 const CovSimConfig& config, Rng& rng);

// P = 1 / ((1 + 2*[male]) * (1 + exp(-bmi + 25 + gamma))); gamma may be
// -inf (limit P -> 1/(1+2*[male])).
double treatment_probability(Sex sex, double bmi, double gamma);

std::vector<std::uint8_t> simulate_treatment(
    const std::vector<SampleRecord>& samples, std::span<const double> bmi,
    const std::map<std::string, double>& gamma_map, Rng& rng);

// Per-individual covariates in the order of the sample table.
struct CovariateTable {
    std::vector<std::string> individual_id;
    std::vector<Sex> sex;
    std::vector<std::uint8_t> smoking;
    std::vector<double> bmi;
    std::vector<std::uint8_t> treatment;
    Eigen::MatrixXd pcs;  // n x k
    std::vector<std::string> population;

    std::size_t size() const { return individual_id.size(); }

    // Numeric column for model matrices: sex -> 1[male], pc<j> -> pcs col.
    std::vector<double> numeric_column(const std::string& name) const;
    bool has_column(const std::string& name) const;

    void write_tsv(const std::filesystem::path& path,
                   const std::vector<std::string>& comments = {}) const;
    static CovariateTable read_tsv(const std::filesystem::path& path);
};

// Runs the full cascade: smoking, then bmi, then treatment, each on a
// stream derived from config.seed.
CovariateTable build_covariate_table(const std::vector<SampleRecord>& samples,
                                     const Eigen::MatrixXd& pcs,
                                     const CovSimConfig& config,
                                     const SmokingRates& rates);

}  // namespace gxe
