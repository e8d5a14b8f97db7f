#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "gxe/covsim.hpp"
#include "gxe/genotype.hpp"
#include "gxe/phenosim.hpp"

namespace gxe {

// Sectioned key=value text; '#' and ';' start comments. Unknown sections or
// keys are rejected by the config loader so typos fail fast.
struct IniFile {
    std::map<std::string, std::vector<std::pair<std::string, std::string>>>
        sections;
    static IniFile parse(const std::string& text, const std::string& origin);
};

enum class ScanMethod : std::uint8_t { snp, snp_x_cov, lmm };

const char* scan_method_name(ScanMethod m);
ScanMethod scan_method_from_name(const std::string& name);

struct RunConfig {
    // [paths]
    std::filesystem::path genotypes;        // bed/bim/fam stem
    std::filesystem::path output = "out";
    std::filesystem::path covariates_file;  // optional: skip the simulation

    // [qc]
    double maf_min = 0.05;
    double hwe_alpha = 0.001;

    // [pca]
    int pca_components = 5;
    std::size_t pca_thin_step = 1000;
    std::size_t grm_thin_step = 1000;

    // [covsim] + [gamma] + [subpops] + smoking rate overrides
    CovSimConfig covsim;
    SmokingRates smoking_rates = default_smoking_rates();

    // [disease]
    DiseaseModel disease;  // causal_snp_id is "rs..." or "chrom:position"

    // [replicates]
    std::size_t n_h0 = 200, n_h1 = 200, n_cases = 595;

    // [scan]
    std::vector<ScanMethod> methods = {ScanMethod::snp, ScanMethod::snp_x_cov,
                                       ScanMethod::lmm};
    GeneticCoding scan_coding = GeneticCoding::additive;
    std::vector<std::string> scan_covariates = {"sex", "smoking", "treatment"};
    std::string interaction_covariate = "treatment";
    int scan_pcs = 0;  // leading PCs appended as adjustment covariates

    // [power]
    std::vector<std::string> regions = {"whole", "8000", "2000",
                                        "800",   "200",  "1"};
    std::vector<std::pair<std::string, std::filesystem::path>> external_scores;

    // [run]
    std::uint64_t seed = 1191;
    int threads = 1;

    RunConfig();

    void validate() const;
    // Canonical key=value serialization; its FNV-1a hash stamps every
    // artifact so outputs can be traced to the exact settings.
    std::string canonical() const;
    std::uint64_t config_hash() const;
    std::string stamp() const;  // "config_hash=<hex16> seed=<seed>"
    std::string scan_label(ScanMethod m) const;  // directory name per method
};

// Parses and validates; relative paths stay relative to the process cwd.
RunConfig parse_run_config(const std::string& text, const std::string& origin);

// Defaults when path is empty; also checks that the genotype triplet exists.
RunConfig load_run_config(const std::optional<std::filesystem::path>& path);

}  // namespace gxe
