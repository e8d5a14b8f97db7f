#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "gxe/genotype.hpp"
#include "gxe/rng.hpp"

namespace gxe {

struct DiseaseModel {
    double baseline_prevalence = 0.01;
    double relative_risk = 50.0;
    std::string causal_snp_id;
    GeneticCoding coding = GeneticCoding::dominant;
    std::string interacting_exposure = "treatment";

    void validate() const;
    std::uint64_t hash() const;
};

using PenetranceVector = std::vector<double>;

// Per-individual case probability under the interaction model:
//   p_i = f0 * (1 + RR * code(g_i) * e_i)
// with code() the selected genetic coding and missing genotypes treated as
// non-carriers.
PenetranceVector penetrance(const DiseaseModel& model,
                            std::span<const std::uint8_t> causal_column,
                            std::span<const std::uint8_t> exposure);

enum class Hypothesis : std::uint8_t { h0, h1 };

inline const char* hypothesis_name(Hypothesis h) {
    return h == Hypothesis::h0 ? "H0" : "H1";
}

// "H0_000", "H1_042", ... used for phenotype columns and scan file names.
std::string replicate_name(Hypothesis h, std::size_t index);

struct PhenotypeReplicate {
    std::vector<std::uint8_t> y;
    std::size_t n_cases = 0;
    Hypothesis hypothesis = Hypothesis::h1;
    std::size_t replicate_index = 0;
    std::uint64_t seed = 0;
};

// Samples binary vectors distributed as independent Bernoulli(p_i)
// conditioned on an exact total. Backward dynamic programming fills a
// log-space tail table
//   T(i, k) = P(exactly k cases among individuals i..n-1),
// banded to the reachable (position, remaining) states; the forward pass
// then draws y_i = 1 with probability p_i * T(i+1, k-1) / T(i, k).
// Building the table costs O(n * n_cases) time; draws are O(n) each and
// may share one table across threads.
class ConditionalBernoulliSampler {
public:
    ConditionalBernoulliSampler(const PenetranceVector& p, std::size_t n_cases);

    std::vector<std::uint8_t> sample(Rng& rng) const;

    std::size_t n() const { return n_; }
    std::size_t n_cases() const { return n_cases_; }
    // log P(sum = n_cases) under the unconditioned product law.
    double log_normalizer() const;

private:
    double tail(std::size_t i, long k) const;

    std::size_t n_ = 0;
    std::size_t n_cases_ = 0;
    std::vector<double> log_p_, log_q_;
    std::vector<long> row_kmin_;
    std::vector<std::size_t> row_offset_, row_len_;
    std::vector<double> table_;
};

// One-shot draw with exactly n_cases ones.
PhenotypeReplicate waffect_sample(const PenetranceVector& p,
                                  std::size_t n_cases, Rng& rng);

// Exhaustive law of the conditioned product measure, for n <= 20. Keys are
// bitmasks with bit i set when individual i is a case.
std::map<std::uint32_t, double> brute_force_conditional_law(
    const PenetranceVector& p, std::size_t n_cases);

// Uniform draw over binary vectors with exactly n_cases ones.
PhenotypeReplicate permute_phenotypes(std::size_t n, std::size_t n_cases,
                                      Rng& rng);

struct ReplicateSet {
    std::vector<PhenotypeReplicate> replicates;
    std::size_t n = 0;
    std::size_t n_cases = 0;
    std::uint64_t master_seed = 0;
    std::uint64_t model_hash = 0;
};

// H1 replicates via the conditional sampler on the model penetrance, H0 via
// uniform permutation; replicate r draws from a stream derived from
// (seed, hypothesis, r), so the set is reproducible for any thread count.
ReplicateSet generate_replicates(const DiseaseModel& model,
                                 std::span<const std::uint8_t> causal_column,
                                 std::span<const std::uint8_t> exposure,
                                 std::size_t n_h0, std::size_t n_h1,
                                 std::size_t n_cases, std::uint64_t seed,
                                 int threads = 1);

// TSV matrix (rows = individuals, columns = replicates, header H0_000...)
// plus a JSON sidecar <path>.meta.json with seed, model and case count.
void write_replicates(const ReplicateSet& set,
                      const std::vector<std::string>& individual_ids,
                      const std::filesystem::path& path,
                      const std::vector<std::string>& comments = {});
ReplicateSet read_replicates(const std::filesystem::path& path);

}  // namespace gxe
