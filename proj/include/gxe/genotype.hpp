#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace gxe {

enum class Sex : std::uint8_t { male, female, unknown };

enum class GeneticCoding : std::uint8_t { dominant, additive };

inline const char* coding_name(GeneticCoding c) {
    return c == GeneticCoding::dominant ? "dominant" : "additive";
}

inline int sex_code(Sex s) {
    switch (s) {
        case Sex::male: return 1;
        case Sex::female: return 2;
        default: return 0;
    }
}

inline Sex sex_from_code(int code) {
    if (code == 1) return Sex::male;
    if (code == 2) return Sex::female;
    return Sex::unknown;
}

struct SampleRecord {
    std::string family_id;
    std::string individual_id;
    Sex sex = Sex::unknown;
    int phenotype_placeholder = 0;
    std::optional<std::string> population;
};

struct SnpRecord {
    std::string chromosome;
    std::string snp_id;
    double genetic_distance = 0.0;
    std::int64_t bp_position = 0;
    char allele1 = 'A';
    char allele2 = 'B';
};

// Minor-allele dosage matrix, SNP-major storage. Entries count copies of
// allele1 and are 0, 1, 2 or kMissing.
class GenotypeMatrix {
public:
    static constexpr std::uint8_t kMissing = 0xFF;

    GenotypeMatrix() = default;
    GenotypeMatrix(std::size_t n, std::size_t m)
        : n_(n), m_(m), data_(n * m, 0) {}

    std::size_t n_individuals() const { return n_; }
    std::size_t n_snps() const { return m_; }

    std::uint8_t operator()(std::size_t i, std::size_t j) const {
        return data_[j * n_ + i];
    }
    void set(std::size_t i, std::size_t j, std::uint8_t v) {
        data_[j * n_ + i] = v;
    }

    std::span<const std::uint8_t> column(std::size_t j) const {
        return {data_.data() + j * n_, n_};
    }
    std::span<std::uint8_t> column(std::size_t j) {
        return {data_.data() + j * n_, n_};
    }

    bool operator==(const GenotypeMatrix& other) const = default;

private:
    std::size_t n_ = 0, m_ = 0;
    std::vector<std::uint8_t> data_;
};

struct GenotypeDataset {
    GenotypeMatrix matrix;
    std::vector<SampleRecord> samples;
    std::vector<SnpRecord> snps;
};

struct QcReport {
    std::size_t snps_in = 0;
    std::size_t removed_maf = 0;
    std::size_t removed_hwe = 0;
    std::size_t snps_out = 0;
    double maf_min = 0.0;
    double hwe_alpha = 0.0;
};

// Half-open index range [begin, end) into the SNP list.
struct IndexRange {
    std::size_t begin = 0;
    std::size_t end = 0;
    std::size_t size() const { return end - begin; }
};

// Reads the .bed/.bim/.fam triplet at `stem`. The binary file must be in
// SNP-major mode; entries are decoded to allele1 dosages.
GenotypeDataset read_genotype_triplet(const std::filesystem::path& stem);

// Writes the triplet; re-reading gives back identical entries and a second
// write is byte-identical. Padding bits in the last byte of each SNP block
// are zero.
void write_genotype_triplet(const GenotypeDataset& ds,
                            const std::filesystem::path& stem);

// Flips SNPs whose allele1 frequency exceeds 1/2 so that allele1 is the
// minor allele (dosage d -> 2-d, allele labels swapped). Returns the
// indices of flipped SNPs.
std::vector<std::size_t> force_minor_allele(GenotypeDataset& ds);

// min(f, 1-f) for f the allele1 frequency over non-missing entries.
double minor_allele_frequency(std::span<const std::uint8_t> column);

// 1-df chi-square goodness-of-fit p-value for Hardy-Weinberg proportions.
// Monomorphic columns give p = 1.
double hwe_test(std::span<const std::uint8_t> column);

// Keeps SNPs with MAF >= maf_min and HWE p >= hwe_alpha; order preserved.
// A SNP failing both counts toward removed_maf only.
std::pair<GenotypeDataset, QcReport> filter_snps(const GenotypeDataset& ds,
                                                 double maf_min,
                                                 double hwe_alpha);

// Indices {0, step, 2*step, ...} below m.
std::vector<std::size_t> thin_snps(std::size_t m, std::size_t step = 1000);

// Contiguous window of min(width, m) SNPs containing the given center
// index; symmetric where boundaries allow, truncated windows keep full
// width.
IndexRange region_around(std::size_t m, std::size_t center, std::size_t width);

// Same, locating the center SNP by id. Throws DataError if unknown.
IndexRange select_region(const std::vector<SnpRecord>& snps,
                         const std::string& center_snp_id, std::size_t width);

// Locates a SNP by (chromosome, position). Throws DataError if absent.
std::size_t find_snp_by_position(const std::vector<SnpRecord>& snps,
                                 const std::string& chromosome,
                                 std::int64_t bp_position);
std::size_t find_snp_by_id(const std::vector<SnpRecord>& snps,
                           const std::string& snp_id);

// 0 -> 0; 1,2 -> 1; missing stays missing.
std::vector<std::uint8_t> dominant_encode(std::span<const std::uint8_t> column);

}  // namespace gxe
