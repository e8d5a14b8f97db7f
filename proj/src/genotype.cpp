#include "gxe/genotype.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "gxe/error.hpp"
#include "gxe/stats.hpp"
#include "gxe/tsv.hpp"

namespace gxe {

namespace {

constexpr unsigned char kMagic1 = 0x6C;
constexpr unsigned char kMagic2 = 0x1B;
constexpr unsigned char kSnpMajor = 0x01;

// 2-bit code -> allele1 dosage. 00=2 copies, 10=1 copy, 11=0 copies,
// 01=missing.
constexpr std::uint8_t kDecode[4] = {2, GenotypeMatrix::kMissing, 1, 0};

std::uint8_t encode_dosage(std::uint8_t d) {
    switch (d) {
        case 2: return 0b00;
        case 1: return 0b10;
        case 0: return 0b11;
        case GenotypeMatrix::kMissing: return 0b01;
        default:
            throw DataError("invalid dosage value " + std::to_string(d));
    }
}

std::vector<std::string> read_table_rows(const std::filesystem::path& path,
                                         std::size_t min_cols,
                                         std::vector<std::vector<std::string>>& out) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open file: " + path.string());
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::vector<std::string> fields;
        std::string tok;
        while (ss >> tok) fields.push_back(tok);
        if (fields.size() < min_cols)
            throw DataError(path.string() + ":" + std::to_string(lineno) +
                            ": expected at least " + std::to_string(min_cols) +
                            " columns, got " + std::to_string(fields.size()));
        out.push_back(std::move(fields));
    }
    return {};
}

long parse_int(const std::string& s, const std::filesystem::path& path,
               std::size_t row) {
    try {
        std::size_t pos = 0;
        const long v = std::stol(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw DataError(path.string() + ": row " + std::to_string(row + 1) +
                        ": cannot parse integer '" + s + "'");
    }
}

}  // namespace

GenotypeDataset read_genotype_triplet(const std::filesystem::path& stem) {
    const auto bed = std::filesystem::path(stem.string() + ".bed");
    const auto bim = std::filesystem::path(stem.string() + ".bim");
    const auto fam = std::filesystem::path(stem.string() + ".fam");

    GenotypeDataset ds;

    std::vector<std::vector<std::string>> snp_rows;
    read_table_rows(bim, 6, snp_rows);
    ds.snps.reserve(snp_rows.size());
    for (std::size_t r = 0; r < snp_rows.size(); ++r) {
        const auto& f = snp_rows[r];
        SnpRecord rec;
        rec.chromosome = f[0];
        rec.snp_id = f[1];
        try {
            rec.genetic_distance = parse_double(f[2]);
        } catch (const DataError&) {
            throw DataError(bim.string() + ": row " + std::to_string(r + 1) +
                            ": cannot parse genetic distance '" + f[2] + "'");
        }
        rec.bp_position = parse_int(f[3], bim, r);
        if (rec.bp_position < 0)
            throw DataError(bim.string() + ": row " + std::to_string(r + 1) +
                            ": negative position");
        if (f[4].size() != 1 || f[5].size() != 1)
            throw DataError(bim.string() + ": row " + std::to_string(r + 1) +
                            ": alleles must be single characters");
        rec.allele1 = f[4][0];
        rec.allele2 = f[5][0];
        ds.snps.push_back(std::move(rec));
    }

    std::vector<std::vector<std::string>> fam_rows;
    read_table_rows(fam, 6, fam_rows);
    ds.samples.reserve(fam_rows.size());
    for (std::size_t r = 0; r < fam_rows.size(); ++r) {
        const auto& f = fam_rows[r];
        SampleRecord rec;
        rec.family_id = f[0];
        rec.individual_id = f[1];
        rec.sex = sex_from_code(static_cast<int>(parse_int(f[4], fam, r)));
        rec.phenotype_placeholder = static_cast<int>(parse_int(f[5], fam, r));
        ds.samples.push_back(std::move(rec));
    }

    const std::size_t n = ds.samples.size();
    const std::size_t m = ds.snps.size();

    const std::string payload = read_file(bed);
    if (payload.size() < 3 ||
        static_cast<unsigned char>(payload[0]) != kMagic1 ||
        static_cast<unsigned char>(payload[1]) != kMagic2)
        throw DataError(bed.string() + ": bad magic bytes");
    if (static_cast<unsigned char>(payload[2]) != kSnpMajor)
        throw DataError(bed.string() +
                        ": unsupported mode byte (only SNP-major is supported)");
    const std::size_t bytes_per_snp = (n + 3) / 4;
    if (payload.size() != 3 + m * bytes_per_snp)
        throw DataError(bed.string() + ": truncated or oversized payload: got " +
                        std::to_string(payload.size()) + " bytes, expected " +
                        std::to_string(3 + m * bytes_per_snp));

    ds.matrix = GenotypeMatrix(n, m);
    const auto* bytes =
        reinterpret_cast<const unsigned char*>(payload.data()) + 3;
    for (std::size_t j = 0; j < m; ++j) {
        auto col = ds.matrix.column(j);
        const unsigned char* block = bytes + j * bytes_per_snp;
        for (std::size_t i = 0; i < n; ++i) {
            const unsigned char b = block[i / 4];
            const unsigned code = (b >> (2 * (i % 4))) & 0b11u;
            col[i] = kDecode[code];
        }
    }

    return ds;
}

void write_genotype_triplet(const GenotypeDataset& ds,
                            const std::filesystem::path& stem) {
    const std::size_t n = ds.samples.size();
    const std::size_t m = ds.snps.size();
    if (ds.matrix.n_individuals() != n || ds.matrix.n_snps() != m)
        throw ConfigError("matrix dimensions do not match sample/SNP tables");

    std::ostringstream bim;
    for (const auto& s : ds.snps) {
        bim << s.chromosome << '\t' << s.snp_id << '\t'
            << format_double(s.genetic_distance) << '\t' << s.bp_position
            << '\t' << s.allele1 << '\t' << s.allele2 << '\n';
    }
    write_file(stem.string() + ".bim", bim.str());

    std::ostringstream fam;
    for (const auto& s : ds.samples) {
        fam << s.family_id << '\t' << s.individual_id << "\t0\t0\t"
            << sex_code(s.sex) << '\t' << s.phenotype_placeholder << '\n';
    }
    write_file(stem.string() + ".fam", fam.str());

    const std::size_t bytes_per_snp = (n + 3) / 4;
    std::string payload(3 + m * bytes_per_snp, '\0');
    payload[0] = static_cast<char>(kMagic1);
    payload[1] = static_cast<char>(kMagic2);
    payload[2] = static_cast<char>(kSnpMajor);
    auto* bytes = reinterpret_cast<unsigned char*>(payload.data()) + 3;
    for (std::size_t j = 0; j < m; ++j) {
        const auto col = ds.matrix.column(j);
        unsigned char* block = bytes + j * bytes_per_snp;
        for (std::size_t i = 0; i < n; ++i)
            block[i / 4] |=
                static_cast<unsigned char>(encode_dosage(col[i]) << (2 * (i % 4)));
    }
    write_file(stem.string() + ".bed", payload);
}

std::vector<std::size_t> force_minor_allele(GenotypeDataset& ds) {
    std::vector<std::size_t> flipped;
    for (std::size_t j = 0; j < ds.matrix.n_snps(); ++j) {
        auto col = ds.matrix.column(j);
        double sum = 0.0;
        std::size_t count = 0;
        for (auto d : col) {
            if (d == GenotypeMatrix::kMissing) continue;
            sum += d;
            ++count;
        }
        if (count == 0) continue;
        if (sum / (2.0 * static_cast<double>(count)) > 0.5) {
            for (auto& d : col)
                if (d != GenotypeMatrix::kMissing) d = 2 - d;
            std::swap(ds.snps[j].allele1, ds.snps[j].allele2);
            flipped.push_back(j);
        }
    }
    return flipped;
}

double minor_allele_frequency(std::span<const std::uint8_t> column) {
    double sum = 0.0;
    std::size_t count = 0;
    for (auto d : column) {
        if (d == GenotypeMatrix::kMissing) continue;
        sum += d;
        ++count;
    }
    if (count == 0)
        throw DataError("minor_allele_frequency: all entries missing");
    const double f = sum / (2.0 * static_cast<double>(count));
    return std::min(f, 1.0 - f);
}

double hwe_test(std::span<const std::uint8_t> column) {
    std::size_t counts[3] = {0, 0, 0};
    for (auto d : column)
        if (d != GenotypeMatrix::kMissing) ++counts[d];
    const double n = static_cast<double>(counts[0] + counts[1] + counts[2]);
    if (n == 0) throw DataError("hwe_test: all entries missing");
    const double f =
        (2.0 * static_cast<double>(counts[2]) + static_cast<double>(counts[1])) /
        (2.0 * n);
    if (f <= 0.0 || f >= 1.0) return 1.0;  // monomorphic
    const double expected[3] = {n * (1.0 - f) * (1.0 - f),
                                2.0 * n * f * (1.0 - f), n * f * f};
    double chi2 = 0.0;
    for (int g = 0; g < 3; ++g) {
        const double d = static_cast<double>(counts[g]) - expected[g];
        chi2 += d * d / expected[g];
    }
    return chisq1_sf(chi2);
}

std::pair<GenotypeDataset, QcReport> filter_snps(const GenotypeDataset& ds,
                                                 double maf_min,
                                                 double hwe_alpha) {
    if (maf_min < 0.0 || maf_min >= 0.5)
        throw ConfigError("maf_min must be in [0, 0.5)");
    if (hwe_alpha < 0.0 || hwe_alpha >= 1.0)
        throw ConfigError("hwe_alpha must be in [0, 1)");

    QcReport report;
    report.snps_in = ds.matrix.n_snps();
    report.maf_min = maf_min;
    report.hwe_alpha = hwe_alpha;

    std::vector<std::size_t> keep;
    for (std::size_t j = 0; j < ds.matrix.n_snps(); ++j) {
        const auto col = ds.matrix.column(j);
        if (minor_allele_frequency(col) < maf_min) {
            ++report.removed_maf;  // a SNP failing both counts here only
            continue;
        }
        if (hwe_test(col) < hwe_alpha) {
            ++report.removed_hwe;
            continue;
        }
        keep.push_back(j);
    }
    report.snps_out = keep.size();

    GenotypeDataset out;
    out.samples = ds.samples;
    out.matrix = GenotypeMatrix(ds.matrix.n_individuals(), keep.size());
    out.snps.reserve(keep.size());
    for (std::size_t k = 0; k < keep.size(); ++k) {
        out.snps.push_back(ds.snps[keep[k]]);
        const auto src = ds.matrix.column(keep[k]);
        auto dst = out.matrix.column(k);
        std::copy(src.begin(), src.end(), dst.begin());
    }
    return {std::move(out), report};
}

std::vector<std::size_t> thin_snps(std::size_t m, std::size_t step) {
    if (step < 1) throw ConfigError("thin step must be >= 1");
    std::vector<std::size_t> idx;
    for (std::size_t j = 0; j < m; j += step) idx.push_back(j);
    return idx;
}

IndexRange region_around(std::size_t m, std::size_t center, std::size_t width) {
    if (width < 1) throw ConfigError("region width must be >= 1");
    if (center >= m) throw ConfigError("center index out of range");
    const std::size_t w = std::min(width, m);
    // Odd widths put floor(w/2) on each side; even widths lean right.
    std::size_t begin = center - std::min(center, (w - 1) / 2);
    if (begin + w > m) begin = m - w;
    return {begin, begin + w};
}

IndexRange select_region(const std::vector<SnpRecord>& snps,
                         const std::string& center_snp_id, std::size_t width) {
    return region_around(snps.size(), find_snp_by_id(snps, center_snp_id),
                         width);
}

std::size_t find_snp_by_id(const std::vector<SnpRecord>& snps,
                           const std::string& snp_id) {
    for (std::size_t j = 0; j < snps.size(); ++j)
        if (snps[j].snp_id == snp_id) return j;
    throw DataError("unknown SNP id: " + snp_id);
}

std::size_t find_snp_by_position(const std::vector<SnpRecord>& snps,
                                 const std::string& chromosome,
                                 std::int64_t bp_position) {
    for (std::size_t j = 0; j < snps.size(); ++j)
        if (snps[j].bp_position == bp_position &&
            snps[j].chromosome == chromosome)
            return j;
    throw DataError("no SNP at " + chromosome + ":" +
                    std::to_string(bp_position));
}

std::vector<std::uint8_t> dominant_encode(std::span<const std::uint8_t> column) {
    std::vector<std::uint8_t> out(column.size());
    for (std::size_t i = 0; i < column.size(); ++i) {
        const auto d = column[i];
        out[i] = d == GenotypeMatrix::kMissing ? GenotypeMatrix::kMissing
                                               : (d > 0 ? 1 : 0);
    }
    return out;
}

}  // namespace gxe
