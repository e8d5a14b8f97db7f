#include "gxe/phenosim.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

#include "gxe/error.hpp"
#include "gxe/parallel.hpp"
#include "gxe/stats.hpp"
#include "gxe/tsv.hpp"
#include "json.hpp"

namespace gxe {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}

void DiseaseModel::validate() const {
    if (!(baseline_prevalence > 0.0) || baseline_prevalence > 1.0) {
        throw ConfigError("disease model: baseline prevalence must be in (0, 1], got " +
                          format_double(baseline_prevalence));
    }
    if (relative_risk < 0.0) {
        throw ConfigError("disease model: relative risk must be non-negative, got " +
                          format_double(relative_risk));
    }
    const double gmax = coding == GeneticCoding::dominant ? 1.0 : 2.0;
    const double pmax = baseline_prevalence * (1.0 + relative_risk * gmax);
    if (pmax > 1.0) {
        throw ConfigError(
            "disease model: penetrance exceeds 1 for exposed carriers "
            "(baseline " + format_double(baseline_prevalence) +
            " * (1 + " + format_double(relative_risk) + " * " +
            format_double(gmax) + ") = " + format_double(pmax) + ")");
    }
}

std::uint64_t DiseaseModel::hash() const {
    std::string s = format_double(baseline_prevalence) + "|" +
                    format_double(relative_risk) + "|" + causal_snp_id + "|" +
                    (coding == GeneticCoding::dominant ? "dom" : "add") + "|" +
                    interacting_exposure;
    return fnv1a64(s);
}

PenetranceVector penetrance(const DiseaseModel& model,
                            std::span<const std::uint8_t> causal_column,
                            std::span<const std::uint8_t> exposure) {
    model.validate();
    if (causal_column.size() != exposure.size()) {
        throw ConfigError("penetrance: genotype and exposure lengths differ (" +
                          std::to_string(causal_column.size()) + " vs " +
                          std::to_string(exposure.size()) + ")");
    }
    PenetranceVector p(causal_column.size());
    for (std::size_t i = 0; i < p.size(); ++i) {
        double code = 0.0;
        const std::uint8_t d = causal_column[i];
        if (d != GenotypeMatrix::kMissing) {
            code = model.coding == GeneticCoding::dominant
                       ? (d > 0 ? 1.0 : 0.0)
                       : static_cast<double>(d);
        }
        const double e = exposure[i] ? 1.0 : 0.0;
        p[i] = model.baseline_prevalence * (1.0 + model.relative_risk * code * e);
    }
    return p;
}

ConditionalBernoulliSampler::ConditionalBernoulliSampler(
    const PenetranceVector& p, std::size_t n_cases)
    : n_(p.size()), n_cases_(n_cases) {
    if (n_cases_ > n_) {
        throw ConfigError("conditional sampler: n_cases " +
                          std::to_string(n_cases_) + " exceeds n " +
                          std::to_string(n_));
    }
    log_p_.resize(n_);
    log_q_.resize(n_);
    std::size_t forced_ones = 0, forced_zeros = 0;
    for (std::size_t i = 0; i < n_; ++i) {
        if (!(p[i] >= 0.0) || p[i] > 1.0) {
            throw ConfigError("conditional sampler: probability out of [0,1] at index " +
                              std::to_string(i) + ": " + format_double(p[i]));
        }
        if (p[i] == 1.0) ++forced_ones;
        if (p[i] == 0.0) ++forced_zeros;
        log_p_[i] = std::log(p[i]);
        log_q_[i] = std::log1p(-p[i]);
    }
    if (forced_ones > n_cases_ || n_cases_ > n_ - forced_zeros) {
        throw ConfigError(
            "conditional sampler: requested " + std::to_string(n_cases_) +
            " cases but " + std::to_string(forced_ones) +
            " individuals have probability 1 and " +
            std::to_string(forced_zeros) + " have probability 0 (feasible range [" +
            std::to_string(forced_ones) + ", " +
            std::to_string(n_ - forced_zeros) + "])");
    }

    // Reachable band of row i: after i decisions, the remaining case count k
    // lies in [max(0, c-i), min(c, n-i)].
    const long c = static_cast<long>(n_cases_);
    const long ln = static_cast<long>(n_);
    row_kmin_.resize(n_ + 1);
    row_offset_.resize(n_ + 1);
    row_len_.resize(n_ + 1);
    std::size_t total = 0;
    for (std::size_t i = 0; i <= n_; ++i) {
        const long li = static_cast<long>(i);
        const long kmin = std::max(0L, c - li);
        const long kmax = std::min(c, ln - li);
        row_kmin_[i] = kmin;
        row_offset_[i] = total;
        row_len_[i] = static_cast<std::size_t>(kmax - kmin + 1);
        total += row_len_[i];
    }
    table_.assign(total, kNegInf);

    table_[row_offset_[n_]] = 0.0;  // T(n, 0) = log 1
    for (std::size_t ii = n_; ii-- > 0;) {
        const long kmin = row_kmin_[ii];
        const long kmax = kmin + static_cast<long>(row_len_[ii]) - 1;
        double* row = table_.data() + row_offset_[ii];
        for (long k = kmin; k <= kmax; ++k) {
            const double take = log_p_[ii] + tail(ii + 1, k - 1);
            const double skip = log_q_[ii] + tail(ii + 1, k);
            row[k - kmin] = logaddexp(take, skip);
        }
    }
    if (!std::isfinite(tail(0, c))) {
        throw ConfigError("conditional sampler: the event {exactly " +
                          std::to_string(n_cases_) +
                          " cases} has probability zero under the given penetrances");
    }
}

double ConditionalBernoulliSampler::tail(std::size_t i, long k) const {
    const long kmin = row_kmin_[i];
    if (k < kmin || k >= kmin + static_cast<long>(row_len_[i])) return kNegInf;
    return table_[row_offset_[i] + static_cast<std::size_t>(k - kmin)];
}

double ConditionalBernoulliSampler::log_normalizer() const {
    return tail(0, static_cast<long>(n_cases_));
}

std::vector<std::uint8_t> ConditionalBernoulliSampler::sample(Rng& rng) const {
    std::vector<std::uint8_t> y(n_, 0);
    long k = static_cast<long>(n_cases_);
    for (std::size_t i = 0; i < n_; ++i) {
        double pr = 0.0;
        if (k > 0) {
            pr = std::exp(log_p_[i] + tail(i + 1, k - 1) - tail(i, k));
        }
        if (rng.uniform() < pr) {
            y[i] = 1;
            --k;
        }
    }
    if (k != 0) {
        throw std::logic_error("conditional sampler: trajectory ended with " +
                               std::to_string(k) + " unassigned cases");
    }
    return y;
}

PhenotypeReplicate waffect_sample(const PenetranceVector& p,
                                  std::size_t n_cases, Rng& rng) {
    ConditionalBernoulliSampler sampler(p, n_cases);
    PhenotypeReplicate rep;
    rep.y = sampler.sample(rng);
    rep.n_cases = n_cases;
    rep.hypothesis = Hypothesis::h1;
    return rep;
}

std::map<std::uint32_t, double> brute_force_conditional_law(
    const PenetranceVector& p, std::size_t n_cases) {
    const std::size_t n = p.size();
    if (n > 20) {
        throw ConfigError("brute_force_conditional_law: n = " + std::to_string(n) +
                          " exceeds the enumeration limit of 20");
    }
    if (n_cases > n) {
        throw ConfigError("brute_force_conditional_law: n_cases exceeds n");
    }
    std::map<std::uint32_t, double> law;
    double total = 0.0;
    const std::uint32_t limit = n == 32 ? 0 : (1u << n);
    for (std::uint32_t mask = 0; mask < limit; ++mask) {
        if (static_cast<std::size_t>(std::popcount(mask)) != n_cases) continue;
        double w = 1.0;
        for (std::size_t i = 0; i < n; ++i) {
            w *= (mask >> i) & 1u ? p[i] : 1.0 - p[i];
        }
        if (w > 0.0) {
            law[mask] = w;
            total += w;
        }
    }
    if (total <= 0.0) {
        throw ConfigError("brute_force_conditional_law: conditioning event has "
                          "probability zero");
    }
    for (auto& [mask, w] : law) w /= total;
    return law;
}

PhenotypeReplicate permute_phenotypes(std::size_t n, std::size_t n_cases,
                                      Rng& rng) {
    if (n_cases > n) {
        throw ConfigError("permute_phenotypes: n_cases " + std::to_string(n_cases) +
                          " exceeds n " + std::to_string(n));
    }
    std::vector<std::uint32_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = static_cast<std::uint32_t>(i);
    PhenotypeReplicate rep;
    rep.y.assign(n, 0);
    rep.n_cases = n_cases;
    rep.hypothesis = Hypothesis::h0;
    // Partial Fisher-Yates: only the first n_cases slots need shuffling.
    for (std::size_t i = 0; i < n_cases; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(
                                      rng.uniform_int(static_cast<std::uint64_t>(n - i)));
        std::swap(idx[i], idx[j]);
        rep.y[idx[i]] = 1;
    }
    return rep;
}

ReplicateSet generate_replicates(const DiseaseModel& model,
                                 std::span<const std::uint8_t> causal_column,
                                 std::span<const std::uint8_t> exposure,
                                 std::size_t n_h0, std::size_t n_h1,
                                 std::size_t n_cases, std::uint64_t seed,
                                 int threads) {
    const PenetranceVector p = penetrance(model, causal_column, exposure);
    const std::size_t n = p.size();
    ConditionalBernoulliSampler sampler(p, n_cases);

    ReplicateSet set;
    set.n = n;
    set.n_cases = n_cases;
    set.master_seed = seed;
    set.model_hash = model.hash();
    set.replicates.resize(n_h0 + n_h1);
    parallel_for(n_h0 + n_h1, threads, [&](std::size_t r) {
        PhenotypeReplicate rep;
        if (r < n_h0) {
            const std::uint64_t s = derive_seed(seed, "H0", r);
            Rng rng(s);
            rep = permute_phenotypes(n, n_cases, rng);
            rep.replicate_index = r;
            rep.seed = s;
        } else {
            const std::size_t r1 = r - n_h0;
            const std::uint64_t s = derive_seed(seed, "H1", r1);
            Rng rng(s);
            rep.y = sampler.sample(rng);
            rep.n_cases = n_cases;
            rep.hypothesis = Hypothesis::h1;
            rep.replicate_index = r1;
            rep.seed = s;
        }
        set.replicates[r] = std::move(rep);
    });
    return set;
}

std::string replicate_name(Hypothesis h, std::size_t index) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%s_%03zu", hypothesis_name(h), index);
    return buf;
}

void write_replicates(const ReplicateSet& set,
                      const std::vector<std::string>& individual_ids,
                      const std::filesystem::path& path,
                      const std::vector<std::string>& comments) {
    if (individual_ids.size() != set.n) {
        throw ConfigError("write_replicates: " + std::to_string(individual_ids.size()) +
                          " individual ids for " + std::to_string(set.n) +
                          " phenotype rows");
    }
    TsvTable table;
    table.comments = comments;
    table.header.push_back("individual_id");
    for (const auto& rep : set.replicates) {
        if (rep.y.size() != set.n) {
            throw ConfigError("write_replicates: replicate length mismatch");
        }
        table.header.push_back(replicate_name(rep.hypothesis, rep.replicate_index));
    }
    table.rows.resize(set.n);
    for (std::size_t i = 0; i < set.n; ++i) {
        auto& row = table.rows[i];
        row.reserve(set.replicates.size() + 1);
        row.push_back(individual_ids[i]);
        for (const auto& rep : set.replicates) {
            row.push_back(rep.y[i] ? "1" : "0");
        }
    }
    table.write(path);

    nlohmann::json meta;
    meta["n"] = set.n;
    meta["n_cases"] = set.n_cases;
    meta["master_seed"] = set.master_seed;
    meta["model_hash"] = set.model_hash;
    std::size_t n_h0 = 0, n_h1 = 0;
    nlohmann::json seeds = nlohmann::json::array();
    for (const auto& rep : set.replicates) {
        (rep.hypothesis == Hypothesis::h0 ? n_h0 : n_h1)++;
        seeds.push_back(rep.seed);
    }
    meta["n_h0"] = n_h0;
    meta["n_h1"] = n_h1;
    meta["replicate_seeds"] = seeds;
    std::filesystem::path meta_path = path;
    meta_path += ".meta.json";
    write_file(meta_path, meta.dump(2) + "\n");
}

ReplicateSet read_replicates(const std::filesystem::path& path) {
    TsvTable table = TsvTable::read(path);
    if (table.header.empty() || table.header[0] != "individual_id") {
        throw DataError(path.string() + ": expected first column individual_id");
    }
    ReplicateSet set;
    set.n = table.rows.size();
    const std::size_t n_rep = table.header.size() - 1;
    set.replicates.resize(n_rep);
    for (std::size_t c = 0; c < n_rep; ++c) {
        const std::string& name = table.header[c + 1];
        PhenotypeReplicate& rep = set.replicates[c];
        std::size_t idx = 0;
        if (name.rfind("H0_", 0) == 0) {
            rep.hypothesis = Hypothesis::h0;
        } else if (name.rfind("H1_", 0) == 0) {
            rep.hypothesis = Hypothesis::h1;
        } else {
            throw DataError(path.string() + ": unrecognized replicate column '" +
                            name + "'");
        }
        try {
            idx = std::stoul(name.substr(3));
        } catch (const std::exception&) {
            throw DataError(path.string() + ": unrecognized replicate column '" +
                            name + "'");
        }
        rep.replicate_index = idx;
        rep.y.resize(set.n);
        for (std::size_t i = 0; i < set.n; ++i) {
            const std::string& cell = table.rows[i][c + 1];
            if (cell == "1") {
                rep.y[i] = 1;
            } else if (cell == "0") {
                rep.y[i] = 0;
            } else {
                throw DataError(path.string() + ": phenotype cell must be 0 or 1, got '" +
                                cell + "'");
            }
        }
        rep.n_cases = static_cast<std::size_t>(
            std::count(rep.y.begin(), rep.y.end(), std::uint8_t{1}));
    }
    if (!set.replicates.empty()) set.n_cases = set.replicates.front().n_cases;

    std::filesystem::path meta_path = path;
    meta_path += ".meta.json";
    if (std::filesystem::exists(meta_path)) {
        const nlohmann::json meta = nlohmann::json::parse(read_file(meta_path));
        set.master_seed = meta.value("master_seed", 0ull);
        set.model_hash = meta.value("model_hash", 0ull);
        if (meta.contains("n_cases")) {
            set.n_cases = meta["n_cases"].get<std::size_t>();
        }
        if (meta.contains("replicate_seeds")) {
            const auto& seeds = meta["replicate_seeds"];
            for (std::size_t r = 0; r < set.replicates.size() && r < seeds.size(); ++r) {
                set.replicates[r].seed = seeds[r].get<std::uint64_t>();
            }
        }
    }
    return set;
}

}  // namespace gxe
