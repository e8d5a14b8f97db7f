#include "gxe/covsim.hpp"

#include <cmath>
#include <sstream>

#include "gxe/error.hpp"
#include "gxe/stats.hpp"
#include "gxe/tsv.hpp"

namespace gxe {

const char* subpop_name(Subpop s) {
    switch (s) {
        case Subpop::european: return "European";
        case Subpop::african: return "African";
        case Subpop::asian: return "Asian";
    }
    return "?";
}

Subpop subpop_from_name(const std::string& name) {
    std::string low;
    low.reserve(name.size());
    for (char c : name)
        low.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    if (low == "european" || low == "e") return Subpop::european;
    if (low == "african" || low == "af") return Subpop::african;
    if (low == "asian" || low == "as") return Subpop::asian;
    throw ConfigError("unknown sub-population '" + name + "'");
}

double SmokingRates::get(Subpop s, Sex sex) const {
    if (sex == Sex::unknown)
        throw ConfigError("smoking rate undefined for unknown sex");
    return rate[static_cast<int>(s)][sex == Sex::male ? 0 : 1];
}

void SmokingRates::set(Subpop s, Sex sex, double p) {
    if (p < 0.0 || p > 1.0) throw ConfigError("smoking rate must be in [0,1]");
    rate[static_cast<int>(s)][sex == Sex::male ? 0 : 1] = p;
}

SmokingRates default_smoking_rates() {
    SmokingRates r;
    r.set(Subpop::european, Sex::male, 0.37);
    r.set(Subpop::european, Sex::female, 0.27);
    r.set(Subpop::african, Sex::male, 0.438);
    r.set(Subpop::african, Sex::female, 0.129);
    r.set(Subpop::asian, Sex::male, 0.457);
    r.set(Subpop::asian, Sex::female, 0.048);
    return r;
}

void CovSimConfig::validate() const {
    if (heritability < 0.0 || heritability >= 1.0)
        throw ConfigError("heritability must be in [0, 1)");
    if (residual_sd <= 0.0) throw ConfigError("residual_sd must be positive");
}

std::map<std::string, Subpop> default_subpop_map() {
    return {
        {"CEU", Subpop::european}, {"TSI", Subpop::european},
        {"MEX", Subpop::european}, {"YRI", Subpop::african},
        {"ASW", Subpop::african},  {"MKK", Subpop::african},
        {"LWK", Subpop::african},  {"CHB", Subpop::asian},
        {"CHD", Subpop::asian},    {"JPT", Subpop::asian},
        {"GIH", Subpop::asian},
    };
}

namespace {

const std::string& population_of(const SampleRecord& s) {
    if (!s.population)
        throw ConfigError("individual " + s.individual_id +
                          " has no population label");
    return *s.population;
}

}  // namespace

std::vector<std::uint8_t> simulate_smoking(
    const std::vector<SampleRecord>& samples,
    const std::map<std::string, Subpop>& subpop_map, const SmokingRates& rates,
    Rng& rng) {
    std::vector<std::uint8_t> out(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const auto& pop = population_of(samples[i]);
        const auto it = subpop_map.find(pop);
        if (it == subpop_map.end())
            throw ConfigError("population '" + pop +
                              "' has no sub-population mapping");
        out[i] = rng.bernoulli(rates.get(it->second, samples[i].sex)) ? 1 : 0;
    }
    return out;
}

std::vector<double> simulate_bmi(const Eigen::MatrixXd& pcs,
                                 std::span<const std::uint8_t> smoking,
                                 const CovSimConfig& config, Rng& rng) {
    config.validate();
    const std::size_t n = smoking.size();
    if (static_cast<std::size_t>(pcs.rows()) != n)
        throw ConfigError("simulate_bmi: pcs rows != n");

    Eigen::VectorXd g = Eigen::VectorXd::Zero(n);
    if (config.heritability > 0.0) {
        Eigen::VectorXd beta(pcs.cols());
        for (Eigen::Index j = 0; j < beta.size(); ++j) beta(j) = rng.normal();
        g = pcs * beta;
        const double mean = g.mean();
        const double var_g =
            (g.array() - mean).square().sum() / static_cast<double>(n - 1);
        if (var_g <= 0.0)
            throw DataError(
                "simulate_bmi: principal components give zero-variance "
                "genetic score");
        // Rescale so var(g) / (var(g) + sd^2) is the heritability exactly.
        const double sd2 = config.residual_sd * config.residual_sd;
        const double target =
            config.heritability / (1.0 - config.heritability) * sd2;
        g *= std::sqrt(target / var_g);
    }

    std::vector<double> bmi(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double offset = smoking[i] ? 0.0 : config.nonsmoker_offset;
        bmi[i] = config.bmi_baseline + offset + g(i) +
                 config.residual_sd * rng.normal();
    }
    return bmi;
}

double treatment_probability(Sex sex, double bmi, double gamma) {
    const double denom = sex == Sex::male ? 3.0 : 1.0;
    // 1/(1+exp(-bmi+25+gamma)) computed without overflow.
    return sigmoid(bmi - 25.0 - gamma) / denom;
}

std::vector<std::uint8_t> simulate_treatment(
    const std::vector<SampleRecord>& samples, std::span<const double> bmi,
    const std::map<std::string, double>& gamma_map, Rng& rng) {
    if (samples.size() != bmi.size())
        throw ConfigError("simulate_treatment: length mismatch");
    std::vector<std::uint8_t> out(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const auto& pop = population_of(samples[i]);
        const auto it = gamma_map.find(pop);
        if (it == gamma_map.end())
            throw ConfigError("population '" + pop + "' has no gamma value");
        if (samples[i].sex == Sex::unknown)
            throw ConfigError("individual " + samples[i].individual_id +
                              " has unknown sex");
        const double p =
            treatment_probability(samples[i].sex, bmi[i], it->second);
        out[i] = rng.bernoulli(p) ? 1 : 0;
    }
    return out;
}

CovariateTable build_covariate_table(const std::vector<SampleRecord>& samples,
                                     const Eigen::MatrixXd& pcs,
                                     const CovSimConfig& config,
                                     const SmokingRates& rates) {
    config.validate();
    CovariateTable t;
    t.individual_id.reserve(samples.size());
    for (const auto& s : samples) {
        t.individual_id.push_back(s.individual_id);
        t.sex.push_back(s.sex);
        t.population.push_back(population_of(s));
    }
    t.pcs = pcs;

    Rng smoking_rng(derive_seed(config.seed, "smoking"));
    t.smoking = simulate_smoking(samples, config.subpop_map, rates, smoking_rng);

    Rng bmi_rng(derive_seed(config.seed, "bmi"));
    t.bmi = simulate_bmi(pcs, t.smoking, config, bmi_rng);

    Rng treat_rng(derive_seed(config.seed, "treatment"));
    t.treatment = simulate_treatment(samples, t.bmi, config.gamma, treat_rng);
    return t;
}

bool CovariateTable::has_column(const std::string& name) const {
    if (name == "sex" || name == "smoking" || name == "bmi") return true;
    if (name == "treatment") return !treatment.empty();
    if (name.rfind("pc", 0) == 0) {
        try {
            const int j = std::stoi(name.substr(2));
            return j >= 1 && j <= pcs.cols();
        } catch (const std::exception&) {
            return false;
        }
    }
    return false;
}

std::vector<double> CovariateTable::numeric_column(
    const std::string& name) const {
    const std::size_t n = size();
    std::vector<double> out(n);
    if (name == "sex") {
        for (std::size_t i = 0; i < n; ++i) {
            if (sex[i] == Sex::unknown)
                throw ConfigError("individual " + individual_id[i] +
                                  " has unknown sex");
            out[i] = sex[i] == Sex::male ? 1.0 : 0.0;
        }
    } else if (name == "smoking") {
        for (std::size_t i = 0; i < n; ++i) out[i] = smoking[i];
    } else if (name == "bmi") {
        for (std::size_t i = 0; i < n; ++i) out[i] = bmi[i];
    } else if (name == "treatment") {
        if (treatment.empty())
            throw ConfigError("covariate 'treatment' not present");
        for (std::size_t i = 0; i < n; ++i) out[i] = treatment[i];
    } else if (name.rfind("pc", 0) == 0 && has_column(name)) {
        const int j = std::stoi(name.substr(2));
        for (std::size_t i = 0; i < n; ++i) out[i] = pcs(i, j - 1);
    } else {
        throw ConfigError("unknown covariate '" + name + "'");
    }
    return out;
}

void CovariateTable::write_tsv(const std::filesystem::path& path,
                               const std::vector<std::string>& comments) const {
    TsvTable t;
    t.comments = comments;
    t.header = {"individual_id", "sex", "smoking", "bmi", "treatment"};
    for (Eigen::Index j = 0; j < pcs.cols(); ++j)
        t.header.push_back("pc" + std::to_string(j + 1));
    t.header.push_back("population");
    for (std::size_t i = 0; i < size(); ++i) {
        std::vector<std::string> row;
        row.push_back(individual_id[i]);
        row.push_back(std::to_string(sex_code(sex[i])));
        row.push_back(std::to_string(static_cast<int>(smoking[i])));
        row.push_back(format_double(bmi[i]));
        row.push_back(treatment.empty()
                          ? "NA"
                          : std::to_string(static_cast<int>(treatment[i])));
        for (Eigen::Index j = 0; j < pcs.cols(); ++j)
            row.push_back(format_double(pcs(i, j)));
        row.push_back(population[i]);
        t.rows.push_back(std::move(row));
    }
    t.write(path);
}

CovariateTable CovariateTable::read_tsv(const std::filesystem::path& path) {
    const TsvTable t = TsvTable::read(path);
    CovariateTable out;
    const auto id_col = t.column_index("individual_id");
    const auto sex_col = t.column_index("sex");
    const auto smoking_col = t.column_index("smoking");
    const auto bmi_col = t.column_index("bmi");
    const auto treat_col = t.column_index("treatment");
    const auto pop_col = t.column_index("population");
    std::vector<std::size_t> pc_cols;
    for (int j = 1;; ++j) {
        const std::string name = "pc" + std::to_string(j);
        bool found = false;
        for (std::size_t c = 0; c < t.header.size(); ++c)
            if (t.header[c] == name) {
                pc_cols.push_back(c);
                found = true;
                break;
            }
        if (!found) break;
    }
    const std::size_t n = t.rows.size();
    out.pcs.resize(n, pc_cols.size());
    bool any_treatment = false;
    for (std::size_t i = 0; i < n; ++i) {
        const auto& row = t.rows[i];
        out.individual_id.push_back(row[id_col]);
        out.sex.push_back(sex_from_code(std::stoi(row[sex_col])));
        out.smoking.push_back(
            static_cast<std::uint8_t>(std::stoi(row[smoking_col])));
        out.bmi.push_back(parse_double(row[bmi_col]));
        if (row[treat_col] != "NA") {
            any_treatment = true;
            out.treatment.push_back(
                static_cast<std::uint8_t>(std::stoi(row[treat_col])));
        }
        for (std::size_t j = 0; j < pc_cols.size(); ++j)
            out.pcs(i, j) = parse_double(row[pc_cols[j]]);
        out.population.push_back(row[pop_col]);
    }
    if (!any_treatment) out.treatment.clear();
    if (any_treatment && out.treatment.size() != n)
        throw DataError(path.string() + ": treatment column partially missing");
    return out;
}

}  // namespace gxe
