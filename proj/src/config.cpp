#include "gxe/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <limits>

#include "gxe/error.hpp"
#include "gxe/rng.hpp"
#include "gxe/tsv.hpp"

namespace gxe {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= s.size()) {
        const std::size_t comma = s.find(',', start);
        const std::string item =
            trim(comma == std::string::npos ? s.substr(start)
                                            : s.substr(start, comma - start));
        if (!item.empty()) out.push_back(item);
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return out;
}

std::uint64_t parse_u64(const std::string& s, const std::string& what) {
    const std::string t = trim(s);
    std::uint64_t value = 0;
    const auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
    if (ec != std::errc{} || p != t.data() + t.size()) {
        throw ConfigError(what + ": expected a non-negative integer, got '" + s +
                          "'");
    }
    return value;
}

double parse_num(const std::string& s, const std::string& what) {
    try {
        return parse_double(trim(s));
    } catch (const Error&) {
        throw ConfigError(what + ": expected a number, got '" + s + "'");
    }
}

}  // namespace

IniFile IniFile::parse(const std::string& text, const std::string& origin) {
    IniFile ini;
    std::string section;
    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
        const std::size_t nl = text.find('\n', start);
        std::string line = nl == std::string::npos
                               ? text.substr(start)
                               : text.substr(start, nl - start);
        start = nl == std::string::npos ? text.size() + 1 : nl + 1;
        ++line_no;
        line = trim(line);
        if (line.empty() || line[0] == '#' || line[0] == ';') continue;
        if (line.front() == '[') {
            if (line.back() != ']' || line.size() < 3) {
                throw ConfigError(origin + ":" + std::to_string(line_no) +
                                  ": malformed section header '" + line + "'");
            }
            section = trim(line.substr(1, line.size() - 2));
            ini.sections[section];  // record even if empty
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(origin + ":" + std::to_string(line_no) +
                              ": expected key = value, got '" + line + "'");
        }
        if (section.empty()) {
            throw ConfigError(origin + ":" + std::to_string(line_no) +
                              ": key outside of any [section]");
        }
        ini.sections[section].emplace_back(trim(line.substr(0, eq)),
                                           trim(line.substr(eq + 1)));
    }
    return ini;
}

const char* scan_method_name(ScanMethod m) {
    switch (m) {
        case ScanMethod::snp: return "snp";
        case ScanMethod::snp_x_cov: return "snp_x_cov";
        case ScanMethod::lmm: return "lmm";
    }
    return "snp";
}

ScanMethod scan_method_from_name(const std::string& name) {
    if (name == "snp") return ScanMethod::snp;
    if (name == "snp_x_cov") return ScanMethod::snp_x_cov;
    if (name == "lmm") return ScanMethod::lmm;
    throw ConfigError("unknown scan method '" + name +
                      "' (expected snp, snp_x_cov or lmm)");
}

RunConfig::RunConfig() {
    covsim.subpop_map = default_subpop_map();
    // Exposure shifts per cohort; -inf makes treatment certain for the
    // untreated-probability formula's limit.
    const double inf = std::numeric_limits<double>::infinity();
    covsim.gamma = {{"ASW", -inf}, {"CEU", -inf},  {"CHB", -0.1},
                    {"CHD", 0.0},  {"GIH", 0.15},  {"JPT", -0.45},
                    {"LWK", 0.35}, {"MEX", 0.6},   {"MKK", -0.4},
                    {"TSI", 0.05}, {"YRI", 0.1}};
}

void RunConfig::validate() const {
    if (maf_min < 0.0 || maf_min >= 0.5) {
        throw ConfigError("qc.maf_min must be in [0, 0.5), got " +
                          format_double(maf_min));
    }
    if (!(hwe_alpha >= 0.0) || hwe_alpha >= 1.0) {
        throw ConfigError("qc.hwe_alpha must be in [0, 1) (0 disables the "
                          "filter), got " + format_double(hwe_alpha));
    }
    if (pca_components < 1) {
        throw ConfigError("pca.components must be at least 1");
    }
    if (pca_thin_step < 1 || grm_thin_step < 1) {
        throw ConfigError("pca thinning steps must be at least 1");
    }
    covsim.validate();
    disease.validate();
    if (disease.interacting_exposure.empty()) {
        throw ConfigError("disease.exposure must name a binary covariate");
    }
    if (methods.empty()) {
        throw ConfigError("scan.methods must not be empty");
    }
    const bool wants_interaction =
        std::find(methods.begin(), methods.end(), ScanMethod::snp_x_cov) !=
        methods.end();
    if (wants_interaction) {
        if (interaction_covariate.empty()) {
            throw ConfigError(
                "scan method snp_x_cov requires scan.interaction_covariate");
        }
        if (std::find(scan_covariates.begin(), scan_covariates.end(),
                      interaction_covariate) == scan_covariates.end()) {
            throw ConfigError("scan.interaction_covariate '" +
                              interaction_covariate +
                              "' must also appear in scan.covariates so the "
                              "main effect is adjusted for");
        }
    }
    if (scan_pcs < 0) {
        throw ConfigError("scan.pcs must be non-negative");
    }
    if (scan_pcs > pca_components) {
        throw ConfigError("scan.pcs exceeds pca.components");
    }
    if (regions.empty()) {
        throw ConfigError("power.regions must not be empty");
    }
    for (const auto& r : regions) {
        if (r == "whole") continue;
        std::uint64_t w = 0;
        try {
            w = parse_u64(r, "power.regions");
        } catch (const Error&) {
            throw ConfigError("power.regions entries must be 'whole' or a "
                              "positive SNP count, got '" + r + "'");
        }
        if (w == 0) {
            throw ConfigError("power.regions widths must be positive");
        }
    }
    for (const auto& [label, path] : external_scores) {
        if (label.empty() || label.find('/') != std::string::npos) {
            throw ConfigError("power.external labels must be non-empty and "
                              "contain no '/'");
        }
        (void)path;
    }
    if (threads < 0) {
        throw ConfigError("run.threads must be non-negative (0 = all cores)");
    }
}

std::string RunConfig::canonical() const {
    // Only result-affecting settings enter the hash: file locations and the
    // thread count change where/how fast outputs appear, never their bytes.
    std::string s;
    auto kv = [&](const std::string& k, const std::string& v) {
        s += k + "=" + v + "\n";
    };
    kv("qc.maf_min", format_double(maf_min));
    kv("qc.hwe_alpha", format_double(hwe_alpha));
    kv("pca.components", std::to_string(pca_components));
    kv("pca.thin_step", std::to_string(pca_thin_step));
    kv("pca.grm_thin_step", std::to_string(grm_thin_step));
    kv("covsim.heritability", format_double(covsim.heritability));
    kv("covsim.residual_sd", format_double(covsim.residual_sd));
    kv("covsim.nonsmoker_offset", format_double(covsim.nonsmoker_offset));
    kv("covsim.bmi_baseline", format_double(covsim.bmi_baseline));
    for (int sp = 0; sp < 3; ++sp) {
        const auto subpop = static_cast<Subpop>(sp);
        kv(std::string("covsim.smoking_") + subpop_name(subpop) + "_male",
           format_double(smoking_rates.get(subpop, Sex::male)));
        kv(std::string("covsim.smoking_") + subpop_name(subpop) + "_female",
           format_double(smoking_rates.get(subpop, Sex::female)));
    }
    for (const auto& [pop, g] : covsim.gamma) {
        kv("gamma." + pop, format_double(g));
    }
    for (const auto& [pop, sp] : covsim.subpop_map) {
        kv("subpops." + pop, subpop_name(sp));
    }
    kv("disease.baseline_prevalence",
       format_double(disease.baseline_prevalence));
    kv("disease.relative_risk", format_double(disease.relative_risk));
    kv("disease.causal_snp", disease.causal_snp_id);
    kv("disease.coding", coding_name(disease.coding));
    kv("disease.exposure", disease.interacting_exposure);
    kv("replicates.n_h0", std::to_string(n_h0));
    kv("replicates.n_h1", std::to_string(n_h1));
    kv("replicates.n_cases", std::to_string(n_cases));
    std::string method_list;
    for (const auto& m : methods) {
        if (!method_list.empty()) method_list += ',';
        method_list += scan_method_name(m);
    }
    kv("scan.methods", method_list);
    kv("scan.coding", coding_name(scan_coding));
    std::string cov_list;
    for (const auto& c : scan_covariates) {
        if (!cov_list.empty()) cov_list += ',';
        cov_list += c;
    }
    kv("scan.covariates", cov_list);
    kv("scan.interaction_covariate", interaction_covariate);
    kv("scan.pcs", std::to_string(scan_pcs));
    std::string region_list;
    for (const auto& r : regions) {
        if (!region_list.empty()) region_list += ',';
        region_list += r;
    }
    kv("power.regions", region_list);
    std::string ext_labels;
    for (const auto& [label, path] : external_scores) {
        if (!ext_labels.empty()) ext_labels += ',';
        ext_labels += label;
        (void)path;
    }
    kv("power.external", ext_labels);
    kv("run.seed", std::to_string(seed));
    return s;
}

std::uint64_t RunConfig::config_hash() const { return fnv1a64(canonical()); }

std::string RunConfig::stamp() const {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "config_hash=%016llx seed=%llu",
                  static_cast<unsigned long long>(config_hash()),
                  static_cast<unsigned long long>(seed));
    return buf;
}

std::string RunConfig::scan_label(ScanMethod m) const {
    if (m == ScanMethod::snp_x_cov) return "snp_x_" + interaction_covariate;
    return scan_method_name(m);
}

RunConfig parse_run_config(const std::string& text, const std::string& origin) {
    const IniFile ini = IniFile::parse(text, origin);
    RunConfig cfg;
    for (const auto& [section, entries] : ini.sections) {
        for (const auto& [key, value] : entries) {
            const std::string where = origin + ": [" + section + "] " + key;
            if (section == "paths") {
                if (key == "genotypes") {
                    cfg.genotypes = value;
                } else if (key == "output") {
                    cfg.output = value;
                } else if (key == "covariates") {
                    cfg.covariates_file = value;
                } else {
                    throw ConfigError(where + ": unknown key");
                }
            } else if (section == "qc") {
                if (key == "maf_min") {
                    cfg.maf_min = parse_num(value, where);
                } else if (key == "hwe_alpha") {
                    cfg.hwe_alpha = parse_num(value, where);
                } else {
                    throw ConfigError(where + ": unknown key");
                }
            } else if (section == "pca") {
                if (key == "components") {
                    cfg.pca_components = static_cast<int>(parse_u64(value, where));
                } else if (key == "thin_step") {
                    cfg.pca_thin_step = parse_u64(value, where);
                } else if (key == "grm_thin_step") {
                    cfg.grm_thin_step = parse_u64(value, where);
                } else {
                    throw ConfigError(where + ": unknown key");
                }
            } else if (section == "covsim") {
                if (key == "heritability") {
                    cfg.covsim.heritability = parse_num(value, where);
                } else if (key == "residual_sd") {
                    cfg.covsim.residual_sd = parse_num(value, where);
                } else if (key == "nonsmoker_offset") {
                    cfg.covsim.nonsmoker_offset = parse_num(value, where);
                } else if (key == "bmi_baseline") {
                    cfg.covsim.bmi_baseline = parse_num(value, where);
                } else if (key.rfind("smoking_", 0) == 0) {
                    const std::string rest = key.substr(8);
                    const std::size_t us = rest.rfind('_');
                    if (us == std::string::npos) {
                        throw ConfigError(where +
                                          ": expected smoking_<subpop>_<sex>");
                    }
                    const Subpop sp = subpop_from_name(rest.substr(0, us));
                    const std::string sex_s = rest.substr(us + 1);
                    const Sex sex = sex_s == "male"     ? Sex::male
                                    : sex_s == "female" ? Sex::female
                                                        : Sex::unknown;
                    if (sex == Sex::unknown) {
                        throw ConfigError(where + ": sex must be male or female");
                    }
                    cfg.smoking_rates.set(sp, sex, parse_num(value, where));
                } else {
                    throw ConfigError(where + ": unknown key");
                }
            } else if (section == "gamma") {
                cfg.covsim.gamma[key] = parse_num(value, where);
            } else if (section == "subpops") {
                cfg.covsim.subpop_map[key] = subpop_from_name(value);
            } else if (section == "disease") {
                if (key == "baseline_prevalence") {
                    cfg.disease.baseline_prevalence = parse_num(value, where);
                } else if (key == "relative_risk") {
                    cfg.disease.relative_risk = parse_num(value, where);
                } else if (key == "causal_snp") {
                    cfg.disease.causal_snp_id = value;
                } else if (key == "coding") {
                    if (value == "dominant") {
                        cfg.disease.coding = GeneticCoding::dominant;
                    } else if (value == "additive") {
                        cfg.disease.coding = GeneticCoding::additive;
                    } else {
                        throw ConfigError(where +
                                          ": coding must be dominant or additive");
                    }
                } else if (key == "exposure") {
                    cfg.disease.interacting_exposure = value;
                } else {
                    throw ConfigError(where + ": unknown key");
                }
            } else if (section == "replicates") {
                if (key == "n_h0") {
                    cfg.n_h0 = parse_u64(value, where);
                } else if (key == "n_h1") {
                    cfg.n_h1 = parse_u64(value, where);
                } else if (key == "n_cases") {
                    cfg.n_cases = parse_u64(value, where);
                } else {
                    throw ConfigError(where + ": unknown key");
                }
            } else if (section == "scan") {
                if (key == "methods") {
                    cfg.methods.clear();
                    for (const auto& name : split_list(value)) {
                        cfg.methods.push_back(scan_method_from_name(name));
                    }
                } else if (key == "coding") {
                    if (value == "dominant") {
                        cfg.scan_coding = GeneticCoding::dominant;
                    } else if (value == "additive") {
                        cfg.scan_coding = GeneticCoding::additive;
                    } else {
                        throw ConfigError(where +
                                          ": coding must be dominant or additive");
                    }
                } else if (key == "covariates") {
                    cfg.scan_covariates = split_list(value);
                } else if (key == "interaction_covariate") {
                    cfg.interaction_covariate = value;
                } else if (key == "pcs") {
                    cfg.scan_pcs = static_cast<int>(parse_u64(value, where));
                } else {
                    throw ConfigError(where + ": unknown key");
                }
            } else if (section == "power") {
                if (key == "regions") {
                    cfg.regions = split_list(value);
                } else if (key == "external") {
                    cfg.external_scores.clear();
                    for (const auto& item : split_list(value)) {
                        const std::size_t colon = item.find(':');
                        if (colon == std::string::npos) {
                            throw ConfigError(where +
                                              ": expected label:path entries");
                        }
                        cfg.external_scores.emplace_back(
                            trim(item.substr(0, colon)),
                            trim(item.substr(colon + 1)));
                    }
                } else {
                    throw ConfigError(where + ": unknown key");
                }
            } else if (section == "run") {
                if (key == "seed") {
                    cfg.seed = parse_u64(value, where);
                } else if (key == "threads") {
                    cfg.threads = static_cast<int>(parse_u64(value, where));
                } else {
                    throw ConfigError(where + ": unknown key");
                }
            } else {
                throw ConfigError(origin + ": unknown section [" + section + "]");
            }
        }
    }
    cfg.covsim.seed = cfg.seed;
    cfg.validate();
    return cfg;
}

RunConfig load_run_config(const std::optional<std::filesystem::path>& path) {
    RunConfig cfg;
    if (path) {
        std::string text;
        try {
            text = read_file(*path);
        } catch (const Error&) {
            throw ConfigError("config file not found: " + path->string());
        }
        cfg = parse_run_config(text, path->string());
    } else {
        cfg.covsim.seed = cfg.seed;
        cfg.validate();
    }
    if (cfg.genotypes.empty()) {
        throw ConfigError("paths.genotypes must point to a .bed/.bim/.fam stem");
    }
    for (const char* ext : {".bed", ".bim", ".fam"}) {
        std::filesystem::path p = cfg.genotypes;
        p += ext;
        if (!std::filesystem::exists(p)) {
            throw ConfigError("genotype file not found: " + p.string());
        }
    }
    if (!cfg.covariates_file.empty() &&
        !std::filesystem::exists(cfg.covariates_file)) {
        throw ConfigError("covariates file not found: " +
                          cfg.covariates_file.string());
    }
    return cfg;
}

}  // namespace gxe
