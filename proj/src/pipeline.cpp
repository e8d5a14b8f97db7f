#include "gxe/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <map>
#include <optional>

#include "CLI11.hpp"
#include "gxe/assoc.hpp"
#include "gxe/error.hpp"
#include "gxe/lmm.hpp"
#include "gxe/popstruct.hpp"
#include "gxe/power.hpp"
#include "gxe/svg.hpp"
#include "gxe/tsv.hpp"
#include "json.hpp"

namespace fs = std::filesystem;

namespace gxe {

namespace {

struct OutPaths {
    fs::path root, qc, pca, sim, scans, power, logs;
    explicit OutPaths(const RunConfig& cfg)
        : root(cfg.output),
          qc(root / "qc"),
          pca(root / "pca"),
          sim(root / "sim"),
          scans(root / "scans"),
          power(root / "power"),
          logs(root / "logs") {}
    fs::path qc_stem() const { return qc / "filtered"; }
};

std::string hash_hex(const RunConfig& cfg) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(cfg.config_hash()));
    return buf;
}

// Deterministic JSON-lines event log, rewritten per stage run (no
// timestamps, sorted keys) so reruns stay byte-identical.
class StageLog {
public:
    StageLog(const RunConfig& cfg, const fs::path& logs_dir, std::string stage)
        : stage_(std::move(stage)),
          path_(logs_dir / (stage_ + ".jsonl")),
          hash_(hash_hex(cfg)),
          seed_(cfg.seed) {
        fs::create_directories(logs_dir);
    }

    void event(const std::string& name,
               nlohmann::json fields = nlohmann::json::object()) {
        fields["stage"] = stage_;
        fields["event"] = name;
        fields["config_hash"] = hash_;
        fields["seed"] = seed_;
        lines_ += fields.dump();
        lines_ += '\n';
    }

    void flush() { write_file(path_, lines_); }

private:
    std::string stage_;
    fs::path path_;
    std::string hash_;
    std::uint64_t seed_;
    std::string lines_;
};

void require_artifact(const fs::path& p, const std::string& producer) {
    if (!fs::exists(p)) {
        throw DataError(p.string() + " not found; run '" + producer +
                        "' first");
    }
}

GenotypeDataset load_filtered(const OutPaths& paths) {
    for (const char* ext : {".bed", ".bim", ".fam"}) {
        fs::path p = paths.qc_stem();
        p += ext;
        require_artifact(p, "qc-pca");
    }
    GenotypeDataset ds = read_genotype_triplet(paths.qc_stem());
    // The family column carries the population label through PLINK files.
    for (auto& s : ds.samples) s.population = s.family_id;
    return ds;
}

Eigen::MatrixXd load_pcs(const OutPaths& paths) {
    const fs::path p = paths.pca / "scores.tsv";
    require_artifact(p, "qc-pca");
    TsvTable t = TsvTable::read(p);
    if (t.header.empty() || t.header[0] != "individual_id") {
        throw DataError(p.string() + ": expected first column individual_id");
    }
    const std::size_t k = t.header.size() - 1;
    Eigen::MatrixXd pcs(t.rows.size(), k);
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        for (std::size_t j = 0; j < k; ++j) {
            pcs(i, j) = parse_double(t.rows[i][j + 1]);
        }
    }
    return pcs;
}

std::size_t resolve_causal(const std::vector<SnpRecord>& snps,
                           const std::string& token) {
    if (token.empty()) {
        throw ConfigError(
            "disease.causal_snp must be set (an rs id or chrom:position)");
    }
    const std::size_t colon = token.find(':');
    if (colon != std::string::npos) {
        const std::string chrom = token.substr(0, colon);
        std::int64_t pos = 0;
        try {
            pos = std::stoll(token.substr(colon + 1));
        } catch (const std::exception&) {
            throw ConfigError("disease.causal_snp: bad position in '" + token +
                              "'");
        }
        return find_snp_by_position(snps, chrom, pos);
    }
    return find_snp_by_id(snps, token);
}

IndexRange resolve_region(const std::string& token, std::size_t m,
                          std::size_t causal) {
    if (token == "whole") return {0, m};
    std::uint64_t w = 0;
    try {
        w = std::stoull(token);
    } catch (const std::exception&) {
        throw ConfigError("region must be 'whole' or a positive SNP count, got '" +
                          token + "'");
    }
    if (w == 0) throw ConfigError("region width must be positive");
    return region_around(m, causal, static_cast<std::size_t>(w));
}

Eigen::MatrixXd covariate_matrix(const CovariateTable& t,
                                 const std::vector<std::string>& names,
                                 int pcs) {
    const std::size_t n = t.size();
    Eigen::MatrixXd X(n, names.size() + static_cast<std::size_t>(pcs));
    Eigen::Index c = 0;
    auto fill = [&](const std::string& name) {
        const std::vector<double> col = t.numeric_column(name);
        for (std::size_t i = 0; i < n; ++i) X(i, c) = col[i];
        ++c;
    };
    for (const auto& name : names) fill(name);
    for (int j = 0; j < pcs; ++j) fill("pc" + std::to_string(j + 1));
    return X;
}

std::vector<std::uint8_t> binary_exposure(const CovariateTable& t,
                                          const std::string& name) {
    const std::vector<double> col = t.numeric_column(name);
    std::vector<std::uint8_t> e(col.size());
    for (std::size_t i = 0; i < col.size(); ++i) {
        if (col[i] == 0.0) {
            e[i] = 0;
        } else if (col[i] == 1.0) {
            e[i] = 1;
        } else {
            throw ConfigError("exposure '" + name +
                              "' must be binary 0/1; found value " +
                              format_double(col[i]) + " at row " +
                              std::to_string(i + 1));
        }
    }
    return e;
}

void check_covariate_alignment(const CovariateTable& cov,
                               const GenotypeDataset& ds,
                               const fs::path& where) {
    if (cov.size() != ds.samples.size()) {
        throw DataError(where.string() + ": " + std::to_string(cov.size()) +
                        " rows for " + std::to_string(ds.samples.size()) +
                        " genotyped individuals");
    }
    for (std::size_t i = 0; i < cov.size(); ++i) {
        if (cov.individual_id[i] != ds.samples[i].individual_id) {
            throw DataError(where.string() + ": row " + std::to_string(i + 1) +
                            " is '" + cov.individual_id[i] + "' but the fam has '" +
                            ds.samples[i].individual_id +
                            "' (order must match)");
        }
    }
}

Kinship load_grm(const OutPaths& paths, std::size_t n_expected) {
    const fs::path p = paths.pca / "grm.tsv";
    require_artifact(p, "qc-pca");
    TsvTable t = TsvTable::read(p);
    const std::size_t n = t.rows.size();
    if (n != n_expected || t.header.size() != n + 1) {
        throw DataError(p.string() + ": kinship is " + std::to_string(n) + "x" +
                        std::to_string(t.header.empty() ? 0 : t.header.size() - 1) +
                        ", expected " + std::to_string(n_expected) + " square");
    }
    Kinship K;
    K.matrix.resize(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            K.matrix(i, j) = parse_double(t.rows[i][j + 1]);
        }
    }
    return K;
}

std::string auc_cell(const AucResult& a) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.2f [%.2f-%.2f]", a.auc * 100.0,
                  a.ci_lo * 100.0, a.ci_hi * 100.0);
    return buf;
}

}  // namespace

ReplicateSelector ReplicateSelector::parse(const std::string& token) {
    ReplicateSelector sel;
    if (token.empty() || token == "all") return sel;
    std::string rest = token;
    if (token == "H0") {
        sel.hypothesis = Hypothesis::h0;
        return sel;
    }
    if (token == "H1") {
        sel.hypothesis = Hypothesis::h1;
        return sel;
    }
    if (token.rfind("H0:", 0) == 0) {
        sel.hypothesis = Hypothesis::h0;
        rest = token.substr(3);
    } else if (token.rfind("H1:", 0) == 0) {
        sel.hypothesis = Hypothesis::h1;
        rest = token.substr(3);
    }
    const std::size_t dash = rest.find('-');
    try {
        std::size_t lo = 0, hi = 0;
        if (dash == std::string::npos) {
            lo = hi = std::stoul(rest);
        } else {
            lo = std::stoul(rest.substr(0, dash));
            hi = std::stoul(rest.substr(dash + 1));
        }
        if (lo > hi) throw std::invalid_argument("reversed");
        sel.range = {lo, hi};
    } catch (const std::exception&) {
        throw ConfigError("bad replicate selector '" + token +
                          "' (expected all, H0, H1, N, A-B or H?:A-B)");
    }
    return sel;
}

bool ReplicateSelector::matches(Hypothesis h, std::size_t index) const {
    if (hypothesis && *hypothesis != h) return false;
    if (range && (index < range->first || index > range->second)) return false;
    return true;
}

void cmd_qc_pca(const RunConfig& cfg) {
    cfg.validate();
    OutPaths paths(cfg);
    fs::create_directories(paths.qc);
    fs::create_directories(paths.pca);
    StageLog log(cfg, paths.logs, "qc-pca");

    GenotypeDataset raw = read_genotype_triplet(cfg.genotypes);
    for (auto& s : raw.samples) s.population = s.family_id;
    log.event("loaded", {{"individuals", raw.samples.size()},
                         {"snps", raw.snps.size()}});

    const std::vector<std::size_t> flipped = force_minor_allele(raw);
    auto [filtered, report] = filter_snps(raw, cfg.maf_min, cfg.hwe_alpha);
    write_genotype_triplet(filtered, paths.qc_stem());

    TsvTable rt;
    rt.comments = {cfg.stamp()};
    rt.header = {"snps_in",  "removed_maf", "removed_hwe",       "snps_out",
                 "maf_min",  "hwe_alpha",   "flipped_to_minor"};
    rt.rows = {{std::to_string(report.snps_in), std::to_string(report.removed_maf),
                std::to_string(report.removed_hwe), std::to_string(report.snps_out),
                format_double(report.maf_min), format_double(report.hwe_alpha),
                std::to_string(flipped.size())}};
    rt.write(paths.qc / "report.tsv");

    nlohmann::json meta;
    meta["config_hash"] = hash_hex(cfg);
    meta["seed"] = cfg.seed;
    meta["individuals"] = filtered.samples.size();
    meta["snps_out"] = report.snps_out;
    write_file(paths.qc / "filtered.meta.json", meta.dump(2) + "\n");
    log.event("qc", {{"snps_in", report.snps_in},
                     {"removed_maf", report.removed_maf},
                     {"removed_hwe", report.removed_hwe},
                     {"snps_out", report.snps_out}});

    const PcaResult pcs = pca(filtered.matrix, cfg.pca_components,
                              cfg.pca_thin_step);
    const std::size_t n = filtered.samples.size();
    {
        TsvTable t;
        t.comments = {cfg.stamp()};
        t.header = {"individual_id"};
        for (int j = 0; j < cfg.pca_components; ++j) {
            t.header.push_back("pc" + std::to_string(j + 1));
        }
        t.rows.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            t.rows[i].push_back(filtered.samples[i].individual_id);
            for (int j = 0; j < cfg.pca_components; ++j) {
                t.rows[i].push_back(format_double(pcs.scores(i, j)));
            }
        }
        t.write(paths.pca / "scores.tsv");
    }
    {
        TsvTable t;
        t.comments = {cfg.stamp()};
        t.header = {"component", "eigenvalue"};
        for (int j = 0; j < cfg.pca_components; ++j) {
            t.rows.push_back({std::to_string(j + 1),
                              format_double(pcs.eigenvalues[j])});
        }
        t.write(paths.pca / "eigenvalues.tsv");
    }
    if (cfg.pca_components >= 2) {
        TsvTable t;
        t.comments = {cfg.stamp()};
        t.header = {"individual_id", "pc1", "pc2", "population"};
        for (std::size_t i = 0; i < n; ++i) {
            t.rows.push_back({filtered.samples[i].individual_id,
                              format_double(pcs.scores(i, 0)),
                              format_double(pcs.scores(i, 1)),
                              filtered.samples[i].population.value_or("NA")});
        }
        t.write(paths.pca / "scatter.tsv");
    }
    log.event("pca", {{"components", cfg.pca_components},
                      {"snps_used", pcs.snp_indices_used.size()}});

    const std::vector<std::size_t> grm_idx =
        thin_snps(filtered.matrix.n_snps(), cfg.grm_thin_step);
    const Kinship K = grm(filtered.matrix, grm_idx);
    {
        TsvTable t;
        t.comments = {cfg.stamp()};
        t.header = {"individual_id"};
        for (std::size_t i = 0; i < n; ++i) {
            t.header.push_back(filtered.samples[i].individual_id);
        }
        t.rows.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            t.rows[i].push_back(filtered.samples[i].individual_id);
            for (std::size_t j = 0; j < n; ++j) {
                t.rows[i].push_back(format_double(K.matrix(i, j)));
            }
        }
        t.write(paths.pca / "grm.tsv");
    }
    log.event("grm", {{"snps_used", grm_idx.size()}});
    log.flush();
}

void cmd_simulate(const RunConfig& cfg) {
    cfg.validate();
    OutPaths paths(cfg);
    fs::create_directories(paths.sim);
    StageLog log(cfg, paths.logs, "simulate");

    GenotypeDataset filtered = load_filtered(paths);
    const std::size_t n = filtered.samples.size();

    CovariateTable cov;
    if (!cfg.covariates_file.empty()) {
        cov = CovariateTable::read_tsv(cfg.covariates_file);
        check_covariate_alignment(cov, filtered, cfg.covariates_file);
        log.event("covariates", {{"source", "external"}, {"rows", cov.size()}});
    } else {
        const Eigen::MatrixXd pcs = load_pcs(paths);
        if (static_cast<std::size_t>(pcs.rows()) != n) {
            throw DataError("pca/scores.tsv has " + std::to_string(pcs.rows()) +
                            " rows for " + std::to_string(n) +
                            " genotyped individuals");
        }
        CovSimConfig cc = cfg.covsim;
        cc.seed = cfg.seed;
        cov = build_covariate_table(filtered.samples, pcs, cc,
                                    cfg.smoking_rates);
        log.event("covariates", {{"source", "simulated"}, {"rows", cov.size()}});
    }
    cov.write_tsv(paths.sim / "covariates.tsv", {cfg.stamp()});

    const std::size_t causal =
        resolve_causal(filtered.snps, cfg.disease.causal_snp_id);
    if (cfg.n_cases > n) {
        throw ConfigError("replicates.n_cases " + std::to_string(cfg.n_cases) +
                          " exceeds the " + std::to_string(n) +
                          " genotyped individuals");
    }
    const std::vector<std::uint8_t> exposure =
        binary_exposure(cov, cfg.disease.interacting_exposure);
    const ReplicateSet set = generate_replicates(
        cfg.disease, filtered.matrix.column(causal), exposure, cfg.n_h0,
        cfg.n_h1, cfg.n_cases, cfg.seed, cfg.threads);
    std::vector<std::string> ids;
    ids.reserve(n);
    for (const auto& s : filtered.samples) ids.push_back(s.individual_id);
    write_replicates(set, ids, paths.sim / "phenotypes.tsv", {cfg.stamp()});
    log.event("replicates", {{"n_h0", cfg.n_h0},
                             {"n_h1", cfg.n_h1},
                             {"n_cases", cfg.n_cases},
                             {"causal_snp", filtered.snps[causal].snp_id},
                             {"causal_index", causal}});
    log.flush();
}

void cmd_scan(const RunConfig& cfg, std::optional<ScanMethod> method,
              const ReplicateSelector& selector,
              const std::optional<std::string>& region_token) {
    cfg.validate();
    OutPaths paths(cfg);
    StageLog log(cfg, paths.logs, "scan");

    GenotypeDataset filtered = load_filtered(paths);
    const std::size_t m = filtered.matrix.n_snps();

    require_artifact(paths.sim / "covariates.tsv", "simulate");
    require_artifact(paths.sim / "phenotypes.tsv", "simulate");
    const CovariateTable cov =
        CovariateTable::read_tsv(paths.sim / "covariates.tsv");
    check_covariate_alignment(cov, filtered, paths.sim / "covariates.tsv");
    const ReplicateSet reps = read_replicates(paths.sim / "phenotypes.tsv");
    if (reps.n != filtered.samples.size()) {
        throw DataError("phenotypes.tsv covers " + std::to_string(reps.n) +
                        " individuals, genotypes have " +
                        std::to_string(filtered.samples.size()));
    }

    const Eigen::MatrixXd X =
        covariate_matrix(cov, cfg.scan_covariates, cfg.scan_pcs);

    IndexRange region{0, m};
    if (region_token && *region_token != "whole") {
        const std::size_t causal =
            resolve_causal(filtered.snps, cfg.disease.causal_snp_id);
        region = resolve_region(*region_token, m, causal);
    }

    std::vector<ScanMethod> methods =
        method ? std::vector<ScanMethod>{*method} : cfg.methods;
    for (const ScanMethod meth : methods) {
        const std::string label = cfg.scan_label(meth);
        const fs::path dir = paths.scans / label;
        fs::create_directories(dir);

        SpectralKinship spectral;
        Eigen::MatrixXd rotated;
        if (meth == ScanMethod::lmm) {
            const Kinship K = load_grm(paths, filtered.samples.size());
            spectral = eigendecompose_kinship(K.matrix);
            rotated = rotate_genotypes(spectral, filtered.matrix, region,
                                       cfg.threads);
        }
        int icov = -1;
        if (meth == ScanMethod::snp_x_cov) {
            const auto it =
                std::find(cfg.scan_covariates.begin(), cfg.scan_covariates.end(),
                          cfg.interaction_covariate);
            if (it == cfg.scan_covariates.end()) {
                throw ConfigError("scan.interaction_covariate '" +
                                  cfg.interaction_covariate +
                                  "' is not among scan.covariates");
            }
            icov = static_cast<int>(it - cfg.scan_covariates.begin());
        }

        std::size_t completed = 0;
        for (const auto& rep : reps.replicates) {
            const std::string name =
                replicate_name(rep.hypothesis, rep.replicate_index);
            const fs::path out_file = dir / (name + ".tsv");
            if (!selector.matches(rep.hypothesis, rep.replicate_index)) {
                if (fs::exists(out_file)) ++completed;
                continue;
            }
            if (fs::exists(out_file)) {
                ++completed;  // resumable: keep finished replicates
                continue;
            }
            if (meth == ScanMethod::lmm) {
                LmmOptions lo;
                lo.region = region;
                lo.threads = cfg.threads;
                lo.rotated_genotypes = &rotated;
                const LmmScanResult res =
                    lmm_scan(filtered, X, rep.y, spectral, lo);
                write_lmm_scan(res, out_file, {cfg.stamp()});
            } else {
                ScanOptions so;
                so.coding = cfg.scan_coding;
                so.interaction_covariate = icov;
                so.region = region;
                so.threads = cfg.threads;
                const ScanResult res = scan_logistic(filtered, X, rep.y, so);
                write_scan_result(res, out_file, {cfg.stamp()});
            }
            ++completed;
        }
        log.event("method", {{"method", label},
                             {"replicates_total", reps.replicates.size()},
                             {"completed", completed},
                             {"region_begin", region.begin},
                             {"region_end", region.end}});
    }
    log.flush();
}

void cmd_power(const RunConfig& cfg,
               const std::optional<std::string>& region_token) {
    cfg.validate();
    OutPaths paths(cfg);
    fs::create_directories(paths.power);
    StageLog log(cfg, paths.logs, "power");

    GenotypeDataset filtered = load_filtered(paths);
    const std::size_t m = filtered.matrix.n_snps();
    const std::size_t causal =
        resolve_causal(filtered.snps, cfg.disease.causal_snp_id);
    std::map<std::string, std::size_t> snp_index;
    for (std::size_t j = 0; j < m; ++j) {
        snp_index.emplace(filtered.snps[j].snp_id, j);
    }

    const std::vector<std::string> region_tokens =
        region_token ? std::vector<std::string>{*region_token} : cfg.regions;

    std::vector<std::string> labels;
    if (fs::exists(paths.scans)) {
        for (const auto& entry : fs::directory_iterator(paths.scans)) {
            if (entry.is_directory()) {
                labels.push_back(entry.path().filename().string());
            }
        }
    }
    std::sort(labels.begin(), labels.end());
    if (labels.empty() && cfg.external_scores.empty()) {
        throw DataError(paths.scans.string() +
                        ": no scan results found; run 'scan' first or configure "
                        "power.external scores");
    }

    // Per-replicate p-value vectors over the SNP panel, per method.
    struct MethodData {
        std::vector<std::vector<double>> h0, h1;
    };
    std::map<std::string, MethodData> data;
    for (const auto& label : labels) {
        const fs::path dir = paths.scans / label;
        std::map<std::size_t, fs::path> h0_files, h1_files;
        for (const auto& entry : fs::directory_iterator(dir)) {
            const std::string name = entry.path().filename().string();
            if (entry.path().extension() != ".tsv") continue;
            const std::string base = entry.path().stem().string();
            if (base.size() < 4 || base[2] != '_') continue;
            std::size_t idx = 0;
            try {
                idx = std::stoul(base.substr(3));
            } catch (const std::exception&) {
                continue;
            }
            if (base.rfind("H0_", 0) == 0) {
                h0_files[idx] = entry.path();
            } else if (base.rfind("H1_", 0) == 0) {
                h1_files[idx] = entry.path();
            }
        }
        auto load_all = [&](const std::map<std::size_t, fs::path>& files,
                            const char* hyp) {
            std::vector<std::vector<double>> out;
            std::size_t expect = 0;
            for (const auto& [idx, file] : files) {
                if (idx != expect) {
                    throw DataError(dir.string() + ": " + hyp + " replicate " +
                                    std::to_string(expect) +
                                    " is missing; finish the scan stage first");
                }
                ++expect;
                TsvTable t = TsvTable::read(file);
                std::string p_col;
                for (const auto& c : t.comments) {
                    if (c == "test=snp") p_col = "p_snp";
                    if (c == "test=snp_x_cov") p_col = "p_int";
                    if (c == "test=lmm") p_col = "p";
                }
                if (p_col.empty()) {
                    throw DataError(file.string() +
                                    ": missing test= comment; not a scan result");
                }
                const std::size_t i_id = t.column_index("snp_id");
                const std::size_t i_p = t.column_index(p_col);
                std::vector<double> p(m, std::numeric_limits<double>::quiet_NaN());
                for (const auto& row : t.rows) {
                    const auto it = snp_index.find(row[i_id]);
                    if (it == snp_index.end()) {
                        throw DataError(file.string() + ": SNP '" + row[i_id] +
                                        "' is not in the QC'd panel");
                    }
                    p[it->second] = parse_double(row[i_p]);
                }
                out.push_back(std::move(p));
            }
            return out;
        };
        MethodData md;
        md.h0 = load_all(h0_files, "H0");
        md.h1 = load_all(h1_files, "H1");
        log.event("scans_loaded", {{"method", label},
                                   {"n_h0", md.h0.size()},
                                   {"n_h1", md.h1.size()}});
        data.emplace(label, std::move(md));
    }

    TsvTable summary;
    summary.comments = {cfg.stamp()};
    summary.header = {"method", "region", "n_h0",   "n_h1", "auc",
                      "se",     "ci_low", "ci_high", "label"};
    std::map<std::string, std::map<std::string, std::string>> table_cells;

    for (const auto& [label, md] : data) {
        for (const auto& token : region_tokens) {
            const IndexRange range = resolve_region(token, m, causal);
            ScoreSet scores;
            std::size_t unusable = 0;
            auto summarize = [&](const std::vector<std::vector<double>>& reps,
                                 std::vector<double>& out) {
                for (const auto& p : reps) {
                    const std::span<const double> window(p.data() + range.begin,
                                                         range.size());
                    double s = summary_min_p(window);
                    if (!std::isfinite(s)) {
                        // A replicate whose fits all failed detects nothing.
                        s = 0.0;
                        ++unusable;
                    }
                    out.push_back(s);
                }
            };
            summarize(md.h0, scores.h0);
            summarize(md.h1, scores.h1);
            write_scores(scores, paths.power / ("scores_" + label + "_" + token + ".tsv"),
                         {cfg.stamp(), "method=" + label, "region=" + token});

            const RocCurve curve = roc(scores.h0, scores.h1);
            write_roc(curve, paths.power / ("roc_" + label + "_" + token + ".tsv"),
                      {cfg.stamp(), "method=" + label, "region=" + token});
            write_file(paths.power / ("roc_" + label + "_" + token + ".svg"),
                       roc_svg(curve, label + " (" + token + " region)") +
                           "<!-- " + cfg.stamp() + " -->\n");

            const AucResult a = auc_delong(scores.h0, scores.h1);
            summary.rows.push_back(
                {label, token, std::to_string(a.n_h0), std::to_string(a.n_h1),
                 format_double(a.auc), format_double(a.se),
                 format_double(a.ci_lo), format_double(a.ci_hi),
                 qualitative_label(a.auc)});
            table_cells[token][label] = auc_cell(a);
            log.event("auc", {{"method", label},
                              {"region", token},
                              {"auc", a.auc},
                              {"unusable_scores", unusable}});
        }
    }

    for (const auto& [label, path] : cfg.external_scores) {
        const ScoreSet scores = read_scores(path);
        write_scores(scores, paths.power / ("scores_" + label + "_external.tsv"),
                     {cfg.stamp(), "method=" + label, "region=external"});
        const RocCurve curve = roc(scores.h0, scores.h1);
        write_roc(curve, paths.power / ("roc_" + label + "_external.tsv"),
                  {cfg.stamp(), "method=" + label, "region=external"});
        write_file(paths.power / ("roc_" + label + "_external.svg"),
                   roc_svg(curve, label + " (external scores)") + "<!-- " +
                       cfg.stamp() + " -->\n");
        const AucResult a = auc_delong(scores.h0, scores.h1);
        summary.rows.push_back(
            {label, "external", std::to_string(a.n_h0), std::to_string(a.n_h1),
             format_double(a.auc), format_double(a.se), format_double(a.ci_lo),
             format_double(a.ci_hi), qualitative_label(a.auc)});
        log.event("auc", {{"method", label},
                          {"region", "external"},
                          {"auc", a.auc}});
    }
    summary.write(paths.power / "summary.tsv");

    if (!data.empty()) {
        TsvTable table;
        table.comments = {cfg.stamp(), "cells are percent AUC [95% CI]"};
        table.header = {"region"};
        for (const auto& [label, md] : data) {
            table.header.push_back(label);
            (void)md;
        }
        for (const auto& token : region_tokens) {
            std::vector<std::string> row{token};
            for (const auto& [label, md] : data) {
                row.push_back(table_cells[token][label]);
                (void)md;
            }
            table.rows.push_back(std::move(row));
        }
        table.write(paths.power / "auc_table.tsv");
    }

    // Manhattan plot of the first H1 replicate per method, causal SNP marked.
    for (const auto& [label, md] : data) {
        if (md.h1.empty()) continue;
        std::vector<double> pos(m), nlp(m);
        for (std::size_t j = 0; j < m; ++j) {
            pos[j] = static_cast<double>(filtered.snps[j].bp_position);
            const double p = md.h1.front()[j];
            nlp[j] = std::isfinite(p) && p > 0.0
                         ? -std::log10(p)
                         : std::numeric_limits<double>::quiet_NaN();
        }
        const double causal_pos =
            static_cast<double>(filtered.snps[causal].bp_position);
        write_file(paths.power / ("manhattan_" + label + ".svg"),
                   manhattan_svg(pos, nlp, causal_pos,
                                 label + " (one H1 replicate)") +
                       "<!-- " + cfg.stamp() + " -->\n");
    }
    log.flush();
}

int run_cli(const std::vector<std::string>& args) {
    CLI::App app{"Gene-environment interaction power analysis toolkit"};
    app.require_subcommand(1);

    struct CommonFlags {
        std::string config;
        std::uint64_t seed = 0;
        int threads = -1;
        CLI::Option* seed_opt = nullptr;
    };
    auto add_common = [](CLI::App* sub, CommonFlags& f) {
        sub->add_option("--config", f.config,
                        "Configuration file (sectioned key=value)");
        f.seed_opt = sub->add_option("--seed", f.seed, "Master seed override");
        sub->add_option("--threads", f.threads,
                        "Worker thread cap (0 = all cores)");
    };

    CommonFlags f_qc, f_sim, f_scan, f_power;
    std::string method, replicates = "all", scan_region, power_region;

    CLI::App* qc = app.add_subcommand(
        "qc-pca", "Filter genotypes, compute PCs and the kinship matrix");
    add_common(qc, f_qc);
    CLI::App* sim = app.add_subcommand(
        "simulate", "Simulate covariates and phenotype replicates");
    add_common(sim, f_sim);
    CLI::App* scan = app.add_subcommand(
        "scan", "Per-SNP association scans over all replicates");
    add_common(scan, f_scan);
    scan->add_option("--method", method,
                     "snp, snp_x_cov or lmm (default: all configured)");
    scan->add_option("--replicates", replicates,
                     "Subset, e.g. all, H0, H1, 0-9, H1:0-9");
    scan->add_option("--region", scan_region,
                     "SNP window around the causal SNP, or 'whole'");
    CLI::App* power = app.add_subcommand(
        "power", "ROC/AUC power summaries from completed scans");
    add_common(power, f_power);
    power->add_option("--region", power_region,
                      "Single region to evaluate instead of the configured list");

    std::vector<std::string> full;
    full.reserve(args.size() + 1);
    full.push_back("gxepower");
    full.insert(full.end(), args.begin(), args.end());
    std::vector<const char*> argv;
    argv.reserve(full.size());
    for (const auto& s : full) argv.push_back(s.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    const CommonFlags& flags = qc->parsed()      ? f_qc
                               : sim->parsed()   ? f_sim
                               : scan->parsed()  ? f_scan
                                                 : f_power;
    try {
        std::optional<fs::path> config_path;
        if (!flags.config.empty()) config_path = flags.config;
        RunConfig cfg = load_run_config(config_path);
        if (flags.seed_opt && flags.seed_opt->count() > 0) {
            cfg.seed = flags.seed;
            cfg.covsim.seed = flags.seed;
        }
        if (flags.threads >= 0) cfg.threads = flags.threads;

        if (qc->parsed()) {
            cmd_qc_pca(cfg);
        } else if (sim->parsed()) {
            cmd_simulate(cfg);
        } else if (scan->parsed()) {
            std::optional<ScanMethod> meth;
            if (!method.empty()) meth = scan_method_from_name(method);
            std::optional<std::string> region;
            if (!scan_region.empty()) region = scan_region;
            cmd_scan(cfg, meth, ReplicateSelector::parse(replicates), region);
        } else {
            std::optional<std::string> region;
            if (!power_region.empty()) region = power_region;
            cmd_power(cfg, region);
        }
        return 0;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}

}  // namespace gxe
