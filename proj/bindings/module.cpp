#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <cmath>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "gxe/assoc.hpp"
#include "gxe/error.hpp"
#include "gxe/genotype.hpp"
#include "gxe/lmm.hpp"
#include "gxe/phenosim.hpp"
#include "gxe/pipeline.hpp"
#include "gxe/popstruct.hpp"
#include "gxe/power.hpp"
#include "gxe/rng.hpp"

namespace py = pybind11;
using namespace gxe;

namespace {

GeneticCoding coding_from(const std::string& name) {
    if (name == "dominant") return GeneticCoding::dominant;
    if (name == "additive") return GeneticCoding::additive;
    throw ConfigError("unknown genetic coding '" + name + "'");
}

std::vector<double> to_doubles(const py::array_t<double, py::array::c_style |
                                                             py::array::forcecast>& a) {
    if (a.ndim() != 1) throw ConfigError("expected a 1-d array");
    const double* p = a.data();
    return {p, p + a.shape(0)};
}

std::vector<std::uint8_t> to_binary(const py::array_t<double, py::array::c_style |
                                                                 py::array::forcecast>& a,
                                    const char* what) {
    std::vector<double> v = to_doubles(a);
    std::vector<std::uint8_t> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (v[i] == 0.0) {
            out[i] = 0;
        } else if (v[i] == 1.0) {
            out[i] = 1;
        } else {
            throw ConfigError(std::string(what) + " must contain only 0 and 1");
        }
    }
    return out;
}

py::array_t<std::uint8_t> u8_array(const std::vector<std::uint8_t>& v) {
    py::array_t<std::uint8_t> a(static_cast<py::ssize_t>(v.size()));
    std::copy(v.begin(), v.end(), a.mutable_data());
    return a;
}

py::array_t<double> f64_array(const std::vector<double>& v) {
    py::array_t<double> a(static_cast<py::ssize_t>(v.size()));
    std::copy(v.begin(), v.end(), a.mutable_data());
    return a;
}

// Thin owning wrapper so python holds genotype panels by reference.
struct GenotypeData {
    std::shared_ptr<GenotypeDataset> ds;

    static GenotypeData read(const std::filesystem::path& stem) {
        auto d = std::make_shared<GenotypeDataset>(read_genotype_triplet(stem));
        for (auto& s : d->samples) s.population = s.family_id;
        return {std::move(d)};
    }

    static GenotypeData from_dosages(
        const py::array_t<double, py::array::c_style | py::array::forcecast>& dosages,
        std::vector<std::string> snp_ids, std::vector<std::int64_t> positions,
        const std::string& chromosome, const std::vector<std::string>& family_ids,
        const std::vector<std::string>& individual_ids,
        const std::vector<int>& sex) {
        if (dosages.ndim() != 2) throw ConfigError("dosages must be 2-d");
        const std::size_t n = static_cast<std::size_t>(dosages.shape(0));
        const std::size_t m = static_cast<std::size_t>(dosages.shape(1));
        auto d = std::make_shared<GenotypeDataset>();
        d->matrix = GenotypeMatrix(n, m);
        const double* p = dosages.data();
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < m; ++j) {
                const double v = p[i * m + j];
                if (std::isnan(v)) {
                    d->matrix.set(i, j, GenotypeMatrix::kMissing);
                } else if (v == 0.0 || v == 1.0 || v == 2.0) {
                    d->matrix.set(i, j, static_cast<std::uint8_t>(v));
                } else {
                    throw ConfigError("dosages must be 0, 1, 2 or NaN");
                }
            }
        }
        if (!family_ids.empty() && family_ids.size() != n)
            throw ConfigError("family_ids length mismatch");
        if (!individual_ids.empty() && individual_ids.size() != n)
            throw ConfigError("individual_ids length mismatch");
        if (!sex.empty() && sex.size() != n)
            throw ConfigError("sex length mismatch");
        d->samples.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            d->samples[i].family_id =
                family_ids.empty() ? "F" + std::to_string(i + 1) : family_ids[i];
            d->samples[i].individual_id = individual_ids.empty()
                                              ? "I" + std::to_string(i + 1)
                                              : individual_ids[i];
            d->samples[i].population = d->samples[i].family_id;
            if (!sex.empty()) {
                if (sex[i] == 1) {
                    d->samples[i].sex = Sex::male;
                } else if (sex[i] == 2) {
                    d->samples[i].sex = Sex::female;
                } else if (sex[i] == 0) {
                    d->samples[i].sex = Sex::unknown;
                } else {
                    throw ConfigError("sex entries must be 0, 1 or 2");
                }
            }
        }
        if (snp_ids.empty()) {
            for (std::size_t j = 0; j < m; ++j) {
                snp_ids.push_back("snp" + std::to_string(j + 1));
            }
        }
        if (snp_ids.size() != m) throw ConfigError("snp_ids length mismatch");
        if (positions.empty()) {
            for (std::size_t j = 0; j < m; ++j) {
                positions.push_back(static_cast<std::int64_t>(j + 1) * 1000);
            }
        }
        if (positions.size() != m) throw ConfigError("positions length mismatch");
        d->snps.resize(m);
        for (std::size_t j = 0; j < m; ++j) {
            d->snps[j].chromosome = chromosome;
            d->snps[j].snp_id = snp_ids[j];
            d->snps[j].bp_position = positions[j];
        }
        return {std::move(d)};
    }

    py::array_t<double> dosages() const {
        const std::size_t n = ds->matrix.n_individuals();
        const std::size_t m = ds->matrix.n_snps();
        py::array_t<double> a({n, m});
        double* p = a.mutable_data();
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < m; ++j) {
                const std::uint8_t v = ds->matrix(i, j);
                p[i * m + j] = v == GenotypeMatrix::kMissing
                                   ? std::numeric_limits<double>::quiet_NaN()
                                   : static_cast<double>(v);
            }
        }
        return a;
    }
};

}  // namespace

PYBIND11_MODULE(_core, mod) {
    mod.doc() = "Gene-environment interaction power analysis core";

    py::register_exception<ConfigError>(mod, "ConfigError");
    py::register_exception<DataError>(mod, "DataError");

    py::class_<GenotypeData>(mod, "GenotypeData")
        .def_static("read", &GenotypeData::read, py::arg("stem"),
                    "Load a PLINK .bed/.bim/.fam triplet")
        .def_static("from_dosages", &GenotypeData::from_dosages,
                    py::arg("dosages"),
                    py::arg("snp_ids") = std::vector<std::string>{},
                    py::arg("positions") = std::vector<std::int64_t>{},
                    py::arg("chromosome") = std::string("1"),
                    py::arg("family_ids") = std::vector<std::string>{},
                    py::arg("individual_ids") = std::vector<std::string>{},
                    py::arg("sex") = std::vector<int>{})
        .def_property_readonly(
            "n_individuals",
            [](const GenotypeData& g) { return g.ds->matrix.n_individuals(); })
        .def_property_readonly(
            "n_snps", [](const GenotypeData& g) { return g.ds->matrix.n_snps(); })
        .def_property_readonly("sample_ids",
                               [](const GenotypeData& g) {
                                   std::vector<std::string> out;
                                   for (const auto& s : g.ds->samples)
                                       out.push_back(s.individual_id);
                                   return out;
                               })
        .def_property_readonly("snp_ids",
                               [](const GenotypeData& g) {
                                   std::vector<std::string> out;
                                   for (const auto& s : g.ds->snps)
                                       out.push_back(s.snp_id);
                                   return out;
                               })
        .def_property_readonly("positions",
                               [](const GenotypeData& g) {
                                   std::vector<std::int64_t> out;
                                   for (const auto& s : g.ds->snps)
                                       out.push_back(s.bp_position);
                                   return out;
                               })
        .def("dosages", &GenotypeData::dosages,
             "Dosage matrix (individuals x SNPs), NaN where missing")
        .def("write",
             [](const GenotypeData& g, const std::filesystem::path& stem) {
                 write_genotype_triplet(*g.ds, stem);
             },
             py::arg("stem"))
        .def("qc",
             [](const GenotypeData& g, double maf_min, double hwe_alpha) {
                 GenotypeDataset copy = *g.ds;
                 force_minor_allele(copy);
                 auto [filtered, report] = filter_snps(copy, maf_min, hwe_alpha);
                 py::dict rep;
                 rep["snps_in"] = report.snps_in;
                 rep["removed_maf"] = report.removed_maf;
                 rep["removed_hwe"] = report.removed_hwe;
                 rep["snps_out"] = report.snps_out;
                 GenotypeData out{
                     std::make_shared<GenotypeDataset>(std::move(filtered))};
                 return py::make_tuple(out, rep);
             },
             py::arg("maf_min") = 0.05, py::arg("hwe_alpha") = 0.001,
             "Minor-allele flip + MAF/HWE filter; returns (data, report)");

    mod.def(
        "pca",
        [](const GenotypeData& g, int components, std::size_t thin_step) {
            const PcaResult r = pca(g.ds->matrix, components, thin_step);
            py::dict out;
            out["scores"] = r.scores;
            out["eigenvalues"] = Eigen::VectorXd(r.eigenvalues);
            out["snps_used"] = r.snp_indices_used.size();
            return out;
        },
        py::arg("data"), py::arg("components") = 5, py::arg("thin_step") = 1000);

    mod.def(
        "grm",
        [](const GenotypeData& g, std::size_t thin_step) {
            const auto idx = thin_snps(g.ds->matrix.n_snps(), thin_step);
            return grm(g.ds->matrix, idx).matrix;
        },
        py::arg("data"), py::arg("thin_step") = 1000,
        "Genetic relationship matrix from a thinned SNP subset");

    mod.def(
        "penetrance",
        [](double baseline_prevalence, double relative_risk,
           const py::array_t<double, py::array::c_style | py::array::forcecast>&
               causal_dosage,
           const py::array_t<double, py::array::c_style | py::array::forcecast>&
               exposure,
           const std::string& coding) {
            DiseaseModel model;
            model.baseline_prevalence = baseline_prevalence;
            model.relative_risk = relative_risk;
            model.coding = coding_from(coding);
            model.validate();
            std::vector<double> dose = to_doubles(causal_dosage);
            std::vector<std::uint8_t> g(dose.size());
            for (std::size_t i = 0; i < dose.size(); ++i) {
                g[i] = std::isnan(dose[i]) ? GenotypeMatrix::kMissing
                                           : static_cast<std::uint8_t>(dose[i]);
            }
            return f64_array(
                penetrance(model, g, to_binary(exposure, "exposure")));
        },
        py::arg("baseline_prevalence"), py::arg("relative_risk"),
        py::arg("causal_dosage"), py::arg("exposure"),
        py::arg("coding") = "dominant");

    mod.def(
        "waffect",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& p,
           std::size_t n_cases, std::uint64_t seed) {
            Rng rng(seed);
            return u8_array(waffect_sample(to_doubles(p), n_cases, rng).y);
        },
        py::arg("penetrance"), py::arg("n_cases"), py::arg("seed"),
        "Bernoulli draw conditioned on an exact case count");

    mod.def(
        "logistic",
        [](const Eigen::MatrixXd& X,
           const py::array_t<double, py::array::c_style | py::array::forcecast>& y,
           int max_iter, double tol) {
            LogisticOptions opts;
            opts.max_iter = max_iter;
            opts.tol = tol;
            const std::vector<std::uint8_t> yb = to_binary(y, "y");
            Eigen::VectorXd yv(static_cast<Eigen::Index>(yb.size()));
            for (std::size_t i = 0; i < yb.size(); ++i) {
                yv[static_cast<Eigen::Index>(i)] = yb[i];
            }
            const LogisticFit fit = logistic_irls(X, yv, opts);
            py::dict out;
            out["beta"] = fit.beta;
            out["se"] = fit.se;
            out["log_lik"] = fit.log_lik;
            out["iterations"] = fit.iterations;
            out["status"] = fit_status_name(fit.status);
            return out;
        },
        py::arg("X"), py::arg("y"), py::arg("max_iter") = 25,
        py::arg("tol") = 1e-8, "Logistic regression by IRLS");

    mod.def(
        "scan_logistic",
        [](const GenotypeData& g, const Eigen::MatrixXd& covariates,
           const py::array_t<double, py::array::c_style | py::array::forcecast>& y,
           const std::string& coding, int interaction_covariate, int threads) {
            ScanOptions opts;
            opts.coding = coding_from(coding);
            opts.interaction_covariate = interaction_covariate;
            opts.threads = threads;
            const ScanResult res =
                scan_logistic(*g.ds, covariates, to_binary(y, "y"), opts);
            const std::size_t m = res.rows.size();
            std::vector<double> beta(m), se(m), p(m), beta_int(m), se_int(m),
                p_int(m);
            std::vector<std::string> status(m), ids(m);
            for (std::size_t j = 0; j < m; ++j) {
                const auto& r = res.rows[j];
                ids[j] = r.snp_id;
                beta[j] = r.beta_snp;
                se[j] = r.se_snp;
                p[j] = r.p_snp;
                beta_int[j] = r.beta_int;
                se_int[j] = r.se_int;
                p_int[j] = r.p_int;
                status[j] = fit_status_name(r.status);
            }
            py::dict out;
            out["snp_id"] = ids;
            out["beta"] = f64_array(beta);
            out["se"] = f64_array(se);
            out["p"] = f64_array(p);
            if (res.has_interaction) {
                out["beta_int"] = f64_array(beta_int);
                out["se_int"] = f64_array(se_int);
                out["p_int"] = f64_array(p_int);
            }
            out["status"] = status;
            return out;
        },
        py::arg("data"), py::arg("covariates"), py::arg("y"),
        py::arg("coding") = "additive", py::arg("interaction_covariate") = -1,
        py::arg("threads") = 1,
        "Per-SNP logistic scan; interaction_covariate is a column index into "
        "covariates, -1 for none");

    mod.def(
        "lmm_scan",
        [](const GenotypeData& g, const Eigen::MatrixXd& covariates,
           const py::array_t<double, py::array::c_style | py::array::forcecast>& y,
           const Eigen::MatrixXd& kinship, int threads) {
            const SpectralKinship spectral = eigendecompose_kinship(kinship);
            LmmOptions opts;
            opts.threads = threads;
            const LmmScanResult res =
                lmm_scan(*g.ds, covariates, to_binary(y, "y"), spectral, opts);
            const std::size_t m = res.rows.size();
            std::vector<double> beta(m), se(m), p(m);
            std::vector<std::string> status(m), ids(m);
            for (std::size_t j = 0; j < m; ++j) {
                const auto& r = res.rows[j];
                ids[j] = r.snp_id;
                beta[j] = r.beta;
                se[j] = r.se;
                p[j] = r.p;
                status[j] = fit_status_name(r.status);
            }
            py::dict out;
            out["snp_id"] = ids;
            out["beta"] = f64_array(beta);
            out["se"] = f64_array(se);
            out["p"] = f64_array(p);
            out["status"] = status;
            out["delta"] = res.null_fit.delta;
            out["sigma_g2"] = res.null_fit.sigma_g2;
            out["null_log_lik"] = res.null_fit.log_lik;
            return out;
        },
        py::arg("data"), py::arg("covariates"), py::arg("y"), py::arg("kinship"),
        py::arg("threads") = 1, "Linear mixed model scan (spectral form)");

    mod.def(
        "min_p_score",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& p) {
            return summary_min_p(to_doubles(p));
        },
        py::arg("p_values"), "-log10 of the smallest usable p-value");

    mod.def(
        "roc",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& h0,
           const py::array_t<double, py::array::c_style | py::array::forcecast>& h1) {
            const RocCurve c = roc(to_doubles(h0), to_doubles(h1));
            py::dict out;
            out["fpr"] = f64_array(c.fpr);
            out["tpr"] = f64_array(c.tpr);
            out["thresholds"] = f64_array(c.thresholds);
            return out;
        },
        py::arg("h0_scores"), py::arg("h1_scores"));

    mod.def(
        "auc",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& h0,
           const py::array_t<double, py::array::c_style | py::array::forcecast>& h1) {
            const AucResult a = auc_delong(to_doubles(h0), to_doubles(h1));
            py::dict out;
            out["auc"] = a.auc;
            out["se"] = a.se;
            out["ci_low"] = a.ci_lo;
            out["ci_high"] = a.ci_hi;
            out["label"] = qualitative_label(a.auc);
            return out;
        },
        py::arg("h0_scores"), py::arg("h1_scores"),
        "Exact AUC with a DeLong 95% confidence interval");

    mod.def("run_cli", &run_cli, py::arg("args"),
            "Run a pipeline subcommand; returns the process exit code");
}
