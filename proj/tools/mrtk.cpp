// mrtk — two-sample Mendelian randomization toolkit.
// Subcommands cover the full workflow: extract-instruments, harmonize, mr,
// presso, loo, mvmr, mediate, power, pipeline.

#include "mrtk/json_io.hpp"
#include "mrtk/pipeline.hpp"
#include "mrtk/version.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>
#include <unordered_set>

namespace {

using mrtk::json;

char delimiter_from_flag(const std::string& text) {
    if (text == "auto" || text.empty()) return '\0';
    if (text == "tab") return '\t';
    if (text == "comma") return ',';
    if (text == "semicolon") return ';';
    throw mrtk::ConfigError("unknown --delimiter value: " + text);
}

void add_column_flags(CLI::App* cmd, mrtk::ColumnMap& map) {
    cmd->add_option("--col-rsid", map.rsid, "Column holding the variant id");
    cmd->add_option("--col-chrom", map.chrom, "Column holding the chromosome label");
    cmd->add_option("--col-pos", map.pos, "Column holding the base-pair position");
    cmd->add_option("--col-effect-allele", map.effect_allele, "Column holding the effect allele");
    cmd->add_option("--col-other-allele", map.other_allele, "Column holding the other allele");
    cmd->add_option("--col-eaf", map.eaf, "Column holding the effect-allele frequency");
    cmd->add_option("--col-beta", map.beta, "Column holding the effect size");
    cmd->add_option("--col-se", map.se, "Column holding the standard error");
    cmd->add_option("--col-pvalue", map.pvalue, "Column holding the p-value");
    cmd->add_option("--col-n", map.n, "Column holding the per-variant sample size");
}

std::vector<mrtk::SummaryRecord> load_normalized(const std::filesystem::path& path,
                                                 const mrtk::ColumnMap& map,
                                                 const mrtk::StudyMeta& meta, char delimiter,
                                                 mrtk::ParseDiagnostics* diag_out = nullptr) {
    mrtk::ParseResult parsed = mrtk::parse_sumstats(path, map, meta, delimiter);
    for (const auto& warning : parsed.diagnostics.warnings)
        std::cerr << "warning: " << path.string() << ": " << warning << "\n";
    std::vector<mrtk::SummaryRecord> records;
    records.reserve(parsed.records.size());
    for (auto& rec : parsed.records) records.push_back(mrtk::normalize_alleles(std::move(rec)));
    if (diag_out) *diag_out = std::move(parsed.diagnostics);
    return records;
}

void write_json_file(const std::filesystem::path& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

// MrEstimate from either a bare estimate object or an `mr` report;
// `select` picks the method from a report's estimates array.
mrtk::MrEstimate load_estimate(const std::filesystem::path& path, const std::string& select) {
    std::ifstream in(path);
    if (!in) throw mrtk::ConfigError("cannot open estimate file: " + path.string());
    json j;
    in >> j;
    if (j.contains("beta")) return mrtk::estimate_from_json(j);
    if (j.contains("estimates")) {
        const json& list = j.at("estimates");
        for (const auto& entry : list)
            if (entry.value("method", "") == select) return mrtk::estimate_from_json(entry);
        for (const auto& entry : list) {
            const std::string m = entry.value("method", "");
            if (m == "ivw_random" || m == "ivw_fixed") return mrtk::estimate_from_json(entry);
        }
        if (!list.empty()) return mrtk::estimate_from_json(list.front());
    }
    throw mrtk::ConfigError("no usable estimate in " + path.string());
}

int dispatch(int argc, char** argv) {
    CLI::App app{"mrtk — two-sample Mendelian randomization toolkit"};
    app.set_version_flag("--version", MRTK_VERSION);
    app.require_subcommand(1);

    // ---- extract-instruments -------------------------------------------
    auto* extract = app.add_subcommand(
        "extract-instruments", "Select independent, strong instruments from an exposure study");
    struct {
        std::string exposure, ld, confounders, out = "mrtk", delimiter = "auto";
        std::string study_id = "exposure";
        mrtk::ColumnMap columns;
        mrtk::SelectionConfig selection;
        double confounder_p = 5e-8;
    } ex;
    extract->add_option("--exposure", ex.exposure, "Exposure summary-statistics file")
        ->required();
    extract->add_option("--p-threshold", ex.selection.p_threshold, "Instrument p-value cutoff");
    extract->add_option("--r2", ex.selection.r2_threshold, "LD r^2 cutoff for clumping");
    extract->add_option("--window-kb", ex.selection.clump_window_kb, "Clump window in kb");
    extract->add_option("--f-min", ex.selection.f_min, "Minimum F-statistic");
    extract->add_option("--ld", ex.ld, "LD table (rsid_a, rsid_b, r2)");
    extract->add_option("--confounders", ex.confounders,
                        "Confounder annotation table (rsid, trait, pvalue[, source])");
    extract->add_option("--confounder-p", ex.confounder_p,
                        "Annotation p-value below which an instrument is removed");
    extract->add_option("--out", ex.out, "Output prefix");
    extract->add_option("--delimiter", ex.delimiter, "tab|comma|semicolon|auto");
    extract->add_option("--study-id", ex.study_id, "Study id recorded in outputs");
    add_column_flags(extract, ex.columns);
    extract->callback([&] {
        mrtk::StudyMeta meta;
        meta.study_id = ex.study_id;
        meta.sample_size = 1;
        auto records = load_normalized(ex.exposure, ex.columns, meta,
                                       delimiter_from_flag(ex.delimiter));
        mrtk::LdTable ld;
        bool have_ld = false;
        if (!ex.ld.empty()) {
            ld = mrtk::LdTable::from_file(ex.ld);
            have_ld = true;
        }
        std::vector<mrtk::ConfounderAnnotation> annotations;
        if (!ex.confounders.empty())
            annotations = mrtk::load_confounder_annotations(ex.confounders);
        mrtk::SelectionOutcome outcome = mrtk::extract_instruments(
            records, ex.selection, have_ld ? &ld : nullptr, annotations, ex.confounder_p);
        for (const auto& warning : outcome.warnings) std::cerr << "warning: " << warning << "\n";
        mrtk::write_records(ex.out + ".instruments.tsv", outcome.instruments);
        mrtk::write_delimited(ex.out + ".removals.tsv", mrtk::removals_table(outcome.removals));
        std::cout << outcome.instruments.size() << " instruments selected, "
                  << outcome.removals.size() << " removed\n";
    });

    // ---- harmonize -------------------------------------------------------
    auto* harm = app.add_subcommand("harmonize",
                                    "Align exposure instruments with an outcome study");
    struct {
        std::string exposure, outcome, out = "mrtk", delimiter = "auto";
        std::string exposure_id = "exposure", outcome_id = "outcome";
        mrtk::ColumnMap outcome_columns;
        double window = 0.08;
    } ha;
    harm->add_option("--exposure", ha.exposure,
                     "Instrument table (output of extract-instruments)")
        ->required();
    harm->add_option("--outcome", ha.outcome, "Outcome summary-statistics file")->required();
    harm->add_option("--palindrome-window", ha.window, "EAF window around 0.5");
    harm->add_option("--out", ha.out, "Output prefix");
    harm->add_option("--delimiter", ha.delimiter, "Outcome file delimiter");
    harm->add_option("--exposure-id", ha.exposure_id, "Exposure study id");
    harm->add_option("--outcome-id", ha.outcome_id, "Outcome study id");
    add_column_flags(harm, ha.outcome_columns);
    harm->callback([&] {
        mrtk::StudyMeta exposure_meta, outcome_meta;
        exposure_meta.study_id = ha.exposure_id;
        exposure_meta.sample_size = 1;
        outcome_meta.study_id = ha.outcome_id;
        outcome_meta.sample_size = 1;
        auto exposure = load_normalized(ha.exposure, mrtk::ColumnMap{}, exposure_meta, '\0');
        auto outcome = load_normalized(ha.outcome, ha.outcome_columns, outcome_meta,
                                       delimiter_from_flag(ha.delimiter));
        mrtk::HarmonizedSet set =
            mrtk::harmonize(exposure, outcome, ha.window, exposure_meta, outcome_meta);
        mrtk::write_delimited(ha.out + ".harmonized.tsv", mrtk::harmonized_table(set));
        mrtk::write_delimited(ha.out + ".audit.tsv", mrtk::audit_table(set));
        std::cout << set.kept_count() << " of " << set.instruments.size()
                  << " instruments kept\n";
    });

    // ---- mr ---------------------------------------------------------------
    auto* mr = app.add_subcommand("mr", "Causal estimates from a harmonized table");
    struct {
        std::string harmonized, methods = "ivw,egger,weighted-median", out = "mrtk";
        std::string ivw_mode = "random", exposure_id = "exposure", outcome_id = "outcome";
        std::uint64_t seed = 0;
        int n_boot = 1000;
        unsigned threads = 1;
    } m;
    mr->add_option("--harmonized", m.harmonized, "Harmonized instrument table")->required();
    mr->add_option("--methods", m.methods, "Comma-separated: ivw,egger,weighted-median");
    mr->add_option("--ivw-mode", m.ivw_mode, "fixed|random");
    mr->add_option("--seed", m.seed, "Seed for the weighted-median bootstrap");
    mr->add_option("--n-boot", m.n_boot, "Weighted-median bootstrap draws");
    mr->add_option("--threads", m.threads, "Worker threads");
    mr->add_option("--exposure-id", m.exposure_id, "Exposure study id");
    mr->add_option("--outcome-id", m.outcome_id, "Outcome study id");
    mr->add_option("--out", m.out, "Output prefix");
    mr->callback([&] {
        mrtk::StudyMeta exposure_meta, outcome_meta;
        exposure_meta.study_id = m.exposure_id;
        exposure_meta.sample_size = 1;
        outcome_meta.study_id = m.outcome_id;
        outcome_meta.sample_size = 1;
        mrtk::HarmonizedSet set =
            mrtk::load_harmonized(m.harmonized, exposure_meta, outcome_meta);
        const mrtk::IvwMode mode = m.ivw_mode == "fixed" ? mrtk::IvwMode::fixed_effect
                                                         : mrtk::IvwMode::random_effect;
        std::vector<mrtk::MrEstimate> estimates;
        std::stringstream names(m.methods);
        std::string name;
        while (std::getline(names, name, ',')) {
            if (name == "ivw") {
                estimates.push_back(mrtk::ivw(set, mode));
            } else if (name == "egger") {
                mrtk::EggerResult res = mrtk::egger(set);
                estimates.push_back(res.slope);
                estimates.push_back(res.intercept);
            } else if (name == "weighted-median" || name == "weighted_median") {
                estimates.push_back(mrtk::weighted_median(set, m.n_boot, m.seed, m.threads));
            } else {
                throw mrtk::ConfigError("unknown method: " + name);
            }
        }
        std::vector<std::pair<std::string, mrtk::MrEstimate>> per_snp;
        for (const auto* inst : set.kept())
            per_snp.emplace_back(inst->rsid, mrtk::wald_ratio(*inst, mrtk::WaldSeOrder::first,
                                                              m.exposure_id, m.outcome_id));
        json report;
        report["seed"] = m.seed;
        json list = json::array();
        for (const auto& est : estimates) list.push_back(mrtk::to_json(est));
        report["estimates"] = list;
        json ratios = json::array();
        for (const auto& [rsid, est] : per_snp) {
            json r = mrtk::to_json(est);
            r["rsid"] = rsid;
            ratios.push_back(r);
        }
        report["per_snp_ratios"] = ratios;
        write_json_file(m.out + ".mr.json", report);
        mrtk::write_delimited(m.out + ".forest.tsv", mrtk::emit_forest_data(estimates, per_snp));
        std::cout << report.dump(2) << "\n";
    });

    // ---- presso ------------------------------------------------------------
    auto* pr = app.add_subcommand("presso", "MR-PRESSO global/outlier/distortion tests");
    struct {
        std::string harmonized, out = "mrtk";
        mrtk::PressoOptions options;
    } p;
    pr->add_option("--harmonized", p.harmonized, "Harmonized instrument table")->required();
    pr->add_option("--n-sim", p.options.n_sim, "Simulation count (>= 1000)");
    pr->add_option("--alpha", p.options.outlier_alpha, "Outlier significance (Bonferroni)");
    pr->add_option("--n-distortion", p.options.n_distortion, "Distortion null subsets");
    pr->add_option("--seed", p.options.seed, "Simulation seed");
    pr->add_option("--threads", p.options.threads, "Worker threads");
    pr->add_option("--out", p.out, "Output prefix");
    pr->callback([&] {
        mrtk::HarmonizedSet set = mrtk::load_harmonized(p.harmonized);
        mrtk::PressoReport report = mrtk::presso(set, p.options);
        json j = mrtk::to_json(report);
        write_json_file(p.out + ".presso.json", j);
        std::cout << j.dump(2) << "\n";
    });

    // ---- loo ----------------------------------------------------------------
    auto* lo = app.add_subcommand("loo", "Leave-one-out IVW table");
    struct {
        std::string harmonized, out = "mrtk", ivw_mode = "random";
    } l;
    lo->add_option("--harmonized", l.harmonized, "Harmonized instrument table")->required();
    lo->add_option("--ivw-mode", l.ivw_mode, "fixed|random");
    lo->add_option("--out", l.out, "Output prefix");
    lo->callback([&] {
        mrtk::HarmonizedSet set = mrtk::load_harmonized(l.harmonized);
        auto rows = mrtk::leave_one_out(set, l.ivw_mode == "fixed"
                                                 ? mrtk::IvwMode::fixed_effect
                                                 : mrtk::IvwMode::random_effect);
        mrtk::write_delimited(l.out + ".loo.tsv", mrtk::loo_table(rows));
        std::cout << rows.size() << " leave-one-out rows written\n";
    });

    // ---- mvmr ------------------------------------------------------------
    auto* mv = app.add_subcommand("mvmr", "Multivariable MR across several exposures");
    struct {
        std::vector<std::string> exposures;
        std::string outcome, out = "mrtk", delimiter = "auto", ivw_mode = "fixed";
        mrtk::ColumnMap columns;
        double p_threshold = 5e-8;
        double window = 0.08;
    } mm;
    mv->add_option("--exposure", mm.exposures, "Exposure file (repeat per exposure)")
        ->required()
        ->expected(-1);
    mv->add_option("--outcome", mm.outcome, "Outcome summary-statistics file")->required();
    mv->add_option("--p-threshold", mm.p_threshold,
                   "Instrument cutoff applied per exposure (union of hits)");
    mv->add_option("--palindrome-window", mm.window, "EAF window around 0.5");
    mv->add_option("--ivw-mode", mm.ivw_mode, "fixed|random residual scaling");
    mv->add_option("--delimiter", mm.delimiter, "Delimiter for all inputs");
    mv->add_option("--out", mm.out, "Output prefix");
    add_column_flags(mv, mm.columns);
    mv->callback([&] {
        const char delim = delimiter_from_flag(mm.delimiter);
        mrtk::StudyMeta meta;
        meta.sample_size = 1;
        std::vector<std::vector<mrtk::SummaryRecord>> exposures;
        std::vector<std::string> ids;
        std::unordered_set<std::string> union_hits;
        for (const auto& path : mm.exposures) {
            meta.study_id = std::filesystem::path(path).stem().string();
            ids.push_back(meta.study_id);
            auto records = load_normalized(path, mm.columns, meta, delim);
            for (const auto& rec : records)
                if (rec.pvalue < mm.p_threshold) union_hits.insert(rec.rsid);
            exposures.push_back(std::move(records));
        }
        meta.study_id = std::filesystem::path(mm.outcome).stem().string();
        auto outcome = load_normalized(mm.outcome, mm.columns, meta, delim);
        // keep only instrument candidates in every table
        std::vector<mrtk::SummaryRecord> outcome_hits;
        for (const auto& rec : outcome)
            if (union_hits.count(rec.rsid)) outcome_hits.push_back(rec);
        mrtk::MvmrInput input =
            mrtk::mvmr_align(exposures, outcome_hits, mm.window, ids, meta.study_id);
        auto estimates = mrtk::mvmr(input, mm.ivw_mode == "random"
                                               ? mrtk::IvwMode::random_effect
                                               : mrtk::IvwMode::fixed_effect);
        json j;
        j["n_snps"] = input.rsids.size();
        j["rsids"] = input.rsids;
        json list = json::array();
        for (const auto& est : estimates) list.push_back(mrtk::to_json(est));
        j["estimates"] = list;
        write_json_file(mm.out + ".mvmr.json", j);
        std::cout << j.dump(2) << "\n";
    });

    // ---- mediate -----------------------------------------------------------
    auto* med = app.add_subcommand("mediate", "Two-step mediation from three estimates");
    struct {
        std::string total, step1, step2, ci = "bootstrap", select = "ivw_random", out;
        int n_boot = 10000;
        std::uint64_t seed = 0;
    } me;
    med->add_option("--total", me.total, "Total-effect estimate JSON")->required();
    med->add_option("--step1", me.step1, "Exposure->mediator estimate JSON")->required();
    med->add_option("--step2", me.step2, "Mediator->outcome estimate JSON")->required();
    med->add_option("--ci", me.ci, "delta|bootstrap");
    med->add_option("--n-boot", me.n_boot, "Bootstrap draws");
    med->add_option("--seed", me.seed, "Bootstrap seed");
    med->add_option("--select", me.select, "Method picked from mr reports");
    med->add_option("--out", me.out, "Optional output JSON path");
    med->callback([&] {
        mrtk::MrEstimate total = load_estimate(me.total, me.select);
        mrtk::MrEstimate step1 = load_estimate(me.step1, me.select);
        mrtk::MrEstimate step2 = load_estimate(me.step2, me.select);
        mrtk::MediationResult result =
            mrtk::mediate(total, step1, step2, mrtk::ci_method_from_string(me.ci), me.n_boot,
                          me.seed);
        json j = mrtk::to_json(result);
        if (!me.out.empty()) write_json_file(me.out, j);
        std::cout << j.dump(2) << "\n";
    });

    // ---- power ---------------------------------------------------------------
    auto* pw = app.add_subcommand("power", "NCP-based statistical power");
    struct {
        mrtk::PowerInput input;
        double case_fraction = -1.0;
    } po;
    pw->add_option("--n", po.input.n_outcome, "Outcome sample size")->required();
    pw->add_option("--case-fraction", po.case_fraction,
                   "Case fraction for binary outcomes (omit for continuous)");
    pw->add_option("--r2", po.input.r2_instruments, "Variance in exposure explained")
        ->required();
    pw->add_option("--beta", po.input.beta_causal, "Hypothesized log-OR per SD")->required();
    pw->add_option("--alpha", po.input.alpha, "Significance level");
    pw->callback([&] {
        if (po.case_fraction >= 0.0) po.input.case_fraction = po.case_fraction;
        mrtk::PowerResult result = mrtk::power_ncp(po.input);
        std::cout << mrtk::to_json(result).dump(2) << "\n";
    });

    // ---- pipeline ---------------------------------------------------------
    auto* pl = app.add_subcommand("pipeline", "Run the full configured workflow");
    struct {
        std::string config, output_dir;
        std::uint64_t seed = 0;
        bool seed_set = false;
        unsigned threads = 0;
    } pi;
    pl->add_option("--config", pi.config, "Pipeline config JSON")->required();
    pl->add_option("--output-dir", pi.output_dir, "Overrides config output_dir");
    auto* seed_opt = pl->add_option("--seed", pi.seed, "Overrides config seed");
    pl->add_option("--threads", pi.threads, "Overrides config threads");
    pl->callback([&] {
        mrtk::PipelineConfig config = mrtk::load_pipeline_config(pi.config);
        if (!pi.output_dir.empty()) config.output_dir = pi.output_dir;
        if (seed_opt->count() > 0) config.seed = pi.seed;
        if (pi.threads > 0) config.threads = pi.threads;
        mrtk::AnalysisReport report = mrtk::run_pipeline(config);
        std::cout << "pipeline complete; report at "
                  << (config.output_dir / "report.json").string() << "\n";
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;  // flag/usage problems are validation failures
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return dispatch(argc, argv);
    } catch (const mrtk::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const mrtk::StageError& e) {
        std::cerr << "stage failure: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
