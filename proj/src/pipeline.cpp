#include "mrtk/pipeline.hpp"

#include "mrtk/rng.hpp"
#include "mrtk/version.hpp"

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>

namespace mrtk {

namespace {

char delimiter_from_string(const std::string& text) {
    if (text == "tab" || text == "\t") return '\t';
    if (text == "comma" || text == ",") return ',';
    if (text == "semicolon" || text == ";") return ';';
    if (text == "auto" || text.empty()) return '\0';
    throw ConfigError("unknown delimiter: " + text);
}

std::string delimiter_to_string(char delimiter) {
    switch (delimiter) {
        case '\t': return "tab";
        case ',': return "comma";
        case ';': return "semicolon";
        default: return "auto";
    }
}

ColumnMap columns_from_json(const json& j) {
    ColumnMap map;
    auto take = [&](const char* key, std::string& field) {
        if (j.contains(key)) field = j.at(key).get<std::string>();
    };
    take("rsid", map.rsid);
    take("chrom", map.chrom);
    take("pos", map.pos);
    take("effect_allele", map.effect_allele);
    take("other_allele", map.other_allele);
    take("eaf", map.eaf);
    take("beta", map.beta);
    take("se", map.se);
    take("pvalue", map.pvalue);
    take("n", map.n);
    return map;
}

json columns_to_json(const ColumnMap& map) {
    json j;
    j["rsid"] = map.rsid;
    j["chrom"] = map.chrom;
    j["pos"] = map.pos;
    j["effect_allele"] = map.effect_allele;
    j["other_allele"] = map.other_allele;
    j["eaf"] = map.eaf;
    j["beta"] = map.beta;
    j["se"] = map.se;
    j["pvalue"] = map.pvalue;
    j["n"] = map.n;
    return j;
}

StudySpec study_from_json(const json& j) {
    StudySpec spec;
    if (!j.contains("path")) throw ConfigError("study entry lacks a path");
    spec.path = j.at("path").get<std::string>();
    if (j.contains("columns")) spec.columns = columns_from_json(j.at("columns"));
    if (j.contains("meta")) spec.meta = study_meta_from_json(j.at("meta"));
    if (j.contains("delimiter"))
        spec.delimiter = delimiter_from_string(j.at("delimiter").get<std::string>());
    if (spec.meta.study_id.empty()) spec.meta.study_id = spec.path.stem().string();
    if (spec.meta.sample_size < 1) spec.meta.sample_size = 1;
    return spec;
}

json study_to_json(const StudySpec& spec) {
    json j;
    j["path"] = spec.path.string();
    j["columns"] = columns_to_json(spec.columns);
    j["meta"] = to_json(spec.meta);
    j["delimiter"] = delimiter_to_string(spec.delimiter);
    return j;
}

SelectionConfig selection_from_json(const json& j, SelectionConfig base) {
    if (j.contains("p_threshold")) base.p_threshold = j.at("p_threshold").get<double>();
    if (j.contains("r2_threshold")) base.r2_threshold = j.at("r2_threshold").get<double>();
    if (j.contains("clump_window_kb"))
        base.clump_window_kb = j.at("clump_window_kb").get<double>();
    if (j.contains("f_min")) base.f_min = j.at("f_min").get<double>();
    return base;
}

json selection_to_json(const SelectionConfig& config) {
    json j;
    j["p_threshold"] = config.p_threshold;
    j["r2_threshold"] = config.r2_threshold;
    j["clump_window_kb"] = config.clump_window_kb;
    j["f_min"] = config.f_min;
    return j;
}

}  // namespace

std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

PipelineConfig load_pipeline_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError("config is not valid JSON: " + std::string(e.what()));
    }

    PipelineConfig config;
    try {
        if (!j.contains("exposure") || !j.contains("outcome"))
            throw ConfigError("config needs exposure and outcome studies");
        config.exposure = study_from_json(j.at("exposure"));
        config.outcome = study_from_json(j.at("outcome"));
        for (const auto& m : j.value("mediators", json::array()))
            config.mediators.push_back(study_from_json(m));
        if (j.contains("ld_file")) config.ld_file = j.at("ld_file").get<std::string>();
        if (j.contains("confounder_file"))
            config.confounder_file = j.at("confounder_file").get<std::string>();
        if (j.contains("selection"))
            config.selection = selection_from_json(j.at("selection"), SelectionConfig{});
        config.mediator_selection = config.selection;
        config.mediator_selection.p_threshold = 5e-8;
        if (j.contains("mediator_selection"))
            config.mediator_selection =
                selection_from_json(j.at("mediator_selection"), config.mediator_selection);
        config.confounder_p_threshold =
            j.value("confounder_p_threshold", config.confounder_p_threshold);
        config.palindrome_eaf_window =
            j.value("palindrome_eaf_window", config.palindrome_eaf_window);
        if (j.contains("methods"))
            config.methods = j.at("methods").get<std::vector<std::string>>();
        if (j.contains("ivw_mode"))
            config.ivw_mode = j.at("ivw_mode").get<std::string>() == "fixed"
                                  ? IvwMode::fixed_effect
                                  : IvwMode::random_effect;
        config.weighted_median_n_boot =
            j.value("weighted_median_n_boot", config.weighted_median_n_boot);
        if (j.contains("presso")) {
            const json& p = j.at("presso");
            config.presso.enabled = p.value("enabled", true);
            config.presso.n_sim = p.value("n_sim", config.presso.n_sim);
            config.presso.alpha = p.value("alpha", config.presso.alpha);
        }
        if (j.contains("mediation")) {
            const json& m = j.at("mediation");
            if (m.contains("ci_method"))
                config.mediation.ci_method =
                    ci_method_from_string(m.at("ci_method").get<std::string>());
            config.mediation.n_boot = m.value("n_boot", config.mediation.n_boot);
        }
        if (j.contains("power")) {
            const json& p = j.at("power");
            if (p.contains("r2")) config.power.r2 = p.at("r2").get<double>();
            config.power.alpha = p.value("alpha", config.power.alpha);
        }
        config.seed = j.value("seed", std::uint64_t{0});
        config.threads = j.value("threads", 1u);
        if (j.contains("output_dir"))
            config.output_dir = j.at("output_dir").get<std::string>();
    } catch (const json::exception& e) {
        throw ConfigError("config field error: " + std::string(e.what()));
    }

    if (config.output_dir.empty()) {
        if (const char* env = std::getenv("MRTK_OUTPUT_DIR")) config.output_dir = env;
    }
    return config;
}

void validate_pipeline_config(const PipelineConfig& config) {
    auto check_study = [](const StudySpec& spec, const char* role) {
        if (!std::filesystem::exists(spec.path))
            throw ConfigError(std::string(role) + " file not found: " + spec.path.string());
        validate_study_meta(spec.meta);
    };
    check_study(config.exposure, "exposure");
    check_study(config.outcome, "outcome");
    for (const auto& m : config.mediators) check_study(m, "mediator");
    if (config.ld_file && !std::filesystem::exists(*config.ld_file))
        throw ConfigError("ld_file not found: " + config.ld_file->string());
    if (config.confounder_file && !std::filesystem::exists(*config.confounder_file))
        throw ConfigError("confounder_file not found: " + config.confounder_file->string());
    try {
        validate_selection_config(config.selection);
        validate_selection_config(config.mediator_selection);
    } catch (const std::exception& e) {
        throw ConfigError(e.what());
    }
    if (!(config.palindrome_eaf_window >= 0.0 && config.palindrome_eaf_window < 0.5))
        throw ConfigError("palindrome_eaf_window must lie in [0, 0.5)");
    if (!(config.confounder_p_threshold > 0.0 && config.confounder_p_threshold <= 1.0))
        throw ConfigError("confounder_p_threshold must lie in (0,1]");
    if (config.methods.empty()) throw ConfigError("methods list is empty");
    for (const auto& m : config.methods) {
        if (m != "ivw" && m != "egger" && m != "weighted_median" && m != "weighted-median" &&
            m != "wald")
            throw ConfigError("unknown method in config: " + m);
    }
    if (config.power.r2 && !(*config.power.r2 > 0.0 && *config.power.r2 < 1.0))
        throw ConfigError("power.r2 must lie in (0,1)");
    if (config.output_dir.empty())
        throw ConfigError("output_dir missing (set in config or MRTK_OUTPUT_DIR)");
}

json config_to_json(const PipelineConfig& config) {
    json j;
    j["exposure"] = study_to_json(config.exposure);
    j["outcome"] = study_to_json(config.outcome);
    json mediators = json::array();
    for (const auto& m : config.mediators) mediators.push_back(study_to_json(m));
    j["mediators"] = mediators;
    if (config.ld_file) j["ld_file"] = config.ld_file->string();
    if (config.confounder_file) j["confounder_file"] = config.confounder_file->string();
    j["selection"] = selection_to_json(config.selection);
    j["mediator_selection"] = selection_to_json(config.mediator_selection);
    j["confounder_p_threshold"] = config.confounder_p_threshold;
    j["palindrome_eaf_window"] = config.palindrome_eaf_window;
    j["methods"] = config.methods;
    j["ivw_mode"] = config.ivw_mode == IvwMode::fixed_effect ? "fixed" : "random";
    j["weighted_median_n_boot"] = config.weighted_median_n_boot;
    j["presso"] = {{"enabled", config.presso.enabled},
                   {"n_sim", config.presso.n_sim},
                   {"alpha", config.presso.alpha}};
    j["mediation"] = {{"ci_method", to_string(config.mediation.ci_method)},
                      {"n_boot", config.mediation.n_boot}};
    json power;
    if (config.power.r2) power["r2"] = *config.power.r2;
    power["alpha"] = config.power.alpha;
    j["power"] = power;
    j["seed"] = config.seed;
    j["threads"] = config.threads;
    j["output_dir"] = config.output_dir.string();
    return j;
}

DelimitedTable estimates_table(std::span<const MrEstimate> estimates, char delimiter) {
    DelimitedTable table;
    table.delimiter = delimiter;
    table.header = {"method", "exposure_id", "outcome_id", "beta",       "se",
                    "pvalue", "or",          "or_ci_low",  "or_ci_high", "n_snps"};
    for (const auto& est : estimates) {
        table.rows.push_back({to_string(est.method), est.exposure_id, est.outcome_id,
                              format_double(est.beta), format_double(est.se),
                              format_double(est.pvalue), format_double(est.or_point),
                              format_double(est.or_ci_low), format_double(est.or_ci_high),
                              std::to_string(est.n_snps)});
    }
    return table;
}

DelimitedTable emit_forest_data(
    std::span<const MrEstimate> estimates,
    std::span<const std::pair<std::string, MrEstimate>> per_snp_ratios, char delimiter) {
    if (estimates.empty()) throw std::invalid_argument("emit_forest_data: no estimates");
    DelimitedTable table;
    table.delimiter = delimiter;
    table.header = {"row_type", "label",     "beta",       "se",    "pvalue",
                    "or",       "or_ci_low", "or_ci_high", "n_snps"};
    auto push = [&](const std::string& type, const std::string& label, const MrEstimate& est) {
        table.rows.push_back({type, label, format_double(est.beta), format_double(est.se),
                              format_double(est.pvalue), format_double(est.or_point),
                              format_double(est.or_ci_low), format_double(est.or_ci_high),
                              std::to_string(est.n_snps)});
    };
    for (const auto& est : estimates) push("method", to_string(est.method), est);
    for (const auto& [rsid, est] : per_snp_ratios) push("snp", rsid, est);
    return table;
}

namespace {

struct LoadedStudy {
    StudySpec spec;
    std::vector<SummaryRecord> records;  // normalized
    ParseDiagnostics diagnostics;
    std::vector<std::string> source_header;
};

LoadedStudy load_study(const StudySpec& spec) {
    LoadedStudy study;
    study.spec = spec;
    DelimitedTable raw = read_delimited(spec.path, spec.delimiter);
    study.source_header = raw.header;
    ParseResult parsed = parse_sumstats(spec.path, spec.columns, spec.meta, spec.delimiter);
    study.records.reserve(parsed.records.size());
    for (auto& rec : parsed.records) study.records.push_back(normalize_alleles(std::move(rec)));
    study.diagnostics = std::move(parsed.diagnostics);
    return study;
}

json diagnostics_to_json(const ParseDiagnostics& diag) {
    json j;
    j["rows_total"] = diag.rows_total;
    j["rows_rejected"] = diag.rejects.size();
    j["zero_pvalues_clamped"] = diag.zero_pvalues_clamped;
    j["warnings"] = diag.warnings;
    return j;
}

}  // namespace

AnalysisReport run_pipeline(const PipelineConfig& config) {
    try {
        validate_pipeline_config(config);
    } catch (const ConfigError&) {
        throw;
    }
    std::filesystem::create_directories(config.output_dir);
    const auto out = [&](const std::string& name) { return config.output_dir / name; };

    json report;
    report["tool"] = {{"name", "mrtk"}, {"version", MRTK_VERSION}};
    report["config"] = config_to_json(config);
    report["seed"] = config.seed;
    report["timestamps"] = {{"started", utc_timestamp()}};

    auto stage_guard = [](const char* stage, auto&& body) {
        try {
            body();
        } catch (const StageError&) {
            throw;
        } catch (const std::exception& e) {
            throw StageError(stage, e.what());
        }
    };

    // ---- load ----------------------------------------------------------
    LoadedStudy exposure, outcome;
    std::vector<LoadedStudy> mediators;
    LdTable ld;
    bool have_ld = false;
    std::vector<ConfounderAnnotation> confounders;
    stage_guard("load", [&] {
        exposure = load_study(config.exposure);
        outcome = load_study(config.outcome);
        for (const auto& spec : config.mediators) mediators.push_back(load_study(spec));
        if (config.ld_file) {
            ld = LdTable::from_file(*config.ld_file);
            have_ld = true;
        }
        if (config.confounder_file)
            confounders = load_confounder_annotations(*config.confounder_file);

        json studies;
        auto record_study = [&](const LoadedStudy& study) {
            json j = diagnostics_to_json(study.diagnostics);
            j["records"] = study.records.size();
            studies[study.spec.meta.study_id] = j;
            if (!study.diagnostics.rejects.empty())
                write_delimited(out("rejects_" + study.spec.meta.study_id + ".tsv"),
                                rejects_table(study.source_header, study.diagnostics.rejects));
        };
        record_study(exposure);
        record_study(outcome);
        for (const auto& m : mediators) record_study(m);
        report["stages"]["load"] = studies;
    });

    // ---- select --------------------------------------------------------
    SelectionOutcome selection;
    stage_guard("select", [&] {
        selection = extract_instruments(exposure.records, config.selection,
                                        have_ld ? &ld : nullptr, confounders,
                                        config.confounder_p_threshold);
        write_records(out("instruments.tsv"), selection.instruments);
        write_delimited(out("removals.tsv"), removals_table(selection.removals));
        json j;
        j["candidates_removed"] = selection.removals.size();
        j["instruments"] = selection.instruments.size();
        j["warnings"] = selection.warnings;
        report["stages"]["select"] = j;
        if (selection.instruments.empty())
            throw std::runtime_error("no instruments survive selection");
    });

    // ---- harmonize -----------------------------------------------------
    HarmonizedSet harmonized;
    stage_guard("harmonize", [&] {
        harmonized = harmonize(selection.instruments, outcome.records,
                               config.palindrome_eaf_window, exposure.spec.meta,
                               outcome.spec.meta);
        write_delimited(out("harmonized_outcome.tsv"), harmonized_table(harmonized));
        write_delimited(out("audit_outcome.tsv"), audit_table(harmonized));
        json audit = json::array();
        for (const auto& entry : harmonized.audit) audit.push_back(to_json(entry));
        json j;
        j["input"] = harmonized.instruments.size();
        j["kept"] = harmonized.kept_count();
        j["audit"] = audit;
        report["stages"]["harmonize"] = j;
        if (harmonized.kept_count() == 0)
            throw std::runtime_error("no instruments survive harmonization");
    });

    // ---- estimate ------------------------------------------------------
    std::vector<MrEstimate> estimates;
    std::vector<std::pair<std::string, MrEstimate>> per_snp;
    MrEstimate primary;
    stage_guard("estimate", [&] {
        const std::size_t k = harmonized.kept_count();
        json skipped = json::array();
        for (const auto& name : config.methods) {
            if (name == "ivw") {
                estimates.push_back(ivw(harmonized, config.ivw_mode));
            } else if (name == "wald" && k == 1) {
                estimates.push_back(wald_ratio(*harmonized.kept().front(), WaldSeOrder::first,
                                               exposure.spec.meta.study_id,
                                               outcome.spec.meta.study_id));
            } else if (name == "egger") {
                if (k < 3) {
                    skipped.push_back({{"method", name},
                                       {"reason", "needs at least 3 instruments"}});
                    continue;
                }
                EggerResult res = egger(harmonized);
                estimates.push_back(res.slope);
                estimates.push_back(res.intercept);
            } else if (name == "weighted_median" || name == "weighted-median") {
                if (k < 3) {
                    skipped.push_back({{"method", name},
                                       {"reason", "needs at least 3 instruments"}});
                    continue;
                }
                estimates.push_back(weighted_median(harmonized, config.weighted_median_n_boot,
                                                    config.seed, config.threads));
            }
        }
        if (estimates.empty()) throw std::runtime_error("no estimator could run");
        primary = ivw(harmonized, config.ivw_mode);
        for (const auto* inst : harmonized.kept())
            per_snp.emplace_back(inst->rsid,
                                 wald_ratio(*inst, WaldSeOrder::first,
                                            exposure.spec.meta.study_id,
                                            outcome.spec.meta.study_id));
        write_delimited(out("estimates.tsv"), estimates_table(estimates));
        write_delimited(out("forest.tsv"), emit_forest_data(estimates, per_snp));
        json j;
        json list = json::array();
        for (const auto& est : estimates) list.push_back(to_json(est));
        j["estimates"] = list;
        j["primary"] = to_json(primary);
        json ratios = json::array();
        for (const auto& [rsid, est] : per_snp) {
            json r = to_json(est);
            r["rsid"] = rsid;
            ratios.push_back(r);
        }
        j["per_snp_ratios"] = ratios;
        j["skipped"] = skipped;
        report["stages"]["estimate"] = j;
    });

    // ---- sensitivity ---------------------------------------------------
    stage_guard("sensitivity", [&] {
        const std::size_t k = harmonized.kept_count();
        json j;
        if (k >= 2) {
            j["cochran_q"] = to_json(cochran_q(harmonized));
        } else {
            j["cochran_q"] = {{"skipped", "needs at least 2 instruments"}};
        }
        if (config.presso.enabled && k >= 4) {
            PressoOptions options;
            options.n_sim = config.presso.n_sim;
            options.outlier_alpha = config.presso.alpha;
            options.seed = config.seed;
            options.threads = config.threads;
            j["presso"] = to_json(presso(harmonized, options));
        } else if (config.presso.enabled) {
            j["presso"] = {{"skipped", "needs at least 4 instruments"}};
        } else {
            j["presso"] = {{"skipped", "disabled in config"}};
        }
        if (k >= 3) {
            auto loo = leave_one_out(harmonized, config.ivw_mode);
            write_delimited(out("loo.tsv"), loo_table(loo));
            json rows = json::array();
            for (const auto& [rsid, est] : loo) {
                json r = to_json(est);
                r["excluded_rsid"] = rsid;
                rows.push_back(r);
            }
            j["leave_one_out"] = rows;
        } else {
            j["leave_one_out"] = {{"skipped", "needs at least 3 instruments"}};
        }
        report["stages"]["sensitivity"] = j;
    });

    // ---- mediation -----------------------------------------------------
    stage_guard("mediation", [&] {
        json entries = json::array();
        DelimitedTable table;
        table.header = {"mediator_id", "status",     "step1_beta", "step1_p",
                        "step2_beta",  "step2_p",    "indirect",   "ci_low",
                        "ci_high",     "proportion", "significant"};
        for (std::size_t mi = 0; mi < mediators.size(); ++mi) {
            const LoadedStudy& mediator = mediators[mi];
            const std::string& mid = mediator.spec.meta.study_id;
            json entry;
            entry["mediator_id"] = mid;

            // step 1: exposure instruments against the mediator study
            HarmonizedSet step1_set =
                harmonize(selection.instruments, mediator.records,
                          config.palindrome_eaf_window, exposure.spec.meta, mediator.spec.meta);
            write_delimited(out("harmonized_step1_" + mid + ".tsv"),
                            harmonized_table(step1_set));
            write_delimited(out("audit_step1_" + mid + ".tsv"), audit_table(step1_set));
            if (step1_set.kept_count() == 0) {
                entry["status"] = "skipped: no shared instruments with mediator";
                entries.push_back(entry);
                table.rows.push_back({mid, "skipped: no shared instruments with mediator", "NA",
                                      "NA", "NA", "NA", "NA", "NA", "NA", "NA", "NA"});
                continue;
            }
            MrEstimate step1 = ivw(step1_set, config.ivw_mode);
            entry["step1"] = to_json(step1);

            // step 2: mediator's own instruments against the outcome
            SelectionOutcome mediator_sel = extract_instruments(
                mediator.records, config.mediator_selection, have_ld ? &ld : nullptr,
                confounders, config.confounder_p_threshold);
            if (mediator_sel.instruments.empty()) {
                entry["status"] = "skipped: no mediator instruments";
                entries.push_back(entry);
                table.rows.push_back({mid, "skipped: no mediator instruments", "NA", "NA", "NA",
                                      "NA", "NA", "NA", "NA", "NA", "NA"});
                continue;
            }
            HarmonizedSet step2_set =
                harmonize(mediator_sel.instruments, outcome.records,
                          config.palindrome_eaf_window, mediator.spec.meta, outcome.spec.meta);
            write_delimited(out("harmonized_step2_" + mid + ".tsv"),
                            harmonized_table(step2_set));
            write_delimited(out("audit_step2_" + mid + ".tsv"), audit_table(step2_set));
            if (step2_set.kept_count() == 0) {
                entry["status"] = "skipped: no mediator instruments shared with outcome";
                entries.push_back(entry);
                table.rows.push_back({mid, "skipped: no mediator instruments shared with outcome",
                                      "NA", "NA", "NA", "NA", "NA", "NA", "NA", "NA", "NA"});
                continue;
            }
            MrEstimate step2 = ivw(step2_set, config.ivw_mode);
            entry["step2"] = to_json(step2);

            // two-step gate: both steps must be significant at 0.05
            if (!(step1.pvalue < 0.05 && step2.pvalue < 0.05)) {
                entry["status"] = "skipped: step not significant";
                entries.push_back(entry);
                table.rows.push_back({mid, "skipped: step not significant",
                                      format_double(step1.beta), format_double(step1.pvalue),
                                      format_double(step2.beta), format_double(step2.pvalue),
                                      "NA", "NA", "NA", "NA", "NA"});
                continue;
            }

            const std::uint64_t mediation_seed =
                rng::derive_seed(config.seed, "mediation:" + mid);
            MediationResult med = mediate(primary, step1, step2, config.mediation.ci_method,
                                          config.mediation.n_boot, mediation_seed);
            entry["status"] = "done";
            entry["result"] = to_json(med);
            entries.push_back(entry);
            table.rows.push_back({mid, "done", format_double(step1.beta),
                                  format_double(step1.pvalue), format_double(step2.beta),
                                  format_double(step2.pvalue), format_double(med.indirect),
                                  format_double(med.ci_low), format_double(med.ci_high),
                                  format_double(med.proportion),
                                  med.significant ? "true" : "false"});
        }
        if (!mediators.empty()) write_delimited(out("mediation.tsv"), table);
        report["stages"]["mediation"] = entries;
    });

    // ---- power ---------------------------------------------------------
    stage_guard("power", [&] {
        json j;
        if (!config.power.r2) {
            j["skipped"] = "no power.r2 configured";
        } else {
            PowerInput input;
            input.n_outcome = outcome.spec.meta.sample_size;
            input.r2_instruments = *config.power.r2;
            input.beta_causal = primary.beta;
            input.alpha = config.power.alpha;
            if (outcome.spec.meta.trait_type == TraitType::binary) {
                if (outcome.spec.meta.n_cases && outcome.spec.meta.n_controls) {
                    input.case_fraction =
                        static_cast<double>(*outcome.spec.meta.n_cases) /
                        static_cast<double>(*outcome.spec.meta.n_cases +
                                            *outcome.spec.meta.n_controls);
                } else {
                    j["note"] = "binary outcome without case counts; treated as continuous";
                }
            }
            PowerResult power = power_ncp(input);
            j = to_json(power);
            j["beta_causal"] = json_number(input.beta_causal);
            j["r2_instruments"] = input.r2_instruments;
            if (input.case_fraction) j["case_fraction"] = *input.case_fraction;
        }
        report["stages"]["power"] = j;
    });

    report["timestamps"]["finished"] = utc_timestamp();

    std::ofstream out_json(out("report.json"));
    out_json << report.dump(2) << '\n';
    if (!out_json) throw StageError("report", "cannot write report.json");

    return AnalysisReport{std::move(report)};
}

}  // namespace mrtk
