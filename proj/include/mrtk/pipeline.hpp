// Config-driven orchestration of the full two-step workflow:
// extract -> harmonize -> estimate -> sensitivity -> mediate -> power.
#pragma once

#include "mrtk/json_io.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace mrtk {

// exit code 2
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// exit code 3; carries the stage that failed
struct StageError : std::runtime_error {
    StageError(std::string stage_name, const std::string& message)
        : std::runtime_error(stage_name + ": " + message), stage(std::move(stage_name)) {}
    std::string stage;
};

struct StudySpec {
    std::filesystem::path path;
    ColumnMap columns;
    StudyMeta meta;
    char delimiter = '\0';  // auto-detect
};

struct PressoConfig {
    bool enabled = true;
    int n_sim = 5000;
    double alpha = 0.05;
};

struct MediationConfig {
    CiMethod ci_method = CiMethod::bootstrap;
    int n_boot = 10000;
};

struct PowerConfig {
    std::optional<double> r2;  // power stage runs only when set
    double alpha = 0.05;
};

struct PipelineConfig {
    StudySpec exposure;
    StudySpec outcome;
    std::vector<StudySpec> mediators;
    std::optional<std::filesystem::path> ld_file;
    std::optional<std::filesystem::path> confounder_file;
    SelectionConfig selection;           // exposure instruments
    SelectionConfig mediator_selection;  // mediator-as-exposure instruments
    double confounder_p_threshold = 5e-8;
    double palindrome_eaf_window = 0.08;
    std::vector<std::string> methods = {"ivw", "egger", "weighted_median"};
    IvwMode ivw_mode = IvwMode::random_effect;
    int weighted_median_n_boot = 1000;
    PressoConfig presso;
    MediationConfig mediation;
    PowerConfig power;
    std::uint64_t seed = 0;
    unsigned threads = 1;
    std::filesystem::path output_dir;
};

// Reads and validates a JSON config; referenced paths must exist.
// MRTK_OUTPUT_DIR supplies output_dir when the config omits it.
PipelineConfig load_pipeline_config(const std::filesystem::path& path);
void validate_pipeline_config(const PipelineConfig& config);

// Effective config with every default made explicit — this is what reports echo.
json config_to_json(const PipelineConfig& config);

struct AnalysisReport {
    json document;
};

// Runs all stages, writing delimited sub-tables and report.json into
// config.output_dir as each stage completes. Throws StageError on failure
// (already-written artifacts are left in place).
AnalysisReport run_pipeline(const PipelineConfig& config);

// Plot-ready rows: one per method estimate plus one per SNP Wald ratio.
DelimitedTable emit_forest_data(
    std::span<const MrEstimate> estimates,
    std::span<const std::pair<std::string, MrEstimate>> per_snp_ratios, char delimiter = '\t');

DelimitedTable estimates_table(std::span<const MrEstimate> estimates, char delimiter = '\t');

std::string utc_timestamp();

}  // namespace mrtk
