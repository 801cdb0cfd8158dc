// GWAS summary-statistic ingestion: typed records, table parsing with
// per-row reject reasons, and canonical allele orientation.
#pragma once

#include "mrtk/table.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace mrtk {

enum class TraitType { binary, continuous };

struct StudyMeta {
    std::string study_id;
    std::string trait_name;
    std::int64_t sample_size = 0;
    std::optional<std::int64_t> n_cases;
    std::optional<std::int64_t> n_controls;
    TraitType trait_type = TraitType::continuous;
    std::string ancestry_label;
};

// throws std::invalid_argument on violated invariants
void validate_study_meta(const StudyMeta& meta);

struct SummaryRecord {
    std::string rsid;
    std::string chrom;                    // empty when not provided
    std::optional<std::int64_t> pos;      // base pairs, >= 1
    char effect_allele = 'N';
    char other_allele = 'N';
    std::optional<double> eaf;
    double beta = 0.0;
    double se = 0.0;
    double pvalue = 1.0;
    std::optional<std::int64_t> sample_size;  // overrides StudyMeta when set
};

// Column names as they appear in the input header. rsid/effect_allele/
// other_allele/beta/se/pvalue are required; the rest are picked up when the
// named column exists.
struct ColumnMap {
    std::string rsid = "rsid";
    std::string chrom = "chrom";
    std::string pos = "pos";
    std::string effect_allele = "effect_allele";
    std::string other_allele = "other_allele";
    std::string eaf = "eaf";
    std::string beta = "beta";
    std::string se = "se";
    std::string pvalue = "pvalue";
    std::string n = "n";
};

struct RejectedRow {
    std::size_t line_number = 0;  // 1-based, header is line 1
    std::vector<std::string> fields;
    std::string reason;
};

struct ParseDiagnostics {
    char delimiter = '\t';
    std::size_t rows_total = 0;
    std::size_t zero_pvalues_clamped = 0;
    std::vector<RejectedRow> rejects;
    std::vector<std::string> warnings;
};

struct ParseResult {
    std::vector<SummaryRecord> records;
    ParseDiagnostics diagnostics;
};

// Throws on: missing file, missing mapped column, zero valid rows.
// Rows violating record invariants land in diagnostics.rejects with a reason,
// never silently dropped. delimiter '\0' = auto-detect.
ParseResult parse_sumstats(const std::filesystem::path& path, const ColumnMap& columns,
                           const StudyMeta& meta, char delimiter = '\0');

// Uppercases alleles and swaps to the lexicographically smaller effect allele,
// negating beta and complementing eaf on swap. Idempotent.
// Throws on alleles outside {A,C,G,T}.
SummaryRecord normalize_alleles(SummaryRecord record);

// Rejects rendered as a table with the original columns plus `reason`.
DelimitedTable rejects_table(const std::vector<std::string>& source_header,
                             const std::vector<RejectedRow>& rejects, char delimiter = '\t');

DelimitedTable records_table(std::span<const SummaryRecord> records, char delimiter = '\t');

void write_records(const std::filesystem::path& path, std::span<const SummaryRecord> records,
                   char delimiter = '\t');

}  // namespace mrtk
