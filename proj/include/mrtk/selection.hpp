// Instrument selection: p-value thresholding, greedy clumping, F-statistic
// filtering and confounder-annotation exclusion, each stage auditable.
#pragma once

#include "mrtk/summary.hpp"

#include <filesystem>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace mrtk {

struct SelectionConfig {
    double p_threshold = 5e-8;
    double r2_threshold = 0.001;
    double clump_window_kb = 10000.0;
    double f_min = 10.0;
};

void validate_selection_config(const SelectionConfig& config);

struct ConfounderAnnotation {
    std::string rsid;
    std::string associated_trait;
    double pvalue = 1.0;
    std::string source;
};

// Pairwise r^2 lookup loaded from a (rsid_a, rsid_b, r2) table.
// Pairs absent from the table count as r^2 = 0.
class LdTable {
public:
    LdTable() = default;
    static LdTable from_file(const std::filesystem::path& path, char delimiter = '\0');

    void insert(const std::string& a, const std::string& b, double r2);
    double r2(const std::string& a, const std::string& b) const;
    bool empty() const { return pairs_.empty(); }

private:
    std::unordered_map<std::string, double> pairs_;  // key "a\x1fb" with a<b
};

std::vector<ConfounderAnnotation> load_confounder_annotations(
    const std::filesystem::path& path, char delimiter = '\0');

// Keeps exactly the records with pvalue < p_threshold, input order preserved.
std::vector<SummaryRecord> threshold_by_pvalue(std::span<const SummaryRecord> records,
                                               double p_threshold);

// Greedy clumping: repeatedly promote the lowest-p remaining record to index
// status and prune remaining records on the same chromosome within the window
// (and, when an LD table is supplied, only those with r^2 >= r2_threshold
// against the index). Ties on p break by (chrom, pos, rsid). Survivors are
// returned in input order. Throws when records lack chrom/pos.
std::vector<SummaryRecord> clump(std::span<const SummaryRecord> records,
                                 const SelectionConfig& config, const LdTable* ld = nullptr);

// Single-SNP approximation (beta/se)^2; the R^2-based formula is not
// computable from summary data alone.
double f_statistic(const SummaryRecord& record);

struct Removal {
    std::string rsid;
    std::string stage;   // "clump" | "f_stat" | "confounder"
    std::string reason;
};

struct Partition {
    std::vector<SummaryRecord> kept;
    std::vector<Removal> removed;
};

Partition exclude_confounder_hits(std::span<const SummaryRecord> records,
                                  std::span<const ConfounderAnnotation> annotations,
                                  double p_annot_threshold);

Partition filter_by_f(std::span<const SummaryRecord> records, double f_min);

struct SelectionOutcome {
    std::vector<SummaryRecord> instruments;
    std::vector<Removal> removals;
    std::vector<std::string> warnings;
};

// threshold -> clump -> F filter -> confounder exclusion, with every removed
// record carrying a reason. Records below the p threshold are simply not
// candidates and do not appear in removals.
SelectionOutcome extract_instruments(std::span<const SummaryRecord> records,
                                     const SelectionConfig& config, const LdTable* ld,
                                     std::span<const ConfounderAnnotation> annotations,
                                     double p_annot_threshold);

DelimitedTable removals_table(std::span<const Removal> removals, char delimiter = '\t');

}  // namespace mrtk
