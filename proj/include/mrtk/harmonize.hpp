// Exposure/outcome alignment on shared variants: orientation swaps, strand
// complements, palindrome resolution by allele frequency, and a full audit
// trail of every decision.
#pragma once

#include "mrtk/summary.hpp"

#include <span>
#include <string>
#include <vector>

namespace mrtk {

enum class InstrumentStatus {
    kept,
    dropped_palindromic,
    dropped_incompatible,
    dropped_missing_in_outcome,
    dropped_confounder,
    dropped_outlier,
};

std::string to_string(InstrumentStatus status);

struct Instrument {
    std::string rsid;
    char effect_allele = 'N';
    char other_allele = 'N';
    double beta_exposure = 0.0;
    double se_exposure = 0.0;
    // outcome-side fields are NaN for instruments dropped before alignment
    double beta_outcome = 0.0;
    double se_outcome = 0.0;
    std::optional<double> eaf_exposure;
    std::optional<double> eaf_outcome;
    InstrumentStatus status = InstrumentStatus::kept;
    std::string notes;
};

struct AuditEntry {
    std::string rsid;
    std::string action;  // "kept" | "dropped"
    std::string reason;
};

struct HarmonizedSet {
    StudyMeta exposure_meta;
    StudyMeta outcome_meta;
    std::vector<Instrument> instruments;  // one per input exposure record
    std::vector<AuditEntry> audit;

    std::size_t kept_count() const;
    std::vector<const Instrument*> kept() const;
};

bool is_palindromic(char a, char b);
char complement_base(char base);

// Single-pair alignment used by MVMR: orient `record` onto `reference`'s
// effect allele. sign multiplies record.beta; palindromic pairs obey the same
// EAF window rule as harmonize().
struct PairAlignment {
    bool kept = false;
    double sign = 1.0;
    std::string reason;
};

PairAlignment align_pair(const SummaryRecord& reference, const SummaryRecord& record,
                         double palindrome_eaf_window);

// Aligns each exposure record against the outcome table. Matching tries, in
// order: identical allele pair, swapped pair (outcome beta negated, eaf
// complemented), strand-complemented pair, strand-complemented-and-swapped
// pair. Palindromic (A/T, C/G) variants are kept only when both EAFs exist,
// both sit outside [0.5-window, 0.5+window], and both fall on the same side
// of 0.5; otherwise they are dropped as unresolvable.
HarmonizedSet harmonize(std::span<const SummaryRecord> exposure,
                        std::span<const SummaryRecord> outcome, double palindrome_eaf_window,
                        StudyMeta exposure_meta = {}, StudyMeta outcome_meta = {});

DelimitedTable harmonized_table(const HarmonizedSet& set, char delimiter = '\t');
DelimitedTable audit_table(const HarmonizedSet& set, char delimiter = '\t');

// Rebuilds a HarmonizedSet from a table produced by harmonized_table().
HarmonizedSet load_harmonized(const std::filesystem::path& path, StudyMeta exposure_meta = {},
                              StudyMeta outcome_meta = {}, char delimiter = '\0');

}  // namespace mrtk
