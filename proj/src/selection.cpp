#include "mrtk/selection.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <unordered_map>

namespace mrtk {

void validate_selection_config(const SelectionConfig& config) {
    if (!(config.p_threshold > 0.0 && config.p_threshold < 1.0))
        throw std::invalid_argument("selection: p_threshold must lie in (0,1)");
    if (config.r2_threshold < 0.0 || config.r2_threshold > 1.0)
        throw std::invalid_argument("selection: r2_threshold must lie in [0,1]");
    if (!(config.clump_window_kb > 0.0))
        throw std::invalid_argument("selection: clump_window_kb must be positive");
    if (config.f_min < 0.0)
        throw std::invalid_argument("selection: f_min must be non-negative");
}

static std::string ld_key(const std::string& a, const std::string& b) {
    return a <= b ? a + '\x1f' + b : b + '\x1f' + a;
}

void LdTable::insert(const std::string& a, const std::string& b, double r2) {
    pairs_[ld_key(a, b)] = r2;
}

double LdTable::r2(const std::string& a, const std::string& b) const {
    auto it = pairs_.find(ld_key(a, b));
    return it == pairs_.end() ? 0.0 : it->second;
}

LdTable LdTable::from_file(const std::filesystem::path& path, char delimiter) {
    DelimitedTable table = read_delimited(path, delimiter);
    std::size_t ia = 0, ib = 1, ir = 2;
    if (auto c = table.column("rsid_a")) ia = *c;
    if (auto c = table.column("rsid_b")) ib = *c;
    if (auto c = table.column("r2")) ir = *c;
    LdTable ld;
    for (const auto& row : table.rows) {
        if (row.size() <= std::max({ia, ib, ir})) continue;
        auto r2 = parse_double(row[ir]);
        if (!r2) throw std::runtime_error("LD table: malformed r2 value for pair " + row[ia] +
                                          "/" + row[ib]);
        ld.insert(row[ia], row[ib], *r2);
    }
    return ld;
}

std::vector<ConfounderAnnotation> load_confounder_annotations(const std::filesystem::path& path,
                                                              char delimiter) {
    DelimitedTable table = read_delimited(path, delimiter);
    std::size_t irs = table.require_column("rsid");
    std::size_t itr = table.require_column("trait");
    std::size_t ip = table.require_column("pvalue");
    auto isrc = table.column("source");
    std::vector<ConfounderAnnotation> out;
    for (const auto& row : table.rows) {
        if (row.size() <= std::max(irs, std::max(itr, ip))) continue;
        auto p = parse_double(row[ip]);
        if (!p || !(*p > 0.0 && *p <= 1.0))
            throw std::runtime_error("confounder table: p-value outside (0,1] for " + row[irs]);
        ConfounderAnnotation a;
        a.rsid = row[irs];
        a.associated_trait = row[itr];
        a.pvalue = *p;
        if (isrc && *isrc < row.size()) a.source = row[*isrc];
        out.push_back(std::move(a));
    }
    return out;
}

std::vector<SummaryRecord> threshold_by_pvalue(std::span<const SummaryRecord> records,
                                               double p_threshold) {
    std::vector<SummaryRecord> kept;
    for (const auto& rec : records)
        if (rec.pvalue < p_threshold) kept.push_back(rec);
    return kept;
}

namespace {

// total order making clumping independent of input order
bool clump_precedes(const SummaryRecord& a, const SummaryRecord& b) {
    if (a.pvalue != b.pvalue) return a.pvalue < b.pvalue;
    if (a.chrom != b.chrom) return a.chrom < b.chrom;
    if (a.pos != b.pos) return a.pos < b.pos;
    return a.rsid < b.rsid;
}

}  // namespace

std::vector<SummaryRecord> clump(std::span<const SummaryRecord> records,
                                 const SelectionConfig& config, const LdTable* ld) {
    validate_selection_config(config);
    for (const auto& rec : records)
        if (rec.chrom.empty() || !rec.pos)
            throw std::runtime_error("clump: record " + rec.rsid + " lacks chrom/pos");

    std::vector<std::size_t> order(records.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return clump_precedes(records[a], records[b]);
    });

    const double window_bp = config.clump_window_kb * 1000.0;
    std::vector<char> pruned(records.size(), 0);
    std::vector<char> surviving(records.size(), 0);
    for (std::size_t oi = 0; oi < order.size(); ++oi) {
        const std::size_t i = order[oi];
        if (pruned[i]) continue;
        surviving[i] = 1;
        const auto& index_rec = records[i];
        for (std::size_t oj = oi + 1; oj < order.size(); ++oj) {
            const std::size_t j = order[oj];
            if (pruned[j]) continue;
            const auto& cand = records[j];
            if (cand.chrom != index_rec.chrom) continue;
            double dist = std::abs(static_cast<double>(*cand.pos - *index_rec.pos));
            if (dist > window_bp) continue;
            // with LD available the window only bounds the search; r^2 decides
            if (ld && ld->r2(index_rec.rsid, cand.rsid) < config.r2_threshold) continue;
            pruned[j] = 1;
        }
    }

    std::vector<SummaryRecord> kept;
    for (std::size_t i = 0; i < records.size(); ++i)
        if (surviving[i]) kept.push_back(records[i]);
    return kept;
}

double f_statistic(const SummaryRecord& record) {
    if (!(record.se > 0.0)) throw std::invalid_argument("f_statistic: se must be positive");
    const double z = record.beta / record.se;
    return z * z;
}

Partition exclude_confounder_hits(std::span<const SummaryRecord> records,
                                  std::span<const ConfounderAnnotation> annotations,
                                  double p_annot_threshold) {
    std::unordered_map<std::string, const ConfounderAnnotation*> hits;
    for (const auto& a : annotations) {
        if (a.pvalue >= p_annot_threshold) continue;
        auto [it, inserted] = hits.try_emplace(a.rsid, &a);
        if (!inserted && a.pvalue < it->second->pvalue) it->second = &a;
    }
    Partition out;
    for (const auto& rec : records) {
        auto it = hits.find(rec.rsid);
        if (it == hits.end()) {
            out.kept.push_back(rec);
        } else {
            out.removed.push_back({rec.rsid, "confounder", it->second->associated_trait});
        }
    }
    return out;
}

Partition filter_by_f(std::span<const SummaryRecord> records, double f_min) {
    Partition out;
    for (const auto& rec : records) {
        double f = f_statistic(rec);
        if (f < f_min) {
            out.removed.push_back(
                {rec.rsid, "f_stat", "weak instrument (F=" + format_double(f) + ")"});
        } else {
            out.kept.push_back(rec);
        }
    }
    return out;
}

SelectionOutcome extract_instruments(std::span<const SummaryRecord> records,
                                     const SelectionConfig& config, const LdTable* ld,
                                     std::span<const ConfounderAnnotation> annotations,
                                     double p_annot_threshold) {
    validate_selection_config(config);
    SelectionOutcome out;

    std::vector<SummaryRecord> candidates = threshold_by_pvalue(records, config.p_threshold);
    if (candidates.empty()) {
        out.warnings.push_back("no records pass p < " + format_double(config.p_threshold));
        return out;
    }
    if (!ld) out.warnings.push_back("no LD table supplied; clumping by distance only");

    std::vector<SummaryRecord> clumped = clump(candidates, config, ld);
    {
        std::unordered_map<std::string, char> kept_ids;
        for (const auto& rec : clumped) kept_ids.emplace(rec.rsid, 1);
        for (const auto& rec : candidates)
            if (!kept_ids.count(rec.rsid))
                out.removals.push_back({rec.rsid, "clump", "pruned within clump window"});
    }

    Partition strong = filter_by_f(clumped, config.f_min);
    out.removals.insert(out.removals.end(), strong.removed.begin(), strong.removed.end());

    Partition clean = exclude_confounder_hits(strong.kept, annotations, p_annot_threshold);
    out.removals.insert(out.removals.end(), clean.removed.begin(), clean.removed.end());

    out.instruments = std::move(clean.kept);
    if (out.instruments.empty())
        out.warnings.push_back("all candidate instruments were removed");
    return out;
}

DelimitedTable removals_table(std::span<const Removal> removals, char delimiter) {
    DelimitedTable table;
    table.delimiter = delimiter;
    table.header = {"rsid", "stage", "reason"};
    for (const auto& r : removals) table.rows.push_back({r.rsid, r.stage, r.reason});
    return table;
}

}  // namespace mrtk
