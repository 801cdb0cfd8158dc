#include "mrtk/summary.hpp"

#include <algorithm>
#include <cctype>
#include <stdexcept>
#include <unordered_set>

namespace mrtk {

void validate_study_meta(const StudyMeta& meta) {
    if (meta.sample_size < 1)
        throw std::invalid_argument("study " + meta.study_id + ": sample_size must be >= 1");
    if (meta.n_cases && *meta.n_cases < 0)
        throw std::invalid_argument("study " + meta.study_id + ": negative n_cases");
    if (meta.n_controls && *meta.n_controls < 0)
        throw std::invalid_argument("study " + meta.study_id + ": negative n_controls");
    if (meta.trait_type == TraitType::binary && meta.n_cases && meta.n_controls &&
        *meta.n_cases + *meta.n_controls != meta.sample_size)
        throw std::invalid_argument("study " + meta.study_id +
                                    ": n_cases + n_controls != sample_size");
}

namespace {

bool is_base(char c) { return c == 'A' || c == 'C' || c == 'G' || c == 'T'; }

// single upper-case base, or 0 when the token is not a simple SNP allele
char allele_from_token(const std::string& token) {
    if (token.size() != 1) return 0;
    char c = static_cast<char>(std::toupper(static_cast<unsigned char>(token[0])));
    return is_base(c) ? c : static_cast<char>(0);
}

struct ColumnIndices {
    std::size_t rsid, effect, other, beta, se, pvalue;
    std::optional<std::size_t> chrom, pos, eaf, n;
};

ColumnIndices resolve_columns(const DelimitedTable& table, const ColumnMap& map) {
    ColumnIndices idx{};
    idx.rsid = table.require_column(map.rsid);
    idx.effect = table.require_column(map.effect_allele);
    idx.other = table.require_column(map.other_allele);
    idx.beta = table.require_column(map.beta);
    idx.se = table.require_column(map.se);
    idx.pvalue = table.require_column(map.pvalue);
    idx.chrom = table.column(map.chrom);
    idx.pos = table.column(map.pos);
    idx.eaf = table.column(map.eaf);
    idx.n = table.column(map.n);
    return idx;
}

}  // namespace

ParseResult parse_sumstats(const std::filesystem::path& path, const ColumnMap& columns,
                           const StudyMeta& meta, char delimiter) {
    validate_study_meta(meta);
    if (!std::filesystem::exists(path))
        throw std::runtime_error("summary-statistics file not found: " + path.string());
    DelimitedTable table = read_delimited(path, delimiter);
    ColumnIndices idx = resolve_columns(table, columns);

    ParseResult result;
    result.diagnostics.delimiter = table.delimiter;
    std::unordered_set<std::string> seen_rsids;
    seen_rsids.reserve(table.rows.size() * 2);

    const std::size_t min_fields =
        1 + std::max({idx.rsid, idx.effect, idx.other, idx.beta, idx.se, idx.pvalue});

    std::size_t line_number = 1;
    for (const auto& row : table.rows) {
        ++line_number;
        ++result.diagnostics.rows_total;
        auto reject = [&](std::string reason) {
            result.diagnostics.rejects.push_back({line_number, row, std::move(reason)});
        };

        if (row.size() < min_fields) {
            reject("missing required field");
            continue;
        }

        SummaryRecord rec;
        rec.rsid = row[idx.rsid];
        if (rec.rsid.empty() || is_missing_token(rec.rsid)) {
            reject("missing rsid");
            continue;
        }

        rec.effect_allele = allele_from_token(row[idx.effect]);
        rec.other_allele = allele_from_token(row[idx.other]);
        if (rec.effect_allele == 0 || rec.other_allele == 0) {
            reject("not a single-base SNP allele");
            continue;
        }
        if (rec.effect_allele == rec.other_allele) {
            reject("identical alleles");
            continue;
        }

        auto beta = parse_double(row[idx.beta]);
        auto se = parse_double(row[idx.se]);
        auto pvalue = parse_double(row[idx.pvalue]);
        if (!beta || !se || !pvalue) {
            reject("malformed numeric field");
            continue;
        }
        rec.beta = *beta;
        rec.se = *se;
        if (!(rec.se > 0.0)) {
            reject("nonpositive SE");
            continue;
        }
        if (*pvalue == 0.0) {
            // underflowed export; keep the row but floor the p-value
            rec.pvalue = 1e-300;
            ++result.diagnostics.zero_pvalues_clamped;
        } else if (*pvalue < 0.0 || *pvalue > 1.0) {
            reject("p-value outside (0,1]");
            continue;
        } else {
            rec.pvalue = *pvalue;
        }

        if (idx.eaf && *idx.eaf < row.size() && !is_missing_token(row[*idx.eaf])) {
            auto eaf = parse_double(row[*idx.eaf]);
            if (!eaf || *eaf < 0.0 || *eaf > 1.0) {
                reject("EAF outside [0,1]");
                continue;
            }
            rec.eaf = *eaf;
        }
        if (idx.chrom && *idx.chrom < row.size() && !is_missing_token(row[*idx.chrom]))
            rec.chrom = row[*idx.chrom];
        if (idx.pos && *idx.pos < row.size() && !is_missing_token(row[*idx.pos])) {
            auto pos = parse_integer(row[*idx.pos]);
            if (!pos || *pos < 1) {
                reject("position must be a positive integer");
                continue;
            }
            rec.pos = *pos;
        }
        if (idx.n && *idx.n < row.size() && !is_missing_token(row[*idx.n])) {
            auto n = parse_integer(row[*idx.n]);
            if (!n || *n < 1) {
                reject("sample size must be a positive integer");
                continue;
            }
            rec.sample_size = *n;
        }

        if (!seen_rsids.insert(rec.rsid).second) {
            reject("duplicate rsid");
            continue;
        }
        result.records.push_back(std::move(rec));
    }

    if (result.diagnostics.zero_pvalues_clamped > 0)
        result.diagnostics.warnings.push_back(
            std::to_string(result.diagnostics.zero_pvalues_clamped) +
            " zero p-value(s) clamped to 1e-300");
    if (result.records.empty())
        throw std::runtime_error("no valid rows in " + path.string());
    return result;
}

SummaryRecord normalize_alleles(SummaryRecord record) {
    record.effect_allele =
        static_cast<char>(std::toupper(static_cast<unsigned char>(record.effect_allele)));
    record.other_allele =
        static_cast<char>(std::toupper(static_cast<unsigned char>(record.other_allele)));
    if (!is_base(record.effect_allele) || !is_base(record.other_allele))
        throw std::invalid_argument("normalize_alleles: allele outside {A,C,G,T} for " +
                                    record.rsid);
    if (record.effect_allele > record.other_allele) {
        std::swap(record.effect_allele, record.other_allele);
        record.beta = -record.beta;
        if (record.eaf) record.eaf = 1.0 - *record.eaf;
    }
    return record;
}

DelimitedTable rejects_table(const std::vector<std::string>& source_header,
                             const std::vector<RejectedRow>& rejects, char delimiter) {
    DelimitedTable table;
    table.delimiter = delimiter;
    table.header = source_header;
    table.header.push_back("reason");
    for (const auto& r : rejects) {
        auto row = r.fields;
        row.resize(source_header.size());
        row.push_back(r.reason);
        table.rows.push_back(std::move(row));
    }
    return table;
}

DelimitedTable records_table(std::span<const SummaryRecord> records, char delimiter) {
    DelimitedTable table;
    table.delimiter = delimiter;
    table.header = {"rsid", "chrom",  "pos", "effect_allele", "other_allele",
                    "eaf",  "beta",   "se",  "pvalue",        "n"};
    for (const auto& rec : records) {
        table.rows.push_back({
            rec.rsid,
            rec.chrom.empty() ? "NA" : rec.chrom,
            rec.pos ? std::to_string(*rec.pos) : "NA",
            std::string(1, rec.effect_allele),
            std::string(1, rec.other_allele),
            format_optional(rec.eaf),
            format_double(rec.beta),
            format_double(rec.se),
            format_double(rec.pvalue),
            rec.sample_size ? std::to_string(*rec.sample_size) : "NA",
        });
    }
    return table;
}

void write_records(const std::filesystem::path& path, std::span<const SummaryRecord> records,
                   char delimiter) {
    write_delimited(path, records_table(records, delimiter));
}

}  // namespace mrtk
