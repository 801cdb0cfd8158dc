#include "mrtk/harmonize.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <unordered_map>

namespace mrtk {

std::string to_string(InstrumentStatus status) {
    switch (status) {
        case InstrumentStatus::kept: return "kept";
        case InstrumentStatus::dropped_palindromic: return "dropped_palindromic";
        case InstrumentStatus::dropped_incompatible: return "dropped_incompatible";
        case InstrumentStatus::dropped_missing_in_outcome: return "dropped_missing_in_outcome";
        case InstrumentStatus::dropped_confounder: return "dropped_confounder";
        case InstrumentStatus::dropped_outlier: return "dropped_outlier";
    }
    return "unknown";
}

static InstrumentStatus status_from_string(const std::string& text) {
    if (text == "kept") return InstrumentStatus::kept;
    if (text == "dropped_palindromic") return InstrumentStatus::dropped_palindromic;
    if (text == "dropped_incompatible") return InstrumentStatus::dropped_incompatible;
    if (text == "dropped_missing_in_outcome") return InstrumentStatus::dropped_missing_in_outcome;
    if (text == "dropped_confounder") return InstrumentStatus::dropped_confounder;
    if (text == "dropped_outlier") return InstrumentStatus::dropped_outlier;
    throw std::runtime_error("unknown instrument status: " + text);
}

std::size_t HarmonizedSet::kept_count() const {
    std::size_t n = 0;
    for (const auto& inst : instruments)
        if (inst.status == InstrumentStatus::kept) ++n;
    return n;
}

std::vector<const Instrument*> HarmonizedSet::kept() const {
    std::vector<const Instrument*> out;
    out.reserve(instruments.size());
    for (const auto& inst : instruments)
        if (inst.status == InstrumentStatus::kept) out.push_back(&inst);
    return out;
}

char complement_base(char base) {
    switch (base) {
        case 'A': return 'T';
        case 'T': return 'A';
        case 'C': return 'G';
        case 'G': return 'C';
    }
    return 'N';
}

bool is_palindromic(char a, char b) { return complement_base(a) == b; }

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct Alignment {
    bool matched = false;
    bool flipped = false;  // outcome beta negated, eaf complemented
    bool strand_complement = false;
};

Alignment align_alleles(char exp_effect, char exp_other, char out_effect, char out_other) {
    Alignment a;
    if (out_effect == exp_effect && out_other == exp_other) {
        a.matched = true;
    } else if (out_effect == exp_other && out_other == exp_effect) {
        a.matched = true;
        a.flipped = true;
    } else {
        const char ce = complement_base(out_effect);
        const char co = complement_base(out_other);
        if (ce == exp_effect && co == exp_other) {
            a.matched = true;
            a.strand_complement = true;
        } else if (ce == exp_other && co == exp_effect) {
            a.matched = true;
            a.flipped = true;
            a.strand_complement = true;
        }
    }
    return a;
}

}  // namespace

PairAlignment align_pair(const SummaryRecord& reference, const SummaryRecord& record,
                         double palindrome_eaf_window) {
    PairAlignment out;
    Alignment align = align_alleles(reference.effect_allele, reference.other_allele,
                                    record.effect_allele, record.other_allele);
    if (!align.matched) {
        out.reason = "incompatible alleles";
        return out;
    }
    out.sign = align.flipped ? -1.0 : 1.0;
    if (is_palindromic(reference.effect_allele, reference.other_allele)) {
        std::optional<double> f_rec = record.eaf;
        if (align.flipped && f_rec) f_rec = 1.0 - *f_rec;
        if (!reference.eaf || !f_rec) {
            out.reason = "palindromic with missing EAF";
            return out;
        }
        const double lo = 0.5 - palindrome_eaf_window;
        const double hi = 0.5 + palindrome_eaf_window;
        const bool ref_clear = *reference.eaf < lo || *reference.eaf > hi;
        const bool rec_clear = *f_rec < lo || *f_rec > hi;
        if (!ref_clear || !rec_clear) {
            out.reason = "palindromic with EAF near 0.5";
            return out;
        }
        if ((*reference.eaf < 0.5) != (*f_rec < 0.5)) {
            out.reason = "palindromic with EAF on opposite sides of 0.5";
            return out;
        }
    }
    out.kept = true;
    return out;
}

HarmonizedSet harmonize(std::span<const SummaryRecord> exposure,
                        std::span<const SummaryRecord> outcome, double palindrome_eaf_window,
                        StudyMeta exposure_meta, StudyMeta outcome_meta) {
    if (exposure.empty()) throw std::invalid_argument("harmonize: empty exposure list");
    if (!(palindrome_eaf_window >= 0.0 && palindrome_eaf_window < 0.5))
        throw std::invalid_argument("harmonize: palindrome_eaf_window must lie in [0, 0.5)");

    std::unordered_map<std::string, const SummaryRecord*> outcome_index;
    outcome_index.reserve(outcome.size() * 2);
    for (const auto& rec : outcome) outcome_index.try_emplace(rec.rsid, &rec);

    HarmonizedSet set;
    set.exposure_meta = std::move(exposure_meta);
    set.outcome_meta = std::move(outcome_meta);
    set.instruments.reserve(exposure.size());

    const double lo = 0.5 - palindrome_eaf_window;
    const double hi = 0.5 + palindrome_eaf_window;

    for (const auto& exp : exposure) {
        Instrument inst;
        inst.rsid = exp.rsid;
        inst.effect_allele = exp.effect_allele;
        inst.other_allele = exp.other_allele;
        inst.beta_exposure = exp.beta;
        inst.se_exposure = exp.se;
        inst.eaf_exposure = exp.eaf;
        inst.beta_outcome = kNaN;
        inst.se_outcome = kNaN;

        auto drop = [&](InstrumentStatus status, std::string note) {
            inst.status = status;
            inst.notes = std::move(note);
            set.audit.push_back({inst.rsid, "dropped", inst.notes});
            set.instruments.push_back(inst);
        };

        auto it = outcome_index.find(exp.rsid);
        if (it == outcome_index.end()) {
            drop(InstrumentStatus::dropped_missing_in_outcome, "absent from outcome study");
            continue;
        }
        const SummaryRecord& out = *it->second;

        Alignment align =
            align_alleles(exp.effect_allele, exp.other_allele, out.effect_allele, out.other_allele);
        if (!align.matched) {
            drop(InstrumentStatus::dropped_incompatible,
                 std::string("incompatible alleles (outcome ") + out.effect_allele + "/" +
                     out.other_allele + ")");
            continue;
        }

        double beta_out = align.flipped ? -out.beta : out.beta;
        std::optional<double> eaf_out = out.eaf;
        if (align.flipped && eaf_out) eaf_out = 1.0 - *eaf_out;

        if (is_palindromic(exp.effect_allele, exp.other_allele)) {
            // Allele labels cannot resolve the strand; the frequencies must.
            if (!exp.eaf || !eaf_out) {
                drop(InstrumentStatus::dropped_palindromic, "palindromic with missing EAF");
                continue;
            }
            const double fe = *exp.eaf;
            const double fo = *eaf_out;
            const bool fe_clear = fe < lo || fe > hi;
            const bool fo_clear = fo < lo || fo > hi;
            if (!fe_clear || !fo_clear) {
                drop(InstrumentStatus::dropped_palindromic,
                     "palindromic with EAF near 0.5 (" + format_double(fe) + ", " +
                         format_double(fo) + ")");
                continue;
            }
            if ((fe < 0.5) != (fo < 0.5)) {
                drop(InstrumentStatus::dropped_palindromic,
                     "palindromic with EAF on opposite sides of 0.5");
                continue;
            }
            inst.notes = "palindromic kept (EAF consistent)";
        } else if (align.strand_complement && align.flipped) {
            inst.notes = "outcome strand-complemented and flipped";
        } else if (align.strand_complement) {
            inst.notes = "outcome strand-complemented";
        } else if (align.flipped) {
            inst.notes = "outcome alleles swapped; beta negated";
        } else {
            inst.notes = "alleles already aligned";
        }

        inst.beta_outcome = beta_out;
        inst.se_outcome = out.se;
        inst.eaf_outcome = eaf_out;
        inst.status = InstrumentStatus::kept;
        set.audit.push_back({inst.rsid, "kept", inst.notes});
        set.instruments.push_back(inst);
    }
    return set;
}

DelimitedTable harmonized_table(const HarmonizedSet& set, char delimiter) {
    DelimitedTable table;
    table.delimiter = delimiter;
    table.header = {"rsid",          "effect_allele", "other_allele", "beta_exposure",
                    "se_exposure",   "beta_outcome",  "se_outcome",   "eaf_exposure",
                    "eaf_outcome",   "status",        "notes"};
    for (const auto& inst : set.instruments) {
        table.rows.push_back({
            inst.rsid,
            std::string(1, inst.effect_allele),
            std::string(1, inst.other_allele),
            format_double(inst.beta_exposure),
            format_double(inst.se_exposure),
            format_double(inst.beta_outcome),
            format_double(inst.se_outcome),
            format_optional(inst.eaf_exposure),
            format_optional(inst.eaf_outcome),
            to_string(inst.status),
            inst.notes,
        });
    }
    return table;
}

DelimitedTable audit_table(const HarmonizedSet& set, char delimiter) {
    DelimitedTable table;
    table.delimiter = delimiter;
    table.header = {"rsid", "action", "reason"};
    for (const auto& entry : set.audit)
        table.rows.push_back({entry.rsid, entry.action, entry.reason});
    return table;
}

HarmonizedSet load_harmonized(const std::filesystem::path& path, StudyMeta exposure_meta,
                              StudyMeta outcome_meta, char delimiter) {
    DelimitedTable table = read_delimited(path, delimiter);
    const std::size_t irs = table.require_column("rsid");
    const std::size_t iea = table.require_column("effect_allele");
    const std::size_t ioa = table.require_column("other_allele");
    const std::size_t ibx = table.require_column("beta_exposure");
    const std::size_t isx = table.require_column("se_exposure");
    const std::size_t iby = table.require_column("beta_outcome");
    const std::size_t isy = table.require_column("se_outcome");
    const std::size_t ifx = table.require_column("eaf_exposure");
    const std::size_t ify = table.require_column("eaf_outcome");
    const std::size_t ist = table.require_column("status");
    auto inote = table.column("notes");

    HarmonizedSet set;
    set.exposure_meta = std::move(exposure_meta);
    set.outcome_meta = std::move(outcome_meta);
    for (const auto& row : table.rows) {
        Instrument inst;
        inst.rsid = row[irs];
        inst.effect_allele = row[iea].empty() ? 'N' : row[iea][0];
        inst.other_allele = row[ioa].empty() ? 'N' : row[ioa][0];
        auto num = [&](std::size_t col) {
            if (is_missing_token(row[col])) return kNaN;
            auto v = parse_double(row[col]);
            if (!v) throw std::runtime_error("harmonized table: malformed number in row for " +
                                             inst.rsid);
            return *v;
        };
        inst.beta_exposure = num(ibx);
        inst.se_exposure = num(isx);
        inst.beta_outcome = num(iby);
        inst.se_outcome = num(isy);
        if (!is_missing_token(row[ifx])) inst.eaf_exposure = num(ifx);
        if (!is_missing_token(row[ify])) inst.eaf_outcome = num(ify);
        inst.status = status_from_string(row[ist]);
        if (inote && *inote < row.size()) inst.notes = row[*inote];
        set.instruments.push_back(std::move(inst));
    }
    return set;
}

}  // namespace mrtk
