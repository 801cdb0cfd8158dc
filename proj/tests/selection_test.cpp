#include "mrtk/selection.hpp"

#include "mrtk/rng.hpp"
#include "support/oracles.hpp"
#include "support/synth.hpp"

#include <doctest.h>

#include <algorithm>
#include <set>

using namespace mrtk;

TEST_CASE("threshold keeps exactly the sub-threshold records in order") {
    std::vector<SummaryRecord> records = {
        synth::record("rs1", "1", 100, 'A', 'G', 0.3, 0.30, 0.05),
        synth::record("rs2", "1", 200, 'A', 'G', 0.3, 0.26, 0.05),
    };
    records[0].pvalue = 1e-9;
    records[1].pvalue = 1e-7;
    auto strict = threshold_by_pvalue(records, 5e-8);
    REQUIRE(strict.size() == 1);
    CHECK(strict[0].rsid == "rs1");
    // the relaxed periodontitis-style cutoff admits both
    auto relaxed = threshold_by_pvalue(records, 5e-6);
    CHECK(relaxed.size() == 2);
    CHECK(relaxed[0].rsid == "rs1");
    CHECK(relaxed[1].rsid == "rs2");
}

TEST_CASE("threshold equals brute-force filter over fuzzed records and is idempotent") {
    auto records = synth::random_records(11, 10000);
    const double cutoff = 1e-3;
    auto kept = threshold_by_pvalue(records, cutoff);
    std::vector<std::string> expected;
    for (const auto& rec : records)
        if (rec.pvalue < cutoff) expected.push_back(rec.rsid);
    REQUIRE(kept.size() == expected.size());
    for (std::size_t i = 0; i < kept.size(); ++i) CHECK(kept[i].rsid == expected[i]);
    auto again = threshold_by_pvalue(kept, cutoff);
    CHECK(again.size() == kept.size());
}

TEST_CASE("clump: same-window exclusion without LD") {
    SelectionConfig config;  // window 10,000 kb
    std::vector<SummaryRecord> records = {
        synth::record("rs_a", "1", 1'000'000, 'A', 'G', 0.3, 0.40, 0.05),
        synth::record("rs_b", "1", 6'000'000, 'A', 'G', 0.3, 0.38, 0.05),
    };
    records[0].pvalue = 1e-10;
    records[1].pvalue = 1e-9;
    auto kept = clump(records, config, nullptr);
    REQUIRE(kept.size() == 1);
    CHECK(kept[0].rsid == "rs_a");
}

TEST_CASE("clump: known r2 of zero overrides the distance rule") {
    SelectionConfig config;
    std::vector<SummaryRecord> records = {
        synth::record("rs_a", "1", 1'000'000, 'A', 'G', 0.3, 0.40, 0.05),
        synth::record("rs_b", "1", 6'000'000, 'A', 'G', 0.3, 0.38, 0.05),
    };
    records[0].pvalue = 1e-10;
    records[1].pvalue = 1e-9;
    LdTable ld;  // provided but empty: every pair reads as r2 = 0
    auto kept = clump(records, config, &ld);
    CHECK(kept.size() == 2);

    LdTable correlated;
    correlated.insert("rs_a", "rs_b", 0.9);
    auto pruned = clump(records, config, &correlated);
    REQUIRE(pruned.size() == 1);
    CHECK(pruned[0].rsid == "rs_a");
}

TEST_CASE("clump requires chrom/pos") {
    SelectionConfig config;
    std::vector<SummaryRecord> records = {
        synth::record("rs_a", "1", 100, 'A', 'G', 0.3, 0.4, 0.05)};
    records[0].chrom.clear();
    CHECK_THROWS(clump(records, config, nullptr));
}

TEST_CASE("clump matches the literal greedy reference on random inputs") {
    rng::Stream stream(31, 0);
    for (int rep = 0; rep < 20; ++rep) {
        std::vector<SummaryRecord> records;
        for (int i = 0; i < 50; ++i) {
            auto rec = synth::record("rs" + std::to_string(i), std::to_string(1 + stream.bounded(3)),
                                     static_cast<std::int64_t>(1 + stream.bounded(40'000'000)),
                                     'A', 'G', 0.3, stream.normal(0.2, 0.1), 0.02);
            rec.pvalue = stream.uniform01() * 1e-6;
            records.push_back(std::move(rec));
        }
        LdTable ld;
        for (int p = 0; p < 40; ++p) {
            const auto a = stream.bounded(50);
            const auto b = stream.bounded(50);
            if (a == b) continue;
            ld.insert("rs" + std::to_string(a), "rs" + std::to_string(b), stream.uniform01());
        }
        SelectionConfig config;
        config.clump_window_kb = 5000;
        config.r2_threshold = 0.2;

        for (const LdTable* source : {static_cast<const LdTable*>(nullptr),
                                      static_cast<const LdTable*>(&ld)}) {
            auto kept = clump(records, config, source);
            std::vector<std::string> kept_ids;
            for (const auto& rec : kept) kept_ids.push_back(rec.rsid);
            std::sort(kept_ids.begin(), kept_ids.end());
            auto expected = oracle::clump_reference(records, config, source);
            CHECK(kept_ids == expected);
        }
    }
}

TEST_CASE("clump output is order-independent and antichain-valid") {
    rng::Stream stream(77, 0);
    std::vector<SummaryRecord> records;
    for (int i = 0; i < 40; ++i) {
        auto rec = synth::record("rs" + std::to_string(i), std::to_string(1 + stream.bounded(2)),
                                 static_cast<std::int64_t>(1 + stream.bounded(30'000'000)), 'A',
                                 'G', 0.3, stream.normal(0.2, 0.1), 0.02);
        rec.pvalue = stream.uniform01() * 1e-6;
        records.push_back(std::move(rec));
    }
    SelectionConfig config;
    config.clump_window_kb = 4000;

    auto kept = clump(records, config, nullptr);
    std::set<std::string> baseline;
    for (const auto& rec : kept) baseline.insert(rec.rsid);

    // shuffle deterministically and re-clump
    std::vector<SummaryRecord> shuffled = records;
    for (std::size_t i = shuffled.size(); i > 1; --i)
        std::swap(shuffled[i - 1], shuffled[stream.bounded(i)]);
    auto kept2 = clump(shuffled, config, nullptr);
    std::set<std::string> reshuffled;
    for (const auto& rec : kept2) reshuffled.insert(rec.rsid);
    CHECK(baseline == reshuffled);

    // antichain: no surviving pair violates the window rule
    for (std::size_t i = 0; i < kept.size(); ++i) {
        for (std::size_t j = i + 1; j < kept.size(); ++j) {
            if (kept[i].chrom != kept[j].chrom) continue;
            const double dist = std::abs(static_cast<double>(*kept[i].pos - *kept[j].pos));
            CHECK(dist > config.clump_window_kb * 1000.0);
        }
    }
}

TEST_CASE("f_statistic is the squared z-score") {
    auto strong = synth::record("rs1", "1", 100, 'A', 'G', 0.3, 0.20, 0.02);
    CHECK(f_statistic(strong) == doctest::Approx(100.0).epsilon(1e-12));
    auto weak = synth::record("rs2", "1", 100, 'A', 'G', 0.3, 0.02, 0.02);
    CHECK(f_statistic(weak) == doctest::Approx(1.0).epsilon(1e-12));

    auto part = filter_by_f(std::vector<SummaryRecord>{strong, weak}, 10.0);
    REQUIRE(part.kept.size() == 1);
    CHECK(part.kept[0].rsid == "rs1");
    REQUIRE(part.removed.size() == 1);
    CHECK(part.removed[0].stage == "f_stat");

    // recomputation oracle over fuzzed records
    auto records = synth::random_records(4, 500);
    for (const auto& rec : records) {
        const double z = rec.beta / rec.se;
        const double expected = z * z;
        CHECK(f_statistic(rec) == doctest::Approx(expected).epsilon(1e-12));
    }
}

TEST_CASE("confounder exclusion removes annotated hits with the trait as reason") {
    std::vector<SummaryRecord> records = {
        synth::record("rs62177307", "2", 100, 'A', 'G', 0.3, 0.2, 0.02),
        synth::record("rs1", "3", 100, 'A', 'G', 0.3, 0.2, 0.02),
    };
    std::vector<ConfounderAnnotation> annotations = {
        {"rs62177307", "height", 1e-12, "annotation_db"},
        {"rs1", "coffee intake", 1e-4, "annotation_db"},  // above threshold, ignored
    };
    auto part = exclude_confounder_hits(records, annotations, 5e-8);
    REQUIRE(part.removed.size() == 1);
    CHECK(part.removed[0].rsid == "rs62177307");
    CHECK(part.removed[0].reason == "height");
    REQUIRE(part.kept.size() == 1);
    CHECK(part.kept[0].rsid == "rs1");

    // empty annotation table: no-op
    auto noop = exclude_confounder_hits(records, {}, 5e-8);
    CHECK(noop.kept.size() == records.size());
    CHECK(noop.removed.empty());
}

TEST_CASE("confounder exclusion partitions the input (fuzz)") {
    rng::Stream stream(21, 0);
    auto records = synth::random_records(21, 300);
    for (int rep = 0; rep < 10; ++rep) {
        std::vector<ConfounderAnnotation> annotations;
        for (int i = 0; i < 100; ++i) {
            ConfounderAnnotation a;
            a.rsid = "rs" + std::to_string(stream.bounded(400));
            a.associated_trait = "trait" + std::to_string(stream.bounded(5));
            a.pvalue = stream.uniform01() * 1e-6;
            annotations.push_back(std::move(a));
        }
        auto part = exclude_confounder_hits(records, annotations, 1e-7);
        CHECK(part.kept.size() + part.removed.size() == records.size());
        std::set<std::string> kept_ids, removed_ids;
        for (const auto& rec : part.kept) kept_ids.insert(rec.rsid);
        for (const auto& rem : part.removed) removed_ids.insert(rem.rsid);
        for (const auto& id : removed_ids) CHECK_FALSE(kept_ids.count(id));
        std::set<std::string> unioned = kept_ids;
        unioned.insert(removed_ids.begin(), removed_ids.end());
        std::set<std::string> input_ids;
        for (const auto& rec : records) input_ids.insert(rec.rsid);
        CHECK(unioned == input_ids);
    }
}

TEST_CASE("extract_instruments composes the stages with full audit") {
    auto world = synth::mediation_world(3);
    std::vector<SummaryRecord> normalized;
    for (const auto& rec : world.exposure) normalized.push_back(normalize_alleles(rec));

    LdTable ld;
    ld.insert("rs_e1", world.ld_pruned_rsid, 0.85);
    std::vector<ConfounderAnnotation> annotations = {
        {world.confounded_rsid, "height", 1e-12, "annotation_db"}};

    SelectionConfig config;
    auto outcome = extract_instruments(normalized, config, &ld, annotations, 5e-8);

    std::set<std::string> selected;
    for (const auto& rec : outcome.instruments) selected.insert(rec.rsid);
    CHECK_FALSE(selected.count(world.confounded_rsid));
    CHECK_FALSE(selected.count(world.ld_pruned_rsid));
    CHECK(selected.count("rs_e1"));

    std::set<std::string> removed;
    for (const auto& rem : outcome.removals) {
        CHECK_FALSE(rem.reason.empty());
        removed.insert(rem.rsid);
    }
    CHECK(removed.count(world.confounded_rsid));
    CHECK(removed.count(world.ld_pruned_rsid));

    // below-threshold records are not candidates at all
    CHECK_FALSE(selected.count("rs_null1"));
    CHECK_FALSE(removed.count("rs_null1"));
}

TEST_CASE("selection config validation") {
    SelectionConfig bad;
    bad.p_threshold = 0.0;
    CHECK_THROWS(validate_selection_config(bad));
    bad = SelectionConfig{};
    bad.r2_threshold = 1.5;
    CHECK_THROWS(validate_selection_config(bad));
    bad = SelectionConfig{};
    bad.clump_window_kb = 0.0;
    CHECK_THROWS(validate_selection_config(bad));
}
