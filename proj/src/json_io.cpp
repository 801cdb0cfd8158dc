#include "mrtk/json_io.hpp"

#include <cmath>

namespace mrtk {

json json_number(double value) {
    if (std::isfinite(value)) return value;
    return nullptr;
}

json to_json(const StudyMeta& meta) {
    json j;
    j["study_id"] = meta.study_id;
    j["trait_name"] = meta.trait_name;
    j["sample_size"] = meta.sample_size;
    if (meta.n_cases) j["n_cases"] = *meta.n_cases;
    if (meta.n_controls) j["n_controls"] = *meta.n_controls;
    j["trait_type"] = meta.trait_type == TraitType::binary ? "binary" : "continuous";
    j["ancestry"] = meta.ancestry_label;
    return j;
}

StudyMeta study_meta_from_json(const json& j) {
    StudyMeta meta;
    meta.study_id = j.value("study_id", std::string{});
    meta.trait_name = j.value("trait_name", std::string{});
    meta.sample_size = j.value("sample_size", std::int64_t{1});
    if (j.contains("n_cases")) meta.n_cases = j.at("n_cases").get<std::int64_t>();
    if (j.contains("n_controls")) meta.n_controls = j.at("n_controls").get<std::int64_t>();
    meta.trait_type =
        j.value("trait_type", std::string{"continuous"}) == "binary" ? TraitType::binary
                                                                     : TraitType::continuous;
    meta.ancestry_label = j.value("ancestry", std::string{});
    validate_study_meta(meta);
    return meta;
}

json to_json(const MrEstimate& estimate) {
    json j;
    j["method"] = to_string(estimate.method);
    j["beta"] = json_number(estimate.beta);
    j["se"] = json_number(estimate.se);
    j["pvalue"] = json_number(estimate.pvalue);
    j["or"] = json_number(estimate.or_point);
    j["or_ci_low"] = json_number(estimate.or_ci_low);
    j["or_ci_high"] = json_number(estimate.or_ci_high);
    j["n_snps"] = estimate.n_snps;
    j["exposure_id"] = estimate.exposure_id;
    j["outcome_id"] = estimate.outcome_id;
    return j;
}

MrEstimate estimate_from_json(const json& j) {
    MrEstimate est;
    if (j.contains("method")) est.method = method_from_string(j.at("method").get<std::string>());
    est.beta = j.at("beta").get<double>();
    est.se = j.at("se").get<double>();
    est.n_snps = j.value("n_snps", 0);
    est.exposure_id = j.value("exposure_id", std::string{});
    est.outcome_id = j.value("outcome_id", std::string{});
    // derived fields recomputed rather than trusted
    MrEstimate canonical = make_estimate(est.method, est.beta, est.se, est.n_snps,
                                         est.exposure_id, est.outcome_id);
    return canonical;
}

json to_json(const QResult& q) {
    json j;
    j["q"] = json_number(q.q);
    j["df"] = q.df;
    j["pvalue"] = json_number(q.pvalue);
    return j;
}

json to_json(const PressoReport& report) {
    json j;
    j["global_rss_observed"] = json_number(report.global_rss_observed);
    j["global_pvalue"] = json_number(report.global_pvalue);
    json per_snp = json::array();
    for (const auto& [rsid, p] : report.per_snp)
        per_snp.push_back({{"rsid", rsid}, {"outlier_pvalue", p}});
    j["per_snp"] = per_snp;
    j["outliers"] = report.outliers;
    j["beta_before"] = json_number(report.beta_before);
    j["beta_after"] = json_number(report.beta_after);
    if (report.distortion_pvalue) j["distortion_pvalue"] = *report.distortion_pvalue;
    j["n_sim"] = report.n_sim;
    j["seed"] = report.seed;
    return j;
}

json to_json(const MediationResult& result) {
    json j;
    j["total_beta"] = json_number(result.total_beta);
    j["step1_beta"] = json_number(result.step1_beta);
    j["step1_se"] = json_number(result.step1_se);
    j["step2_beta"] = json_number(result.step2_beta);
    j["step2_se"] = json_number(result.step2_se);
    j["indirect"] = json_number(result.indirect);
    j["indirect_se"] = json_number(result.indirect_se);
    j["ci_low"] = json_number(result.ci_low);
    j["ci_high"] = json_number(result.ci_high);
    j["proportion"] = json_number(result.proportion);
    j["ci_method"] = to_string(result.ci_method);
    if (result.n_boot) j["n_boot"] = *result.n_boot;
    if (result.seed) j["seed"] = *result.seed;
    j["significant"] = result.significant;
    j["proportion_warning"] = result.proportion_warning;
    return j;
}

json to_json(const PowerResult& result) {
    json j;
    j["ncp"] = json_number(result.ncp);
    j["power"] = json_number(result.power);
    return j;
}

json to_json(const AuditEntry& entry) {
    json j;
    j["rsid"] = entry.rsid;
    j["action"] = entry.action;
    j["reason"] = entry.reason;
    return j;
}

}  // namespace mrtk
