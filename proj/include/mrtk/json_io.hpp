// JSON views of domain types for reports and the CLI exchange format.
#pragma once

#include "mrtk/harmonize.hpp"
#include "mrtk/mediation.hpp"
#include "mrtk/selection.hpp"
#include "mrtk/sensitivity.hpp"

#include <json.hpp>

namespace mrtk {

using json = nlohmann::json;

json to_json(const StudyMeta& meta);
StudyMeta study_meta_from_json(const json& j);

json to_json(const MrEstimate& estimate);
MrEstimate estimate_from_json(const json& j);

json to_json(const QResult& q);
json to_json(const PressoReport& report);
json to_json(const MediationResult& result);
json to_json(const PowerResult& result);
json to_json(const AuditEntry& entry);

// finite -> number, NaN/inf -> null (JSON has no non-finite numbers)
json json_number(double value);

}  // namespace mrtk
