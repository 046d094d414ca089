#pragma once

// JSON encodings of library values and reports, and the tensor-field input
// format. Numbers are written with 17 significant digits so that identical
// runs produce byte-identical files; non-finite numbers become null.

#include "hsalg/algebroid.hpp"
#include "hsalg/bonnet.hpp"
#include "hsalg/fundamental_forms.hpp"
#include "hsalg/log_derivative.hpp"

#include <json.hpp>

#include <string>

namespace hsalg {

using Json = nlohmann::ordered_json;

/// Deterministic text form; `indent` < 0 gives a single line.
std::string dump_json(const Json& value, int indent = 2);

Json to_json(const Vec& v);
/// Row-major nested arrays.
Json to_json(const Mat& m);
Json to_json(const KillingField& X);
Json to_json(const RigidMotion& phi);
Json to_json(const ResidualReport& report);
Json to_json(const BonnetConditionReport& report);
Json to_json(const Chart& chart);
Json to_json(const IntegrationStats& stats);
/// Diagnostics only; positions go to mesh files.
Json to_json(const ReconstructionResult& result);

KillingField killing_field_from_json(const Json& j);
RigidMotion rigid_motion_from_json(const Json& j);
Chart chart_from_json(const Json& j);

/// {"chart": {...}, "g": [[g00, g01, ...] per node], "II": [...]} with
/// per-node row-major matrices in chart node order.
Json fields_to_json(const TensorFieldPair& fields);

/// Parses the format above into grid-interpolated fields. Throws ParseError
/// naming the line (for syntax errors) or the offending field.
TensorFieldPair fields_from_json_text(const std::string& text);

}  // namespace hsalg
