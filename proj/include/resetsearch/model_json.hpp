#pragma once

// JSON binding for model documents:
//   {"D": number,
//    "rate":    {"family": "constant" | "powerlaw" | "quaddecay" | "stretched" | "tabulated", ...},
//    "target":  {"family": "exp2" | "uniform" | "triangular" | "point" | "mixture" | "tabulated", ...},
//    "support": {"kind": "full" | "interval", "L1": number, "L2": number}}
// Parsing is strict: unknown families and malformed structure raise ParseError,
// out-of-domain values raise InvalidParameter from the model constructors.
// Emission is hand-rolled so every number carries 17 significant digits and a
// dumped document re-parses to the identical computation.

#include <string>

#include "resetsearch/model.hpp"

namespace resetsearch::model_json {

model::ModelSpec parse_model(const std::string& text);
model::Rate parse_rate(const std::string& text, double D);
model::Target parse_target(const std::string& text);

std::string model_to_json(const model::ModelSpec& spec);
std::string rate_to_json(const model::Rate& rate, int indent = 0);
std::string target_to_json(const model::Target& target, int indent = 0);
std::string support_to_json(const model::SupportSpec& support, int indent = 0);

// %.17g; the one formatter behind all JSON/CSV numeric output.
std::string format_double(double v);
std::string json_escape(const std::string& s);

}  // namespace resetsearch::model_json
