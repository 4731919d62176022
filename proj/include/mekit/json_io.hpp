#pragma once

#include <string>

#include <json.hpp>

#include "mekit/medist.hpp"

namespace mekit {

// Declarative channel description: {"kind": "...", "params": {...}}.
// Kinds: rational_lt, product_form, rayleigh, nakagami, sdc, ostbc_mrc, zf_mimo,
// mrc_list, sum_interference, oscillatory_ex2.
struct ChannelSpec {
    std::string kind;
    nlohmann::json params = nlohmann::json::object();
};

bool is_known_kind(const std::string& kind);

nlohmann::json to_json(const ChannelSpec& spec);
ChannelSpec channel_spec_from_json(const nlohmann::json& j);

nlohmann::json to_json(const RationalLT& lt);
RationalLT rational_lt_from_json(const nlohmann::json& j);

// {"x": [...], "Y": [[...]], "z": [...]}; complex entries are written as [re, im] pairs.
nlohmann::json to_json(const MEDist& d);
MEDist medist_from_json(const nlohmann::json& j);

Matrix matrix_from_json(const nlohmann::json& j, const char* field);
nlohmann::json matrix_to_json(const Matrix& m);

} // namespace mekit
