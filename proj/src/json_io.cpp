#include "mekit/json_io.hpp"

#include <array>

namespace mekit {

using nlohmann::json;

namespace {

constexpr std::array<const char*, 10> kKinds = {"rational_lt", "product_form",  "rayleigh",     "nakagami",
                                                "sdc",         "ostbc_mrc",     "zf_mimo",      "mrc_list",
                                                "sum_interference", "oscillatory_ex2"};

cplx scalar_from_json(const json& v, const char* field) {
    if (v.is_number()) return {v.get<double>(), 0.0};
    if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number())
        return {v[0].get<double>(), v[1].get<double>()};
    throw ConstructionError(std::string("field '") + field + "': expected a number or [re, im] pair");
}

json scalar_to_json(cplx v) {
    if (v.imag() == 0.0) return v.real();
    return json::array({v.real(), v.imag()});
}

std::vector<double> real_list(const json& j, const char* field) {
    if (!j.is_array()) throw ConstructionError(std::string("field '") + field + "': expected an array of numbers");
    std::vector<double> out;
    for (const auto& v : j) {
        if (!v.is_number()) throw ConstructionError(std::string("field '") + field + "': non-numeric entry");
        out.push_back(v.get<double>());
    }
    return out;
}

} // namespace

bool is_known_kind(const std::string& kind) {
    for (const char* k : kKinds)
        if (kind == k) return true;
    return false;
}

json to_json(const ChannelSpec& spec) { return json{{"kind", spec.kind}, {"params", spec.params}}; }

ChannelSpec channel_spec_from_json(const json& j) {
    if (!j.is_object()) throw ConstructionError("channel spec: expected a JSON object");
    if (!j.contains("kind") || !j["kind"].is_string())
        throw ConstructionError("channel spec: missing string field 'kind'");
    ChannelSpec spec;
    spec.kind = j["kind"].get<std::string>();
    if (!is_known_kind(spec.kind)) throw ConstructionError("channel spec: unknown kind '" + spec.kind + "'");
    if (j.contains("params")) {
        if (!j["params"].is_object()) throw ConstructionError("channel spec: field 'params' must be an object");
        spec.params = j["params"];
    }
    return spec;
}

json to_json(const RationalLT& lt) { return json{{"p", lt.p}, {"q", lt.q}}; }

RationalLT rational_lt_from_json(const json& j) {
    if (!j.is_object() || !j.contains("p") || !j.contains("q"))
        throw ConstructionError("rational transform: expected an object with fields 'p' and 'q'");
    return RationalLT{real_list(j["p"], "p"), real_list(j["q"], "q")};
}

Matrix matrix_from_json(const json& j, const char* field) {
    if (!j.is_array() || j.empty()) throw ConstructionError(std::string("field '") + field + "': expected rows");
    const auto rows = static_cast<Eigen::Index>(j.size());
    if (!j[0].is_array()) throw ConstructionError(std::string("field '") + field + "': expected an array of rows");
    const auto cols = static_cast<Eigen::Index>(j[0].size());
    Matrix m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const auto& row = j[static_cast<std::size_t>(r)];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
            throw ConstructionError(std::string("field '") + field + "': ragged row " + std::to_string(r));
        for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = scalar_from_json(row[static_cast<std::size_t>(c)], field);
    }
    return m;
}

json matrix_to_json(const Matrix& m) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(scalar_to_json(m(r, c)));
        rows.push_back(row);
    }
    return rows;
}

json to_json(const MEDist& d) {
    json x = json::array(), z = json::array();
    for (Eigen::Index i = 0; i < d.degree(); ++i) {
        x.push_back(scalar_to_json(d.x()(i)));
        z.push_back(scalar_to_json(d.z()(i)));
    }
    json out{{"x", x}, {"Y", matrix_to_json(d.Y())}, {"z", z}};
    if (d.source_lt()) out["lt"] = to_json(*d.source_lt());
    return out;
}

MEDist medist_from_json(const json& j) {
    if (!j.is_object() || !j.contains("x") || !j.contains("Y") || !j.contains("z"))
        throw ConstructionError("ME distribution: expected an object with fields 'x', 'Y', 'z'");
    const auto& jx = j["x"];
    const auto& jz = j["z"];
    if (!jx.is_array() || !jz.is_array()) throw ConstructionError("ME distribution: 'x' and 'z' must be arrays");
    RowVector x(static_cast<Eigen::Index>(jx.size()));
    for (std::size_t i = 0; i < jx.size(); ++i) x(static_cast<Eigen::Index>(i)) = scalar_from_json(jx[i], "x");
    Vector z(static_cast<Eigen::Index>(jz.size()));
    for (std::size_t i = 0; i < jz.size(); ++i) z(static_cast<Eigen::Index>(i)) = scalar_from_json(jz[i], "z");
    MEDist d(x, matrix_from_json(j["Y"], "Y"), z);
    if (j.contains("lt")) d = d.with_source(rational_lt_from_json(j["lt"]));
    return d;
}

} // namespace mekit
