#pragma once

#include <fstream>

#include "../design/recipes.hpp"
#include "json_codec.hpp"

namespace prollout::io {

inline json certificate_json(const design::CertificateReport& c) {
    json out{{"samples", c.samples},
             {"max_violation", number_json(c.samples > 0 ? c.max_violation() : INFINITY)},
             {"pass", c.pass},
             {"max_invariance_violation", number_json(c.max_invariance_violation)},
             {"max_admissibility_violation", number_json(c.max_admissibility_violation)},
             {"min_decrease_slack", number_json(c.min_decrease_slack)},
             {"slack_threshold", c.slack_threshold}};
    if (c.vertices > 0) {
        out["vertices"] = c.vertices;
        out["vertex_violation"] = number_json(c.vertex_violation);
    }
    return out;
}

inline design::CertificateReport as_certificate(const json& j, const std::string& path) {
    design::CertificateReport c;
    c.samples = as_int(field(j, "samples", path), path + "/samples");
    const json& pass = field(j, "pass", path);
    if (!pass.is_boolean())
        throw SchemaError(path + "/pass", "expected true or false");
    c.pass = pass.get<bool>();
    const auto opt = [&](const char* key, double& dst) {
        if (has(j, key))
            dst = as_number(j[key], path + "/" + key);
    };
    opt("max_invariance_violation", c.max_invariance_violation);
    opt("max_admissibility_violation", c.max_admissibility_violation);
    opt("min_decrease_slack", c.min_decrease_slack);
    opt("slack_threshold", c.slack_threshold);
    opt("vertex_violation", c.vertex_violation);
    if (has(j, "vertices"))
        c.vertices = as_int(j["vertices"], path + "/vertices");
    return c;
}

inline json artifact_json(const design::DesignArtifact& a) {
    json inputs = json::object();
    for (const auto& [k, m] : a.inputs)
        inputs[k] = matrix_json(m);
    json out{{"name", a.name},
             {"kind", design::to_string(a.kind)},
             {"inputs", inputs},
             {"policy", policy_json(a.policy)},
             {"terminal", terminal_json(a.terminal)},
             {"certificate", certificate_json(a.certificate)},
             {"certified", a.certified}};
    if (!a.note.empty())
        out["note"] = a.note;
    return out;
}

/// A hand-written artifact may omit "certificate"; it then loads as
/// uncertified until `certify` runs against a model.
inline design::DesignArtifact as_artifact(const json& j, const std::string& path = "") {
    design::DesignArtifact a;
    if (has(j, "name"))
        a.name = as_string(j["name"], path + "/name");
    try {
        a.kind = design::parse_recipe_kind(as_string(field(j, "kind", path), path + "/kind"));
    } catch (const SchemaError&) {
        throw;
    } catch (const Error& e) {
        throw SchemaError(path + "/kind", e.what());
    }
    if (has(j, "inputs")) {
        if (!j["inputs"].is_object())
            throw SchemaError(path + "/inputs", "expected an object of matrices");
        for (const auto& [k, v] : j["inputs"].items())
            a.inputs[k] = as_matrix(v, path + "/inputs/" + k);
    }
    a.policy = as_resolved_policy(field(j, "policy", path), path + "/policy");
    a.terminal = as_terminal(field(j, "terminal", path), path + "/terminal");
    if (has(j, "certificate"))
        a.certificate = as_certificate(j["certificate"], path + "/certificate");
    if (has(j, "certified")) {
        if (!j["certified"].is_boolean())
            throw SchemaError(path + "/certified", "expected true or false");
        a.certified = j["certified"].get<bool>();
    }
    if (has(j, "note"))
        a.note = as_string(j["note"], path + "/note");
    return a;
}

inline void save_artifact(const design::DesignArtifact& a, const std::string& path) {
    std::ofstream out(path);
    if (!out)
        throw Error("save_artifact: cannot write " + path);
    out << artifact_json(a).dump(2) << '\n';
}

inline design::DesignArtifact load_artifact(const std::string& path) {
    return decode_file(path, [](const json& doc) { return as_artifact(doc); });
}

} // namespace prollout::io
