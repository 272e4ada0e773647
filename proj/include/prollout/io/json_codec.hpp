#pragma once

#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "../core/policy.hpp"
#include "../core/terminal.hpp"

namespace prollout::io {

using json = nlohmann::ordered_json;

/// Malformed input: `path` is a JSON pointer into the document, `line` the
/// 1-based line of that value in the source text (0 when unknown).
class SchemaError : public Error {
public:
    SchemaError(std::string path, const std::string& message, std::string file = {}, int line = 0)
        : Error(format(file, line, path, message)), path_(std::move(path)), message_(message), file_(std::move(file)),
          line_(line) {}

    [[nodiscard]] const std::string& path() const { return path_; }
    [[nodiscard]] const std::string& message() const { return message_; }
    [[nodiscard]] int line() const { return line_; }

    [[nodiscard]] SchemaError located(const std::string& file, int line) const { return {path_, message_, file, line}; }

private:
    static std::string format(const std::string& file, int line, const std::string& path, const std::string& msg) {
        std::string out;
        if (!file.empty())
            out += file + ":";
        if (line > 0)
            out += std::to_string(line) + ":";
        if (!out.empty())
            out += " ";
        return out + (path.empty() ? std::string("/") : path) + ": " + msg;
    }

    std::string path_;
    std::string message_;
    std::string file_;
    int line_ = 0;
};

namespace detail {

inline std::string child(const std::string& path, const std::string& key) { return path + "/" + key; }
inline std::string child(const std::string& path, size_t i) { return path + "/" + std::to_string(i); }

/// Walks raw JSON text to the value addressed by a JSON pointer and returns
/// its byte offset, or npos when the pointer cannot be followed.
class Locator {
public:
    explicit Locator(const std::string& text) : s_(text) {}

    size_t find(const std::string& pointer) {
        pos_ = 0;
        std::vector<std::string> tokens;
        std::stringstream ss(pointer);
        std::string tok;
        std::getline(ss, tok, '/');
        while (std::getline(ss, tok, '/'))
            tokens.push_back(tok);
        skip_ws();
        for (const auto& t : tokens) {
            if (pos_ >= s_.size())
                return std::string::npos;
            if (s_[pos_] == '{') {
                if (!enter_object(t))
                    return std::string::npos;
            } else if (s_[pos_] == '[') {
                if (!enter_array(t))
                    return std::string::npos;
            } else {
                return std::string::npos;
            }
        }
        return pos_;
    }

private:
    void skip_ws() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_])))
            ++pos_;
    }

    std::string read_string() {
        std::string out;
        ++pos_;
        while (pos_ < s_.size() && s_[pos_] != '"') {
            if (s_[pos_] == '\\')
                ++pos_;
            if (pos_ < s_.size())
                out += s_[pos_++];
        }
        ++pos_;
        return out;
    }

    void skip_value() {
        skip_ws();
        if (pos_ >= s_.size())
            return;
        const char c = s_[pos_];
        if (c == '"') {
            read_string();
        } else if (c == '{' || c == '[') {
            int depth = 0;
            while (pos_ < s_.size()) {
                const char d = s_[pos_];
                if (d == '"') {
                    read_string();
                    continue;
                }
                if (d == '{' || d == '[')
                    ++depth;
                if (d == '}' || d == ']')
                    --depth;
                ++pos_;
                if (depth == 0)
                    break;
            }
        } else {
            while (pos_ < s_.size() && s_[pos_] != ',' && s_[pos_] != '}' && s_[pos_] != ']')
                ++pos_;
        }
        skip_ws();
    }

    bool enter_object(const std::string& key) {
        ++pos_;
        for (;;) {
            skip_ws();
            if (pos_ >= s_.size() || s_[pos_] != '"')
                return false;
            const std::string k = read_string();
            skip_ws();
            ++pos_; // ':'
            skip_ws();
            if (k == key)
                return true;
            skip_value();
            if (pos_ >= s_.size() || s_[pos_] != ',')
                return false;
            ++pos_;
        }
    }

    bool enter_array(const std::string& index) {
        size_t n = 0;
        try {
            n = std::stoul(index);
        } catch (const std::exception&) {
            return false;
        }
        ++pos_;
        skip_ws();
        for (size_t i = 0; i < n; ++i) {
            skip_value();
            if (pos_ >= s_.size() || s_[pos_] != ',')
                return false;
            ++pos_;
            skip_ws();
        }
        return true;
    }

    const std::string& s_;
    size_t pos_ = 0;
};

inline int line_of_offset(const std::string& text, size_t offset) {
    if (offset == std::string::npos)
        return 0;
    int line = 1;
    for (size_t i = 0; i < offset && i < text.size(); ++i)
        if (text[i] == '\n')
            ++line;
    return line;
}

} // namespace detail

/// Line of the value at `pointer` in `text`, or of its nearest enclosing
/// value that exists.
inline int locate_line(const std::string& text, std::string pointer) {
    for (;;) {
        detail::Locator loc(text);
        const size_t off = loc.find(pointer);
        if (off != std::string::npos)
            return detail::line_of_offset(text, off);
        const auto cut = pointer.rfind('/');
        if (cut == std::string::npos || pointer.empty())
            return 0;
        pointer.resize(cut);
    }
}

inline json parse_json_text(const std::string& text, const std::string& file = {}) {
    try {
        return json::parse(text, nullptr, true, true);
    } catch (const json::parse_error& e) {
        throw SchemaError("", std::string("invalid JSON: ") + e.what(), file,
                          detail::line_of_offset(text, e.byte > 0 ? e.byte - 1 : 0));
    }
}

inline std::string read_text_file(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw SchemaError("", "cannot open file", path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Runs `decode(document)`; schema errors come back annotated with the file
/// and the line of the offending field.
template <typename Decode>
auto decode_file(const std::string& path, Decode&& decode) {
    const std::string text = read_text_file(path);
    const json doc = parse_json_text(text, path);
    try {
        return decode(doc);
    } catch (const SchemaError& e) {
        throw e.located(path, locate_line(text, e.path()));
    }
}

// ---- field access -------------------------------------------------------

inline const json& field(const json& j, const std::string& key, const std::string& path) {
    if (!j.is_object())
        throw SchemaError(path, "expected an object");
    const auto it = j.find(key);
    if (it == j.end())
        throw SchemaError(path, "missing field '" + key + "'");
    return *it;
}

inline bool has(const json& j, const std::string& key) { return j.is_object() && j.contains(key); }

inline double as_number(const json& j, const std::string& path) {
    if (j.is_number())
        return j.get<double>();
    if (j.is_string() && (j.get<std::string>() == "inf" || j.get<std::string>() == "-inf"))
        return j.get<std::string>() == "inf" ? INFINITY : -INFINITY;
    throw SchemaError(path, "expected a number");
}

inline int as_int(const json& j, const std::string& path) {
    if (!j.is_number_integer())
        throw SchemaError(path, "expected an integer");
    return j.get<int>();
}

inline std::string as_string(const json& j, const std::string& path) {
    if (!j.is_string())
        throw SchemaError(path, "expected a string");
    return j.get<std::string>();
}

inline json number_json(double v) {
    if (std::isinf(v))
        return v > 0 ? "inf" : "-inf";
    return v;
}

inline ExtendedCost as_cost(const json& j, const std::string& path) {
    const double v = as_number(j, path);
    if (std::isnan(v) || v < 0.0)
        throw SchemaError(path, "cost must lie in [0, inf]");
    return std::isinf(v) ? ExtendedCost::infinity() : ExtendedCost(v);
}

inline json cost_json(ExtendedCost c) { return c.is_finite() ? json(c.value()) : json("inf"); }

// ---- matrices -----------------------------------------------------------

inline Vector as_vector(const json& j, const std::string& path) {
    if (!j.is_array())
        throw SchemaError(path, "expected an array of numbers");
    Vector v(static_cast<Eigen::Index>(j.size()));
    for (size_t i = 0; i < j.size(); ++i)
        v(static_cast<Eigen::Index>(i)) = as_number(j[i], detail::child(path, i));
    return v;
}

/// A matrix is a list of equal-length rows; a bare number is a 1 x 1 matrix.
inline Matrix as_matrix(const json& j, const std::string& path) {
    if (j.is_number())
        return Matrix::Constant(1, 1, j.get<double>());
    if (!j.is_array() || j.empty() || !j[0].is_array())
        throw SchemaError(path, "expected a matrix (list of rows)");
    const auto rows = static_cast<Eigen::Index>(j.size());
    const auto cols = static_cast<Eigen::Index>(j[0].size());
    Matrix m(rows, cols);
    for (size_t r = 0; r < j.size(); ++r) {
        const std::string rp = detail::child(path, r);
        if (!j[r].is_array() || static_cast<Eigen::Index>(j[r].size()) != cols)
            throw SchemaError(rp, "row length differs from the first row");
        for (size_t c = 0; c < j[r].size(); ++c)
            m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = as_number(j[r][c], detail::child(rp, c));
    }
    return m;
}

inline json vector_json(const Vector& v) {
    json out = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i)
        out.push_back(number_json(v(i)));
    return out;
}

inline json matrix_json(const Matrix& m) {
    json out = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        out.push_back(vector_json(m.row(r).transpose()));
    return out;
}

// ---- polytopes, terminal ingredients, policies --------------------------

/// {"H": rows, "h": [...]} or {"box": b} (needs the dimension).
inline geometry::Polytope as_polytope(const json& j, const std::string& path, Eigen::Index dim = 0) {
    if (has(j, "box")) {
        if (dim <= 0)
            throw SchemaError(path, "a box needs a known state dimension");
        const double b = as_number(j["box"], path + "/box");
        if (!(b > 0.0))
            throw SchemaError(path + "/box", "box half-width must be positive");
        return geometry::Polytope::box(dim, b);
    }
    geometry::Polytope p{as_matrix(field(j, "H", path), path + "/H"), as_vector(field(j, "h", path), path + "/h")};
    if (p.H.rows() != p.h.size())
        throw SchemaError(path + "/h", "h needs one entry per row of H");
    if (dim > 0 && p.H.cols() != dim)
        throw SchemaError(path + "/H", "H has " + std::to_string(p.H.cols()) + " columns, expected " + std::to_string(dim));
    return p;
}

inline json polytope_json(const geometry::Polytope& p) { return {{"H", matrix_json(p.H)}, {"h", vector_json(p.h)}}; }

inline CostKind parse_norm(const json& j, const std::string& path) {
    if (j.is_number_integer() && j.get<int>() == 1)
        return CostKind::Norm1;
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "quadratic")
            return CostKind::Quadratic;
        if (s == "1")
            return CostKind::Norm1;
        if (s == "inf")
            return CostKind::NormInf;
    }
    throw SchemaError(path, "expected \"quadratic\", 1 or \"inf\"");
}

inline json norm_json(CostKind k) {
    switch (k) {
    case CostKind::Quadratic: return "quadratic";
    case CostKind::Norm1: return 1;
    case CostKind::NormInf: return "inf";
    }
    return "quadratic";
}

inline TerminalValue as_terminal_value(const json& j, const std::string& path) {
    const Matrix K = as_matrix(field(j, "K", path), path + "/K");
    const CostKind p = has(j, "p") ? parse_norm(j["p"], path + "/p") : CostKind::Quadratic;
    if (p == CostKind::Quadratic) {
        if (K.rows() != K.cols())
            throw SchemaError(path + "/K", "a quadratic value needs a square K");
        return QuadraticValue{K};
    }
    return NormValue{K, p};
}

inline json terminal_value_json(const TerminalValue& v) {
    return std::visit(
        [](const auto& t) -> json {
            using T = std::decay_t<decltype(t)>;
            if constexpr (std::is_same_v<T, QuadraticValue>)
                return {{"K", matrix_json(t.K)}, {"p", "quadratic"}};
            else
                return {{"K", matrix_json(t.K)}, {"p", norm_json(t.norm)}};
        },
        v);
}

inline TerminalSet as_terminal_set(const json& j, const std::string& path, Eigen::Index dim) {
    if (j.is_null() || (j.is_string() && j.get<std::string>() == "whole_space"))
        return WholeSpace{};
    if (has(j, "alpha")) {
        SublevelSet s{as_matrix(field(j, "K", path), path + "/K"), as_number(j["alpha"], path + "/alpha")};
        if (s.K.rows() != dim || s.K.cols() != dim)
            throw SchemaError(path + "/K", "sublevel K must be n x n");
        if (!(s.alpha > 0.0))
            throw SchemaError(path + "/alpha", "alpha must be positive");
        return s;
    }
    if (j.is_object())
        return as_polytope(j, path, dim);
    throw SchemaError(path, "expected \"whole_space\", {H, h}, {box} or {K, alpha}");
}

inline json terminal_set_json(const TerminalSet& s) {
    return std::visit(
        [](const auto& t) -> json {
            using T = std::decay_t<decltype(t)>;
            if constexpr (std::is_same_v<T, WholeSpace>)
                return "whole_space";
            else if constexpr (std::is_same_v<T, geometry::Polytope>)
                return polytope_json(t);
            else
                return {{"K", matrix_json(t.K)}, {"alpha", t.alpha}};
        },
        s);
}

inline TerminalIngredient as_terminal(const json& j, const std::string& path) {
    TerminalIngredient t;
    t.value = as_terminal_value(field(j, "V", path), path + "/V");
    t.set = as_terminal_set(has(j, "S") ? j["S"] : json(), path + "/S", t.dim());
    return t;
}

inline json terminal_json(const TerminalIngredient& t) {
    return {{"V", terminal_value_json(t.value)}, {"S", terminal_set_json(t.set)}};
}

inline Policy as_resolved_policy(const json& j, const std::string& path) {
    const std::string type = as_string(field(j, "type", path), path + "/type");
    if (type == "linear")
        return LinearGain{as_matrix(field(j, "L", path), path + "/L")};
    if (type == "piecewise")
        return PiecewiseGain{as_matrix(field(j, "L_nonneg", path), path + "/L_nonneg"),
                             as_matrix(field(j, "L_neg", path), path + "/L_neg")};
    if (type == "switched")
        return SwitchedGain{as_matrix(field(j, "L", path), path + "/L"), as_int(field(j, "mode", path), path + "/mode")};
    throw SchemaError(path + "/type", "unknown policy type '" + type + "'");
}

inline json policy_json(const Policy& p) {
    return std::visit(
        [](const auto& g) -> json {
            using P = std::decay_t<decltype(g)>;
            if constexpr (std::is_same_v<P, LinearGain>)
                return {{"type", "linear"}, {"L", matrix_json(g.L)}};
            else if constexpr (std::is_same_v<P, PiecewiseGain>)
                return {{"type", "piecewise"}, {"L_nonneg", matrix_json(g.L_nonneg)}, {"L_neg", matrix_json(g.L_neg)}};
            else
                return {{"type", "switched"}, {"L", matrix_json(g.L)}, {"mode", g.mode}};
        },
        p);
}

// ---- control models -----------------------------------------------------

inline DynamicsKind parse_dynamics(const std::string& s, const std::string& path) {
    if (s == "linear")
        return DynamicsKind::Linear;
    if (s == "piecewise_affine")
        return DynamicsKind::PiecewiseAffine;
    if (s == "switched")
        return DynamicsKind::Switched;
    throw SchemaError(path, "unknown dynamics '" + s + "'");
}

inline const char* dynamics_name(DynamicsKind k) {
    switch (k) {
    case DynamicsKind::Linear: return "linear";
    case DynamicsKind::PiecewiseAffine: return "piecewise_affine";
    case DynamicsKind::Switched: return "switched";
    }
    return "linear";
}

inline CostKind parse_stage_cost(const json& j, const std::string& path) {
    const std::string s = as_string(j, path);
    if (s == "quadratic")
        return CostKind::Quadratic;
    if (s == "norm1")
        return CostKind::Norm1;
    if (s == "norm_inf")
        return CostKind::NormInf;
    throw SchemaError(path, "expected \"quadratic\", \"norm1\" or \"norm_inf\"");
}

inline const char* stage_cost_name(CostKind k) {
    switch (k) {
    case CostKind::Quadratic: return "quadratic";
    case CostKind::Norm1: return "norm1";
    case CostKind::NormInf: return "norm_inf";
    }
    return "quadratic";
}

/// Linear models carry "A" and "B"; piecewise-affine and switched models
/// carry "modes": [{"A", "B"}, ...].
inline ControlModel as_control_model(const json& j, const std::string& path) {
    ControlModel m;
    m.dynamics = parse_dynamics(as_string(field(j, "dynamics", path), path + "/dynamics"), path + "/dynamics");
    if (m.dynamics == DynamicsKind::Linear) {
        m.A = {as_matrix(field(j, "A", path), path + "/A")};
        m.B = {as_matrix(field(j, "B", path), path + "/B")};
    } else {
        const json& modes = field(j, "modes", path);
        if (!modes.is_array() || modes.empty())
            throw SchemaError(path + "/modes", "expected a nonempty list of {A, B}");
        for (size_t i = 0; i < modes.size(); ++i) {
            const std::string mp = detail::child(path + "/modes", i);
            m.A.push_back(as_matrix(field(modes[i], "A", mp), mp + "/A"));
            m.B.push_back(as_matrix(field(modes[i], "B", mp), mp + "/B"));
        }
    }
    if (has(j, "guard"))
        m.guard = as_vector(j["guard"], path + "/guard");
    m.cost = parse_stage_cost(field(j, "cost", path), path + "/cost");
    m.Q = as_matrix(field(j, "Q", path), path + "/Q");
    m.R = as_matrix(field(j, "R", path), path + "/R");
    if (has(j, "state_constraints"))
        m.state_constraints = as_polytope(j["state_constraints"], path + "/state_constraints", m.state_dim());
    if (has(j, "input_bound"))
        m.input_bound = as_number(j["input_bound"], path + "/input_bound");
    try {
        m.validate();
    } catch (const SchemaError&) {
        throw;
    } catch (const Error& e) {
        throw SchemaError(path, e.what());
    }
    return m;
}

inline json control_model_json(const ControlModel& m) {
    json out;
    out["dynamics"] = dynamics_name(m.dynamics);
    if (m.dynamics == DynamicsKind::Linear) {
        out["A"] = matrix_json(m.A.front());
        out["B"] = matrix_json(m.B.front());
    } else {
        json modes = json::array();
        for (size_t i = 0; i < m.A.size(); ++i)
            modes.push_back({{"A", matrix_json(m.A[i])}, {"B", matrix_json(m.B[i])}});
        out["modes"] = modes;
    }
    if (m.guard.size() > 0)
        out["guard"] = vector_json(m.guard);
    out["cost"] = stage_cost_name(m.cost);
    out["Q"] = matrix_json(m.Q);
    out["R"] = matrix_json(m.R);
    if (m.state_constraints)
        out["state_constraints"] = polytope_json(*m.state_constraints);
    if (m.input_bound)
        out["input_bound"] = *m.input_bound;
    return out;
}

} // namespace prollout::io
