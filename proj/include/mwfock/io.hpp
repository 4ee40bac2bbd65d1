#pragma once

// Weight-spec JSON, sweep CSV and JSON summaries.
//
// Weight schema: {"kind": ..., "d": int, "n": int, "params": {...}} with
//   constant      {"M": matrix}
//   scalar_exp    {"beta": real}
//   scalar_power  {"gamma": real}
//   rotating      {"lambda": [l1, l2], "omega": real}
//   checkerboard  {"A": matrix, "B": matrix, "s": real}
// and complex matrices as row-major arrays of [re, im] pairs.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "apr.hpp"

namespace mwfock {

using json = nlohmann::json;

inline constexpr int schema_version = 1;

/// %.17g, with "nan" and "inf" spelled out.
inline std::string fmt17(double v)
{
    if (std::isnan(v))
        return "nan";
    if (std::isinf(v))
        return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// JSON number, or null when not finite.
inline json json_number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

inline json matrix_to_json(const CMat& m)
{
    json out = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            out.push_back({m(i, j).real(), m(i, j).imag()});
    return out;
}

inline json vector_to_json(const CVec& v) { return matrix_to_json(CMat(v)); }

inline json point_to_json(const Point& z)
{
    json out = json::array();
    for (Eigen::Index i = 0; i < z.size(); ++i)
        out.push_back(z(i));
    return out;
}

namespace detail {

[[noreturn]] inline void bad_field(const std::string& field, const std::string& what)
{
    throw InvalidSpec("weight spec field '" + field + "': " + what);
}

inline const json& require(const json& obj, const std::string& key, const std::string& path)
{
    if (!obj.is_object() || !obj.contains(key))
        bad_field(path + key, "missing");
    return obj.at(key);
}

inline double require_number(const json& obj, const std::string& key, const std::string& path)
{
    const auto& v = require(obj, key, path);
    if (!v.is_number())
        bad_field(path + key, "expected a number");
    return v.get<double>();
}

inline int require_int(const json& obj, const std::string& key, const std::string& path)
{
    const auto& v = require(obj, key, path);
    if (!v.is_number_integer())
        bad_field(path + key, "expected an integer");
    return v.get<int>();
}

} // namespace detail

inline CMat matrix_from_json(const json& v, int d, const std::string& field)
{
    if (!v.is_array() || v.size() != static_cast<std::size_t>(d * d))
        detail::bad_field(field, "expected " + std::to_string(d * d) + " [re, im] entries");
    CMat m(d, d);
    for (int k = 0; k < d * d; ++k) {
        const auto& e = v[static_cast<std::size_t>(k)];
        if (!e.is_array() || e.size() != 2 || !e[0].is_number() || !e[1].is_number())
            detail::bad_field(field + "[" + std::to_string(k) + "]", "expected [re, im]");
        m(k / d, k % d) = cplx(e[0].get<double>(), e[1].get<double>());
    }
    return m;
}

inline json weight_to_json(const WeightSpec& w)
{
    json params = json::object();
    switch (w.kind()) {
    case WeightKind::constant: params["M"] = matrix_to_json(w.matrix_a().matrix()); break;
    case WeightKind::scalar_exp: params["beta"] = w.beta(); break;
    case WeightKind::scalar_power: params["gamma"] = w.gamma(); break;
    case WeightKind::rotating:
        params["lambda"] = {w.lambda().first, w.lambda().second};
        params["omega"] = w.omega();
        break;
    case WeightKind::checkerboard:
        params["A"] = matrix_to_json(w.matrix_a().matrix());
        params["B"] = matrix_to_json(w.matrix_b().matrix());
        params["s"] = w.cell_side();
        break;
    }
    return {{"kind", to_string(w.kind())}, {"d", w.dim()}, {"n", w.ambient()}, {"params", params}};
}

/// Throws InvalidSpec naming the offending field.
inline WeightSpec weight_from_json(const json& j)
{
    if (!j.is_object())
        detail::bad_field("", "expected an object");
    const auto& kind_v = detail::require(j, "kind", "");
    if (!kind_v.is_string())
        detail::bad_field("kind", "expected a string");
    WeightKind kind;
    try {
        kind = weight_kind_from_string(kind_v.get<std::string>());
    } catch (const InvalidSpec&) {
        detail::bad_field("kind", "unknown kind '" + kind_v.get<std::string>() + "'");
    }
    const int d = detail::require_int(j, "d", "");
    const int n = detail::require_int(j, "n", "");
    if (d < 1)
        detail::bad_field("d", "must be >= 1");
    if (n < 1)
        detail::bad_field("n", "must be >= 1");
    const auto& p = detail::require(j, "params", "");
    if (!p.is_object())
        detail::bad_field("params", "expected an object");

    switch (kind) {
    case WeightKind::constant:
        return WeightSpec::constant(matrix_from_json(detail::require(p, "M", "params."), d, "params.M"), n);
    case WeightKind::scalar_exp: return WeightSpec::scalar_exp(detail::require_number(p, "beta", "params."), d, n);
    case WeightKind::scalar_power:
        return WeightSpec::scalar_power(detail::require_number(p, "gamma", "params."), d, n);
    case WeightKind::rotating: {
        if (d != 2)
            detail::bad_field("d", "rotating weights have d = 2");
        const auto& l = detail::require(p, "lambda", "params.");
        if (!l.is_array() || l.size() != 2 || !l[0].is_number() || !l[1].is_number())
            detail::bad_field("params.lambda", "expected [l1, l2]");
        return WeightSpec::rotating(l[0].get<double>(), l[1].get<double>(),
                                    detail::require_number(p, "omega", "params."), n);
    }
    case WeightKind::checkerboard:
        return WeightSpec::checkerboard(matrix_from_json(detail::require(p, "A", "params."), d, "params.A"),
                                        matrix_from_json(detail::require(p, "B", "params."), d, "params.B"),
                                        detail::require_number(p, "s", "params."), n);
    }
    detail::bad_field("kind", "unhandled");
}

inline WeightSpec load_weight(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw InvalidSpec("cannot open weight spec '" + path + "'");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw InvalidSpec("weight spec '" + path + "' is not valid JSON: " + e.what());
    }
    return weight_from_json(j);
}

////////////////////////////////////////////////////////////////////////////////
//
// sweep output
//
////////////////////////////////////////////////////////////////////////////////

inline std::vector<std::string> center_columns(int n)
{
    std::vector<std::string> cols;
    for (int j = 0; j < n; ++j) {
        const std::string suffix = n == 1 ? "" : std::to_string(j + 1);
        cols.push_back("center_x" + suffix);
        cols.push_back("center_y" + suffix);
    }
    return cols;
}

/// center_x, center_y, ..., direct_ratio, sandwich_value
inline void write_apr_csv(std::ostream& os, const AprReport& rep)
{
    const int n = rep.per_cube.empty() ? 1 : static_cast<int>(rep.per_cube.front().center.size() / 2);
    for (const auto& c : center_columns(n))
        os << c << ",";
    os << "direct_ratio,sandwich_value\n";
    for (const auto& rec : rep.per_cube) {
        for (Eigen::Index k = 0; k < rec.center.size(); ++k)
            os << fmt17(rec.center(k)) << ",";
        os << fmt17(rec.direct_ratio) << "," << fmt17(rec.sandwich_value) << "\n";
    }
}

inline json apr_summary(const AprReport& rep, const WeightSpec& w)
{
    return {{"schema_version", schema_version},
            {"command", "apr"},
            {"weight", weight_to_json(w)},
            {"p", rep.p},
            {"r", rep.r},
            {"region", rep.region_halfwidth},
            {"step", rep.lattice_step},
            {"d", rep.dim},
            {"collapsed", rep.collapsed},
            {"cubes", rep.per_cube.size()},
            {"apr_direct", json_number(rep.apr_direct)},
            {"sandwich_sup", json_number(rep.sandwich_sup)},
            {"apr_interval", {json_number(rep.apr_interval[0]), json_number(rep.apr_interval[1])}}};
}

/// Header and numeric rows of a CSV file; "nan"/"inf" parse as such.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;

    int column(const std::string& name) const
    {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name)
                return static_cast<int>(i);
        return -1;
    }
};

inline CsvTable read_csv(std::istream& in)
{
    CsvTable t;
    std::string line;
    auto split = [](const std::string& s) {
        std::vector<std::string> out;
        std::stringstream ss(s);
        std::string cell;
        while (std::getline(ss, cell, ','))
            out.push_back(cell);
        return out;
    };
    if (!std::getline(in, line) || line.empty())
        throw InvalidSpec("CSV is empty");
    t.header = split(line);
    for (int lineno = 2; std::getline(in, line); ++lineno) {
        if (line.empty())
            continue;
        const auto cells = split(line);
        if (cells.size() != t.header.size())
            throw InvalidSpec("CSV line " + std::to_string(lineno) + " has " + std::to_string(cells.size()) +
                              " cells, expected " + std::to_string(t.header.size()));
        std::vector<double> row;
        for (const auto& c : cells) {
            char* end = nullptr;
            const double v = std::strtod(c.c_str(), &end);
            if (end == c.c_str() || *end != '\0')
                throw InvalidSpec("CSV line " + std::to_string(lineno) + ": '" + c + "' is not a number");
            row.push_back(v);
        }
        t.rows.push_back(std::move(row));
    }
    if (t.rows.empty())
        throw InvalidSpec("CSV has a header but no rows");
    return t;
}

} // namespace mwfock
