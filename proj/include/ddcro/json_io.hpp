// JSON interchange for problem instances and context queries. Matrices are
// row-major arrays of arrays; unbounded variable bounds are JSON null. The
// loader rejects NaN/Inf wherever a number is expected.
#pragma once

#include <fstream>

#include <json.hpp>

#include "ddcro/model.hpp"

namespace ddcro {

using nlohmann::json;

namespace jsd {

inline double number(const json& j, const std::string& where) {
    if (!j.is_number()) throw Error("parse", where + ": expected a number");
    const double v = j.get<double>();
    if (!std::isfinite(v)) throw Error("parse", where + ": NaN/Inf rejected");
    return v;
}

inline Vec vec(const json& j, const std::string& where) {
    if (!j.is_array()) throw Error("parse", where + ": expected an array");
    Vec v;
    v.reserve(j.size());
    for (size_t i = 0; i < j.size(); ++i) v.push_back(number(j[i], where));
    return v;
}

inline Mat mat(const json& j, const std::string& where) {
    if (!j.is_array()) throw Error("parse", where + ": expected an array of rows");
    Mat m;
    m.rows = static_cast<int>(j.size());
    for (size_t i = 0; i < j.size(); ++i) {
        Vec row = vec(j[i], where);
        if (i == 0) m.cols = static_cast<int>(row.size());
        else if (static_cast<int>(row.size()) != m.cols)
            throw Error("parse", where + ": ragged matrix rows");
        m.data.insert(m.data.end(), row.begin(), row.end());
    }
    return m;
}

// bounds arrays allow null for +-infinity
inline Vec bounds(const json& j, double missing, const std::string& where) {
    if (!j.is_array()) throw Error("parse", where + ": expected an array");
    Vec v;
    for (size_t i = 0; i < j.size(); ++i)
        v.push_back(j[i].is_null() ? missing : number(j[i], where));
    return v;
}

inline json vec_to_json(const Vec& v) { return json(v); }

inline json mat_to_json(const Mat& m) {
    json rows = json::array();
    for (int i = 0; i < m.rows; ++i) {
        json row = json::array();
        for (int j = 0; j < m.cols; ++j) row.push_back(m(i, j));
        rows.push_back(row);
    }
    return rows;
}

inline json bounds_to_json(const Vec& v) {
    json a = json::array();
    for (double x : v) {
        if (std::isfinite(x)) a.push_back(x);
        else a.push_back(nullptr);
    }
    return a;
}

inline json load_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw Error("not_found", "cannot open " + path);
    json j;
    try {
        j = json::parse(f);
    } catch (const std::exception& e) {
        throw Error("parse", path + ": " + e.what());
    }
    return j;
}

}  // namespace jsd

inline TwoStageProblem problem_from_json(const json& j) {
    TwoStageProblem p;
    if (!j.is_object()) throw Error("parse", "problem document must be an object");
    p.c = jsd::vec(j.at("c"), "c");
    p.q = jsd::vec(j.at("q"), "q");
    p.W = jsd::mat(j.at("W"), "W");
    p.uncertainty_kind = uncertainty_kind_from(j.at("uncertainty_kind").get<std::string>());

    const json& z = j.at("Z");
    p.Z = Polyhedron(static_cast<int>(p.c.size()));
    if (z.contains("A_eq")) {
        p.Z.A_eq = jsd::mat(z.at("A_eq"), "Z.A_eq");
        p.Z.b_eq = jsd::vec(z.at("b_eq"), "Z.b_eq");
    }
    if (z.contains("A_in")) {
        p.Z.A_in = jsd::mat(z.at("A_in"), "Z.A_in");
        p.Z.b_in = jsd::vec(z.at("b_in"), "Z.b_in");
    }
    // an empty row block carries no column count of its own
    if (p.Z.A_eq.rows == 0) p.Z.A_eq = Mat(0, p.dim_z());
    if (p.Z.A_in.rows == 0) p.Z.A_in = Mat(0, p.dim_z());
    if (z.contains("lb")) p.Z.lb = jsd::bounds(z.at("lb"), -kInf, "Z.lb");
    if (z.contains("ub")) p.Z.ub = jsd::bounds(z.at("ub"), kInf, "Z.ub");

    const json& sc = j.at("scenarios");
    p.scenarios.x = jsd::mat(sc.at("x"), "scenarios.x");
    for (const auto& row : sc.at("h")) p.scenarios.h.push_back(jsd::vec(row, "scenarios.h"));
    if (sc.contains("T"))
        for (const auto& t : sc.at("T")) p.scenarios.T.push_back(jsd::mat(t, "scenarios.T"));
    if (sc.contains("q"))
        for (const auto& row : sc.at("q")) p.scenarios.q.push_back(jsd::vec(row, "scenarios.q"));
    if (sc.contains("categorical_mask"))
        for (const auto& b : sc.at("categorical_mask"))
            p.scenarios.categorical_mask.push_back(b.get<bool>() ? 1 : 0);
    else
        p.scenarios.categorical_mask.assign(p.scenarios.dim_x(), 0);

    if (j.contains("T")) p.fixed_T = jsd::mat(j.at("T"), "T");
    return p;
}

inline json problem_to_json(const TwoStageProblem& p) {
    json j;
    j["c"] = jsd::vec_to_json(p.c);
    j["q"] = jsd::vec_to_json(p.q);
    j["W"] = jsd::mat_to_json(p.W);
    j["uncertainty_kind"] = to_string(p.uncertainty_kind);
    json z;
    z["A_eq"] = jsd::mat_to_json(p.Z.A_eq);
    z["b_eq"] = jsd::vec_to_json(p.Z.b_eq);
    z["A_in"] = jsd::mat_to_json(p.Z.A_in);
    z["b_in"] = jsd::vec_to_json(p.Z.b_in);
    z["lb"] = jsd::bounds_to_json(p.Z.lb);
    z["ub"] = jsd::bounds_to_json(p.Z.ub);
    j["Z"] = z;
    json sc;
    sc["x"] = jsd::mat_to_json(p.scenarios.x);
    json hs = json::array();
    for (const Vec& h : p.scenarios.h) hs.push_back(jsd::vec_to_json(h));
    sc["h"] = hs;
    if (!p.scenarios.T.empty()) {
        json ts = json::array();
        for (const Mat& t : p.scenarios.T) ts.push_back(jsd::mat_to_json(t));
        sc["T"] = ts;
    }
    if (!p.scenarios.q.empty()) {
        json qs = json::array();
        for (const Vec& q : p.scenarios.q) qs.push_back(jsd::vec_to_json(q));
        sc["q"] = qs;
    }
    json mask = json::array();
    for (char b : p.scenarios.categorical_mask) mask.push_back(b != 0);
    sc["categorical_mask"] = mask;
    j["scenarios"] = sc;
    if (p.fixed_T) j["T"] = jsd::mat_to_json(*p.fixed_T);
    return j;
}

inline TwoStageProblem load_problem(const std::string& path) {
    return problem_from_json(jsd::load_file(path));
}

inline ContextQuery context_from_json(const json& j) {
    ContextQuery q;
    q.x = jsd::vec(j.at("x"), "x");
    if (j.contains("norm")) q.norm = norm_from(j.at("norm").get<std::string>());
    if (j.contains("gamma")) q.gamma = jsd::number(j.at("gamma"), "gamma");
    if (j.contains("delta")) q.delta = jsd::number(j.at("delta"), "delta");
    if (q.gamma && *q.gamma < 0.0) throw Error("parse", "gamma must be nonnegative");
    if (q.delta < 0.0) throw Error("parse", "delta must be nonnegative");
    return q;
}

inline ContextQuery load_context(const std::string& path) {
    return context_from_json(jsd::load_file(path));
}

}  // namespace ddcro
