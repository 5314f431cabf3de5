#pragma once
// File formats: model and measure JSON, measure and path CSV, root
// certificates, semigroup certificates and path manifests.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "defconv/divisibility.hpp"
#include "defconv/error.hpp"
#include "defconv/levy.hpp"
#include "defconv/measure.hpp"
#include "defconv/semigroup.hpp"
#include "defconv/structure.hpp"

namespace defconv {

using json = nlohmann::json;

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write '" + path + "'");
    out << text;
}

inline json parse_json(const std::string& text, const std::string& what) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw InputError(what + ": " + e.what());
    }
}

namespace detail {

inline Element element_from_json(const FiniteStructure& s, const json& v, const std::string& what) {
    if (v.is_number_unsigned() || (v.is_number_integer() && v.get<long long>() >= 0)) {
        auto idx = v.get<unsigned long long>();
        if (idx >= s.size()) {
            throw InputError(what + ": index " + std::to_string(idx) + " outside the universe");
        }
        return static_cast<Element>(idx);
    }
    if (v.is_string()) {
        auto it = s.element_names().find(v.get<std::string>());
        if (it == s.element_names().end()) {
            throw InputError(what + ": unknown element '" + v.get<std::string>() + "'");
        }
        return it->second;
    }
    throw InputError(what + ": expected an element index or name");
}

inline void flatten_table(const FiniteStructure& s, const json& v, std::size_t depth,
                          std::vector<Element>& out, const std::string& what) {
    if (depth == 0) {
        out.push_back(element_from_json(s, v, what));
        return;
    }
    if (!v.is_array() || v.size() != s.size()) {
        throw InputError(what + ": table level must be an array of length " + std::to_string(s.size()));
    }
    for (const auto& item : v) flatten_table(s, item, depth - 1, out, what);
}

inline std::size_t arity_of(const json& spec, const std::string& what) {
    if (!spec.is_object() || !spec.contains("arity") || !spec["arity"].is_number_integer() ||
        spec["arity"].get<long long>() < 1) {
        throw InputError(what + ": needs a positive integer 'arity'");
    }
    return spec["arity"].get<std::size_t>();
}

}  // namespace detail

inline FiniteStructure load_model_json(const json& doc) {
    if (!doc.is_object()) throw InputError("model: expected a JSON object");
    if (!doc.contains("universe")) throw InputError("model: missing 'universe'");
    const json& u = doc["universe"];
    std::vector<std::string> names;
    std::size_t m = 0;
    if (u.is_number_integer()) {
        if (u.get<long long>() < 1) throw InputError("model: universe size must be >= 1");
        m = u.get<std::size_t>();
    } else if (u.is_array()) {
        for (const auto& n : u) {
            if (!n.is_string()) throw InputError("model: universe names must be strings");
            names.push_back(n.get<std::string>());
        }
        m = names.size();
    } else {
        throw InputError("model: 'universe' must be an integer or a list of names");
    }
    FiniteStructure s(m);
    for (std::size_t i = 0; i < names.size(); ++i) s.name_element(names[i], i);

    if (doc.contains("functions")) {
        for (const auto& [sym, spec] : doc["functions"].items()) {
            std::string what = "function '" + sym + "'";
            std::size_t arity = detail::arity_of(spec, what);
            if (!spec.contains("table")) throw InputError(what + ": missing 'table'");
            std::vector<Element> table;
            detail::flatten_table(s, spec["table"], arity, table, what);
            s.add_function(sym, arity, std::move(table));
        }
    }
    if (doc.contains("relations")) {
        for (const auto& [sym, spec] : doc["relations"].items()) {
            std::string what = "relation '" + sym + "'";
            std::size_t arity = detail::arity_of(spec, what);
            std::vector<std::vector<Element>> tuples;
            if (spec.contains("tuples")) {
                for (const auto& t : spec["tuples"]) {
                    if (!t.is_array()) throw InputError(what + ": tuples must be arrays");
                    std::vector<Element> tuple;
                    for (const auto& e : t) tuple.push_back(detail::element_from_json(s, e, what));
                    tuples.push_back(std::move(tuple));
                }
            }
            s.add_relation(sym, arity, tuples);
        }
    }
    if (doc.contains("constants")) {
        for (const auto& [sym, v] : doc["constants"].items()) {
            s.add_constant(sym, detail::element_from_json(s, v, "constant '" + sym + "'"));
        }
    }
    if (doc.contains("semigroup")) {
        const json& sg = doc["semigroup"];
        if (sg.contains("formula") && sg["formula"].is_string()) {
            s.set_semigroup({SemigroupSpec::Kind::formula, sg["formula"].get<std::string>()});
        } else if (sg.contains("function") && sg["function"].is_string()) {
            s.set_semigroup({SemigroupSpec::Kind::function, sg["function"].get<std::string>()});
        } else {
            throw InputError("model: 'semigroup' needs a 'formula' or 'function' string");
        }
    }
    return s;
}

inline FiniteStructure load_model(const std::string& path) {
    return load_model_json(parse_json(read_file(path), path));
}

template <MeasureSpace Space>
Measure measure_from_json(const Space& space, const FiniteStructure& s, const json& doc) {
    if (!doc.is_object()) throw InputError("measure: expected a JSON object");
    if (doc.contains("point")) {
        return dirac(space, detail::element_from_json(s, doc["point"], "measure point"));
    }
    if (!doc.contains("weights") || !doc["weights"].is_array()) {
        throw InputError("measure: needs 'weights' or 'point'");
    }
    std::vector<double> w;
    for (const auto& x : doc["weights"]) {
        if (!x.is_number()) throw InputError("measure: weights must be numbers");
        w.push_back(x.get<double>());
    }
    try {
        return make_measure(space, std::move(w));
    } catch (const DomainError& e) {
        throw InputError(std::string("measure: ") + e.what());
    }
}

template <MeasureSpace Space>
Measure load_measure(const Space& space, const FiniteStructure& s, const std::string& path) {
    return measure_from_json(space, s, parse_json(read_file(path), path));
}

inline json measure_json(const Measure& mu) {
    return json{{"weights", std::vector<double>(mu.weights().begin(), mu.weights().end())}};
}

inline std::string measure_csv(const Measure& mu) {
    std::string out = "element,weight\n";
    for (std::size_t i = 0; i < mu.size(); ++i) {
        out += std::to_string(i) + "," + detail::format_real(mu[i]) + "\n";
    }
    return out;
}

inline json certificate_json(const SemigroupCertificate& cert) {
    json axioms = json::array();
    for (const auto& a : cert.axioms) {
        json item{{"name", a.name}, {"passed", a.passed}};
        if (!a.counterexample.empty()) item["counterexample"] = a.counterexample;
        if (!a.note.empty()) item["note"] = a.note;
        axioms.push_back(item);
    }
    json out{{"passed", cert.passed()}, {"universe", cert.universe_size}, {"axioms", axioms}};
    out["zero"] = cert.zero ? json(*cert.zero) : json(nullptr);
    out["zero_unique"] = cert.zero_unique;
    if (!cert.add_table.empty()) out["add_table"] = cert.add_table;
    return out;
}

inline json root_certificate_json(const RootCertificate& cert) {
    json roots = json::array();
    for (const auto& r : cert.all_roots_found) roots.push_back(measure_json(r));
    json out{{"n", cert.n},
             {"residual", cert.residual},
             {"verdict", to_string(cert.verdict)},
             {"best_root", measure_json(cert.best_root)},
             {"all_roots_found", roots},
             {"seed", cert.seed}};
    out["lower_bound"] = cert.lower_bound ? json(*cert.lower_bound) : json(nullptr);
    return out;
}

inline json divisibility_json(const DivisibilityReport& rep) {
    json certs = json::array();
    for (const auto& c : rep.certificates) certs.push_back(root_certificate_json(c));
    json out{{"n_max", rep.n_max}, {"divisible", rep.divisible}, {"certificates", certs}};
    out["verdict"] = rep.divisible ? "divisible up to n_max at tolerance" : "not divisible";
    out["first_failure"] = rep.first_failure ? json(*rep.first_failure) : json(nullptr);
    return out;
}

inline json concentration_json(const ConcentrationReport& r) {
    return json{{"passed", r.all()},
                {"scalar_limit", {{"value", r.scalar}, {"eps", r.eps}, {"passed", r.scalar_ok}}},
                {"event_sup", {{"tv", r.tv}, {"bound", r.tv_bound}, {"passed", r.tv_ok}}},
                {"mass_at_zero",
                 {{"value", r.mass_at_zero}, {"bound", r.mass_bound}, {"passed", r.mass_ok}}}};
}

inline json validation_json(const LevyPath& path, const LevyValidation& v) {
    json out{{"passed", v.passed()},
             {"tol", v.tol},
             {"origin", {{"error", v.origin_error}, {"passed", v.origin_ok}}},
             {"increments",
              {{"worst", v.worst_increment}, {"pairs", v.increment_pairs}, {"passed", v.increments_ok}}},
             {"divisibility",
              {{"worst", v.worst_divisibility},
               {"pairs", v.divisibility_pairs},
               {"passed", v.divisibility_ok}}}};
    if (v.worst) {
        const auto& w = *v.worst;
        const char* kind = w.kind == LevyViolation::Kind::origin      ? "origin"
                           : w.kind == LevyViolation::Kind::increment ? "increment"
                                                                      : "divisibility";
        json worst{{"kind", kind}, {"violation", w.violation}};
        if (w.kind == LevyViolation::Kind::increment) {
            worst["s"] = path.timeline.label(w.s);
            worst["t"] = path.timeline.label(w.t);
        } else if (w.kind == LevyViolation::Kind::divisibility) {
            worst["t"] = path.timeline.label(w.t);
            worst["part"] = path.timeline.label(w.s);
            worst["n"] = w.n;
        }
        out["worst_violation"] = worst;
    } else {
        out["worst_violation"] = nullptr;
    }
    return out;
}

inline json generator_json(const PathGenerator& gen) {
    switch (gen.kind) {
        case PathGenerator::Kind::root:
            return json{{"kind", "root"}, {"N", gen.grid}, {"nu", gen.nu}};
        case PathGenerator::Kind::exponential:
            return json{{"kind", "exponential"}, {"r", gen.rate}, {"tol", gen.tol}, {"nu", gen.nu}};
        case PathGenerator::Kind::external: break;
    }
    return json{{"kind", "external"}};
}

inline json timeline_json(const Timeline& t) {
    json ticks = json::array();
    for (std::size_t i = 0; i < t.size(); ++i) ticks.push_back(t.label(i));
    switch (t.kind()) {
        case Timeline::Kind::uniform_grid:
            return json{{"kind", "uniform_grid"}, {"N", t.grid_size()}, {"ticks", ticks}};
        case Timeline::Kind::rationals: return json{{"kind", "rationals"}, {"ticks", ticks}};
        case Timeline::Kind::samples: return json{{"kind", "samples"}, {"ticks", ticks}};
    }
    return json{};
}

inline json path_manifest(const LevyPath& path, const std::string& csv_relative) {
    return json{{"generator", generator_json(path.generator)},
                {"timeline", timeline_json(path.timeline)},
                {"csv", csv_relative}};
}

// Header "t,w_0,...,w_{m-1}", one row per tick, weights with 17
// significant digits so parsing restores them exactly.
inline std::string export_path(const LevyPath& path, const std::string& structure_label = "") {
    std::string out = "# generator: " + path.generator.describe() + "\n";
    const std::size_t m = path.marginals.empty() ? 0 : path.marginals.front().size();
    out += "# structure: ";
    if (!structure_label.empty()) out += structure_label + " ";
    out += "m=" + std::to_string(m) + "\n";
    out += "t";
    for (std::size_t i = 0; i < m; ++i) out += ",w_" + std::to_string(i);
    out += "\n";
    for (std::size_t k = 0; k < path.marginals.size(); ++k) {
        out += path.timeline.label(k);
        for (double w : path.marginals[k].weights()) out += "," + detail::format_real(w);
        out += "\n";
    }
    return out;
}

namespace detail {

inline std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream ss(line);
    while (std::getline(ss, cur, sep)) out.push_back(cur);
    if (!line.empty() && line.back() == sep) out.emplace_back();
    return out;
}

inline double parse_real(const std::string& s, const std::string& what) {
    const char* begin = s.c_str();
    char* end = nullptr;
    double v = std::strtod(begin, &end);
    if (end == begin || *end != '\0') throw InputError(what + ": '" + s + "' is not a number");
    return v;
}

inline std::int64_t parse_integer(const std::string& s, const std::string& what) {
    const char* begin = s.c_str();
    char* end = nullptr;
    long long v = std::strtoll(begin, &end, 10);
    if (end == begin || *end != '\0') throw InputError(what + ": '" + s + "' is not an integer");
    return v;
}

}  // namespace detail

inline LevyPath parse_path_csv(const Semigroup& g, const std::string& text) {
    std::istringstream in(text);
    std::string line;
    bool header = false;
    std::vector<std::string> labels;
    std::vector<Measure> marginals;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        auto cells = detail::split(line, ',');
        std::string where = "path CSV line " + std::to_string(line_no);
        if (!header) {
            if (cells.size() != g.size() + 1 || cells[0] != "t") {
                throw InputError(where + ": expected header t,w_0,...,w_" + std::to_string(g.size() - 1));
            }
            header = true;
            continue;
        }
        if (cells.size() != g.size() + 1) throw InputError(where + ": wrong number of columns");
        labels.push_back(cells[0]);
        std::vector<double> w;
        for (std::size_t i = 1; i < cells.size(); ++i) w.push_back(detail::parse_real(cells[i], where));
        try {
            marginals.push_back(Measure::verbatim(std::move(w), g.id()));
        } catch (const DomainError& e) {
            throw InputError(where + ": " + e.what());
        }
    }
    if (!header || labels.empty()) throw InputError("path CSV has no rows");

    bool exact = true;
    std::vector<Fraction> fractions;
    std::vector<double> reals;
    for (const auto& l : labels) {
        if (l.find_first_of(".eE") != std::string::npos) exact = false;
    }
    for (const auto& l : labels) {
        if (exact) {
            auto slash = l.find('/');
            if (slash == std::string::npos) {
                fractions.push_back(Fraction::reduced(detail::parse_integer(l, "tick"), 1));
            } else {
                fractions.push_back(Fraction::reduced(detail::parse_integer(l.substr(0, slash), "tick"),
                                                      detail::parse_integer(l.substr(slash + 1), "tick")));
            }
        } else {
            reals.push_back(detail::parse_real(l, "tick"));
        }
    }
    std::optional<Timeline> timeline;
    try {
        if (exact) {
            // A full uniform grid k/N, k = 0..N, is reported as such.
            std::int64_t N = static_cast<std::int64_t>(fractions.size()) - 1;
            bool grid = N >= 1;
            for (std::int64_t k = 0; grid && k <= N; ++k) {
                grid = fractions[static_cast<std::size_t>(k)] == Fraction::reduced(k, N);
            }
            timeline = grid ? Timeline::uniform_grid(static_cast<std::size_t>(N)) : Timeline::rationals(fractions);
        } else {
            timeline = Timeline::samples(reals);
        }
    } catch (const DomainError& e) {
        throw InputError(std::string("path CSV ticks: ") + e.what());
    }
    bool ordered = timeline->size() == marginals.size();
    for (std::size_t k = 0; ordered && k < marginals.size(); ++k) {
        const Tick& t = timeline->ticks()[k];
        ordered = exact ? *t.exact == fractions[k] : t.value == reals[k];
    }
    if (!ordered) throw InputError("path CSV ticks must be strictly increasing from 0 to 1");
    return LevyPath{std::move(*timeline), std::move(marginals), PathGenerator{}, std::nullopt};
}

}  // namespace defconv
