#pragma once
// Command-line front end. dispatch() returns 0 on success, 1 when a
// verification or validation fails, and 2 on bad input.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <iostream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "defconv/algebra.hpp"
#include "defconv/divisibility.hpp"
#include "defconv/error.hpp"
#include "defconv/eval.hpp"
#include "defconv/io.hpp"
#include "defconv/levy.hpp"
#include "defconv/parser.hpp"
#include "defconv/semigroup.hpp"

namespace defconv::cli {

namespace detail {

// Raised when the model's semigroup does not certify.
class VerificationFailure : public Error {
public:
    using Error::Error;
};

inline double to_real(const std::string& text, const std::string& flag) {
    const char* begin = text.c_str();
    char* end = nullptr;
    double v = std::strtod(begin, &end);
    if (end == begin || *end != '\0' || !std::isfinite(v)) {
        throw InputError(flag + ": '" + text + "' is not a real number");
    }
    return v;
}

// Integer flags also accept scientific notation, e.g. 4.096e3.
inline std::size_t to_count(const std::string& text, const std::string& flag) {
    double v = to_real(text, flag);
    if (v < 0.0 || v != std::floor(v) || v > 9.0e15) {
        throw InputError(flag + ": '" + text + "' is not a non-negative integer");
    }
    return static_cast<std::size_t>(v);
}

inline std::uint64_t to_seed(const std::string& text) {
    if (!text.empty() && text.find_first_not_of("0123456789") == std::string::npos && text.size() <= 19) {
        return std::stoull(text);
    }
    return static_cast<std::uint64_t>(to_count(text, "--seed"));
}

struct Loaded {
    FiniteStructure structure;
    std::optional<SemigroupCertificate> certificate;
    std::optional<Semigroup> semigroup;
    std::string label;
};

inline Loaded load(const std::string& model_path, bool need_semigroup) {
    Loaded out{load_model(model_path), std::nullopt, std::nullopt,
               std::filesystem::path(model_path).stem().string()};
    if (need_semigroup) {
        out.certificate = verify_semigroup(out.structure);
        if (!out.certificate->passed()) {
            const AxiomResult* bad = out.certificate->first_failure();
            throw VerificationFailure("semigroup axiom '" + (bad ? bad->name : std::string("neutral")) +
                                      "' fails for " + model_path);
        }
        out.semigroup.emplace(*out.certificate);
    }
    return out;
}

struct Output {
    std::string path;
    std::ostream* out = nullptr;

    void emit(const std::string& text) const {
        if (path.empty()) {
            *out << text;
        } else {
            write_file(path, text);
        }
    }
    void emit(const json& doc) const { emit(doc.dump(2) + "\n"); }
};

struct SolverFlags {
    std::string seed = "0";
    std::string restarts = "16";
    std::string max_iters = "5000";
    std::string tol_residual = "1e-9";
    std::string grid_resolution = "64";

    void attach(CLI::App* cmd) {
        cmd->add_option("--seed", seed, "Seed for restart initial points")->capture_default_str();
        cmd->add_option("--restarts", restarts, "Number of solver restarts")->capture_default_str();
        cmd->add_option("--max-iters", max_iters, "Iterations per restart")->capture_default_str();
        cmd->add_option("--tol-residual", tol_residual, "Residual accepted as exact")->capture_default_str();
        cmd->add_option("--grid-resolution", grid_resolution, "Seed grid of the lower-bound oracle (m <= 3)")
            ->capture_default_str();
    }

    SolverConfig config(std::size_t threads) const {
        SolverConfig cfg;
        cfg.seed = to_seed(seed);
        cfg.restarts = to_count(restarts, "--restarts");
        cfg.max_iters = to_count(max_iters, "--max-iters");
        cfg.tol_residual = to_real(tol_residual, "--tol-residual");
        cfg.grid_resolution = to_count(grid_resolution, "--grid-resolution");
        cfg.threads = threads;
        try {
            cfg.validate();
        } catch (const DomainError& e) {
            throw InputError(e.what());
        }
        return cfg;
    }
};

inline std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : text) {
        if (c == ',') {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else if (c != ' ') {
            cur += c;
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

}  // namespace detail

inline int dispatch(int argc, const char* const* argv, std::ostream& out = std::cout,
                    std::ostream& err = std::cerr) {
    using namespace detail;
    CLI::App app{"Convolution algebra of probabilities on finite structures with a definable semigroup"};
    app.require_subcommand(1);

    std::string model, mu_path, nu_path, output;
    std::string threads_text = "1";
    std::function<int()> action;

    auto add_common = [&](CLI::App* cmd, bool with_threads) {
        cmd->add_option("model", model, "Model JSON file")->required();
        cmd->add_option("-o,--output", output, "Write the result here instead of standard output");
        if (with_threads) {
            cmd->add_option("--threads", threads_text, "Worker threads")->capture_default_str();
        }
    };
    auto threads = [&] {
        std::size_t t = to_count(threads_text, "--threads");
        if (t < 1) throw InputError("--threads must be >= 1");
        return t;
    };
    auto sink = [&] { return Output{output, &out}; };

    // verify
    std::string formula_text;
    auto* verify = app.add_subcommand("verify", "Check the four semigroup axioms exhaustively");
    add_common(verify, false);
    verify->add_option("--formula", formula_text, "theta(x, y, z) overriding the model's semigroup");
    verify->callback([&] {
        action = [&] {
            auto L = load(model, false);
            SemigroupCertificate cert = formula_text.empty()
                                            ? verify_semigroup(L.structure)
                                            : verify_semigroup(L.structure, parse_formula(formula_text, L.structure));
            sink().emit(certificate_json(cert));
            return cert.passed() ? 0 : 1;
        };
    });

    // eval
    std::string var_name;
    auto* eval = app.add_subcommand("eval", "Evaluate a formula, or the measure of the event it defines");
    add_common(eval, false);
    eval->add_option("measure", mu_path, "Measure JSON file");
    eval->add_option("--formula", formula_text, "Formula text")->required();
    eval->add_option("--var", var_name, "Free variable of the event (default: the only one)");
    eval->callback([&] {
        action = [&] {
            auto L = load(model, false);
            Formula f = parse_formula(formula_text, L.structure);
            auto free = free_variables(f);
            json doc;
            if (free.empty() && mu_path.empty()) {
                doc["value"] = eval_formula(L.structure, f, {});
            } else {
                std::string v = var_name.empty() ? (free.empty() ? std::string("x") : *free.begin()) : var_name;
                DefinableSet set = definable_set(L.structure, f, v);
                doc["variable"] = v;
                doc["set"] = set.elements();
                if (!mu_path.empty()) {
                    Measure mu = load_measure(L.structure, L.structure, mu_path);
                    doc["measure"] = measure_of_event(mu, set);
                }
            }
            sink().emit(doc);
            return 0;
        };
    });

    // convolve
    auto* conv = app.add_subcommand("convolve", "Convolution product of two measures");
    add_common(conv, false);
    conv->add_option("mu", mu_path, "First measure")->required();
    conv->add_option("nu", nu_path, "Second measure")->required();
    conv->callback([&] {
        action = [&] {
            auto L = load(model, true);
            const Semigroup& g = *L.semigroup;
            Measure mu = load_measure(g, L.structure, mu_path);
            Measure nu = load_measure(g, L.structure, nu_path);
            sink().emit(measure_json(convolve(g, mu, nu)));
            return 0;
        };
    });

    // power
    std::string n_text = "2";
    auto* power = app.add_subcommand("power", "Convolution power mu^{n*}");
    add_common(power, false);
    power->add_option("mu", mu_path, "Measure")->required();
    power->add_option("--n", n_text, "Exponent")->capture_default_str();
    power->callback([&] {
        action = [&] {
            auto L = load(model, true);
            const Semigroup& g = *L.semigroup;
            Measure mu = load_measure(g, L.structure, mu_path);
            sink().emit(measure_json(conv_power(g, mu, to_count(n_text, "--n"))));
            return 0;
        };
    });

    // exp
    std::string r_text = "1", tol_text = "1e-9", method = "series";
    auto* expo = app.add_subcommand("exp", "Convolution exponential e^{r(mu* - 1)}");
    add_common(expo, false);
    expo->add_option("mu", mu_path, "Measure")->required();
    expo->add_option("--r", r_text, "Rate r >= 0")->capture_default_str();
    expo->add_option("--tol", tol_text, "Total-variation tolerance")->capture_default_str();
    expo->add_option("--method", method, "series or squaring")
        ->check(CLI::IsMember({"series", "squaring"}))
        ->capture_default_str();
    expo->callback([&] {
        action = [&] {
            auto L = load(model, true);
            const Semigroup& g = *L.semigroup;
            Measure mu = load_measure(g, L.structure, mu_path);
            ExpMethod m = method == "squaring" ? ExpMethod::scaling_squaring : ExpMethod::series;
            sink().emit(measure_json(conv_exp(g, mu, to_real(r_text, "--r"), to_real(tol_text, "--tol"), m)));
            return 0;
        };
    });

    // root
    SolverFlags solver;
    auto* root = app.add_subcommand("root", "Certified n-th convolution root");
    add_common(root, true);
    root->add_option("target", mu_path, "Target measure")->required();
    root->add_option("--n", n_text, "Root order")->capture_default_str();
    solver.attach(root);
    root->callback([&] {
        action = [&] {
            auto L = load(model, true);
            const Semigroup& g = *L.semigroup;
            Measure mu = load_measure(g, L.structure, mu_path);
            std::size_t n = to_count(n_text, "--n");
            if (n < 1) throw InputError("--n must be >= 1");
            RootCertificate cert = nth_root(g, mu, n, solver.config(threads()));
            sink().emit(root_certificate_json(cert));
            return cert.verdict == RootVerdict::exact_within_tol ? 0 : 1;
        };
    });

    // divisible
    std::string n_max_text = "8";
    auto* divisible = app.add_subcommand("divisible", "Roots of every order 2..n-max");
    add_common(divisible, true);
    divisible->add_option("target", mu_path, "Target measure")->required();
    divisible->add_option("--n-max", n_max_text, "Largest root order")->capture_default_str();
    solver.attach(divisible);
    divisible->callback([&] {
        action = [&] {
            auto L = load(model, true);
            const Semigroup& g = *L.semigroup;
            Measure mu = load_measure(g, L.structure, mu_path);
            std::size_t n_max = to_count(n_max_text, "--n-max");
            if (n_max < 2) throw InputError("--n-max must be >= 2");
            auto rep = is_infinitely_divisible(g, mu, n_max, solver.config(threads()));
            sink().emit(divisibility_json(rep));
            return rep.divisible ? 0 : 1;
        };
    });

    // lambda
    std::string K_text = "1024";
    auto* lambda = app.add_subcommand("lambda", "The measure (1 + r/K)^{-1}(delta_0 + (r/K) mu)");
    add_common(lambda, false);
    lambda->add_option("mu", mu_path, "Measure")->required();
    lambda->add_option("--r", r_text, "Rate r >= 0")->capture_default_str();
    lambda->add_option("--K", K_text, "Number of factors")->capture_default_str();
    lambda->callback([&] {
        action = [&] {
            auto L = load(model, true);
            const Semigroup& g = *L.semigroup;
            Measure mu = load_measure(g, L.structure, mu_path);
            sink().emit(measure_json(lambda_for(g, mu, to_real(r_text, "--r"), to_count(K_text, "--K"))));
            return 0;
        };
    });

    // extract-jump
    auto* jump = app.add_subcommand("extract-jump", "Recover nu from lambda = (1 + r/K)^{-1}(delta_0 + (r/K) nu)");
    add_common(jump, false);
    jump->add_option("lambda", mu_path, "Measure lambda")->required();
    jump->add_option("--r", r_text, "Rate r > 0")->capture_default_str();
    jump->add_option("--K", K_text, "Number of factors")->capture_default_str();
    jump->callback([&] {
        action = [&] {
            auto L = load(model, true);
            const Semigroup& g = *L.semigroup;
            Measure lam = load_measure(g, L.structure, mu_path);
            sink().emit(measure_json(extract_jump(g, lam, to_real(r_text, "--r"), to_count(K_text, "--K"))));
            return 0;
        };
    });

    // concentration
    std::string eps_text = "1e-3";
    auto* conc = app.add_subcommand("concentration", "Check the three concentration conditions");
    add_common(conc, false);
    conc->add_option("mu", mu_path, "Measure mu")->required();
    conc->add_option("lambda", nu_path, "Measure lambda")->required();
    conc->add_option("--r", r_text, "Rate r >= 0")->capture_default_str();
    conc->add_option("--K", K_text, "Number of factors")->capture_default_str();
    conc->add_option("--eps", eps_text, "Tolerance of the scalar limit condition")->capture_default_str();
    conc->callback([&] {
        action = [&] {
            auto L = load(model, true);
            const Semigroup& g = *L.semigroup;
            Measure mu = load_measure(g, L.structure, mu_path);
            Measure lam = load_measure(g, L.structure, nu_path);
            auto rep = check_concentration(g, mu, lam, to_real(r_text, "--r"), to_count(K_text, "--K"),
                                           to_real(eps_text, "--eps"));
            sink().emit(concentration_json(rep));
            return rep.all() ? 0 : 1;
        };
    });

    // fit-lk
    std::string r_max_text = "4";
    auto* fit = app.add_subcommand("fit-lk", "Fit target ~ e^{r(nu* - 1)} over r in [0, r-max] and nu");
    add_common(fit, true);
    fit->add_option("target", mu_path, "Target measure")->required();
    fit->add_option("--r-max", r_max_text, "Largest rate searched")->capture_default_str();
    solver.attach(fit);
    fit->callback([&] {
        action = [&] {
            auto L = load(model, true);
            const Semigroup& g = *L.semigroup;
            Measure mu = load_measure(g, L.structure, mu_path);
            auto res = fit_levy_khintchine(g, mu, solver.config(threads()), to_real(r_max_text, "--r-max"));
            sink().emit(json{{"r", res.r}, {"nu", measure_json(res.nu)}, {"residual", res.residual}});
            return 0;
        };
    });

    // bernoulli
    std::string K_list_text = "64,128,256,512,1024,2048,4096";
    std::string table_tol = "1e-12";
    auto* bern = app.add_subcommand("bernoulli", "Table of tv(lambda^{K*}, e^{r(mu* - 1)}) over K");
    add_common(bern, false);
    bern->add_option("mu", mu_path, "Measure")->required();
    bern->add_option("--r", r_text, "Rate r >= 0")->capture_default_str();
    bern->add_option("--K", K_list_text, "Comma-separated values of K")->capture_default_str();
    bern->add_option("--tol", table_tol, "Tolerance of the reference exponential")->capture_default_str();
    bern->callback([&] {
        action = [&] {
            auto L = load(model, true);
            const Semigroup& g = *L.semigroup;
            Measure mu = load_measure(g, L.structure, mu_path);
            std::vector<std::size_t> Ks;
            for (const auto& k : split_list(K_list_text)) {
                std::size_t K = to_count(k, "--K");
                if (K < 1) throw InputError("--K values must be >= 1");
                Ks.push_back(K);
            }
            if (Ks.empty()) throw InputError("--K needs at least one value");
            std::sort(Ks.begin(), Ks.end());
            Ks.erase(std::unique(Ks.begin(), Ks.end()), Ks.end());
            double r = to_real(r_text, "--r"), tol = to_real(table_tol, "--tol");
            std::string csv = "K,tv_error\n";
            for (std::size_t K : Ks) {
                csv += std::to_string(K) + "," + defconv::detail::format_real(exp_approx_error(g, mu, r, K, tol)) + "\n";
            }
            sink().emit(csv);
            return 0;
        };
    });

    // levy-root / levy-exp
    std::string N_text = "64", manifest;
    auto write_path = [&](const LevyPath& path, const std::string& label) {
        sink().emit(export_path(path, label));
        if (!manifest.empty()) {
            namespace fs = std::filesystem;
            std::string csv = output.empty()
                                  ? std::string("-")
                                  : fs::relative(fs::absolute(output), fs::absolute(manifest).parent_path()).string();
            write_file(manifest, path_manifest(path, csv).dump(2) + "\n");
        }
    };
    auto* lroot = app.add_subcommand("levy-root", "Path X(k/N) = nu^{k*} on the uniform grid");
    add_common(lroot, true);
    lroot->add_option("nu", mu_path, "Root measure nu")->required();
    lroot->add_option("--N", N_text, "Grid size")->capture_default_str();
    lroot->add_option("--manifest", manifest, "Also write a path manifest JSON here");
    lroot->callback([&] {
        action = [&] {
            auto L = load(model, true);
            const Semigroup& g = *L.semigroup;
            Measure nu = load_measure(g, L.structure, mu_path);
            std::size_t N = to_count(N_text, "--N");
            if (N < 1) throw InputError("--N must be >= 1");
            write_path(levy_from_root(g, nu, N, threads()), L.label);
            return 0;
        };
    });

    std::string rationals_text, samples_text;
    auto* lexp = app.add_subcommand("levy-exp", "Path X(t) = e^{tr(nu* - 1)} on a timeline");
    add_common(lexp, true);
    lexp->add_option("nu", mu_path, "Jump measure nu")->required();
    lexp->add_option("--r", r_text, "Rate r >= 0")->capture_default_str();
    lexp->add_option("--tol", tol_text, "Tolerance of each marginal")->capture_default_str();
    auto* grid_opt = lexp->add_option("--grid", N_text, "Uniform grid size")->capture_default_str();
    auto* rat_opt = lexp->add_option("--rationals", rationals_text, "Comma-separated fractions a/b in [0, 1]");
    auto* smp_opt = lexp->add_option("--samples", samples_text, "Comma-separated reals in [0, 1]");
    rat_opt->excludes(smp_opt);
    grid_opt->excludes(rat_opt)->excludes(smp_opt);
    lexp->add_option("--manifest", manifest, "Also write a path manifest JSON here");
    lexp->callback([&] {
        action = [&] {
            auto L = load(model, true);
            const Semigroup& g = *L.semigroup;
            Measure nu = load_measure(g, L.structure, mu_path);
            std::optional<Timeline> tl;
            try {
                if (!rationals_text.empty()) {
                    std::vector<Fraction> fr;
                    for (const auto& item : split_list(rationals_text)) {
                        auto slash = item.find('/');
                        std::int64_t num = static_cast<std::int64_t>(to_count(item.substr(0, slash), "--rationals"));
                        std::int64_t den = slash == std::string::npos
                                               ? 1
                                               : static_cast<std::int64_t>(to_count(item.substr(slash + 1), "--rationals"));
                        fr.push_back(Fraction::reduced(num, den));
                    }
                    tl = Timeline::rationals(fr);
                } else if (!samples_text.empty()) {
                    std::vector<double> pts;
                    for (const auto& item : split_list(samples_text)) pts.push_back(to_real(item, "--samples"));
                    tl = Timeline::samples(pts);
                } else {
                    tl = Timeline::uniform_grid(to_count(N_text, "--grid"));
                }
            } catch (const DomainError& e) {
                throw InputError(e.what());
            }
            write_path(levy_from_exponential(g, nu, to_real(r_text, "--r"), *tl, to_real(tol_text, "--tol"),
                                             threads()),
                       L.label);
            return 0;
        };
    });

    // levy-validate
    std::string vtol_text = "1e-9";
    auto* lval = app.add_subcommand("levy-validate", "Check X(0) = delta_0, increments and marginal divisibility");
    add_common(lval, true);
    lval->add_option("path", mu_path, "Path CSV")->required();
    lval->add_option("--tol", vtol_text, "Total-variation tolerance")->capture_default_str();
    lval->callback([&] {
        action = [&] {
            auto L = load(model, true);
            const Semigroup& g = *L.semigroup;
            LevyPath path = parse_path_csv(g, read_file(mu_path));
            auto rep = validate_levy(g, path, to_real(vtol_text, "--tol"), threads());
            sink().emit(validation_json(path, rep));
            return rep.passed() ? 0 : 1;
        };
    });

    // compare-paths
    auto* cmp = app.add_subcommand("compare-paths", "Largest tick-wise total-variation distance of two paths");
    add_common(cmp, false);
    cmp->add_option("first", mu_path, "Path CSV")->required();
    cmp->add_option("second", nu_path, "Path CSV")->required();
    cmp->callback([&] {
        action = [&] {
            auto L = load(model, true);
            const Semigroup& g = *L.semigroup;
            LevyPath a = parse_path_csv(g, read_file(mu_path));
            LevyPath b = parse_path_csv(g, read_file(nu_path));
            json doc{{"max_tv", compare_paths(a, b)}, {"ticks", a.marginals.size()}};
            sink().emit(doc);
            return 0;
        };
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return 2;
    }
    try {
        return action ? action() : 2;
    } catch (const VerificationFailure& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    }
}

}  // namespace defconv::cli
