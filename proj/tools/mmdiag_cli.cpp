#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "mmdiag/battery.hpp"
#include "mmdiag/diag.hpp"
#include "mmdiag/mel.hpp"
#include "mmdiag/mmdm.hpp"
#include "mmdiag/oracle.hpp"
#include "mmdiag/structure.hpp"

namespace {

using namespace mmdiag;

constexpr int kExitOk = 0;
constexpr int kExitModelError = 1;
constexpr int kExitMismatch = 2;
constexpr int kExitUsage = 3;

structure::Approach parse_approach(const std::string& s) {
    if (s == "signal") return structure::Approach::Signal;
    if (s == "boolean") return structure::Approach::Boolean;
    throw CLI::ValidationError("--approach", "must be 'signal' or 'boolean'");
}

/// Sidecar configuration next to a model file (same name, .cfg extension).
/// Plain key=value lines; '#' starts a comment.
struct Sidecar {
    std::map<std::string, long long> params;      // N=...
    structure::ExtractConfig extract;
    std::vector<std::pair<std::string, std::string>> macro_defs;  // name -> expression
};

Sidecar read_sidecar(const std::string& model_path) {
    Sidecar sc;
    std::filesystem::path p(model_path);
    p.replace_extension(".cfg");
    std::ifstream in(p);
    if (!in) return sc;
    std::string line;
    while (std::getline(in, line)) {
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        auto trim = [](std::string s) {
            s.erase(0, s.find_first_not_of(" \t\r"));
            s.erase(s.find_last_not_of(" \t\r") + 1);
            return s;
        };
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty()) continue;
        if (key == "approach") {
            sc.extract.approach = parse_approach(value);
        } else if (key == "signal_fault_prefix") {
            sc.extract.signal_fault_prefix = value;
        } else if (key == "boolean_fault_prefix") {
            sc.extract.boolean_fault_prefix = value;
        } else if (key == "faults") {
            std::stringstream ss(value);
            std::string item;
            while (std::getline(ss, item, ','))
                if (auto t = item.find_first_not_of(" \t"); t != std::string::npos)
                    sc.extract.fault_overrides.push_back(
                        item.substr(t, item.find_last_not_of(" \t") - t + 1));
        } else if (key.starts_with("macro.")) {
            sc.macro_defs.emplace_back(key.substr(6), value);
        } else {
            sc.params[key] = std::stoll(value);
        }
    }
    return sc;
}

struct ModelOptions {
    std::string input;  // empty: generate a battery model instead
    std::string approach = "signal";
    long long n = 1;
    std::string flavor = "pack";
    std::string macros_path;
};

battery::Flavor parse_flavor(const std::string& s) {
    if (s == "sm") return battery::Flavor::SingleSM;
    if (s == "pack") return battery::Flavor::Pack;
    throw CLI::ValidationError("--flavor", "must be 'sm' or 'pack'");
}

struct LoadedModel {
    structure::StructuralModel sm;
    mel::FlatModel fm;
    Sidecar sidecar;
};

LoadedModel load_model(const ModelOptions& opt) {
    LoadedModel lm;
    mel::SourceModel ast;
    if (opt.input.empty()) {
        ast = mel::parse(
            battery::generate(static_cast<std::size_t>(opt.n), parse_approach(opt.approach),
                              parse_flavor(opt.flavor)));
        lm.fm = mel::flatten(ast, {{"N", opt.n}});
        lm.sidecar.extract.approach = parse_approach(opt.approach);
    } else {
        ast = mel::parse_file(opt.input);
        lm.sidecar = read_sidecar(opt.input);
        lm.fm = mel::flatten(ast, lm.sidecar.params);
    }
    lm.sm = structure::extract_structure(lm.fm, lm.sidecar.extract);
    return lm;
}

diag::MacroTable build_macros(const LoadedModel& lm, const std::string& macros_path) {
    diag::MacroTable t;
    if (!macros_path.empty()) {
        diag::MacroTable file = diag::load_macros(macros_path, lm.sm);
        t.macros.insert(t.macros.end(), file.macros.begin(), file.macros.end());
    }
    for (const auto& [name, expr] : lm.sidecar.macro_defs)
        t.macros.emplace_back(
            name, structure::compile_condition(*lm.sm.mgr, mel::parse_bool_expr(expr)));
    diag::MacroTable def = diag::default_macros(lm.sm);
    t.macros.insert(t.macros.end(), def.macros.begin(), def.macros.end());
    return t;
}

diag::Matrix compute_matrix(const structure::StructuralModel& sm, unsigned jobs) {
    return sm.approach == structure::Approach::Signal ? diag::diagnosability_signal(sm, jobs)
                                                      : diag::diagnosability_boolean(sm);
}

void add_model_options(CLI::App* cmd, ModelOptions& opt, bool with_input) {
    if (with_input)
        cmd->add_option("model", opt.input, "model file (.mel); omit to generate a battery pack");
    cmd->add_option("--approach", opt.approach, "fault modeling approach: signal|boolean")
        ->default_val("signal");
    cmd->add_option("--n", opt.n, "number of battery submodules")->default_val(1);
    cmd->add_option("--flavor", opt.flavor, "battery flavor: sm|pack")->default_val("pack");
    cmd->add_option("--macros", opt.macros_path, "macro table file (name = expression lines)");
}

int run(int argc, char** argv) {
    CLI::App app{"Structural fault diagnosability of multi-mode systems"};
    app.require_subcommand(1);

    ModelOptions gen_opt, diag_opt, verify_opt;
    std::string gen_output;
    std::string diag_format = "table";
    std::string diag_dump;
    unsigned jobs = 1;
    std::size_t mode_cap = 16;
    long long bench_max = 6;

    CLI::App* gen = app.add_subcommand("generate", "emit a battery pack model (.mel)");
    gen->add_option("--approach", gen_opt.approach, "signal|boolean")->default_val("signal");
    gen->add_option("--n", gen_opt.n, "number of submodules")->default_val(1);
    gen->add_option("--flavor", gen_opt.flavor, "sm|pack")->default_val("pack");
    gen->add_option("-o,--output", gen_output, "output file (default stdout)");

    CLI::App* dg = app.add_subcommand("diagnose", "compute the diagnosability matrix");
    add_model_options(dg, diag_opt, true);
    dg->add_option("--format", diag_format, "output format: table|json|csv")->default_val("table");
    dg->add_option("--jobs", jobs, "parallel matrix columns (signal approach)")->default_val(1);
    dg->add_option("--dump-flat", diag_dump, "write the flattened model as JSON to a file");

    CLI::App* vf = app.add_subcommand("verify", "check the matrix against the per-mode oracle");
    add_model_options(vf, verify_opt, true);
    vf->add_option("--mode-cap", mode_cap, "maximum number of mode variables to enumerate")
        ->default_val(16);
    vf->add_option("--jobs", jobs, "parallel matrix columns (signal approach)")->default_val(1);
    long long verify_seed = -1;
    vf->add_option("--seed", verify_seed,
                   "verify a seeded random guarded model instead of a battery/file model");

    CLI::App* bn = app.add_subcommand("bench", "time both approaches on battery packs");
    bn->add_option("--n", bench_max, "largest submodule count; sweeps 1..n")->default_val(6);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);  // prints help/diagnostic
        return rc == 0 ? kExitOk : kExitUsage;
    }

    if (gen->parsed()) {
        std::string text = battery::generate(static_cast<std::size_t>(gen_opt.n),
                                             parse_approach(gen_opt.approach),
                                             parse_flavor(gen_opt.flavor));
        if (gen_output.empty()) {
            std::cout << text;
        } else {
            std::ofstream out(gen_output);
            if (!out) throw mel::ModelError("cannot write " + gen_output);
            out << text;
        }
        return kExitOk;
    }

    if (dg->parsed()) {
        LoadedModel lm = load_model(diag_opt);
        if (!diag_dump.empty()) {
            std::ofstream out(diag_dump);
            if (!out) throw mel::ModelError("cannot write " + diag_dump);
            out << structure::flat_model_json(lm.fm, lm.sm);
        }
        for (const auto& w : lm.sm.warnings) std::cerr << "warning: " << w << "\n";
        diag::Matrix d = compute_matrix(lm.sm, jobs);
        diag::MacroTable macros = build_macros(lm, diag_opt.macros_path);
        if (diag_format == "table")
            std::cout << diag::render_table(d, macros);
        else if (diag_format == "csv")
            std::cout << diag::render_csv(d, macros);
        else if (diag_format == "json")
            std::cout << diag::render_json(d) << "\n";
        else
            throw CLI::ValidationError("--format", "must be table, json or csv");
        return kExitOk;
    }

    if (vf->parsed()) {
        oracle::MismatchReport r;
        if (verify_seed >= 0) {
            structure::StructuralModel sm =
                oracle::random_model(static_cast<std::uint64_t>(verify_seed));
            r = oracle::compare(sm, diag::diagnosability_signal(sm, jobs), mode_cap);
        } else {
            LoadedModel lm = load_model(verify_opt);
            diag::Matrix d = compute_matrix(lm.sm, jobs);
            r = oracle::compare(lm.sm, d, mode_cap);
        }
        for (const auto& line : r.lines) std::cout << line << "\n";
        std::cout << r.lines.size() << " mismatches\n";
        return r.ok ? kExitOk : kExitMismatch;
    }

    // bench
    std::cout << "n,approach,wall_seconds,bool_var_count,class_count,bdd_node_peak\n";
    for (long long n = 1; n <= bench_max; ++n) {
        for (auto approach : {structure::Approach::Signal, structure::Approach::Boolean}) {
            std::string text = battery::generate(static_cast<std::size_t>(n), approach,
                                                 battery::Flavor::Pack);
            mel::SourceModel ast = mel::parse(text);
            mel::FlatModel fm = mel::flatten(ast, {{"N", n}});
            // Timed region: structure extraction, decomposition and matrix.
            auto t0 = std::chrono::steady_clock::now();
            structure::StructuralModel sm = structure::extract_structure(fm);
            diag::Matrix d = compute_matrix(sm, 1);
            auto t1 = std::chrono::steady_clock::now();
            (void)d;
            auto classes = mmdm::signature_classes(sm.graph, mmdm::kDefaultClassCap);
            long long class_count = classes ? static_cast<long long>(classes->size()) : -1;
            double secs = std::chrono::duration<double>(t1 - t0).count();
            std::cout << n << ","
                      << (approach == structure::Approach::Signal ? "signal" : "boolean") << ","
                      << secs << "," << sm.system_modes.size() + sm.fault_modes.size() << ","
                      << class_count << "," << sm.mgr->peak_node_count() << "\n";
        }
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const mel::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitModelError;
    } catch (const mel::ModelError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitModelError;
    } catch (const bdd::UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const CLI::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitModelError;
    }
}
