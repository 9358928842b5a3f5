#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "artinkms/cli.hpp"

namespace {

struct CommonArgs {
    std::string model_path;
    std::string trace_name;
    std::string trace_inline;
    std::string out_path;
    std::string format = "json";
    double beta = 1.0;
    double tol = -1.0;
    double budget = 1e6;
};

void add_model_options(CLI::App* cmd, CommonArgs* args, bool needs_trace) {
    cmd->add_option("--model", args->model_path, "model JSON file")->required();
    if (needs_trace) {
        cmd->add_option("--trace", args->trace_name, "named trace from the model");
        cmd->add_option("--trace-inline", args->trace_inline, "trace as comma-separated decimals");
    }
    cmd->add_option("--tol", args->tol, "positivity tolerance (default: 1e-9 relative to mass)");
    cmd->add_option("--budget", args->budget, "series enumeration budget");
    cmd->add_option("--out", args->out_path, "write the report to a file instead of stdout");
    cmd->add_option("--format", args->format, "json|csv")->check(CLI::IsMember({"json", "csv"}));
}

artinkms::Tolerances make_opts(const CommonArgs& args) {
    artinkms::Tolerances opts;
    if (args.tol > 0) opts.positivity = args.tol;
    opts.budget = args.budget;
    return opts;
}

std::optional<double> explicit_tol(const CommonArgs& args) {
    if (args.tol > 0) return args.tol;
    return std::nullopt;
}

artinkms::TraceVec pick_trace(const artinkms::LoadedModel& model, const CommonArgs& args) {
    std::optional<std::string> name, inl;
    if (!args.trace_name.empty()) name = args.trace_name;
    if (!args.trace_inline.empty()) inl = args.trace_inline;
    return artinkms::resolve_trace(model, name, inl);
}

int emit(const artinkms::CommandResult& res, const CommonArgs& args) {
    if (!args.out_path.empty()) {
        std::ofstream out(args.out_path);
        if (!out) {
            std::cerr << "error: cannot write '" << args.out_path << "'\n";
            return 2;
        }
        out << res.output;
    } else {
        std::cout << res.output;
    }
    return res.exit_code;
}

bool parse_range(const std::string& spec, double& from, double& to, int& steps) {
    auto p1 = spec.find(':');
    auto p2 = spec.find(':', p1 == std::string::npos ? p1 : p1 + 1);
    if (p1 == std::string::npos || p2 == std::string::npos) return false;
    try {
        from = std::stod(spec.substr(0, p1));
        to = std::stod(spec.substr(p1 + 1, p2 - p1 - 1));
        steps = std::stoi(spec.substr(p2 + 1));
    } catch (const std::exception&) {
        return false;
    }
    return true;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"KMS-state analysis of finite-rank transfer systems over graph monoids"};
    app.require_subcommand(1);

    CommonArgs args;
    std::string range_spec;
    int atoms_length = 12;
    std::string example_name;

    auto* check = app.add_subcommand("check", "subinvariance check at one temperature");
    add_model_options(check, &args, true);
    check->add_option("--beta", args.beta, "inverse temperature")->required();

    auto* wold_cmd = app.add_subcommand("wold", "finite/infinite decomposition of a trace");
    add_model_options(wold_cmd, &args, true);
    wold_cmd->add_option("--beta", args.beta, "inverse temperature")->required();

    auto* critical = app.add_subcommand("critical", "critical inverse temperature and witness");
    add_model_options(critical, &args, false);

    auto* sweep = app.add_subcommand("sweep", "per-temperature diagnostics as CSV");
    add_model_options(sweep, &args, true);
    sweep->add_option("--beta-range", range_spec, "A:B:N, N grid points from A to B")->required();

    auto* decompose = app.add_subcommand("decompose", "per-coordinate components on a complete graph");
    add_model_options(decompose, &args, true);
    decompose->add_option("--beta", args.beta, "inverse temperature")->required();

    auto* atoms = app.add_subcommand("atoms", "atomic measure weights up to a word length");
    add_model_options(atoms, &args, true);
    atoms->add_option("--beta", args.beta, "inverse temperature")->required();
    atoms->add_option("--length", atoms_length, "maximal word length (default 12)");

    auto* verify = app.add_subcommand("verify-example", "built-in model family checks");
    verify->add_option("name", example_name, "optimal|kgraph|blrs")->required();
    verify->add_option("--out", args.out_path, "write the report to a file instead of stdout");

    CLI11_PARSE(app, argc, argv);

    try {
        if (verify->parsed()) return emit(artinkms::run_verify_example(example_name), args);

        artinkms::LoadedModel model = artinkms::load_model(args.model_path);
        artinkms::Tolerances opts = make_opts(args);

        if (check->parsed()) {
            auto tau = pick_trace(model, args);
            return emit(artinkms::run_check(model, tau, args.beta, explicit_tol(args), opts), args);
        }
        if (wold_cmd->parsed()) {
            auto tau = pick_trace(model, args);
            return emit(artinkms::run_wold(model, tau, args.beta, opts), args);
        }
        if (critical->parsed()) return emit(artinkms::run_critical(model, opts), args);
        if (sweep->parsed()) {
            double from = 0, to = 0;
            int steps = 0;
            if (!parse_range(range_spec, from, to, steps)) {
                std::cerr << "error: --beta-range expects A:B:N\n";
                return 2;
            }
            auto tau = pick_trace(model, args);
            artinkms::CommandResult res =
                artinkms::run_sweep(model, tau, from, to, steps, opts);
            if (args.format == "json") {
                artinkms::Json j;
                j["command"] = "sweep";
                j["csv"] = res.output;
                res.output = j.dump(2) + "\n";
            }
            return emit(res, args);
        }
        if (decompose->parsed()) {
            auto tau = pick_trace(model, args);
            return emit(artinkms::run_decompose(model, tau, args.beta, opts), args);
        }
        if (atoms->parsed()) {
            auto tau = pick_trace(model, args);
            return emit(artinkms::run_atoms(model, tau, args.beta, atoms_length, opts), args);
        }
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return 2;
    }
    std::cerr << "error: no command\n";
    return 2;
}
