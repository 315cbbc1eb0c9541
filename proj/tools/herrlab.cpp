// herrlab: exact Galois/Iwasawa cohomology of (phi, Gamma)-modules on
// finite truncations, with stabilization detection.
//
// Exit codes: 0 pass/stabilized, 1 usage or configuration error,
// 2 not stabilized, 3 mathematical mismatch (duality/lemma violation).

#include <cstdio>
#include <cstdlib>
#include <iostream>

#include "CLI11.hpp"
#include "herrlab/selftest.hpp"

using namespace herrlab;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitNotStabilized = 2;
constexpr int kExitMismatch = 3;

struct CommonArgs {
    std::string config_path;
    std::string builtin;
    int m = 1;
    std::string out_path;
    int workers = 0;  // 0: take from config
};

PipelineSpec load_spec(const CommonArgs& args) {
    PipelineSpec spec;
    if (!args.config_path.empty()) {
        RawConfig raw = parse_raw_config_file(args.config_path);
        spec = interpret_config(raw);
    } else if (!args.builtin.empty()) {
        spec.builtin = args.builtin;
        spec.m = args.m;
        bool known = false;
        for (const auto& n : builtin_names())
            if (n == spec.builtin) known = true;
        if (!known) throw ValidationError("unknown builtin '" + spec.builtin + "'");
        if (spec.builtin == "ramified-Q3sqrt3-trivial") spec.schedule = stretch_schedule_ramified();
        RawConfig pseudo;
        pseudo.sections["builtin"]["name"] = ConfigEntry{spec.builtin, 0};
        pseudo.sections["builtin"]["m"] = ConfigEntry{std::to_string(spec.m), 0};
        spec.hash = config_hash(pseudo);
    } else {
        throw ValidationError("either --config or --builtin is required");
    }
    if (args.workers > 0) spec.workers = args.workers;
    if (const char* cap = std::getenv("HERRLAB_MAX_CELLS")) spec.max_cells = std::atoll(cap);
    return spec;
}

PipelineOptions options_of(const PipelineSpec& spec) {
    PipelineOptions opt;
    opt.window = spec.window;
    opt.workers = spec.workers;
    opt.max_cells = spec.max_cells;
    opt.hk_diagnostic = spec.hk_diagnostic;
    return opt;
}

int run_herr_cmd(const CommonArgs& args, PipeVariant variant) {
    PipelineSpec spec = load_spec(args);
    AssembledModule am = assemble_spec(spec);
    auto t0 = std::chrono::steady_clock::now();
    CohomologyReport rep = run_herr(am.mod, variant, am.schedule, options_of(spec));
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    nlohmann::json j = report_json(am.ctx.zm(), rep, spec.hash);
    if (!args.out_path.empty()) emit_report(j, args.out_path);
    std::cout << j.dump(1, ' ') << std::endl;
    std::fprintf(stderr, "[herrlab] %s on %s: %s in %.2fs\n", rep.variant.c_str(),
                 am.name.c_str(), rep.stabilized ? "stabilized" : "NOT stabilized", secs);
    return rep.stabilized ? kExitOk : kExitNotStabilized;
}

int run_iwasawa_cmd(const CommonArgs& args) {
    PipelineSpec spec = load_spec(args);
    AssembledModule am = assemble_spec(spec);
    if (am.phi.kind != FrobKind::cyclotomic && am.mod.twist_tag.find("tau") == std::string::npos)
        std::fprintf(stderr,
                     "[herrlab] warning: non-cyclotomic base without an explicit tau twist tag; "
                     "the operator acts on the untwisted module as configured\n");
    IwasawaReport rep = iwasawa_sequence(am.mod, am.schedule, options_of(spec));
    nlohmann::json j = iwasawa_json(am.ctx.zm(), rep, spec.hash);
    if (!args.out_path.empty()) emit_report(j, args.out_path);
    std::cout << j.dump(1, ' ') << std::endl;
    bool stab = rep.ker_kind != MLKind::NotStabilized && rep.coker_kind != MLKind::NotStabilized;
    return stab ? kExitOk : kExitNotStabilized;
}

int run_lemmas_cmd(const CommonArgs& args) {
    PipelineSpec spec = load_spec(args);
    AssembledModule am = assemble_spec(spec);
    try {
        LemmaReport rep = verify_exactness_lemmas(am.ctx, am.phi, spec.lemma_n_max,
                                                  std::min(spec.lemma_N_max, 80));
        nlohmann::json j = lemma_json(am.ctx.zm(), rep, spec.hash);
        if (!args.out_path.empty()) emit_report(j, args.out_path);
        std::cout << j.dump(1, ' ') << std::endl;
        return kExitOk;
    } catch (const LemmaViolation& e) {
        std::fprintf(stderr, "[herrlab] lemma violation: %s\n", e.what());
        return kExitMismatch;
    }
}

int run_duality_cmd(const CommonArgs& a, const CommonArgs& b) {
    PipelineSpec sa = load_spec(a);
    PipelineSpec sb = load_spec(b);
    AssembledModule ma = assemble_spec(sa);
    AssembledModule mb = assemble_spec(sb);
    try {
        DualityReport rep = duality_check(ma.mod, mb.mod, ma.schedule, options_of(sa));
        nlohmann::json j = duality_json(ma.ctx.zm(), rep, sa.hash);
        if (!a.out_path.empty()) emit_report(j, a.out_path);
        std::cout << j.dump(1, ' ') << std::endl;
        return kExitOk;
    } catch (const NotStabilizedError& e) {
        std::fprintf(stderr, "[herrlab] %s\n", e.what());
        return kExitNotStabilized;
    } catch (const DualityMismatch& e) {
        std::fprintf(stderr, "[herrlab] duality mismatch: %s\n", e.what());
        return kExitMismatch;
    }
}

int run_selftest_cmd(const std::string& out_path) {
    SelftestOutcome out = run_selftest();
    for (const auto& c : out.criteria)
        std::printf("%-24s %s%s %s\n", c.name.c_str(), c.pass ? "PASS" : "FAIL",
                    c.blocking ? "" : " (non-blocking)", c.detail.c_str());
    if (!out_path.empty()) emit_report(out.report, out_path);
    return out.all_blocking_pass ? kExitOk : kExitMismatch;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"exact cohomology of (phi, Gamma)-modules on finite truncations"};
    app.require_subcommand(1);

    CommonArgs args, args_b;
    std::string selftest_out;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", args.config_path, "configuration file");
        cmd->add_option("--builtin", args.builtin, "builtin module name");
        cmd->add_option("--m", args.m, "pi-precision level for --builtin");
        cmd->add_option("--out", args.out_path, "report output path");
        cmd->add_option("--workers", args.workers, "worker pool size override");
    };

    CLI::App* phi = app.add_subcommand("herr-phi", "phi-Herr cohomology with stabilization");
    add_common(phi);
    CLI::App* psi = app.add_subcommand("herr-psi", "psi-Herr cohomology with stabilization");
    add_common(psi);
    CLI::App* iwa = app.add_subcommand("iwasawa", "kernel/cokernel of (psi - 1) diagnostics");
    add_common(iwa);
    CLI::App* lem = app.add_subcommand("verify-lemmas", "Frobenius exactness lemma suite");
    add_common(lem);
    CLI::App* dua = app.add_subcommand("duality", "order duality between two runs");
    add_common(dua);
    dua->add_option("--config-b", args_b.config_path, "second module configuration");
    dua->add_option("--builtin-b", args_b.builtin, "second builtin name");
    dua->add_option("--m-b", args_b.m, "pi-precision level for --builtin-b");
    CLI::App* self = app.add_subcommand("selftest", "run the acceptance suite");
    self->add_option("--out", selftest_out, "selftest report output path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (phi->parsed()) return run_herr_cmd(args, PipeVariant::PhiHerr);
        if (psi->parsed()) return run_herr_cmd(args, PipeVariant::PsiHerr);
        if (iwa->parsed()) return run_iwasawa_cmd(args);
        if (lem->parsed()) return run_lemmas_cmd(args);
        if (dua->parsed()) return run_duality_cmd(args, args_b);
        if (self->parsed()) return run_selftest_cmd(selftest_out);
    } catch (const ParseError& e) {
        std::fprintf(stderr, "[herrlab] %s\n", e.what());
        return kExitUsage;
    } catch (const ValidationError& e) {
        std::fprintf(stderr, "[herrlab] %s\n", e.what());
        return kExitUsage;
    } catch (const IOError& e) {
        std::fprintf(stderr, "[herrlab] %s\n", e.what());
        return kExitUsage;
    } catch (const DualityMismatch& e) {
        std::fprintf(stderr, "[herrlab] %s\n", e.what());
        return kExitMismatch;
    } catch (const LemmaViolation& e) {
        std::fprintf(stderr, "[herrlab] %s\n", e.what());
        return kExitMismatch;
    } catch (const NotStabilizedError& e) {
        std::fprintf(stderr, "[herrlab] %s\n", e.what());
        return kExitNotStabilized;
    } catch (const Error& e) {
        std::fprintf(stderr, "[herrlab] error: %s\n", e.what());
        return kExitUsage;
    }
    return kExitUsage;
}
