#include <CLI11.hpp>

#include "pwforge/commands.hpp"

int main(int argc, char** argv) {
    CLI::App app{"pwforge: localized plane-wave construction and covering iteration "
                 "for stationary incompressible flows with a linear source term"};
    app.require_subcommand(1);

    pwforge::GenWaveArgs gw;
    auto* gen = app.add_subcommand("gen-wave", "build one localized wave from a config");
    gen->add_option("config", gw.config_path, "configuration file")->required();
    gen->add_option("--lambda", gw.lambda_override, "override wave.lambda");
    gen->add_option("--output-dir", gw.output_dir, "override output directory");

    pwforge::RunArgs ra;
    auto* run = app.add_subcommand("run", "run the covering/rescaling schedule");
    run->add_option("config", ra.config_path, "configuration file")->required();
    run->add_option("--seed", ra.seed_override, "override the run seed");
    run->add_option("--output-dir", ra.output_dir, "override output directory");

    pwforge::CheckArgs ca;
    auto* chk = app.add_subcommand("check", "verify stored fields against the weak form");
    chk->add_option("config", ca.config_path, "configuration file")->required();
    chk->add_option("v", ca.v_path, "velocity field file")->required();
    chk->add_option("--U", ca.U_path, "matrix field file");
    chk->add_option("--q", ca.q_path, "pressure-like field file");
    chk->add_flag("--strict", ca.strict, "exit 4 when a residual exceeds tolerance");

    pwforge::ExportCsvArgs ea;
    auto* exp = app.add_subcommand("export-csv", "dump a field file as CSV");
    exp->add_option("field", ea.field_path, "field file")->required();
    exp->add_option("--out", ea.csv_path, "CSV output path");

    CLI11_PARSE(app, argc, argv);

    if (gen->parsed()) return pwforge::cmd_gen_wave(gw);
    if (run->parsed()) return pwforge::cmd_run(ra);
    if (chk->parsed()) return pwforge::cmd_check(ca);
    if (exp->parsed()) return pwforge::cmd_export_csv(ea);
    return 1;
}
