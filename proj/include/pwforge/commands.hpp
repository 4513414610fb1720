#pragma once

#include <string>

namespace pwforge {

// CLI entry points; each returns a process exit code:
//   0 success, 2 config/precondition, 3 I/O or format, 4 numerical invariant.

struct GenWaveArgs {
    std::string config_path;
    int lambda_override = 0;  // 0: use the config value
    std::string output_dir;   // empty: use the config value
};

struct RunArgs {
    std::string config_path;
    std::int64_t seed_override = -1;
    std::string output_dir;
};

struct CheckArgs {
    std::string config_path;
    std::string v_path;
    std::string U_path;  // optional
    std::string q_path;  // optional
    bool strict = false;
};

struct ExportCsvArgs {
    std::string field_path;
    std::string csv_path;  // empty: field path + ".csv"
};

int cmd_gen_wave(const GenWaveArgs& args);
int cmd_run(const RunArgs& args);
int cmd_check(const CheckArgs& args);
int cmd_export_csv(const ExportCsvArgs& args);

}  // namespace pwforge
