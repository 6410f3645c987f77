#pragma once

namespace sobolmat {

/// Runs one subcommand (truth, sample, fit, gsa, bench, report).
/// Returns 0 on success, 1 on a usage or input error, 2 on numerical failure.
int cli_main(int argc, char** argv);

}  // namespace sobolmat
