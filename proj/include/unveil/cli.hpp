#pragma once

namespace unveil {

// Full command-line surface: synth, reconstruct, unveil, render, eval.
// Returns the process exit code; never throws.
int cli_main(int argc, const char* const* argv);

}  // namespace unveil
