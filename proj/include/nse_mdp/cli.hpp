#pragma once

namespace nse_mdp {

/// Entry point of the nse-mdp tool. Returns 0 when every verdict passes,
/// 1 on a failed verdict or a failed computation, 2 on usage or config errors.
int cli_dispatch(int argc, const char* const* argv);

}  // namespace nse_mdp
