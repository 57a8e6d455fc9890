#include "nse_mdp/cli.hpp"

int main(int argc, char** argv) { return nse_mdp::cli_dispatch(argc, argv); }
