#include "glckpt/cli.hpp"

int main(int argc, char** argv) { return glckpt::cli::run_cli(argc, argv); }
