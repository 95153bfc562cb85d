#include "cli_app.hpp"

int main(int argc, char** argv) { return tikreg::cli::run(argc, argv); }
