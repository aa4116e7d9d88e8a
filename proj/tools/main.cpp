#include "cli_app.hpp"

int main(int argc, char** argv) { return cwpolar::cli::run(argc, argv); }
