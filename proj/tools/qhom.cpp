#include "cli_app.hpp"

int main(int argc, char** argv) { return qhom::cli::run(argc, argv); }
