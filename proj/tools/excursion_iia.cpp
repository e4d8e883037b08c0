#include "cli_app.hpp"

int main(int argc, char** argv) { return excursion::cli::run(argc, argv); }
