#include "dinr/app/commands.hpp"

int main(int argc, char** argv) { return dinr::app::run_cli(argc, argv); }
