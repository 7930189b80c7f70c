#include "btc/cli.hpp"

int main(int argc, char** argv) { return btc::cli::run(argc, argv); }
