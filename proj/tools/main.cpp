#include "tlpvol/cli.hpp"

int main(int argc, char** argv) { return tlpvol::dispatch(argc, argv); }
