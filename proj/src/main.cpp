#include "mtnd/pipeline.hpp"

int main(int argc, char** argv) { return mtnd::run_cli(argc, argv); }
