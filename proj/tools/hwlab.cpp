#include "hwlab/app.hpp"

int main(int argc, char** argv) { return hwlab::app::main_entry(argc, argv); }
