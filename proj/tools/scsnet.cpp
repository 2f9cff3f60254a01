#include <iostream>

#include "scs/app.hpp"

int main(int argc, char** argv) { return scs::app::run_cli(argc, argv, std::cout, std::cerr); }
