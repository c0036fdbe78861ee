#include <iostream>

#include "meshfeat/cli.hpp"

int main(int argc, char** argv) { return meshfeat::run(argc, argv, std::cout, std::cerr); }
