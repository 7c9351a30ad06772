#include "macbound/cli.hpp"

#include <string>
#include <vector>

int main(int argc, char** argv) { return macbound::parse_and_dispatch(std::vector<std::string>(argv, argv + argc)); }
