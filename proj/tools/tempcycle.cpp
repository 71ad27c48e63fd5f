#include "tempcycle/cli.hpp"

int main(int argc, char** argv) { return tempcycle::parse_and_dispatch(argc, argv); }
