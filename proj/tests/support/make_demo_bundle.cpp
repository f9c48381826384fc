#include <iostream>

#include "synthetic.hpp"

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: make_demo_bundle <output-dir>\n";
    return 2;
  }
  synthetic::write_demo_bundle(argv[1]);
  return 0;
}
