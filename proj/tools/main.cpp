#include <malloc.h>

#include "sobolmat/cli.hpp"

int main(int argc, char** argv) {
  // N x N kernel products at N = 2048 sit exactly at glibc's largest dynamic
  // mmap threshold; without this every temporary is a fresh mapping.
  mallopt(M_MMAP_THRESHOLD, 1 << 30);
  mallopt(M_TRIM_THRESHOLD, 1 << 30);
  return sobolmat::cli_main(argc, argv);
}
