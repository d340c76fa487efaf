#define DOCTEST_CONFIG_IMPLEMENT
#include <doctest.h>

#include "dtsurv/error.hpp"

int main(int argc, char** argv) {
  dtsurv::set_warnings_enabled(false);
  doctest::Context context;
  context.applyCommandLine(argc, argv);
  return context.run();
}
