#include <csignal>
#include <iostream>

#include "derivmine/cli/dispatch.hpp"

namespace {

derivmine::CancelToken g_cancel;

extern "C" void on_signal(int) { g_cancel.cancel(); }

}  // namespace

int main(int argc, char** argv) {
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  derivmine::SystemClock clock;
  derivmine::cli::Context ctx{std::cout, std::cerr, clock, &g_cancel, {}, {}};
  return derivmine::cli::dispatch({argv + 1, argv + argc}, ctx);
}
