#include "derivmine/core/clock.hpp"

#include <algorithm>
#include <cstdio>
#include <ctime>
#include <thread>

namespace derivmine {

std::string format_timestamp(TimePoint t) {
  using namespace std::chrono;
  const auto ms = duration_cast<milliseconds>(t.time_since_epoch()).count();
  std::time_t secs = static_cast<std::time_t>(ms / 1000);
  std::tm tm{};
  gmtime_r(&secs, &tm);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", tm.tm_year + 1900, tm.tm_mon + 1, tm.tm_mday,
                tm.tm_hour, tm.tm_min, tm.tm_sec, static_cast<int>(ms % 1000));
  return buf;
}

void SystemClock::sleep_for(std::chrono::milliseconds d, const CancelToken* cancel) {
  using namespace std::chrono;
  const auto until = steady_clock::now() + d;
  while (steady_clock::now() < until) {
    if (cancel && cancel->cancelled()) return;
    std::this_thread::sleep_for(std::min<steady_clock::duration>(milliseconds{50}, until - steady_clock::now()));
  }
}

}  // namespace derivmine
