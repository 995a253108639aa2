#include <doctest.h>

#include "derivmine/core/clock.hpp"
#include "derivmine/core/date.hpp"
#include "derivmine/core/error.hpp"
#include "derivmine/core/files.hpp"
#include "derivmine/core/hash.hpp"
#include "derivmine/core/utf8.hpp"
#include "support/support.hpp"

using namespace derivmine;

TEST_CASE("dates parse strictly and order chronologically") {
  const auto d = Date::parse("2024-02-29");
  REQUIRE(d);
  CHECK(d->to_string() == "2024-02-29");
  CHECK_FALSE(Date::parse("2023-02-29"));
  CHECK_FALSE(Date::parse("2024-13-01"));
  CHECK_FALSE(Date::parse("2024-1-01"));
  CHECK_FALSE(Date::parse(""));
  CHECK(*Date::parse("2023-05-01") < *Date::parse("2023-05-02"));
  CHECK(*Date::parse("2023-12-31") < *Date::parse("2024-01-01"));
}

TEST_CASE("error text carries the error name") {
  const Error e(Errc::VersionConflict, "stale");
  CHECK(e.name() == "VersionConflict");
  CHECK(std::string(e.what()).find("VersionConflict") != std::string::npos);
  CHECK(errc_name(Errc::ExhaustedRetries) == "ExhaustedRetries");
}

TEST_CASE("manual clock only moves when told") {
  ManualClock clock;
  const auto t0 = clock.now();
  clock.sleep_for(std::chrono::milliseconds(1500));
  CHECK(clock.now() - t0 == std::chrono::milliseconds(1500));
  CHECK(format_timestamp(TimePoint{std::chrono::milliseconds(1700000000123)}) == "2023-11-14T22:13:20.123Z");
}

TEST_CASE("utf8 decoding replaces malformed bytes") {
  std::size_t pos = 0;
  const std::string s = "\xce\xb1x\xff";
  CHECK(utf8::next(s, pos) == U'α');
  CHECK(utf8::next(s, pos) == U'x');
  CHECK(utf8::next(s, pos) == utf8::kReplacement);
  CHECK(pos == s.size());
  CHECK(utf8::valid("plain \xe2\x88\x91"));
  CHECK_FALSE(utf8::valid("\xc3"));
}

TEST_CASE("file helpers") {
  dmtest::TempDir dir;
  const auto p = dir / "a/b.jsonl";
  std::filesystem::create_directories(p.parent_path());
  write_file_atomic(p, "{\"x\":1}\n\n{\"x\":2}\n");
  const auto rows = read_jsonl(p);
  REQUIRE(rows.size() == 2);
  CHECK(rows[1]["x"] == 2);
  append_line(p, "not json");
  CHECK_THROWS_AS(read_jsonl(p), Error);
  CHECK_THROWS_AS(read_file(dir / "missing"), Error);

  CHECK(safe_file_stem("dpo:e4:q1") == "dpo%3ae4%3aq1");
  CHECK(safe_file_stem("plain-name_1.v2") == "plain-name_1.v2");
  CHECK(safe_file_stem("../up") != "../up");
}

TEST_CASE("hash is stable") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(hex64(fnv1a64("a")) == "af63dc4c8601ec8c");
  CHECK(content_hash("abc") == content_hash("abc"));
  CHECK(content_hash("abc") != content_hash("abd"));
}
