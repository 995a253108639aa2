#include "derivmine/corpus/bundle.hpp"

#include <algorithm>
#include <array>
#include <cstring>

#include <zlib.h>

#include "derivmine/core/error.hpp"
#include "derivmine/core/files.hpp"
#include "derivmine/core/utf8.hpp"

namespace derivmine::corpus {

namespace fs = std::filesystem;

bool is_source_extension(const fs::path& p) {
  static const std::array<std::string, 5> kExt{".tex", ".ltx", ".txt", ".bbl", ".md"};
  auto ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return std::find(kExt.begin(), kExt.end(), ext) != kExt.end();
}

namespace {

bool is_archive(const fs::path& p) {
  const auto name = p.filename().string();
  auto ends_with = [&](std::string_view suf) {
    return name.size() >= suf.size() && name.compare(name.size() - suf.size(), suf.size(), suf) == 0;
  };
  return ends_with(".tar.gz") || ends_with(".tgz");
}

std::string gunzip_file(const fs::path& p) {
  gzFile gz = gzopen(p.string().c_str(), "rb");
  if (!gz) throw Error(Errc::IoError, "cannot open archive " + p.string());
  std::string out;
  std::array<char, 1 << 16> buf{};
  int n = 0;
  while ((n = gzread(gz, buf.data(), static_cast<unsigned>(buf.size()))) > 0) out.append(buf.data(), n);
  int err = 0;
  const char* msg = gzerror(gz, &err);
  const std::string message = msg ? msg : "";
  gzclose(gz);
  if (n < 0 || (err != Z_OK && err != Z_STREAM_END))
    throw Error(Errc::IoError, "corrupt archive " + p.string() + ": " + message);
  return out;
}

std::uint64_t parse_octal(const char* field, std::size_t len) {
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < len && field[i]; ++i) {
    if (field[i] == ' ') continue;
    if (field[i] < '0' || field[i] > '7') break;
    v = v * 8 + static_cast<std::uint64_t>(field[i] - '0');
  }
  return v;
}

std::string cstr(const char* field, std::size_t len) { return std::string(field, strnlen(field, len)); }

std::string normalize_member(std::string name) {
  while (name.starts_with("./")) name.erase(0, 2);
  return name;
}

// Minimal ustar/GNU tar reader: regular files and GNU long names.
std::vector<SourceFile> read_tar(const std::string& data) {
  std::vector<SourceFile> files;
  std::size_t off = 0;
  std::string long_name;
  while (off + 512 <= data.size()) {
    const char* h = data.data() + off;
    if (std::all_of(h, h + 512, [](char c) { return c == 0; })) break;
    const auto size = parse_octal(h + 124, 12);
    const char type = h[156];
    std::string name = cstr(h, 100);
    if (std::memcmp(h + 257, "ustar", 5) == 0) {
      const auto prefix = cstr(h + 345, 155);
      if (!prefix.empty()) name = prefix + "/" + name;
    }
    off += 512;
    if (off + size > data.size()) throw Error(Errc::IoError, "truncated tar member " + name);
    if (type == 'L') {
      long_name = cstr(data.data() + off, size);
    } else {
      if (!long_name.empty()) {
        name = long_name;
        long_name.clear();
      }
      if ((type == '0' || type == '\0') && is_source_extension(name)) {
        files.push_back({normalize_member(name), data.substr(off, size)});
      }
    }
    off += (size + 511) / 512 * 512;
  }
  return files;
}

std::vector<SourceFile> read_directory(const fs::path& root) {
  std::vector<SourceFile> files;
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (!entry.is_regular_file() || !is_source_extension(entry.path())) continue;
    files.push_back({fs::relative(entry.path(), root).generic_string(), read_file(entry.path())});
  }
  return files;
}

}  // namespace

std::vector<SourceFile> load_bundle(const fs::path& bundle) {
  std::vector<SourceFile> files;
  if (fs::is_directory(bundle)) {
    files = read_directory(bundle);
  } else if (fs::is_regular_file(bundle) && is_archive(bundle)) {
    files = read_tar(gunzip_file(bundle));
  } else if (fs::is_regular_file(bundle) && is_source_extension(bundle)) {
    files.push_back({bundle.filename().string(), read_file(bundle)});
  } else if (!fs::exists(bundle)) {
    throw Error(Errc::EmptyBundle, "bundle does not exist: " + bundle.string());
  }
  std::erase_if(files, [](const SourceFile& f) { return !utf8::valid(f.text); });
  std::sort(files.begin(), files.end(), [](const SourceFile& a, const SourceFile& b) { return a.path < b.path; });
  if (files.empty()) throw Error(Errc::EmptyBundle, "no readable text sources in " + bundle.string());
  return files;
}

}  // namespace derivmine::corpus
