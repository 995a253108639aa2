#pragma once

#include <filesystem>
#include <vector>

#include "derivmine/corpus/types.hpp"

namespace derivmine::corpus {

// Text sources recognised inside a bundle.
bool is_source_extension(const std::filesystem::path& p);

// Reads a bundle directory (recursively) or a .tar.gz / .tgz archive.
// Returns the readable UTF-8 sources sorted by relative path. Files that are
// not valid UTF-8 are skipped. Throws Error{EmptyBundle} when nothing is left.
std::vector<SourceFile> load_bundle(const std::filesystem::path& bundle);

}  // namespace derivmine::corpus
