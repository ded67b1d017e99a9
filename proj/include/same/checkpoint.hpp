#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "same/model.hpp"

namespace same {

/// Text checkpoint, version 1:
///
///   SAME-CHECKPOINT 1
///   meta <key> <value>                       zero or more, value runs to end of line
///   dims <in> <hidden> <layers> <nc> <gc> <final_normalize 0|1>
///   param <name> <group> <rows> <cols>       followed by <rows> lines of
///   <v> <v> ...                              hex-float values (%a), row-major
///   checksum <16 hex digits>                 FNV-1a 64 of every preceding byte
///
/// Hex floats make the round trip bit-exact.
struct Checkpoint {
  ModelParams model;
  std::map<std::string, std::string> meta;
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
/// Throws FormatError when unreadable and IntegrityError on checksum or
/// structure mismatch.
Checkpoint load_checkpoint(const std::filesystem::path& path);

std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace same
