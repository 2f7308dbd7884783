#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "diffsw/dyncore.hpp"
#include "diffsw/errors.hpp"

namespace diffsw::io {

// Snapshot layout, all integers and reals little-endian:
//   "DOSN"  u32 version  u32 nx  u32 ny  u32 nfields
//   nfields x (u16 length, name bytes)
//   f64 time
//   nfields x (nx * ny f64, row-major)
// The fields are u, v, eta, T in that order.

inline constexpr std::uint32_t kSnapshotVersion = 1;

class SnapshotError : public Error {
 public:
  using Error::Error;
  const char* category() const noexcept override { return "snapshot"; }
};

class BadMagic : public SnapshotError {
 public:
  using SnapshotError::SnapshotError;
  const char* category() const noexcept override { return "snapshot-magic"; }
};

class VersionMismatch : public SnapshotError {
 public:
  using SnapshotError::SnapshotError;
  const char* category() const noexcept override { return "snapshot-version"; }
};

class TruncatedSnapshot : public SnapshotError {
 public:
  TruncatedSnapshot(const std::string& what, std::uint64_t expected, std::uint64_t found)
      : SnapshotError(what), expected_(expected), found_(found) {}
  std::uint64_t expected_bytes() const noexcept { return expected_; }
  std::uint64_t found_bytes() const noexcept { return found_; }
  const char* category() const noexcept override { return "snapshot-truncated"; }

 private:
  std::uint64_t expected_;
  std::uint64_t found_;
};

class SnapshotShapeMismatch : public SnapshotError {
 public:
  using SnapshotError::SnapshotError;
  const char* category() const noexcept override { return "snapshot-shape"; }
};

std::string encode_snapshot(const ModelState& s);
ModelState decode_snapshot(const std::string& bytes);

/// Refuses to replace an existing file.
void write_snapshot(const ModelState& s, const std::filesystem::path& path);
ModelState read_snapshot(const std::filesystem::path& path);
/// As above, and throws SnapshotShapeMismatch unless the header matches `g`.
ModelState read_snapshot(const std::filesystem::path& path, const GridSpec& g);

}  // namespace diffsw::io
