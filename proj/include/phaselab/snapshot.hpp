#pragma once

#include <cstdint>
#include <string>

#include "phaselab/grid_field.hpp"

namespace phaselab {

/// Channel layout of a .fld snapshot.
enum class SnapshotKind : std::uint32_t { Field = 0, Polar = 1 };

/// .fld layout: 64-byte little-endian header
///   0 "PLFD", 4 u16 version, 6 u8 n, 7 u8 m, 8 u32 shape[3], 20 f64 h,
///   28 f64 origin[3], 52 u32 kind, 56 u64 reserved
/// followed by the node values (m doubles per node) and one mask byte per node.
inline constexpr std::uint16_t kSnapshotVersion = 1;

void write_snapshot(const std::string& path, const Field& f, SnapshotKind kind = SnapshotKind::Field);
/// Throws FormatError on a malformed file; std::runtime_error if unreadable.
Field read_snapshot(const std::string& path, SnapshotKind* kind = nullptr);

std::string encode_snapshot(const Field& f, SnapshotKind kind = SnapshotKind::Field);
Field decode_snapshot(const std::string& bytes, SnapshotKind* kind = nullptr);

}  // namespace phaselab
