#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "wavelab/radial_core.hpp"

namespace wavelab {

/// Two columns "r,value", one row per node, values printed with 17 significant digits.
void write_csv(const std::filesystem::path& path, const Field& f);
Field read_csv(const std::filesystem::path& path);

/// Column-oriented table; every column must have the same length.
struct Table {
  std::vector<std::string> names;
  std::vector<std::vector<double>> columns;

  void add(std::string name, std::vector<double> column);
};

void write_csv(const std::filesystem::path& path, const Table& table);

/// Binary frames: header (u64 n, f64 r_max, f64 dt, u64 frame count) then for each frame
/// the time followed by n + 1 values, all little-endian.
void write_snapshots(const std::filesystem::path& path, const SpaceTimeField& s, double dt);

struct SnapshotFile {
  SpaceTimeField frames;
  double dt = 0.0;
};

SnapshotFile read_snapshots(const std::filesystem::path& path);

/// Writes to a sibling temporary and renames it into place.
void write_atomic(const std::filesystem::path& path, const std::string& contents);

}  // namespace wavelab
