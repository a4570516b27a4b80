#include "wavelab/io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "wavelab/errors.hpp"

namespace wavelab {

namespace {

std::ofstream open_out(const std::filesystem::path& path, std::ios::openmode mode = std::ios::out) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, mode | std::ios::trunc);
  if (!out) throw ArgumentError("cannot open " + path.string() + " for writing");
  return out;
}

template <class T>
void put(std::ostream& out, T value) {
  static_assert(sizeof(T) == 8);
  auto bits = std::bit_cast<std::uint64_t>(value);
  if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
  char buf[8];
  std::memcpy(buf, &bits, 8);
  out.write(buf, 8);
}

template <class T>
T get(std::istream& in) {
  char buf[8];
  if (!in.read(buf, 8)) throw ArgumentError("truncated snapshot file");
  std::uint64_t bits;
  std::memcpy(&bits, buf, 8);
  if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
  return std::bit_cast<T>(bits);
}

}  // namespace

void write_csv(const std::filesystem::path& path, const Field& f) {
  auto out = open_out(path);
  out << "r,value\n";
  const auto& g = f.grid();
  for (std::size_t j = 0; j < f.size(); ++j) out << fmt::format("{:.17g},{:.17g}\n", g.r(j), f[j]);
}

Field read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ArgumentError("cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  std::vector<double> r, v;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw ArgumentError("malformed CSV row: " + line);
    r.push_back(std::stod(line.substr(0, comma)));
    v.push_back(std::stod(line.substr(comma + 1)));
  }
  if (r.size() < 2) throw ArgumentError("CSV field needs at least two rows");
  RadialGrid g(r.back(), static_cast<int>(r.size() - 1));
  return Field(g, std::move(v));
}

void Table::add(std::string name, std::vector<double> column) {
  if (!columns.empty() && column.size() != columns.front().size())
    throw DimensionError("column " + name + " has the wrong length");
  names.push_back(std::move(name));
  columns.push_back(std::move(column));
}

void write_csv(const std::filesystem::path& path, const Table& table) {
  auto out = open_out(path);
  for (std::size_t c = 0; c < table.names.size(); ++c) out << (c ? "," : "") << table.names[c];
  out << '\n';
  const std::size_t rows = table.columns.empty() ? 0 : table.columns.front().size();
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t c = 0; c < table.columns.size(); ++c)
      out << (c ? "," : "") << fmt::format("{:.17g}", table.columns[c][i]);
    out << '\n';
  }
}

void write_snapshots(const std::filesystem::path& path, const SpaceTimeField& s, double dt) {
  if (s.empty()) throw ArgumentError("no frames to write");
  s.validate();
  auto out = open_out(path, std::ios::out | std::ios::binary);
  const auto& g = s.grid();
  put(out, static_cast<std::uint64_t>(g.cells()));
  put(out, g.r_max());
  put(out, dt);
  put(out, static_cast<std::uint64_t>(s.size()));
  for (std::size_t k = 0; k < s.size(); ++k) {
    put(out, s.times[k]);
    for (double x : s.frames[k].values()) put(out, x);
  }
  if (!out) throw NumericalError("write failed for " + path.string());
}

SnapshotFile read_snapshots(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ArgumentError("cannot open " + path.string());
  const auto n = get<std::uint64_t>(in);
  const double r_max = get<double>(in);
  SnapshotFile file;
  file.dt = get<double>(in);
  const auto count = get<std::uint64_t>(in);
  RadialGrid g(r_max, static_cast<int>(n));
  for (std::uint64_t k = 0; k < count; ++k) {
    const double t = get<double>(in);
    std::vector<double> v(n + 1);
    for (auto& x : v) x = get<double>(in);
    file.frames.push_back(t, Field(g, std::move(v)));
  }
  return file;
}

void write_atomic(const std::filesystem::path& path, const std::string& contents) {
  auto tmp = path;
  tmp += ".partial";
  {
    auto out = open_out(tmp, std::ios::out | std::ios::binary);
    out << contents;
    out.flush();
    if (!out) throw NumericalError("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace wavelab
