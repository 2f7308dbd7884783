#include "diffsw/io/snapshot.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

namespace diffsw::io {

namespace {

constexpr std::array<char, 4> kMagic = {'D', 'O', 'S', 'N'};
constexpr std::array<std::pair<const char*, Stagger>, 4> kFields = {
    {{"u", Stagger::u_face}, {"v", Stagger::v_face}, {"eta", Stagger::center},
     {"T", Stagger::center}}};

template <class U>
void put(std::string& out, U x) {
  for (std::size_t b = 0; b < sizeof(U); ++b) {
    out.push_back(static_cast<char>((x >> (8 * b)) & 0xff));
  }
}

void put_f64(std::string& out, double x) { put(out, std::bit_cast<std::uint64_t>(x)); }

class Cursor {
 public:
  explicit Cursor(const std::string& bytes) : bytes_(bytes) {}

  template <class U>
  U get(std::uint64_t expected_total) {
    need(sizeof(U), expected_total);
    U x = 0;
    for (std::size_t b = 0; b < sizeof(U); ++b) {
      x |= static_cast<U>(static_cast<unsigned char>(bytes_[pos_ + b])) << (8 * b);
    }
    pos_ += sizeof(U);
    return x;
  }

  double get_f64(std::uint64_t expected_total) {
    return std::bit_cast<double>(get<std::uint64_t>(expected_total));
  }

  std::string get_bytes(std::size_t n, std::uint64_t expected_total) {
    need(n, expected_total);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  std::size_t pos() const noexcept { return pos_; }

 private:
  void need(std::size_t n, std::uint64_t expected_total) const {
    if (pos_ + n > bytes_.size()) {
      const std::uint64_t expected = std::max<std::uint64_t>(expected_total, pos_ + n);
      throw TruncatedSnapshot("truncated snapshot: expected " + std::to_string(expected) +
                                  " bytes, found " + std::to_string(bytes_.size()),
                              expected, bytes_.size());
    }
  }

  const std::string& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string encode_snapshot(const ModelState& s) {
  const Field* fields[] = {&s.u, &s.v, &s.eta, &s.T};
  const int nx = s.u.nx();
  const int ny = s.u.ny();
  for (const Field* f : fields) {
    if (f->nx() != nx || f->ny() != ny) throw ShapeMismatch("snapshot: fields differ in shape");
  }
  std::string out(kMagic.begin(), kMagic.end());
  put(out, kSnapshotVersion);
  put(out, static_cast<std::uint32_t>(nx));
  put(out, static_cast<std::uint32_t>(ny));
  put(out, static_cast<std::uint32_t>(kFields.size()));
  for (const auto& [name, stagger] : kFields) {
    const std::size_t len = std::strlen(name);
    put(out, static_cast<std::uint16_t>(len));
    out.append(name, len);
  }
  put_f64(out, s.time);
  for (const Field* f : fields) {
    for (double x : f->values()) put_f64(out, x);
  }
  return out;
}

ModelState decode_snapshot(const std::string& bytes) {
  if (bytes.size() < kMagic.size() ||
      !std::equal(kMagic.begin(), kMagic.end(), bytes.begin())) {
    throw BadMagic("not a snapshot: bad magic bytes '" + bytes.substr(0, 4) + "'");
  }
  Cursor c(bytes);
  (void)c.get_bytes(4, 0);
  const auto version = c.get<std::uint32_t>(0);
  if (version != kSnapshotVersion) {
    throw VersionMismatch("snapshot format version " + std::to_string(version) +
                          " is not supported (expected " + std::to_string(kSnapshotVersion) +
                          ")");
  }
  const auto nx = c.get<std::uint32_t>(0);
  const auto ny = c.get<std::uint32_t>(0);
  const auto nfields = c.get<std::uint32_t>(0);
  if (nfields != kFields.size()) {
    throw SnapshotError("snapshot has " + std::to_string(nfields) + " fields, expected " +
                        std::to_string(kFields.size()));
  }
  for (const auto& [name, stagger] : kFields) {
    const auto len = c.get<std::uint16_t>(0);
    const std::string got = c.get_bytes(len, 0);
    if (got != name) {
      throw SnapshotError("snapshot field '" + got + "' where '" + name + "' was expected");
    }
  }
  const std::uint64_t payload = 8ull * nx * ny * nfields;
  const std::uint64_t expected = c.pos() + 8 + payload;
  if (bytes.size() > expected) {
    throw SnapshotError("snapshot has " + std::to_string(bytes.size() - expected) +
                        " trailing bytes");
  }
  ModelState s;
  s.time = c.get_f64(expected);
  Field* fields[] = {&s.u, &s.v, &s.eta, &s.T};
  for (std::size_t k = 0; k < kFields.size(); ++k) {
    Field f(static_cast<int>(nx), static_cast<int>(ny), kFields[k].second);
    for (double& x : f.values()) x = c.get_f64(expected);
    *fields[k] = std::move(f);
  }
  return s;
}

void write_snapshot(const ModelState& s, const std::filesystem::path& path) {
  if (std::filesystem::exists(path)) {
    throw SnapshotError("refusing to overwrite existing snapshot " + path.string());
  }
  const std::string bytes = encode_snapshot(s);
  std::ofstream out(path, std::ios::binary);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw SnapshotError("failed to write snapshot " + path.string());
}

ModelState read_snapshot(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SnapshotError("cannot open snapshot " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return decode_snapshot(buf.str());
}

ModelState read_snapshot(const std::filesystem::path& path, const GridSpec& g) {
  ModelState s = read_snapshot(path);
  if (s.u.nx() != g.nx || s.u.ny() != g.ny) {
    throw SnapshotShapeMismatch("snapshot " + path.string() + " is " + std::to_string(s.u.nx()) +
                                "x" + std::to_string(s.u.ny()) + " but the grid is " +
                                std::to_string(g.nx) + "x" + std::to_string(g.ny));
  }
  return s;
}

}  // namespace diffsw::io
