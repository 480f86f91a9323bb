#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include <zlib.h>

#include "latcorr/interp.hpp"

namespace latcorr {

namespace {

static_assert(std::endian::native == std::endian::little,
              "grid files are written with native little-endian stores");

constexpr char kMagic[4] = {'L', 'C', 'G', '1'};

void put_u8(std::string& buf, std::uint8_t v) { buf.push_back(static_cast<char>(v)); }

void put_u32(std::string& buf, std::uint32_t v) {
  char b[4];
  std::memcpy(b, &v, 4);
  buf.append(b, 4);
}

void put_f64(std::string& buf, double v) {
  char b[8];
  std::memcpy(b, &v, 8);
  buf.append(b, 8);
}

std::uint32_t crc_of(const char* data, std::size_t len) {
  uLong crc = crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; grid files are far below 4 GiB.
  crc = crc32(crc, reinterpret_cast<const Bytef*>(data), static_cast<uInt>(len));
  return static_cast<std::uint32_t>(crc);
}

class Reader {
 public:
  explicit Reader(const std::string& buf) : buf_(buf) {}

  std::size_t pos() const { return pos_; }
  std::size_t remaining() const { return buf_.size() - pos_; }

  void need(std::size_t n, const char* what) const {
    if (remaining() < n) throw FormatError(std::string("truncated file while reading ") + what, pos_);
  }
  std::uint8_t u8(const char* what) {
    need(1, what);
    return static_cast<std::uint8_t>(buf_[pos_++]);
  }
  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v;
    std::memcpy(&v, buf_.data() + pos_, 4);
    pos_ += 4;
    return v;
  }
  double f64(const char* what) {
    need(8, what);
    double v;
    std::memcpy(&v, buf_.data() + pos_, 8);
    pos_ += 8;
    return v;
  }

 private:
  const std::string& buf_;
  std::size_t pos_ = 0;
};

}  // namespace

FormatError::FormatError(const std::string& what, std::size_t offset)
    : std::runtime_error(what + " (byte offset " + std::to_string(offset) + ")"), offset_(offset) {}

void serialize_grid(const InterpolationGrid& grid, std::ostream& out) {
  std::string buf(kMagic, 4);
  put_u8(buf, static_cast<std::uint8_t>(grid.kind()));
  put_u8(buf, static_cast<std::uint8_t>(grid.dimension()));
  auto put_axis = [&](const GridAxis& axis) {
    put_u32(buf, static_cast<std::uint32_t>(axis.size()));
    for (double p : axis.points()) put_f64(buf, p);
  };
  put_axis(grid.tau_axis());
  for (const auto& d : grid.delta_axes()) put_axis(d);
  for (double v : grid.values()) put_f64(buf, v);
  put_u32(buf, crc_of(buf.data(), buf.size()));
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw std::runtime_error("serialize_grid: write failed");
}

InterpolationGrid deserialize_grid(std::istream& in) {
  const std::string buf{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  Reader rd(buf);

  rd.need(4, "magic");
  if (std::memcmp(buf.data(), kMagic, 4) != 0) throw FormatError("bad magic, expected LCG1", 0);
  for (int i = 0; i < 4; ++i) rd.u8("magic");

  const std::size_t tag_at = rd.pos();
  const std::uint8_t tag = rd.u8("case tag");
  if (tag > static_cast<std::uint8_t>(CaseKind::TB) || tag == static_cast<std::uint8_t>(CaseKind::CC)) {
    throw FormatError("invalid case tag " + std::to_string(tag), tag_at);
  }
  const auto kind = static_cast<CaseKind>(tag);

  const std::size_t count_at = rd.pos();
  const std::uint8_t axis_count = rd.u8("axis count");
  if (axis_count != 1 + threshold_count(kind)) {
    throw FormatError("axis count " + std::to_string(axis_count) + " does not match case " +
                          to_string(kind),
                      count_at);
  }

  std::vector<std::vector<double>> axes;
  std::size_t total = 1;
  for (int a = 0; a < axis_count; ++a) {
    const std::size_t len_at = rd.pos();
    const std::uint32_t len = rd.u32("axis length");
    if (len < 2 || len > rd.remaining() / 8) {
      throw FormatError("implausible axis length " + std::to_string(len), len_at);
    }
    std::vector<double> pts(len);
    for (auto& p : pts) p = rd.f64("axis point");
    axes.push_back(std::move(pts));
    total *= len;
  }

  const std::size_t values_at = rd.pos();
  if (total > rd.remaining() / 8) throw FormatError("truncated file while reading values", values_at);
  std::vector<double> values(total);
  for (auto& v : values) v = rd.f64("values");

  const std::size_t crc_at = rd.pos();
  const std::uint32_t stored = rd.u32("checksum");
  if (rd.remaining() != 0) throw FormatError("trailing bytes after checksum", rd.pos());
  if (stored != crc_of(buf.data(), crc_at)) throw FormatError("checksum mismatch", crc_at);

  try {
    std::vector<GridAxis> deltas;
    for (std::size_t a = 1; a < axes.size(); ++a) deltas.emplace_back(std::move(axes[a]));
    return InterpolationGrid(kind, GridAxis(std::move(axes[0])), std::move(deltas),
                             std::move(values));
  } catch (const std::domain_error& e) {
    throw FormatError(std::string("invalid grid contents: ") + e.what(), values_at);
  }
}

void save_grid(const InterpolationGrid& grid, const std::string& path) {
  // Write to a sibling temp file first so a failed run never leaves a half-written grid.
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open '" + tmp + "' for writing");
    serialize_grid(grid, out);
    out.close();
    if (!out) throw std::runtime_error("error writing '" + tmp + "'");
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    std::remove(tmp.c_str());
    throw std::runtime_error("cannot move '" + tmp + "' to '" + path + "'");
  }
}

InterpolationGrid load_grid(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open grid file '" + path + "'");
  return deserialize_grid(in);
}

}  // namespace latcorr
