#include "gntm/binary_io.hpp"

#include <zlib.h>

#include <cstring>
#include <fstream>
#include <iterator>

namespace gntm {

std::uint32_t crc32_of(const std::uint8_t* data, std::size_t n) {
  uLong crc = crc32(0L, Z_NULL, 0);
  while (n > 0) {
    const uInt chunk = static_cast<uInt>(std::min<std::size_t>(n, 1u << 30));
    crc = crc32(crc, data, chunk);
    data += chunk;
    n -= chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

void write_header(BinaryWriter& w, ContainerKind kind, std::uint16_t version) {
  w.bytes(kMagic, sizeof(kMagic));
  w.u16(version);
  w.u16(static_cast<std::uint16_t>(kind));
}

std::uint16_t read_header(BinaryReader& r, ContainerKind kind, std::uint16_t supported_version) {
  const std::uint8_t* magic = r.take(sizeof(kMagic));
  if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) throw FormatError("bad magic bytes: not a GNTM file");
  const std::uint16_t version = r.u16();
  if (version != supported_version) {
    throw FormatError("unsupported format version " + std::to_string(version) + " (expected " +
                      std::to_string(supported_version) + ")");
  }
  const std::uint16_t k = r.u16();
  if (k != static_cast<std::uint16_t>(kind)) {
    throw FormatError("wrong container kind " + std::to_string(k) + " (expected " +
                      std::to_string(static_cast<std::uint16_t>(kind)) + ")");
  }
  return version;
}

void save_with_trailer(const std::string& path, BinaryWriter& w) {
  w.u32(crc32_of(w.buffer().data(), w.size()));
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out.write(reinterpret_cast<const char*>(w.buffer().data()), static_cast<std::streamsize>(w.size()));
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::vector<std::uint8_t> load_with_trailer(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() < sizeof(kMagic) + 8) throw FormatError("truncated file: " + path);
  if (std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) throw FormatError("bad magic bytes: not a GNTM file");
  const std::size_t body = bytes.size() - 4;
  BinaryReader trailer(bytes.data() + body, 4);
  if (trailer.u32() != crc32_of(bytes.data(), body)) {
    throw FormatError("checksum mismatch in " + path + " (truncated or corrupted)");
  }
  bytes.resize(body);
  return bytes;
}

}  // namespace gntm
