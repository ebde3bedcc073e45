#include "zip_reader.hpp"

#include <zlib.h>

#include <algorithm>

#include "bulletcmp/scan_io.hpp"

namespace bulletcmp::detail {

namespace {

constexpr std::uint32_t kEndOfCentralDir = 0x06054b50;
constexpr std::uint32_t kCentralFileHeader = 0x02014b50;
constexpr std::uint32_t kLocalFileHeader = 0x04034b50;

std::uint16_t le16(std::span<const std::uint8_t> b, std::size_t off) {
    return static_cast<std::uint16_t>(b[off] | (b[off + 1] << 8));
}

std::uint32_t le32(std::span<const std::uint8_t> b, std::size_t off) {
    return static_cast<std::uint32_t>(b[off]) | (static_cast<std::uint32_t>(b[off + 1]) << 8) |
           (static_cast<std::uint32_t>(b[off + 2]) << 16) | (static_cast<std::uint32_t>(b[off + 3]) << 24);
}

[[noreturn]] void fail(const std::string& what) { throw ScanFormatError("zip", what); }

}  // namespace

ZipReader::ZipReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {
    if (bytes.size() < 22) fail("archive too short to hold an end-of-central-directory record");

    // The EOCD sits at the end, followed by a comment of at most 65535 bytes.
    std::size_t eocd = bytes.size();
    const std::size_t lowest = bytes.size() > 22 + 65535 ? bytes.size() - 22 - 65535 : 0;
    for (std::size_t pos = bytes.size() - 22 + 1; pos-- > lowest;) {
        if (le32(bytes, pos) == kEndOfCentralDir) {
            eocd = pos;
            break;
        }
    }
    if (eocd == bytes.size()) fail("end-of-central-directory record not found");

    const std::uint16_t entries = le16(bytes, eocd + 10);
    const std::uint32_t cd_size = le32(bytes, eocd + 12);
    const std::uint32_t cd_offset = le32(bytes, eocd + 16);
    if (std::size_t{cd_offset} + cd_size > eocd) fail("central directory lies outside the archive");

    std::size_t pos = cd_offset;
    for (std::uint16_t i = 0; i < entries; ++i) {
        if (pos + 46 > eocd || le32(bytes, pos) != kCentralFileHeader)
            fail("corrupt central directory entry " + std::to_string(i));
        ZipMember m;
        m.method = le16(bytes, pos + 10);
        m.crc32 = le32(bytes, pos + 16);
        m.compressed_size = le32(bytes, pos + 20);
        m.uncompressed_size = le32(bytes, pos + 24);
        const std::uint16_t name_len = le16(bytes, pos + 28);
        const std::uint16_t extra_len = le16(bytes, pos + 30);
        const std::uint16_t comment_len = le16(bytes, pos + 32);
        m.local_header_offset = le32(bytes, pos + 42);
        if (pos + 46 + name_len > eocd) fail("truncated file name in central directory");
        m.name.assign(reinterpret_cast<const char*>(bytes.data() + pos + 46), name_len);
        members_.push_back(std::move(m));
        pos += 46 + std::size_t{name_len} + extra_len + comment_len;
    }
}

const ZipMember* ZipReader::find(const std::string& name) const {
    auto it = std::find_if(members_.begin(), members_.end(), [&](const ZipMember& m) { return m.name == name; });
    return it == members_.end() ? nullptr : &*it;
}

std::vector<std::uint8_t> ZipReader::extract(const ZipMember& m) const {
    const std::size_t off = m.local_header_offset;
    if (off + 30 > bytes_.size() || le32(bytes_, off) != kLocalFileHeader)
        fail("bad local header for member '" + m.name + "'");
    const std::size_t data_off = off + 30 + le16(bytes_, off + 26) + le16(bytes_, off + 28);
    if (data_off + m.compressed_size > bytes_.size()) fail("member '" + m.name + "' is truncated");
    auto src = bytes_.subspan(data_off, m.compressed_size);

    std::vector<std::uint8_t> out(m.uncompressed_size);
    if (m.method == 0) {
        if (m.compressed_size != m.uncompressed_size) fail("stored member '" + m.name + "' has inconsistent sizes");
        std::copy(src.begin(), src.end(), out.begin());
    } else if (m.method == 8) {
        z_stream zs{};
        if (inflateInit2(&zs, -MAX_WBITS) != Z_OK) fail("inflateInit2 failed");
        zs.next_in = const_cast<Bytef*>(src.data());
        zs.avail_in = static_cast<uInt>(src.size());
        zs.next_out = out.data();
        zs.avail_out = static_cast<uInt>(out.size());
        const int rc = inflate(&zs, Z_FINISH);
        const auto produced = zs.total_out;
        inflateEnd(&zs);
        if (rc != Z_STREAM_END || produced != m.uncompressed_size)
            fail("member '" + m.name + "' failed to inflate");
    } else {
        fail("member '" + m.name + "' uses unsupported compression method " + std::to_string(m.method));
    }

    const auto crc = ::crc32(0L, out.data(), static_cast<uInt>(out.size()));
    if (crc != m.crc32) fail("CRC mismatch in member '" + m.name + "'");
    return out;
}

}  // namespace bulletcmp::detail
