#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace bulletcmp::detail {

struct ZipMember {
    std::string name;
    std::uint16_t method = 0;
    std::uint32_t crc32 = 0;
    std::uint32_t compressed_size = 0;
    std::uint32_t uncompressed_size = 0;
    std::uint32_t local_header_offset = 0;
};

/// Read-only view of a ZIP archive held in memory. Supports stored and
/// deflated members; no ZIP64, no encryption, no multi-disk archives.
class ZipReader {
public:
    explicit ZipReader(std::span<const std::uint8_t> bytes);

    const std::vector<ZipMember>& members() const { return members_; }
    const ZipMember* find(const std::string& name) const;

    /// Inflates a member and verifies its CRC. Throws ScanFormatError.
    std::vector<std::uint8_t> extract(const ZipMember& member) const;

private:
    std::span<const std::uint8_t> bytes_;
    std::vector<ZipMember> members_;
};

}  // namespace bulletcmp::detail
