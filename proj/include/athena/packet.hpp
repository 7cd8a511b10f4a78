#pragma once

#include "athena/types.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace athena {

/// One captured frame plus whatever header fields parsed successfully.
/// Address/port/protocol fields are present iff the respective layer parsed.
struct RawPacket {
    double capture_time = 0.0;         // seconds since capture epoch
    std::vector<std::uint8_t> frame;   // full link-layer bytes
    std::uint64_t seq = 0;             // source order (file record index)

    std::optional<std::uint32_t> src_ip, dst_ip;
    std::optional<std::uint16_t> src_port, dst_port;
    std::optional<std::uint8_t> protocol;
    std::optional<std::size_t> ip_offset;      // offset of the IPv4 header in frame
    std::optional<std::size_t> ip_header_len;  // IHL in bytes

    bool has_ip() const { return src_ip.has_value(); }
};

/// Parses Ethernet II + IPv4 (+ TCP/UDP ports) out of a frame. Fields stay
/// absent on anything it cannot parse; never throws.
RawPacket parse_frame(double capture_time, std::vector<std::uint8_t> frame, std::uint64_t seq = 0);

std::string ip_to_string(std::uint32_t ip);
std::uint32_t ip_from_string(const std::string& dotted);  // throws ConfigError

namespace proto {
constexpr std::uint8_t kTcp = 6;
constexpr std::uint8_t kUdp = 17;
constexpr std::uint8_t kIcmp = 1;
}  // namespace proto

/// Builds a well-formed Ethernet+IPv4+TCP/UDP frame; test fixtures and the
/// synthetic generator use this, production traffic comes from PCAP files.
std::vector<std::uint8_t> build_frame(std::uint32_t src_ip, std::uint32_t dst_ip, std::uint16_t src_port,
                                      std::uint16_t dst_port, std::uint8_t protocol,
                                      const std::vector<std::uint8_t>& payload);

}  // namespace athena
