#include "athena/packet.hpp"

#include <charconv>
#include <sstream>

namespace athena {

namespace {

constexpr std::size_t kEthHeaderLen = 14;
constexpr std::uint16_t kEtherTypeIpv4 = 0x0800;

std::uint16_t be16(const std::uint8_t* p) { return static_cast<std::uint16_t>((p[0] << 8) | p[1]); }
std::uint32_t be32(const std::uint8_t* p) {
    return (std::uint32_t(p[0]) << 24) | (std::uint32_t(p[1]) << 16) | (std::uint32_t(p[2]) << 8) | p[3];
}

}  // namespace

RawPacket parse_frame(double capture_time, std::vector<std::uint8_t> frame, std::uint64_t seq) {
    RawPacket pkt;
    pkt.capture_time = capture_time;
    pkt.frame = std::move(frame);
    pkt.seq = seq;

    const auto& f = pkt.frame;
    if (f.size() < kEthHeaderLen + 20) return pkt;
    if (be16(&f[12]) != kEtherTypeIpv4) return pkt;

    const std::size_t ip = kEthHeaderLen;
    if ((f[ip] >> 4) != 4) return pkt;
    const std::size_t ihl = static_cast<std::size_t>(f[ip] & 0x0f) * 4;
    if (ihl < 20 || ip + ihl > f.size()) return pkt;

    pkt.ip_offset = ip;
    pkt.ip_header_len = ihl;
    pkt.protocol = f[ip + 9];
    pkt.src_ip = be32(&f[ip + 12]);
    pkt.dst_ip = be32(&f[ip + 16]);

    if ((*pkt.protocol == proto::kTcp || *pkt.protocol == proto::kUdp) && ip + ihl + 4 <= f.size()) {
        pkt.src_port = be16(&f[ip + ihl]);
        pkt.dst_port = be16(&f[ip + ihl + 2]);
    }
    return pkt;
}

std::string ip_to_string(std::uint32_t ip) {
    std::ostringstream os;
    os << ((ip >> 24) & 0xff) << '.' << ((ip >> 16) & 0xff) << '.' << ((ip >> 8) & 0xff) << '.' << (ip & 0xff);
    return os.str();
}

std::uint32_t ip_from_string(const std::string& dotted) {
    std::uint32_t ip = 0;
    const char* p = dotted.data();
    const char* end = p + dotted.size();
    for (int i = 0; i < 4; ++i) {
        unsigned value = 0;
        auto [next, ec] = std::from_chars(p, end, value);
        if (ec != std::errc{} || value > 255) throw ConfigError("bad IPv4 address: " + dotted);
        ip = (ip << 8) | value;
        p = next;
        if (i < 3) {
            if (p == end || *p != '.') throw ConfigError("bad IPv4 address: " + dotted);
            ++p;
        }
    }
    if (p != end) throw ConfigError("bad IPv4 address: " + dotted);
    return ip;
}

std::vector<std::uint8_t> build_frame(std::uint32_t src_ip, std::uint32_t dst_ip, std::uint16_t src_port,
                                      std::uint16_t dst_port, std::uint8_t protocol,
                                      const std::vector<std::uint8_t>& payload) {
    const std::size_t l4_header = (protocol == proto::kTcp) ? 20 : 8;
    std::vector<std::uint8_t> f(kEthHeaderLen + 20 + l4_header + payload.size(), 0);

    // Ethernet II, synthetic MACs
    for (int i = 0; i < 6; ++i) f[i] = 0xaa, f[6 + i] = 0xbb;
    f[12] = 0x08;
    f[13] = 0x00;

    std::size_t ip = kEthHeaderLen;
    const std::size_t total_len = 20 + l4_header + payload.size();
    f[ip] = 0x45;  // IPv4, IHL=5
    f[ip + 2] = static_cast<std::uint8_t>(total_len >> 8);
    f[ip + 3] = static_cast<std::uint8_t>(total_len & 0xff);
    f[ip + 8] = 64;  // TTL
    f[ip + 9] = protocol;
    f[ip + 12] = static_cast<std::uint8_t>(src_ip >> 24);
    f[ip + 13] = static_cast<std::uint8_t>(src_ip >> 16);
    f[ip + 14] = static_cast<std::uint8_t>(src_ip >> 8);
    f[ip + 15] = static_cast<std::uint8_t>(src_ip);
    f[ip + 16] = static_cast<std::uint8_t>(dst_ip >> 24);
    f[ip + 17] = static_cast<std::uint8_t>(dst_ip >> 16);
    f[ip + 18] = static_cast<std::uint8_t>(dst_ip >> 8);
    f[ip + 19] = static_cast<std::uint8_t>(dst_ip);

    std::size_t l4 = ip + 20;
    f[l4] = static_cast<std::uint8_t>(src_port >> 8);
    f[l4 + 1] = static_cast<std::uint8_t>(src_port & 0xff);
    f[l4 + 2] = static_cast<std::uint8_t>(dst_port >> 8);
    f[l4 + 3] = static_cast<std::uint8_t>(dst_port & 0xff);
    if (protocol == proto::kTcp) f[l4 + 12] = 0x50;  // data offset = 5 words

    std::copy(payload.begin(), payload.end(), f.begin() + static_cast<std::ptrdiff_t>(l4 + l4_header));
    return f;
}

}  // namespace athena
