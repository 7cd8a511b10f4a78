#include "athena/pcap.hpp"

#include <cmath>
#include <cstring>

namespace athena {

namespace {

constexpr std::uint32_t kMagicMicro = 0xa1b2c3d4;
constexpr std::uint32_t kMagicMicroSwapped = 0xd4c3b2a1;
constexpr std::uint32_t kMagicNano = 0xa1b23c4d;
constexpr std::uint32_t kMagicNanoSwapped = 0x4d3cb2a1;

std::uint32_t bswap32(std::uint32_t v) {
    return ((v & 0xff) << 24) | ((v & 0xff00) << 8) | ((v >> 8) & 0xff00) | (v >> 24);
}

}  // namespace

PcapReader::PcapReader(const std::filesystem::path& path) : in_(path, std::ios::binary) {
    if (!in_) throw IoError("cannot open pcap file: " + path.string());
    std::uint8_t header[24];
    in_.read(reinterpret_cast<char*>(header), sizeof(header));
    if (!in_) throw DataError("not a pcap file (no global header): " + path.string());
    std::uint32_t magic;
    std::memcpy(&magic, header, 4);
    switch (magic) {
        case kMagicMicro: break;
        case kMagicNano: nanosecond_ = true; break;
        case kMagicMicroSwapped: swapped_ = true; break;
        case kMagicNanoSwapped: swapped_ = true; nanosecond_ = true; break;
        default: throw DataError("unsupported capture format (bad magic): " + path.string());
    }
}

bool PcapReader::next(RawPacket& out) {
    if (done_) return false;
    std::uint32_t rec[4];
    in_.read(reinterpret_cast<char*>(rec), sizeof(rec));
    if (in_.gcount() == 0) {
        done_ = true;
        return false;
    }
    if (in_.gcount() != sizeof(rec)) {
        ++truncated_;
        done_ = true;
        return false;
    }
    if (swapped_)
        for (auto& v : rec) v = bswap32(v);

    const std::uint32_t ts_sec = rec[0], ts_frac = rec[1], incl_len = rec[2];
    std::vector<std::uint8_t> frame(incl_len);
    in_.read(reinterpret_cast<char*>(frame.data()), incl_len);
    if (in_.gcount() != static_cast<std::streamsize>(incl_len)) {
        ++truncated_;
        done_ = true;
        return false;
    }

    const double frac_scale = nanosecond_ ? 1e-9 : 1e-6;
    out = parse_frame(ts_sec + ts_frac * frac_scale, std::move(frame), count_);
    ++count_;
    return true;
}

PcapContents read_pcap(const std::filesystem::path& path) {
    PcapReader reader(path);
    PcapContents contents;
    RawPacket pkt;
    while (reader.next(pkt)) contents.packets.push_back(std::move(pkt));
    contents.truncated_records = reader.truncated_records();
    return contents;
}

void write_pcap(const std::filesystem::path& path, std::span<const RawPacket> packets) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open for writing: " + path.string());
    const std::uint32_t header[6] = {kMagicMicro, (2u << 16) | 4u, 0, 0, 1u << 16, 1 /* LINKTYPE_ETHERNET */};
    os.write(reinterpret_cast<const char*>(header), sizeof(header));
    for (const auto& pkt : packets) {
        double sec_floor = std::floor(pkt.capture_time);
        std::uint32_t rec[4];
        rec[0] = static_cast<std::uint32_t>(sec_floor);
        rec[1] = static_cast<std::uint32_t>(std::llround((pkt.capture_time - sec_floor) * 1e6));
        if (rec[1] >= 1000000) {
            rec[0] += 1;
            rec[1] -= 1000000;
        }
        rec[2] = rec[3] = static_cast<std::uint32_t>(pkt.frame.size());
        os.write(reinterpret_cast<const char*>(rec), sizeof(rec));
        os.write(reinterpret_cast<const char*>(pkt.frame.data()), static_cast<std::streamsize>(pkt.frame.size()));
    }
    if (!os) throw IoError("write failed: " + path.string());
}

}  // namespace athena
