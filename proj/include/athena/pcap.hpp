#pragma once

#include "athena/packet.hpp"

#include <filesystem>
#include <fstream>
#include <span>

namespace athena {

/// Streaming reader for classic PCAP files. Handles both byte orders and the
/// microsecond/nanosecond magic variants. A truncated trailing record ends
/// the stream and bumps truncated_records(); a bad magic throws DataError.
class PcapReader {
public:
    explicit PcapReader(const std::filesystem::path& path);

    /// Returns false at end of stream. Parsed packets carry seq = record index.
    bool next(RawPacket& out);

    std::size_t truncated_records() const { return truncated_; }
    std::size_t packets_read() const { return count_; }
    bool nanosecond_resolution() const { return nanosecond_; }

private:
    std::ifstream in_;
    bool swapped_ = false;
    bool nanosecond_ = false;
    std::size_t truncated_ = 0;
    std::size_t count_ = 0;
    bool done_ = false;
};

struct PcapContents {
    std::vector<RawPacket> packets;
    std::size_t truncated_records = 0;
};

PcapContents read_pcap(const std::filesystem::path& path);

/// Classic microsecond-format writer, used for fixtures.
void write_pcap(const std::filesystem::path& path, std::span<const RawPacket> packets);

}  // namespace athena
