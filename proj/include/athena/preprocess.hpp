#pragma once

#include "athena/flow.hpp"
#include "athena/types.hpp"

#include <filesystem>

namespace athena {

/// Turns a reassembled flow into a model-ready sample:
/// per packet, the Ethernet header is dropped, the 8 source/destination
/// address bytes are deleted from the IP header (shortening it, so the model
/// never sees topology bytes), and the rest is truncated or zero-padded to
/// exactly d bytes. Timestamps become seconds relative to the first packet.
/// Throws DataError for empty flows and ContractViolation for over-long ones.
PreparedSample preprocess_flow(const Flow& flow, int d, int max_len);

/// Per-packet byte extraction used by preprocess_flow, exposed for tests.
std::vector<std::uint8_t> packet_model_bytes(const RawPacket& pkt, int d);

// Prepared-dataset container: "ATHDSET1", version, d, N, class-name table,
// then one length-prefixed record per flow (label u16, n u16, n f64
// timestamps, n*d raw bytes). Round-trips losslessly.
void save_dataset(const Dataset& dataset, const std::filesystem::path& path);
Dataset load_dataset(const std::filesystem::path& path);

/// Debug exporter: one JSON object per line with hex-encoded packet bytes.
void export_dataset_jsonl(const Dataset& dataset, const std::filesystem::path& path);

}  // namespace athena
