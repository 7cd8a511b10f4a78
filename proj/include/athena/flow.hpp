#pragma once

#include "athena/packet.hpp"

#include <optional>
#include <unordered_map>
#include <vector>

namespace athena {

/// Flow key at one of three aggregation levels:
///   0: 5-tuple (both endpoints + ports + protocol)
///   1: 3-tuple (both endpoint IPs + protocol)
///   2: 2-tuple (destination IP + protocol)
/// Levels 0 and 1 are direction-normalized (smaller endpoint first) so both
/// directions of a conversation share one flow; level 2 keys on the victim.
struct FlowKey {
    int level = 0;
    std::uint32_t ip_a = 0, ip_b = 0;
    std::uint16_t port_a = 0, port_b = 0;
    std::uint8_t protocol = 0;

    bool operator==(const FlowKey&) const = default;
};

struct FlowKeyHash {
    std::size_t operator()(const FlowKey& k) const;
};

FlowKey make_flow_key(const RawPacket& pkt, int level);
/// Coarsens a key to a higher aggregation level.
FlowKey coarsen_key(const FlowKey& key, const RawPacket& first_pkt, int level);

struct Flow {
    FlowKey key;
    std::vector<RawPacket> packets;  // capture order, non-decreasing timestamps
    std::optional<int> label;

    double last_time() const { return packets.empty() ? 0.0 : packets.back().capture_time; }
};

struct FlowTableConfig {
    double baseline_active = 1000.0;  // long-run active-flow count under benign load
    double idle_timeout = 64.0;       // seconds without traffic before a flow completes
    int max_flow_len = 30;            // flows are emitted once they reach this many packets
    double check_interval = 10.0;     // escalation check cadence (driver-side)
};

/// Single-writer flow reassembly with adaptive key aggregation. Completed
/// flows (idle timeout or length cap) are returned from ingest()/flush();
/// maybe_escalate() is expected to be called every check_interval of capture
/// time.
class FlowTable {
public:
    explicit FlowTable(FlowTableConfig cfg);

    /// Appends the packet to its flow (creating one if needed) and returns
    /// any flows completed by this step. Unparseable packets are counted and
    /// skipped.
    std::vector<Flow> ingest(const RawPacket& pkt);

    /// One escalation/de-escalation step. Escalating merges existing flows
    /// under the coarser key (packets kept in timestamp order, ties by
    /// source order); de-escalating leaves existing flows to age out while
    /// new flows open under the finer key.
    void maybe_escalate(double now);

    /// Emits every remaining active flow (end of capture).
    std::vector<Flow> flush();

    int level() const { return level_; }
    std::size_t active_count() const { return flows_.size(); }
    double escalation_threshold() const { return 5.0 * cfg_.baseline_active; }
    std::uint64_t skipped_unparseable() const { return skipped_; }
    const FlowTableConfig& config() const { return cfg_; }

private:
    std::vector<Flow> evict_idle(double now);

    FlowTableConfig cfg_;
    int level_ = 0;
    std::unordered_map<FlowKey, Flow, FlowKeyHash> flows_;
    std::uint64_t skipped_ = 0;
    double last_sweep_ = -1.0;
};

}  // namespace athena
