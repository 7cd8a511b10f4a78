#pragma once

#include "athena/packet.hpp"

#include <string>
#include <vector>

namespace athena {

/// Protocol rule: match on IP protocol number and (optionally) a port list.
/// A packet matches if its protocol agrees and, when ports are given, either
/// endpoint uses one of them.
struct ProtocolRule {
    std::uint8_t protocol = 0;
    std::vector<std::uint16_t> ports;  // empty = any port
};

/// Endpoint constraint; every configured constraint must hold.
struct SubnetRule {
    enum class Scope { Either, Src, Dst };
    std::uint32_t network = 0;
    int prefix_len = 0;
    Scope scope = Scope::Either;
};

struct FilterConfig {
    std::vector<ProtocolRule> protocols;  // empty = all IP protocols allowed
    std::vector<SubnetRule> subnets;

    /// "tcp", "udp:1883", "icmp", "proto:47", "tcp:80,8080"
    void add_protocol_rule(const std::string& spec);
    /// "192.168.1.0/24", "src:10.0.0.0/8", "dst:192.168.1.7" (host = /32)
    void add_subnet_rule(const std::string& spec);
};

/// True iff the packet passes: it is IPv4, matches at least one protocol
/// rule (or no protocol rules are configured) and satisfies every endpoint
/// constraint. Non-IP packets are always dropped.
bool keep_packet(const RawPacket& pkt, const FilterConfig& rules);

}  // namespace athena
