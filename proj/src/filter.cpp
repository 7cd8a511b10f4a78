#include "athena/filter.hpp"

#include <algorithm>
#include <charconv>

namespace athena {

namespace {

std::uint8_t protocol_from_name(const std::string& name) {
    if (name == "tcp") return proto::kTcp;
    if (name == "udp") return proto::kUdp;
    if (name == "icmp") return proto::kIcmp;
    if (name.rfind("proto:", 0) == 0) {
        unsigned v = 0;
        auto s = name.substr(6);
        auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec == std::errc{} && p == s.data() + s.size() && v <= 255) return static_cast<std::uint8_t>(v);
    }
    throw ConfigError("unknown protocol in filter rule: " + name);
}

bool in_subnet(std::uint32_t ip, const SubnetRule& r) {
    if (r.prefix_len == 0) return true;
    std::uint32_t mask = r.prefix_len >= 32 ? 0xffffffffu : ~((1u << (32 - r.prefix_len)) - 1);
    return (ip & mask) == (r.network & mask);
}

}  // namespace

void FilterConfig::add_protocol_rule(const std::string& spec) {
    ProtocolRule rule;
    auto colon = spec.find(':');
    std::string proto_part = spec;
    if (colon != std::string::npos && spec.rfind("proto:", 0) != 0) {
        proto_part = spec.substr(0, colon);
        std::string ports = spec.substr(colon + 1);
        std::size_t start = 0;
        while (start <= ports.size()) {
            auto comma = ports.find(',', start);
            auto token = ports.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
            unsigned v = 0;
            auto [p, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
            if (ec != std::errc{} || p != token.data() + token.size() || v > 65535)
                throw ConfigError("bad port in filter rule: " + spec);
            rule.ports.push_back(static_cast<std::uint16_t>(v));
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
    }
    rule.protocol = protocol_from_name(proto_part);
    protocols.push_back(std::move(rule));
}

void FilterConfig::add_subnet_rule(const std::string& spec) {
    SubnetRule rule;
    std::string rest = spec;
    if (rest.rfind("src:", 0) == 0) {
        rule.scope = SubnetRule::Scope::Src;
        rest = rest.substr(4);
    } else if (rest.rfind("dst:", 0) == 0) {
        rule.scope = SubnetRule::Scope::Dst;
        rest = rest.substr(4);
    }
    auto slash = rest.find('/');
    if (slash == std::string::npos) {
        rule.network = ip_from_string(rest);
        rule.prefix_len = 32;
    } else {
        rule.network = ip_from_string(rest.substr(0, slash));
        auto bits = rest.substr(slash + 1);
        int v = 0;
        auto [p, ec] = std::from_chars(bits.data(), bits.data() + bits.size(), v);
        if (ec != std::errc{} || p != bits.data() + bits.size() || v < 0 || v > 32)
            throw ConfigError("bad prefix length in subnet rule: " + spec);
        rule.prefix_len = v;
    }
    subnets.push_back(rule);
}

bool keep_packet(const RawPacket& pkt, const FilterConfig& rules) {
    if (!pkt.has_ip()) return false;

    if (!rules.protocols.empty()) {
        bool matched = false;
        for (const auto& rule : rules.protocols) {
            if (pkt.protocol.value_or(0xff) != rule.protocol) continue;
            if (rule.ports.empty()) {
                matched = true;
                break;
            }
            auto port_hit = [&](std::uint16_t port) {
                return std::find(rule.ports.begin(), rule.ports.end(), port) != rule.ports.end();
            };
            if ((pkt.src_port && port_hit(*pkt.src_port)) || (pkt.dst_port && port_hit(*pkt.dst_port))) {
                matched = true;
                break;
            }
        }
        if (!matched) return false;
    }

    for (const auto& rule : rules.subnets) {
        bool ok = false;
        switch (rule.scope) {
            case SubnetRule::Scope::Src: ok = in_subnet(*pkt.src_ip, rule); break;
            case SubnetRule::Scope::Dst: ok = in_subnet(*pkt.dst_ip, rule); break;
            case SubnetRule::Scope::Either: ok = in_subnet(*pkt.src_ip, rule) || in_subnet(*pkt.dst_ip, rule); break;
        }
        if (!ok) return false;
    }
    return true;
}

}  // namespace athena
