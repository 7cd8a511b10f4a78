#include "athena/flow.hpp"

#include <algorithm>

namespace athena {

std::size_t FlowKeyHash::operator()(const FlowKey& k) const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto mix = [&h](std::uint64_t v) {
        h ^= v;
        h *= 0x100000001b3ULL;
    };
    mix(static_cast<std::uint64_t>(k.level));
    mix(k.ip_a);
    mix(k.ip_b);
    mix((std::uint64_t(k.port_a) << 16) | k.port_b);
    mix(k.protocol);
    return static_cast<std::size_t>(h);
}

FlowKey make_flow_key(const RawPacket& pkt, int level) {
    if (!pkt.has_ip()) throw ContractViolation("flow keys require a parsed IP header");
    FlowKey key;
    key.level = level;
    key.protocol = pkt.protocol.value_or(0);
    const std::uint32_t src = *pkt.src_ip, dst = *pkt.dst_ip;
    const std::uint16_t sport = pkt.src_port.value_or(0), dport = pkt.dst_port.value_or(0);
    switch (level) {
        case 0: {
            // canonical order: lexicographically smaller (ip, port) endpoint first
            if (std::make_pair(src, sport) <= std::make_pair(dst, dport)) {
                key.ip_a = src;
                key.port_a = sport;
                key.ip_b = dst;
                key.port_b = dport;
            } else {
                key.ip_a = dst;
                key.port_a = dport;
                key.ip_b = src;
                key.port_b = sport;
            }
            break;
        }
        case 1:
            key.ip_a = std::min(src, dst);
            key.ip_b = std::max(src, dst);
            break;
        case 2:
            key.ip_a = dst;  // the victim side
            break;
        default:
            throw ContractViolation("aggregation level must be 0, 1 or 2");
    }
    return key;
}

FlowKey coarsen_key(const FlowKey& key, const RawPacket& first_pkt, int level) {
    if (level < key.level) throw ContractViolation("cannot coarsen to a finer level");
    return make_flow_key(first_pkt, level);
}

FlowTable::FlowTable(FlowTableConfig cfg) : cfg_(cfg) {
    if (cfg_.baseline_active <= 0.0) throw ConfigError("baseline active-flow count must be positive");
    if (cfg_.idle_timeout <= 0.0) throw ConfigError("idle timeout must be positive");
    if (cfg_.max_flow_len < 1) throw ConfigError("max flow length must be at least 1");
}

std::vector<Flow> FlowTable::evict_idle(double now) {
    std::vector<Flow> done;
    for (auto it = flows_.begin(); it != flows_.end();) {
        if (now - it->second.last_time() > cfg_.idle_timeout) {
            done.push_back(std::move(it->second));
            it = flows_.erase(it);
        } else {
            ++it;
        }
    }
    // stable output order regardless of hash-map iteration
    std::sort(done.begin(), done.end(),
              [](const Flow& a, const Flow& b) { return a.packets.front().seq < b.packets.front().seq; });
    return done;
}

std::vector<Flow> FlowTable::ingest(const RawPacket& pkt) {
    std::vector<Flow> completed;
    if (!pkt.has_ip()) {
        ++skipped_;
        return completed;
    }

    const double now = pkt.capture_time;
    if (last_sweep_ < 0.0) last_sweep_ = now;
    if (now - last_sweep_ >= 1.0) {
        completed = evict_idle(now);
        last_sweep_ = now;
    }

    FlowKey key = make_flow_key(pkt, level_);
    auto [it, created] = flows_.try_emplace(key);
    Flow& flow = it->second;
    if (created) flow.key = key;
    flow.packets.push_back(pkt);

    if (static_cast<int>(flow.packets.size()) >= cfg_.max_flow_len) {
        completed.push_back(std::move(flow));
        flows_.erase(it);
    }
    return completed;
}

void FlowTable::maybe_escalate(double now) {
    const double threshold = escalation_threshold();
    const auto count = static_cast<double>(flows_.size());
    if (count > threshold && level_ < 2) {
        ++level_;
        std::unordered_map<FlowKey, Flow, FlowKeyHash> merged;
        for (auto& [key, flow] : flows_) {
            FlowKey coarse = coarsen_key(key, flow.packets.front(), level_);
            auto [it, created] = merged.try_emplace(coarse);
            if (created) it->second.key = coarse;
            auto& dst = it->second.packets;
            dst.insert(dst.end(), std::make_move_iterator(flow.packets.begin()),
                       std::make_move_iterator(flow.packets.end()));
        }
        for (auto& [key, flow] : merged) {
            std::sort(flow.packets.begin(), flow.packets.end(), [](const RawPacket& a, const RawPacket& b) {
                return a.capture_time != b.capture_time ? a.capture_time < b.capture_time : a.seq < b.seq;
            });
        }
        flows_ = std::move(merged);
    } else if (count < threshold && level_ > 0) {
        // one step back per check; existing coarse-keyed flows simply age out
        --level_;
    }
    (void)now;
}

std::vector<Flow> FlowTable::flush() {
    std::vector<Flow> done;
    done.reserve(flows_.size());
    for (auto& [key, flow] : flows_) done.push_back(std::move(flow));
    flows_.clear();
    std::sort(done.begin(), done.end(),
              [](const Flow& a, const Flow& b) { return a.packets.front().seq < b.packets.front().seq; });
    return done;
}

}  // namespace athena
