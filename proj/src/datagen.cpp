#include "athena/datagen.hpp"

#include <cmath>
#include <set>

namespace athena {

namespace {

constexpr double kMinGap = 1e-6;  // timestamp resolution floor
constexpr int kTemplateLen = 40;

double draw_gap(const TrafficProfile& p, Rng& rng) {
    switch (p.arrival) {
        case TrafficProfile::Arrival::Constant:
            return p.arrival_param;
        case TrafficProfile::Arrival::Exponential: {
            double u = rng.uniform();
            if (u <= 0.0) u = 0x1.0p-53;
            return std::max(kMinGap, -p.arrival_param * std::log(u));
        }
        case TrafficProfile::Arrival::Bursty:
            return rng.bernoulli(p.long_gap_prob) ? p.long_gap : p.arrival_param;
        case TrafficProfile::Arrival::Periodic:
            return std::max(kMinGap, p.arrival_param + rng.uniform(-p.period_jitter, p.period_jitter));
    }
    return p.arrival_param;
}

int draw_length(const TrafficProfile& p, Rng& rng) {
    if (p.length_shape == TrafficProfile::LengthShape::ShortBiased) {
        double u = rng.uniform(std::log(static_cast<double>(p.len_min)),
                               std::log(static_cast<double>(p.len_max) + 1.0));
        return std::clamp(static_cast<int>(std::exp(u)), p.len_min, p.len_max);
    }
    return static_cast<int>(rng.uniform_int(p.len_min, p.len_max));
}

void fill_packet(std::uint8_t* row, int d, const TrafficProfile& p, Rng& rng) {
    for (int j = 0; j < std::min(kTemplateLen, d); ++j)
        row[j] = static_cast<std::uint8_t>((j * 37 + 11 + p.template_seed) & 0xff);
    const int fill_end = std::min(p.payload_len, d);
    for (int j = kTemplateLen; j < fill_end; ++j)
        row[j] = rng.bernoulli(p.fill_entropy) ? static_cast<std::uint8_t>(rng.uniform_int(0, 255)) : 0;
}

}  // namespace

void TrafficProfile::validate(int d) const {
    if (class_name.empty()) throw ConfigError("profile needs a class name");
    if (len_min < 1 || len_max < len_min) throw ConfigError("bad flow length range in profile " + class_name);
    if (arrival_param <= 0.0) throw ConfigError("inter-arrival parameter must be positive in " + class_name);
    if (arrival == Arrival::Bursty && (long_gap <= 0.0 || long_gap_prob < 0.0 || long_gap_prob > 1.0))
        throw ConfigError("bad burst parameters in " + class_name);
    if (period_jitter < 0.0 || period_jitter >= arrival_param)
        if (arrival == Arrival::Periodic) throw ConfigError("period jitter must be in [0, period) in " + class_name);
    if (payload_len < 1 || payload_len > d) throw ConfigError("payload length must be in [1, d] in " + class_name);
    if (fill_entropy < 0.0 || fill_entropy > 1.0) throw ConfigError("fill entropy must be in [0,1] in " + class_name);
    if (flows < 1) throw ConfigError("profile must generate at least one flow");
}

Dataset generate(const std::vector<TrafficProfile>& profiles, int d, int max_len, std::uint64_t seed) {
    if (profiles.size() < 2) throw ConfigError("need at least two traffic profiles");
    std::set<std::string> names;
    for (const auto& p : profiles) {
        p.validate(d);
        if (p.len_max > max_len) throw ConfigError("profile " + p.class_name + " exceeds the flow length cap");
        if (!names.insert(p.class_name).second) throw ConfigError("duplicate class name: " + p.class_name);
    }

    Dataset out;
    out.d = d;
    out.max_len = max_len;
    Rng root(seed);
    std::uint64_t next_id = 0;
    for (std::size_t c = 0; c < profiles.size(); ++c) {
        const auto& p = profiles[c];
        out.class_names.push_back(p.class_name);
        Rng class_rng = root.substream("datagen", c);
        for (int f = 0; f < p.flows; ++f) {
            Rng rng = class_rng.substream("flow", static_cast<std::uint64_t>(f));
            auto s = std::make_shared<PreparedSample>();
            s->d = d;
            s->max_len = max_len;
            s->label = static_cast<int>(c);
            s->n = draw_length(p, rng);
            s->bytes.assign(static_cast<std::size_t>(s->n) * d, 0);
            s->timestamps.resize(s->n);
            double t = 0.0;
            for (int i = 0; i < s->n; ++i) {
                if (i > 0) t += draw_gap(p, rng);
                s->timestamps[i] = t;
                fill_packet(s->bytes.data() + static_cast<std::size_t>(i) * d, d, p, rng);
            }
            s->id = next_id;
            s->origin_id = next_id;
            ++next_id;
            out.samples.push_back(std::move(s));
        }
    }
    out.validate();
    return out;
}

Dataset timing_only_pair(std::uint64_t seed, int flows_per_class, int d, int max_len) {
    if (flows_per_class < 50) throw ConfigError("timing-only pair needs at least 50 flows per class");
    TrafficProfile fast;
    fast.class_name = "bruteforce";
    fast.arrival = TrafficProfile::Arrival::Exponential;
    fast.arrival_param = 0.01;
    fast.flows = flows_per_class;
    fast.len_min = 5;
    fast.len_max = std::min(30, max_len);

    TrafficProfile slow = fast;
    slow.class_name = "benign";
    slow.arrival_param = 2.0;

    return generate({fast, slow}, d, max_len, seed);
}

}  // namespace athena
