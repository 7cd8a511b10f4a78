#pragma once

#include "athena/model.hpp"
#include "athena/packet.hpp"
#include "athena/rng.hpp"
#include "athena/types.hpp"

#include <filesystem>
#include <memory>
#include <vector>

namespace athena::testing {

inline std::filesystem::path temp_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("athena-test-" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

/// Random prepared sample with the given true length.
inline std::shared_ptr<PreparedSample> random_sample(int n, int d, int max_len, int label, Rng& rng,
                                                     std::uint64_t id = 0) {
    auto s = std::make_shared<PreparedSample>();
    s->n = n;
    s->d = d;
    s->max_len = max_len;
    s->label = label;
    s->id = id;
    s->origin_id = id;
    s->bytes.resize(static_cast<std::size_t>(n) * d);
    for (auto& b : s->bytes) b = static_cast<std::uint8_t>(rng.uniform_int(0, 255));
    s->timestamps.resize(n);
    s->timestamps[0] = 0.0;
    for (int i = 1; i < n; ++i) s->timestamps[i] = s->timestamps[i - 1] + rng.uniform(0.001, 2.0);
    return s;
}

inline Dataset random_dataset(const std::vector<std::string>& class_names, int flows_per_class, int d, int max_len,
                              Rng& rng) {
    Dataset ds;
    ds.d = d;
    ds.max_len = max_len;
    ds.class_names = class_names;
    std::uint64_t id = 0;
    for (int c = 0; c < static_cast<int>(class_names.size()); ++c)
        for (int f = 0; f < flows_per_class; ++f) {
            int n = static_cast<int>(rng.uniform_int(1, max_len));
            ds.samples.push_back(random_sample(n, d, max_len, c, rng, id++));
        }
    return ds;
}

inline RawPacket make_tcp_packet(double t, const std::string& src, std::uint16_t sport, const std::string& dst,
                                 std::uint16_t dport, std::uint64_t seq = 0, std::size_t payload_len = 20) {
    std::vector<std::uint8_t> payload(payload_len);
    for (std::size_t i = 0; i < payload_len; ++i) payload[i] = static_cast<std::uint8_t>(i * 7 + seq);
    return parse_frame(
        t, build_frame(ip_from_string(src), ip_from_string(dst), sport, dport, proto::kTcp, payload), seq);
}

/// Central finite differences of a scalar function of the model parameters.
/// Walks every slot entry; `loss` must be a pure function of params.
template <typename LossFn>
ModelParams finite_difference_grads(ModelParams params, const ModelConfig& cfg, LossFn&& loss,
                                    double step = 1e-4) {
    ModelParams grads = zeros_like(cfg);
    auto p_slots = param_slots(params);
    auto g_slots = param_slots(grads);
    for (std::size_t s = 0; s < p_slots.size(); ++s) {
        for (long j = 0; j < p_slots[s].size; ++j) {
            double saved = p_slots[s].data[j];
            p_slots[s].data[j] = saved + step;
            double up = loss(params);
            p_slots[s].data[j] = saved - step;
            double down = loss(params);
            p_slots[s].data[j] = saved;
            g_slots[s].data[j] = (up - down) / (2.0 * step);
        }
    }
    return grads;
}

/// Per-group relative error: ||ga - gfd||_inf / (||ga||_inf + ||gfd||_inf).
/// Groups whose true gradient is exactly zero (key-projection biases cancel
/// through the row-shift invariance of softmax) only see finite-difference
/// round-off; the absolute floor keeps those from reading as 100% error.
inline double group_relative_error(const double* analytic, const double* numeric, long size,
                                   double abs_floor = 1e-7) {
    double max_diff = 0.0, max_a = 0.0, max_n = 0.0;
    for (long i = 0; i < size; ++i) {
        max_diff = std::max(max_diff, std::abs(analytic[i] - numeric[i]));
        max_a = std::max(max_a, std::abs(analytic[i]));
        max_n = std::max(max_n, std::abs(numeric[i]));
    }
    if (max_diff <= abs_floor) return 0.0;
    return max_diff / (max_a + max_n + 1e-300);
}

}  // namespace athena::testing
