#pragma once

#include "athena/rng.hpp"
#include "athena/types.hpp"

#include <filesystem>
#include <vector>

namespace athena {

struct AugmentConfig {
    // online, per-batch
    double jitter_fraction = 0.7;
    std::vector<double> scale_set{0.5, 0.75, 1.0, 1.25, 1.5};
    double drop_coeff = 0.25;
    double insert_coeff = 0.15;
    int noise_packet_divisor = 3;   // at most n/3 packets touched
    int noise_byte_divisor = 100;   // at most d/100 bytes per packet
    double noise_sigma = 0.1;
    bool jitter = true, scaling = true, drop = true, insert = true, noise = true;

    // offline, subflow generation
    double majority_factor = 0.2;
    int majority_k_min = 1;
    int majority_k_max = 5;
};

/// Per-class bookkeeping for the offline stage, one row per class.
struct ClassStats {
    struct Row {
        std::size_t original_count = 0;  // m_c
        double mean_length = 0.0;        // n_c
        bool minority = false;
        double subflow_factor = 0.0;       // a_c
        std::size_t after_subflows = 0;    // m'_c
        double oversample_factor = 0.0;    // z_c
        std::size_t final_count = 0;       // m''_c
    };
    std::size_t target_density = 0;  // m_d
    std::vector<Row> rows;           // indexed by class
};

/// m_d = round(2P / C), half away from zero.
std::size_t target_density(long model_param_count, int num_classes);

ClassStats compute_class_stats(const Dataset& dataset, std::size_t m_d, const AugmentConfig& cfg);

/// Offline subflow generation. Minority classes get floor(a_c) subflows per
/// flow plus one more with probability frac(a_c), cut-offs log-uniform over
/// [1, n-1]; majority classes get one short subflow (k in [1, min(5, n-1)])
/// for 20% of flows. Returns originals + subflows and fills `stats`.
Dataset generate_subflows(const Dataset& dataset, const AugmentConfig& cfg, long model_param_count, Rng& rng,
                          ClassStats& stats);

/// Validation-set variant: reuses the factors derived from training
/// statistics instead of recomputing them ("same a_c"). Never oversamples.
Dataset generate_subflows_with_factors(const Dataset& dataset, const ClassStats& train_stats,
                                       const AugmentConfig& cfg, Rng& rng);

/// Duplicates every sample floor(z_c) times, then gives one extra copy to
/// floor(frac(z_c) * m'_c) distinct samples, bringing every class within 1
/// of m_max. Duplicates share storage with their source.
Dataset hybrid_oversample(const Dataset& dataset, ClassStats& stats, Rng& rng);

/// First k packets of a flow as a new sample (timestamps stay anchored at
/// the first packet, so no re-zeroing is needed).
PreparedSample subflow_prefix(const PreparedSample& src, int k, std::uint64_t new_id);

/// Online augmentation of a single flow: jitter -> scale -> drop -> insert
/// -> noise, all stochastic, each a no-op on degenerate sizes. Output
/// timestamps are re-anchored so t[0] == 0 and stay non-decreasing.
struct TrainExample {
    FlowInput input;
    int label = 0;
};
TrainExample augment_flow(const PreparedSample& sample, const AugmentConfig& cfg, Rng& rng);

/// Applies augment_flow to every sample of a batch (training only;
/// validation and test data must never pass through here).
std::vector<TrainExample> augment_batch(const std::vector<std::shared_ptr<const PreparedSample>>& batch,
                                        const AugmentConfig& cfg, Rng& rng);

void write_class_stats_csv(const ClassStats& stats, const std::vector<std::string>& class_names,
                           const std::filesystem::path& path);
void write_class_stats_json(const ClassStats& stats, const std::vector<std::string>& class_names,
                            const std::filesystem::path& path);

}  // namespace athena
