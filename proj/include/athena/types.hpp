#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace athena {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

// Error classes map to CLI exit codes: config=2, data=3, training=4, io=5.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct TrainingError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
// API misuse (shape mismatch, wrong encoding kind at a call site).
struct ContractViolation : std::logic_error {
    using std::logic_error::logic_error;
};

/// A flow in model-ready form. Packet bytes are stored raw (one row of
/// `d` bytes per real packet); the [0,1]-normalized padded views required
/// by the model are materialized on demand.
struct PreparedSample {
    int n = 0;        // true packet count, 1 <= n <= max_len
    int d = 0;        // bytes per packet row
    int max_len = 0;  // N, padded sequence length
    std::vector<std::uint8_t> bytes;  // n*d, row-major
    Vec timestamps;                   // length n, seconds, timestamps[0] == 0
    int label = 0;
    std::uint64_t id = 0;         // unique within a dataset
    std::uint64_t origin_id = 0;  // id of the source flow (== id for originals)

    std::uint8_t byte_at(int row, int col) const { return bytes[static_cast<std::size_t>(row) * d + col]; }

    /// N x d matrix with entries in [0,1]; rows beyond n are zero.
    Mat feature_matrix() const;
    /// Length-N timestamp vector, zero beyond n.
    Vec timestamp_vector() const;
    /// Length-N binary mask, 1 for i < n.
    Vec mask() const;
};

struct Dataset {
    int d = 0;
    int max_len = 0;
    std::vector<std::string> class_names;
    std::vector<std::shared_ptr<const PreparedSample>> samples;

    int num_classes() const { return static_cast<int>(class_names.size()); }
    std::size_t size() const { return samples.size(); }
    std::vector<std::size_t> class_counts() const;
    void validate() const;  // throws DataError on malformed contents
};

/// Dense model input: only the real rows of one flow, already normalized.
struct FlowInput {
    Mat packets;  // n x d, entries in [0,1]
    Vec times;    // length n, times[0] == 0 for unaugmented flows
    int length = 0;
};

FlowInput to_input(const PreparedSample& s);
/// First k packets of a flow as a model input (k <= s.n).
FlowInput prefix_input(const PreparedSample& s, int k);

}  // namespace athena
