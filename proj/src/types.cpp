#include "athena/types.hpp"

namespace athena {

Mat PreparedSample::feature_matrix() const {
    Mat f = Mat::Zero(max_len, d);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j) f(i, j) = byte_at(i, j) / 255.0;
    return f;
}

Vec PreparedSample::timestamp_vector() const {
    Vec t = Vec::Zero(max_len);
    t.head(n) = timestamps;
    return t;
}

Vec PreparedSample::mask() const {
    Vec m = Vec::Zero(max_len);
    m.head(n).setOnes();
    return m;
}

std::vector<std::size_t> Dataset::class_counts() const {
    std::vector<std::size_t> counts(class_names.size(), 0);
    for (const auto& s : samples) {
        if (s->label >= 0 && s->label < static_cast<int>(counts.size())) ++counts[s->label];
    }
    return counts;
}

void Dataset::validate() const {
    for (const auto& s : samples) {
        if (!s) throw DataError("dataset contains a null sample");
        if (s->n < 1 || s->n > s->max_len) throw DataError("sample length out of range");
        if (s->d != d || s->max_len != max_len) throw DataError("sample dimensions disagree with dataset");
        if (s->bytes.size() != static_cast<std::size_t>(s->n) * s->d) throw DataError("sample byte payload size mismatch");
        if (s->timestamps.size() != s->n) throw DataError("sample timestamp count mismatch");
        if (s->label < 0 || s->label >= num_classes()) throw DataError("sample label out of range");
    }
}

FlowInput to_input(const PreparedSample& s) { return prefix_input(s, s.n); }

FlowInput prefix_input(const PreparedSample& s, int k) {
    if (k < 1 || k > s.n) throw ContractViolation("prefix length out of range");
    FlowInput in;
    in.length = k;
    in.packets.resize(k, s.d);
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < s.d; ++j) in.packets(i, j) = s.byte_at(i, j) / 255.0;
    in.times = s.timestamps.head(k);
    return in;
}

}  // namespace athena
