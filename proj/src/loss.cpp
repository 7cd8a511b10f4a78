#include "athena/loss.hpp"

#include <cmath>

namespace athena {

namespace {
constexpr double kProbFloor = 1e-12;  // keeps CE finite when p(label) underflows
}

double edl_weight(int length, double decay) { return std::exp(-decay * length); }

EdlResult edl_loss(const Mat& probs, const std::vector<int>& labels, const std::vector<int>& lengths,
                   double decay) {
    const auto b = probs.rows();
    const auto c = probs.cols();
    if (static_cast<Eigen::Index>(labels.size()) != b || static_cast<Eigen::Index>(lengths.size()) != b)
        throw ContractViolation("batch size mismatch between probabilities, labels and lengths");

    EdlResult r;
    r.dlogits = probs;
    r.weights.resize(b);
    r.cross_entropies.resize(b);
    for (Eigen::Index i = 0; i < b; ++i) {
        const int label = labels[i];
        if (label < 0 || label >= c) throw ContractViolation("label out of range");
        if (lengths[i] < 1) throw ContractViolation("flow length must be at least 1");
        double w = edl_weight(lengths[i], decay);
        double ce = -std::log(std::max(probs(i, label), kProbFloor));
        r.weights[i] = w;
        r.cross_entropies[i] = ce;
        r.loss += w * ce;
        r.dlogits(i, label) -= 1.0;
        r.dlogits.row(i) *= w;
    }
    return r;
}

}  // namespace athena
