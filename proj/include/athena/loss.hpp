#pragma once

#include "athena/types.hpp"

namespace athena {

/// Cross-entropy weighted toward short flows: w_i = exp(-decay * n_i),
/// L = sum_i w_i * CE_i. The sum is deliberately not normalized by batch
/// size. dlogits holds the per-sample gradient w.r.t. the logits
/// (w_i * (p_i - onehot_i)), ready to feed backward().
struct EdlResult {
    double loss = 0.0;
    Mat dlogits;  // batch x C
    Vec weights;
    Vec cross_entropies;
};

EdlResult edl_loss(const Mat& probs, const std::vector<int>& labels, const std::vector<int>& lengths,
                   double decay = 0.1);

double edl_weight(int length, double decay = 0.1);

}  // namespace athena
