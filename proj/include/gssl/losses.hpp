#pragma once

#include <vector>

#include "gssl/queue.hpp"
#include "gssl/tape.hpp"

namespace gssl {

// Mean over rows of (1 - cos(x_i, x~_i))^gamma. Rows whose true features have
// zero norm cannot be scored by a cosine and are excluded from the average
// (skipped_rows counts them); an empty row set yields the constant 0.
struct ScaledCosineResult {
    Tape::Var loss;
    std::size_t counted_rows = 0;
    std::size_t skipped_rows = 0;
};
ScaledCosineResult scaled_cosine_error(Tape& tape, const Tensor& x_true, Tape::Var x_rec, double gamma);

// NT-Xent over view-1 anchors with extra negatives from the queue:
//   l_i = -sim(z1_i, z2_i)/tau + log( sum_k e^{sim(z1_i, z2_k)/tau}
//                                     + sum_j e^{sim(z1_i, q_j)/tau} ).
// z2 and the queue are detached by contract. Empty queue reduces the
// denominator to the batch term alone, bit-for-bit.
struct NtXentResult {
    Tape::Var loss;        // 1x1 mean over anchors
    Tape::Var per_anchor;  // Bx1
};
NtXentResult nt_xent_with_queue(Tape& tape, Tape::Var z1, const Tensor& z2, const DynamicQueue& queue,
                                double tau);

// Supervised prototypical contrast. Instance-instance: ordered same-class pairs
// (i,j), i != j, each scored against all other instances (anchor excluded from
// its denominator). Instance-prototype: softmax over prototypes per sample.
// Prototypes only appear in the second term. Each term is a mean over its valid
// index set unless paper_constants asks for the printed 1/(C^2 B^2), 1/(C^2 B)
// scaling.
struct SpclResult {
    Tape::Var loss;
    Tape::Var instance_term;   // 1x1, constant 0 when no same-class pair exists
    Tape::Var prototype_term;  // 1x1
    std::size_t pair_count = 0;
};
SpclResult spcl_loss(Tape& tape, Tape::Var z, const std::vector<int>& labels, Tape::Var prototypes,
                     double tau, bool paper_constants = false);

}  // namespace gssl
