#include "gssl/losses.hpp"

#include <cmath>
#include <string>
#include <utility>

#include "gssl/errors.hpp"

namespace gssl {

namespace {

// Large finite stand-in for -inf; exp(x - max) underflows to exactly 0.
constexpr double kMaskedLogit = -1e30;

Tensor normalized_rows_or_throw(const Tensor& m, const char* what) {
    Tensor out = m;
    for (std::size_t r = 0; r < m.rows; ++r) {
        const double n = m.row_norm(r);
        if (n == 0.0)
            throw DegenerateInput(std::string(what) + ": zero-norm row " + std::to_string(r));
        for (std::size_t c = 0; c < m.cols; ++c) out.at(r, c) /= n;
    }
    return out;
}

}  // namespace

ScaledCosineResult scaled_cosine_error(Tape& tape, const Tensor& x_true, Tape::Var x_rec, double gamma) {
    if (gamma < 1.0) throw InvalidArgument("scaled_cosine_error: gamma must be >= 1");
    const Tensor& rec = tape.value(x_rec);
    if (x_true.rows != rec.rows || x_true.cols != rec.cols)
        throw InvalidArgument("scaled_cosine_error: row sets disagree");

    std::vector<std::size_t> kept;
    kept.reserve(x_true.rows);
    for (std::size_t r = 0; r < x_true.rows; ++r)
        if (x_true.row_norm(r) > 0.0) kept.push_back(r);

    ScaledCosineResult res;
    res.counted_rows = kept.size();
    res.skipped_rows = x_true.rows - kept.size();
    if (kept.empty()) {
        res.loss = tape.constant(Tensor::scalar(0.0));  // empty masked set scores 0
        return res;
    }

    Tensor truth(kept.size(), x_true.cols);
    for (std::size_t k = 0; k < kept.size(); ++k)
        for (std::size_t c = 0; c < x_true.cols; ++c) truth.at(k, c) = x_true.at(kept[k], c);

    Tape::Var tn = tape.constant(normalized_rows_or_throw(truth, "scaled_cosine_error(x_true)"));
    Tape::Var rn = tape.row_normalize(tape.select_rows(x_rec, kept));
    Tape::Var cos = tape.rowwise_dot(tn, rn);
    Tape::Var per = tape.pow_const(tape.affine(cos, -1.0, 1.0), gamma);
    res.loss = tape.mean_all(per);
    return res;
}

NtXentResult nt_xent_with_queue(Tape& tape, Tape::Var z1, const Tensor& z2, const DynamicQueue& queue,
                                double tau) {
    if (tau <= 0.0) throw InvalidArgument("nt_xent: temperature must be positive");
    const Tensor& a = tape.value(z1);
    if (a.rows < 1) throw InvalidArgument("nt_xent: empty batch");
    if (a.rows != z2.rows || a.cols != z2.cols)
        throw InvalidArgument("nt_xent: view shapes disagree");
    if (queue.size() > 0 && queue.width() != a.cols)
        throw ContractViolation("nt_xent: queue width " + std::to_string(queue.width()) +
                                " != embedding width " + std::to_string(a.cols));

    Tape::Var z1n = tape.row_normalize(z1);
    Tape::Var z2n = tape.constant(normalized_rows_or_throw(z2, "nt_xent(z2)"));
    Tape::Var sims = tape.matmul_nt(z1n, z2n);  // BxB, cosine by construction
    Tape::Var logits = tape.scale(sims, 1.0 / tau);
    if (queue.size() > 0) {
        Tape::Var qn = tape.constant(normalized_rows_or_throw(queue.snapshot(), "nt_xent(queue)"));
        Tape::Var qsims = tape.matmul_nt(z1n, qn);
        logits = tape.concat_cols(logits, tape.scale(qsims, 1.0 / tau));
    }
    Tape::Var denom = tape.logsumexp_rows(logits);
    Tape::Var positive = tape.scale(tape.diag(sims), 1.0 / tau);
    NtXentResult res;
    res.per_anchor = tape.sub(denom, positive);
    res.loss = tape.mean_all(res.per_anchor);
    return res;
}

SpclResult spcl_loss(Tape& tape, Tape::Var z, const std::vector<int>& labels, Tape::Var prototypes,
                     double tau, bool paper_constants) {
    if (tau <= 0.0) throw InvalidArgument("spcl_loss: temperature must be positive");
    const Tensor& zv = tape.value(z);
    const Tensor& pv = tape.value(prototypes);
    const std::size_t b = zv.rows;
    const std::size_t num_classes = pv.rows;
    if (b < 1) throw InvalidArgument("spcl_loss: need at least one sample");
    if (labels.size() != b) throw InvalidArgument("spcl_loss: one label per row required");
    if (pv.cols != zv.cols) throw InvalidArgument("spcl_loss: prototype width mismatch");
    for (int y : labels)
        if (y < 0 || static_cast<std::size_t>(y) >= num_classes)
            throw InvalidArgument("spcl_loss: label " + std::to_string(y) + " outside [0," +
                                  std::to_string(num_classes) + ")");

    Tape::Var zn = tape.row_normalize(z);
    Tape::Var pn = tape.row_normalize(prototypes);

    // Instance-instance: ordered same-class pairs.
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t i = 0; i < b; ++i)
        for (std::size_t j = 0; j < b; ++j)
            if (i != j && labels[i] == labels[j]) pairs.emplace_back(i, j);

    SpclResult res;
    res.pair_count = pairs.size();
    if (pairs.empty()) {
        res.instance_term = tape.constant(Tensor::scalar(0.0));
    } else {
        Tape::Var sims = tape.matmul_nt(zn, zn);
        Tape::Var logits = tape.scale(sims, 1.0 / tau);
        Tensor mask(b, b);
        for (std::size_t i = 0; i < b; ++i) mask.at(i, i) = kMaskedLogit;  // anchor out of its denominator
        Tape::Var masked = tape.add(logits, tape.constant(std::move(mask)));
        Tape::Var denom = tape.logsumexp_rows(masked);

        std::vector<std::size_t> anchors(pairs.size());
        for (std::size_t k = 0; k < pairs.size(); ++k) anchors[k] = pairs[k].first;
        Tape::Var per_pair = tape.sub(tape.select_rows(denom, anchors), tape.gather_elems(masked, pairs));
        res.instance_term =
            paper_constants
                ? tape.scale(tape.sum_all(per_pair),
                             1.0 / (static_cast<double>(num_classes * num_classes) *
                                    static_cast<double>(b) * static_cast<double>(b)))
                : tape.mean_all(per_pair);
    }

    // Instance-prototype: softmax over prototypes per sample.
    Tape::Var psims = tape.matmul_nt(zn, pn);
    Tape::Var plogits = tape.scale(psims, 1.0 / tau);
    Tape::Var pdenom = tape.logsumexp_rows(plogits);
    std::vector<std::size_t> own(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) own[i] = static_cast<std::size_t>(labels[i]);
    Tape::Var per_sample = tape.sub(pdenom, tape.select_per_row(plogits, own));
    res.prototype_term =
        paper_constants
            ? tape.scale(tape.sum_all(per_sample),
                         1.0 / (static_cast<double>(num_classes * num_classes) * static_cast<double>(b)))
            : tape.mean_all(per_sample);

    res.loss = tape.add(res.instance_term, res.prototype_term);
    return res;
}

}  // namespace gssl
