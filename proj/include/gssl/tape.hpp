#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "gssl/tensor.hpp"

namespace gssl {

// Reverse-mode tape. Every primitive records a backward rule at call time; the
// recorded graph is discarded with the tape, so one tape serves one forward pass.
// Creation order is the topological order used by backward().
class Tape {
public:
    struct Var {
        std::uint32_t id = UINT32_MAX;
        bool valid() const { return id != UINT32_MAX; }
    };

    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    // When set, every node value is checked for NaN/Inf as it is produced.
    void set_check_finite(bool on) { check_finite_ = on; }

    Var constant(Tensor t);
    // Leaf that accumulates a gradient. The tensor is copied in; read the result
    // through grad() after backward().
    Var leaf(Tensor t);

    // ---- primitives ----
    Var matmul(Var a, Var b);                 // (m,k)x(k,n)
    Var matmul_nt(Var a, Var b);              // a * b^T : (m,k)x(n,k) -> (m,n)
    Var add(Var a, Var b);
    Var sub(Var a, Var b);
    Var mul(Var a, Var b);                    // elementwise
    Var affine(Var a, double k, double c);    // k*a + c elementwise
    Var scale(Var a, double k) { return affine(a, k, 0.0); }
    Var add_rowvec(Var a, Var rowvec);        // broadcast 1xC over rows
    Var relu(Var a);
    Var prelu(Var a, Var slope);              // slope: 1x1 learnable
    Var log(Var a);
    Var exp(Var a);
    Var pow_const(Var a, double p);           // requires a >= 0 when p is fractional
    Var softmax_rows(Var a);
    Var logsumexp_rows(Var a);                // (n,c) -> (n,1)
    Var sum_all(Var a);                       // -> 1x1
    Var mean_all(Var a);                      // -> 1x1
    Var concat_rows(const std::vector<Var>& parts);
    Var concat_cols(Var a, Var b);
    Var row_normalize(Var a);                 // rows to unit L2; zero row -> DegenerateInput
    Var rowwise_dot(Var a, Var b);            // (n,c),(n,c) -> (n,1)
    Var cosine_sim(Var u, Var v);             // two 1xD (or same-shape) -> 1x1
    Var diag(Var a);                          // (n,n) -> (n,1)
    Var select_rows(Var a, std::vector<std::size_t> idx);
    Var replace_rows(Var a, std::vector<std::size_t> idx, Var token);  // token 1xC
    Var select_per_row(Var a, std::vector<std::size_t> col_of_row);    // (n,c) -> (n,1)
    Var gather_elems(Var a, std::vector<std::pair<std::size_t, std::size_t>> rc);  // -> (k,1)

    // Norms. gamma/beta are 1xC leaves; running stats are external buffers owned
    // by the parameter set, updated in train mode when update_stats is set.
    Var batch_norm(Var x, Var gamma, Var beta, Tensor* running_mean, Tensor* running_var,
                   bool train, bool update_stats, double momentum = 0.1, double eps = 1e-5);
    Var layer_norm(Var x, Var gamma, Var beta, double eps = 1e-5);

    // Graph ops. Segments are [offsets[i], offsets[i+1]) row ranges.
    Var segment_mean(Var h, std::vector<std::size_t> offsets);
    Var segment_sum(Var h, std::vector<std::size_t> offsets);
    Var segment_max(Var h, std::vector<std::size_t> offsets);
    // out[v] = (1+eps)*h[v] + sum_{u in N(v)} h[u], undirected edge pairs.
    Var gin_aggregate(Var h, Var eps, const std::vector<std::array<std::size_t, 2>>& edges);

    void backward(Var loss);

    const Tensor& value(Var v) const { return nodes_[v.id].val; }
    // Zero tensor of the node's shape if the node was never reached.
    Tensor grad(Var v) const;
    std::size_t node_count() const { return nodes_.size(); }

private:
    struct Node {
        Tensor val;
        Tensor grad;
        bool grad_alloc = false;
        bool needs_grad = false;  // leaf-or-derived-from-leaf; others skip backward
        std::function<void(Tape&, std::uint32_t)> back;
    };

    std::vector<Node> nodes_;
    bool check_finite_ = false;

    Var push(Tensor val, bool needs_grad, std::function<void(Tape&, std::uint32_t)> back);
    bool any_needs_grad(std::initializer_list<Var> vs) const;
    Tensor& grad_buf(std::uint32_t id);
    void accumulate(std::uint32_t id, const Tensor& g);
    const Tensor& val(std::uint32_t id) const { return nodes_[id].val; }
    const Tensor& gradv(std::uint32_t id) const { return nodes_[id].grad; }
    friend struct TapeTestPeer;
};

}  // namespace gssl
