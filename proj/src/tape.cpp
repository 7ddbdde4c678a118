#include "gssl/tape.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <string>

#include "gssl/errors.hpp"

namespace gssl {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using MapConst = Eigen::Map<const RowMat>;

MapConst emap(const Tensor& t) {
    return MapConst(t.data.data(), static_cast<Eigen::Index>(t.rows), static_cast<Eigen::Index>(t.cols));
}

MapMat emap(Tensor& t) {
    return MapMat(t.data.data(), static_cast<Eigen::Index>(t.rows), static_cast<Eigen::Index>(t.cols));
}

void require(bool ok, const std::string& msg) {
    if (!ok) throw InvalidArgument(msg);
}

}  // namespace

Tape::Var Tape::push(Tensor val, bool needs_grad, std::function<void(Tape&, std::uint32_t)> back) {
    if (check_finite_ && !val.all_finite())
        throw NumericAbort("tape produced a non-finite value at node " + std::to_string(nodes_.size()));
    Node n;
    n.val = std::move(val);
    n.needs_grad = needs_grad;
    if (needs_grad) n.back = std::move(back);
    nodes_.push_back(std::move(n));
    return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

bool Tape::any_needs_grad(std::initializer_list<Var> vs) const {
    for (Var v : vs)
        if (nodes_[v.id].needs_grad) return true;
    return false;
}

Tensor& Tape::grad_buf(std::uint32_t id) {
    Node& n = nodes_[id];
    if (!n.grad_alloc) {
        n.grad = Tensor(n.val.rows, n.val.cols);
        n.grad_alloc = true;
    }
    return n.grad;
}

void Tape::accumulate(std::uint32_t id, const Tensor& g) {
    if (!nodes_[id].needs_grad) return;
    Tensor& buf = grad_buf(id);
    check_same_shape(buf, g, "grad accumulate");
    for (std::size_t i = 0; i < buf.data.size(); ++i) buf.data[i] += g.data[i];
}

Tensor Tape::grad(Var v) const {
    const Node& n = nodes_[v.id];
    if (n.grad_alloc) return n.grad;
    return Tensor(n.val.rows, n.val.cols);
}

Tape::Var Tape::constant(Tensor t) { return push(std::move(t), false, nullptr); }

Tape::Var Tape::leaf(Tensor t) {
    t.requires_grad = true;
    return push(std::move(t), true, nullptr);
}

Tape::Var Tape::matmul(Var a, Var b) {
    const Tensor& A = val(a.id);
    const Tensor& B = val(b.id);
    require(A.cols == B.rows, "matmul: inner dims " + std::to_string(A.cols) + " vs " + std::to_string(B.rows));
    Tensor C(A.rows, B.cols);
    emap(C) = emap(A) * emap(B);
    const auto ai = a.id, bi = b.id;
    return push(std::move(C), any_needs_grad({a, b}), [ai, bi](Tape& t, std::uint32_t self) {
        const Tensor& g = t.gradv(self);
        if (t.nodes_[ai].needs_grad) {
            Tensor da(t.val(ai).rows, t.val(ai).cols);
            emap(da) = emap(g) * emap(t.val(bi)).transpose();
            t.accumulate(ai, da);
        }
        if (t.nodes_[bi].needs_grad) {
            Tensor db(t.val(bi).rows, t.val(bi).cols);
            emap(db) = emap(t.val(ai)).transpose() * emap(g);
            t.accumulate(bi, db);
        }
    });
}

Tape::Var Tape::matmul_nt(Var a, Var b) {
    const Tensor& A = val(a.id);
    const Tensor& B = val(b.id);
    require(A.cols == B.cols, "matmul_nt: inner dims " + std::to_string(A.cols) + " vs " + std::to_string(B.cols));
    Tensor C(A.rows, B.rows);
    emap(C) = emap(A) * emap(B).transpose();
    const auto ai = a.id, bi = b.id;
    return push(std::move(C), any_needs_grad({a, b}), [ai, bi](Tape& t, std::uint32_t self) {
        const Tensor& g = t.gradv(self);
        if (t.nodes_[ai].needs_grad) {
            Tensor da(t.val(ai).rows, t.val(ai).cols);
            emap(da) = emap(g) * emap(t.val(bi));
            t.accumulate(ai, da);
        }
        if (t.nodes_[bi].needs_grad) {
            Tensor db(t.val(bi).rows, t.val(bi).cols);
            emap(db) = emap(g).transpose() * emap(t.val(ai));
            t.accumulate(bi, db);
        }
    });
}

Tape::Var Tape::add(Var a, Var b) {
    const Tensor& A = val(a.id);
    const Tensor& B = val(b.id);
    check_same_shape(A, B, "add");
    Tensor C = A;
    for (std::size_t i = 0; i < C.data.size(); ++i) C.data[i] += B.data[i];
    const auto ai = a.id, bi = b.id;
    return push(std::move(C), any_needs_grad({a, b}), [ai, bi](Tape& t, std::uint32_t self) {
        t.accumulate(ai, t.gradv(self));
        t.accumulate(bi, t.gradv(self));
    });
}

Tape::Var Tape::sub(Var a, Var b) {
    const Tensor& A = val(a.id);
    const Tensor& B = val(b.id);
    check_same_shape(A, B, "sub");
    Tensor C = A;
    for (std::size_t i = 0; i < C.data.size(); ++i) C.data[i] -= B.data[i];
    const auto ai = a.id, bi = b.id;
    return push(std::move(C), any_needs_grad({a, b}), [ai, bi](Tape& t, std::uint32_t self) {
        const Tensor& g = t.gradv(self);
        t.accumulate(ai, g);
        if (t.nodes_[bi].needs_grad) {
            Tensor nb = g;
            for (auto& v : nb.data) v = -v;
            t.accumulate(bi, nb);
        }
    });
}

Tape::Var Tape::mul(Var a, Var b) {
    const Tensor& A = val(a.id);
    const Tensor& B = val(b.id);
    check_same_shape(A, B, "mul");
    Tensor C = A;
    for (std::size_t i = 0; i < C.data.size(); ++i) C.data[i] *= B.data[i];
    const auto ai = a.id, bi = b.id;
    return push(std::move(C), any_needs_grad({a, b}), [ai, bi](Tape& t, std::uint32_t self) {
        const Tensor& g = t.gradv(self);
        if (t.nodes_[ai].needs_grad) {
            Tensor da = g;
            const Tensor& B2 = t.val(bi);
            for (std::size_t i = 0; i < da.data.size(); ++i) da.data[i] *= B2.data[i];
            t.accumulate(ai, da);
        }
        if (t.nodes_[bi].needs_grad) {
            Tensor db = g;
            const Tensor& A2 = t.val(ai);
            for (std::size_t i = 0; i < db.data.size(); ++i) db.data[i] *= A2.data[i];
            t.accumulate(bi, db);
        }
    });
}

Tape::Var Tape::affine(Var a, double k, double c) {
    Tensor C = val(a.id);
    for (auto& v : C.data) v = k * v + c;
    const auto ai = a.id;
    return push(std::move(C), any_needs_grad({a}), [ai, k](Tape& t, std::uint32_t self) {
        Tensor da = t.gradv(self);
        for (auto& v : da.data) v *= k;
        t.accumulate(ai, da);
    });
}

Tape::Var Tape::add_rowvec(Var a, Var rowvec) {
    const Tensor& A = val(a.id);
    const Tensor& V = val(rowvec.id);
    require(V.rows == 1 && V.cols == A.cols, "add_rowvec: need 1x" + std::to_string(A.cols));
    Tensor C = A;
    for (std::size_t r = 0; r < C.rows; ++r)
        for (std::size_t c = 0; c < C.cols; ++c) C.at(r, c) += V.at(0, c);
    const auto ai = a.id, vi = rowvec.id;
    return push(std::move(C), any_needs_grad({a, rowvec}), [ai, vi](Tape& t, std::uint32_t self) {
        const Tensor& g = t.gradv(self);
        t.accumulate(ai, g);
        if (t.nodes_[vi].needs_grad) {
            Tensor dv(1, g.cols);
            for (std::size_t r = 0; r < g.rows; ++r)
                for (std::size_t c = 0; c < g.cols; ++c) dv.at(0, c) += g.at(r, c);
            t.accumulate(vi, dv);
        }
    });
}

Tape::Var Tape::relu(Var a) {
    Tensor C = val(a.id);
    for (auto& v : C.data) v = v > 0.0 ? v : 0.0;
    const auto ai = a.id;
    return push(std::move(C), any_needs_grad({a}), [ai](Tape& t, std::uint32_t self) {
        Tensor da = t.gradv(self);
        const Tensor& A = t.val(ai);
        for (std::size_t i = 0; i < da.data.size(); ++i)
            if (A.data[i] <= 0.0) da.data[i] = 0.0;
        t.accumulate(ai, da);
    });
}

Tape::Var Tape::prelu(Var a, Var slope) {
    const Tensor& S = val(slope.id);
    require(S.is_scalar(), "prelu: slope must be 1x1");
    const double s = S.data[0];
    Tensor C = val(a.id);
    for (auto& v : C.data) v = v > 0.0 ? v : s * v;
    const auto ai = a.id, si = slope.id;
    return push(std::move(C), any_needs_grad({a, slope}), [ai, si, s](Tape& t, std::uint32_t self) {
        const Tensor& g = t.gradv(self);
        const Tensor& A = t.val(ai);
        if (t.nodes_[ai].needs_grad) {
            Tensor da = g;
            for (std::size_t i = 0; i < da.data.size(); ++i)
                if (A.data[i] <= 0.0) da.data[i] *= s;
            t.accumulate(ai, da);
        }
        if (t.nodes_[si].needs_grad) {
            double ds = 0.0;
            for (std::size_t i = 0; i < g.data.size(); ++i)
                if (A.data[i] <= 0.0) ds += g.data[i] * A.data[i];
            t.accumulate(si, Tensor::scalar(ds));
        }
    });
}

Tape::Var Tape::log(Var a) {
    Tensor C = val(a.id);
    for (auto& v : C.data) v = std::log(v);
    const auto ai = a.id;
    return push(std::move(C), any_needs_grad({a}), [ai](Tape& t, std::uint32_t self) {
        Tensor da = t.gradv(self);
        const Tensor& A = t.val(ai);
        for (std::size_t i = 0; i < da.data.size(); ++i) da.data[i] /= A.data[i];
        t.accumulate(ai, da);
    });
}

Tape::Var Tape::exp(Var a) {
    Tensor C = val(a.id);
    for (auto& v : C.data) v = std::exp(v);
    const auto ai = a.id;
    return push(std::move(C), any_needs_grad({a}), [ai](Tape& t, std::uint32_t self) {
        Tensor da = t.gradv(self);
        const Tensor& Y = t.val(self);
        for (std::size_t i = 0; i < da.data.size(); ++i) da.data[i] *= Y.data[i];
        t.accumulate(ai, da);
    });
}

Tape::Var Tape::pow_const(Var a, double p) {
    Tensor C = val(a.id);
    for (auto& v : C.data) v = std::pow(v, p);
    const auto ai = a.id;
    return push(std::move(C), any_needs_grad({a}), [ai, p](Tape& t, std::uint32_t self) {
        Tensor da = t.gradv(self);
        const Tensor& A = t.val(ai);
        for (std::size_t i = 0; i < da.data.size(); ++i) {
            const double d = (p == 1.0) ? 1.0 : p * std::pow(A.data[i], p - 1.0);
            da.data[i] *= d;
        }
        t.accumulate(ai, da);
    });
}

Tape::Var Tape::softmax_rows(Var a) {
    const Tensor& A = val(a.id);
    Tensor C(A.rows, A.cols);
    for (std::size_t r = 0; r < A.rows; ++r) {
        double m = -std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < A.cols; ++c) m = std::max(m, A.at(r, c));
        double z = 0.0;
        for (std::size_t c = 0; c < A.cols; ++c) z += std::exp(A.at(r, c) - m);
        for (std::size_t c = 0; c < A.cols; ++c) C.at(r, c) = std::exp(A.at(r, c) - m) / z;
    }
    const auto ai = a.id;
    return push(std::move(C), any_needs_grad({a}), [ai](Tape& t, std::uint32_t self) {
        const Tensor& g = t.gradv(self);
        const Tensor& Y = t.val(self);
        Tensor da(g.rows, g.cols);
        for (std::size_t r = 0; r < g.rows; ++r) {
            double dot = 0.0;
            for (std::size_t c = 0; c < g.cols; ++c) dot += g.at(r, c) * Y.at(r, c);
            for (std::size_t c = 0; c < g.cols; ++c) da.at(r, c) = Y.at(r, c) * (g.at(r, c) - dot);
        }
        t.accumulate(ai, da);
    });
}

Tape::Var Tape::logsumexp_rows(Var a) {
    const Tensor& A = val(a.id);
    Tensor C(A.rows, 1);
    for (std::size_t r = 0; r < A.rows; ++r) {
        double m = -std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < A.cols; ++c) m = std::max(m, A.at(r, c));
        double z = 0.0;
        for (std::size_t c = 0; c < A.cols; ++c) z += std::exp(A.at(r, c) - m);
        C.at(r, 0) = m + std::log(z);
    }
    const auto ai = a.id;
    return push(std::move(C), any_needs_grad({a}), [ai](Tape& t, std::uint32_t self) {
        const Tensor& g = t.gradv(self);
        const Tensor& A2 = t.val(ai);
        const Tensor& Y = t.val(self);
        Tensor da(A2.rows, A2.cols);
        for (std::size_t r = 0; r < A2.rows; ++r)
            for (std::size_t c = 0; c < A2.cols; ++c)
                da.at(r, c) = g.at(r, 0) * std::exp(A2.at(r, c) - Y.at(r, 0));
        t.accumulate(ai, da);
    });
}

Tape::Var Tape::sum_all(Var a) {
    const Tensor& A = val(a.id);
    double s = 0.0;
    for (double v : A.data) s += v;
    const auto ai = a.id;
    return push(Tensor::scalar(s), any_needs_grad({a}), [ai](Tape& t, std::uint32_t self) {
        const double g = t.gradv(self).data[0];
        Tensor da(t.val(ai).rows, t.val(ai).cols);
        for (auto& v : da.data) v = g;
        t.accumulate(ai, da);
    });
}

Tape::Var Tape::mean_all(Var a) {
    const Tensor& A = val(a.id);
    require(A.size() > 0, "mean_all: empty tensor");
    double s = 0.0;
    for (double v : A.data) s += v;
    const double inv = 1.0 / static_cast<double>(A.size());
    const auto ai = a.id;
    return push(Tensor::scalar(s * inv), any_needs_grad({a}), [ai, inv](Tape& t, std::uint32_t self) {
        const double g = t.gradv(self).data[0] * inv;
        Tensor da(t.val(ai).rows, t.val(ai).cols);
        for (auto& v : da.data) v = g;
        t.accumulate(ai, da);
    });
}

Tape::Var Tape::concat_rows(const std::vector<Var>& parts) {
    require(!parts.empty(), "concat_rows: no parts");
    const std::size_t cols = val(parts[0].id).cols;
    std::size_t rows = 0;
    for (Var p : parts) {
        require(val(p.id).cols == cols, "concat_rows: column mismatch");
        rows += val(p.id).rows;
    }
    Tensor C(rows, cols);
    std::size_t r0 = 0;
    for (Var p : parts) {
        const Tensor& P = val(p.id);
        std::copy(P.data.begin(), P.data.end(), C.data.begin() + static_cast<std::ptrdiff_t>(r0 * cols));
        r0 += P.rows;
    }
    bool ng = false;
    std::vector<std::uint32_t> ids;
    ids.reserve(parts.size());
    for (Var p : parts) {
        ids.push_back(p.id);
        ng = ng || nodes_[p.id].needs_grad;
    }
    return push(std::move(C), ng, [ids](Tape& t, std::uint32_t self) {
        const Tensor& g = t.gradv(self);
        std::size_t r0 = 0;
        for (std::uint32_t id : ids) {
            const Tensor& P = t.val(id);
            if (t.nodes_[id].needs_grad) {
                Tensor dp(P.rows, P.cols);
                std::copy(g.data.begin() + static_cast<std::ptrdiff_t>(r0 * g.cols),
                          g.data.begin() + static_cast<std::ptrdiff_t>((r0 + P.rows) * g.cols), dp.data.begin());
                t.accumulate(id, dp);
            }
            r0 += P.rows;
        }
    });
}

Tape::Var Tape::concat_cols(Var a, Var b) {
    const Tensor& A = val(a.id);
    const Tensor& B = val(b.id);
    require(A.rows == B.rows, "concat_cols: row mismatch");
    Tensor C(A.rows, A.cols + B.cols);
    for (std::size_t r = 0; r < A.rows; ++r) {
        for (std::size_t c = 0; c < A.cols; ++c) C.at(r, c) = A.at(r, c);
        for (std::size_t c = 0; c < B.cols; ++c) C.at(r, A.cols + c) = B.at(r, c);
    }
    const auto ai = a.id, bi = b.id;
    const std::size_t ac = A.cols, bc = B.cols;
    return push(std::move(C), any_needs_grad({a, b}), [ai, bi, ac, bc](Tape& t, std::uint32_t self) {
        const Tensor& g = t.gradv(self);
        if (t.nodes_[ai].needs_grad) {
            Tensor da(g.rows, ac);
            for (std::size_t r = 0; r < g.rows; ++r)
                for (std::size_t c = 0; c < ac; ++c) da.at(r, c) = g.at(r, c);
            t.accumulate(ai, da);
        }
        if (t.nodes_[bi].needs_grad) {
            Tensor db(g.rows, bc);
            for (std::size_t r = 0; r < g.rows; ++r)
                for (std::size_t c = 0; c < bc; ++c) db.at(r, c) = g.at(r, ac + c);
            t.accumulate(bi, db);
        }
    });
}

Tape::Var Tape::row_normalize(Var a) {
    const Tensor& A = val(a.id);
    Tensor C(A.rows, A.cols);
    std::vector<double> norms(A.rows);
    for (std::size_t r = 0; r < A.rows; ++r) {
        const double n = A.row_norm(r);
        if (n == 0.0) throw DegenerateInput("row_normalize: zero-norm row " + std::to_string(r));
        norms[r] = n;
        for (std::size_t c = 0; c < A.cols; ++c) C.at(r, c) = A.at(r, c) / n;
    }
    const auto ai = a.id;
    return push(std::move(C), any_needs_grad({a}), [ai, norms](Tape& t, std::uint32_t self) {
        const Tensor& g = t.gradv(self);
        const Tensor& Y = t.val(self);
        Tensor da(g.rows, g.cols);
        for (std::size_t r = 0; r < g.rows; ++r) {
            double dot = 0.0;
            for (std::size_t c = 0; c < g.cols; ++c) dot += g.at(r, c) * Y.at(r, c);
            for (std::size_t c = 0; c < g.cols; ++c)
                da.at(r, c) = (g.at(r, c) - Y.at(r, c) * dot) / norms[r];
        }
        t.accumulate(ai, da);
    });
}

Tape::Var Tape::rowwise_dot(Var a, Var b) {
    const Tensor& A = val(a.id);
    const Tensor& B = val(b.id);
    check_same_shape(A, B, "rowwise_dot");
    Tensor C(A.rows, 1);
    for (std::size_t r = 0; r < A.rows; ++r) {
        double s = 0.0;
        for (std::size_t c = 0; c < A.cols; ++c) s += A.at(r, c) * B.at(r, c);
        C.at(r, 0) = s;
    }
    const auto ai = a.id, bi = b.id;
    return push(std::move(C), any_needs_grad({a, b}), [ai, bi](Tape& t, std::uint32_t self) {
        const Tensor& g = t.gradv(self);
        const Tensor& A2 = t.val(ai);
        const Tensor& B2 = t.val(bi);
        if (t.nodes_[ai].needs_grad) {
            Tensor da(A2.rows, A2.cols);
            for (std::size_t r = 0; r < A2.rows; ++r)
                for (std::size_t c = 0; c < A2.cols; ++c) da.at(r, c) = g.at(r, 0) * B2.at(r, c);
            t.accumulate(ai, da);
        }
        if (t.nodes_[bi].needs_grad) {
            Tensor db(B2.rows, B2.cols);
            for (std::size_t r = 0; r < B2.rows; ++r)
                for (std::size_t c = 0; c < B2.cols; ++c) db.at(r, c) = g.at(r, 0) * A2.at(r, c);
            t.accumulate(bi, db);
        }
    });
}

Tape::Var Tape::cosine_sim(Var u, Var v) {
    const Tensor& U = val(u.id);
    const Tensor& V = val(v.id);
    check_same_shape(U, V, "cosine_sim");
    double uu = 0.0, vv = 0.0, uv = 0.0;
    for (std::size_t i = 0; i < U.data.size(); ++i) {
        uu += U.data[i] * U.data[i];
        vv += V.data[i] * V.data[i];
        uv += U.data[i] * V.data[i];
    }
    const double nu = std::sqrt(uu), nv = std::sqrt(vv);
    if (nu == 0.0 || nv == 0.0) throw DegenerateInput("cosine_sim: zero-norm vector");
    const double s = uv / (nu * nv);
    const auto ui = u.id, vi = v.id;
    return push(Tensor::scalar(s), any_needs_grad({u, v}), [ui, vi, nu, nv, s](Tape& t, std::uint32_t self) {
        const double g = t.gradv(self).data[0];
        const Tensor& U2 = t.val(ui);
        const Tensor& V2 = t.val(vi);
        if (t.nodes_[ui].needs_grad) {
            Tensor du(U2.rows, U2.cols);
            for (std::size_t i = 0; i < du.data.size(); ++i)
                du.data[i] = g * (V2.data[i] / (nu * nv) - s * U2.data[i] / (nu * nu));
            t.accumulate(ui, du);
        }
        if (t.nodes_[vi].needs_grad) {
            Tensor dv(V2.rows, V2.cols);
            for (std::size_t i = 0; i < dv.data.size(); ++i)
                dv.data[i] = g * (U2.data[i] / (nu * nv) - s * V2.data[i] / (nv * nv));
            t.accumulate(vi, dv);
        }
    });
}

Tape::Var Tape::diag(Var a) {
    const Tensor& A = val(a.id);
    require(A.rows == A.cols, "diag: matrix must be square");
    Tensor C(A.rows, 1);
    for (std::size_t r = 0; r < A.rows; ++r) C.at(r, 0) = A.at(r, r);
    const auto ai = a.id;
    return push(std::move(C), any_needs_grad({a}), [ai](Tape& t, std::uint32_t self) {
        const Tensor& g = t.gradv(self);
        Tensor da(t.val(ai).rows, t.val(ai).cols);
        for (std::size_t r = 0; r < da.rows; ++r) da.at(r, r) = g.at(r, 0);
        t.accumulate(ai, da);
    });
}

Tape::Var Tape::select_rows(Var a, std::vector<std::size_t> idx) {
    const Tensor& A = val(a.id);
    Tensor C(idx.size(), A.cols);
    for (std::size_t k = 0; k < idx.size(); ++k) {
        require(idx[k] < A.rows, "select_rows: index out of range");
        for (std::size_t c = 0; c < A.cols; ++c) C.at(k, c) = A.at(idx[k], c);
    }
    const auto ai = a.id;
    return push(std::move(C), any_needs_grad({a}), [ai, idx = std::move(idx)](Tape& t, std::uint32_t self) {
        const Tensor& g = t.gradv(self);
        Tensor da(t.val(ai).rows, t.val(ai).cols);
        for (std::size_t k = 0; k < idx.size(); ++k)
            for (std::size_t c = 0; c < g.cols; ++c) da.at(idx[k], c) += g.at(k, c);
        t.accumulate(ai, da);
    });
}

Tape::Var Tape::replace_rows(Var a, std::vector<std::size_t> idx, Var token) {
    const Tensor& A = val(a.id);
    const Tensor& T = val(token.id);
    require(T.rows == 1 && T.cols == A.cols, "replace_rows: token must be 1x" + std::to_string(A.cols));
    Tensor C = A;
    std::vector<char> replaced(A.rows, 0);
    for (std::size_t r : idx) {
        require(r < A.rows, "replace_rows: index out of range");
        require(!replaced[r], "replace_rows: duplicate row index");
        replaced[r] = 1;
        for (std::size_t c = 0; c < A.cols; ++c) C.at(r, c) = T.at(0, c);
    }
    const auto ai = a.id, ti = token.id;
    return push(std::move(C), any_needs_grad({a, token}),
                [ai, ti, replaced = std::move(replaced)](Tape& t, std::uint32_t self) {
                    const Tensor& g = t.gradv(self);
                    if (t.nodes_[ai].needs_grad) {
                        Tensor da = g;
                        for (std::size_t r = 0; r < da.rows; ++r)
                            if (replaced[r])
                                for (std::size_t c = 0; c < da.cols; ++c) da.at(r, c) = 0.0;
                        t.accumulate(ai, da);
                    }
                    if (t.nodes_[ti].needs_grad) {
                        Tensor dt(1, g.cols);
                        for (std::size_t r = 0; r < g.rows; ++r)
                            if (replaced[r])
                                for (std::size_t c = 0; c < g.cols; ++c) dt.at(0, c) += g.at(r, c);
                        t.accumulate(ti, dt);
                    }
                });
}

Tape::Var Tape::select_per_row(Var a, std::vector<std::size_t> col_of_row) {
    const Tensor& A = val(a.id);
    require(col_of_row.size() == A.rows, "select_per_row: need one column per row");
    Tensor C(A.rows, 1);
    for (std::size_t r = 0; r < A.rows; ++r) {
        require(col_of_row[r] < A.cols, "select_per_row: column out of range");
        C.at(r, 0) = A.at(r, col_of_row[r]);
    }
    const auto ai = a.id;
    return push(std::move(C), any_needs_grad({a}),
                [ai, col = std::move(col_of_row)](Tape& t, std::uint32_t self) {
                    const Tensor& g = t.gradv(self);
                    Tensor da(t.val(ai).rows, t.val(ai).cols);
                    for (std::size_t r = 0; r < da.rows; ++r) da.at(r, col[r]) += g.at(r, 0);
                    t.accumulate(ai, da);
                });
}

Tape::Var Tape::gather_elems(Var a, std::vector<std::pair<std::size_t, std::size_t>> rc) {
    const Tensor& A = val(a.id);
    Tensor C(rc.size(), 1);
    for (std::size_t k = 0; k < rc.size(); ++k) {
        require(rc[k].first < A.rows && rc[k].second < A.cols, "gather_elems: index out of range");
        C.at(k, 0) = A.at(rc[k].first, rc[k].second);
    }
    const auto ai = a.id;
    return push(std::move(C), any_needs_grad({a}), [ai, rc = std::move(rc)](Tape& t, std::uint32_t self) {
        const Tensor& g = t.gradv(self);
        Tensor da(t.val(ai).rows, t.val(ai).cols);
        for (std::size_t k = 0; k < rc.size(); ++k) da.at(rc[k].first, rc[k].second) += g.at(k, 0);
        t.accumulate(ai, da);
    });
}

Tape::Var Tape::batch_norm(Var x, Var gamma, Var beta, Tensor* running_mean, Tensor* running_var,
                           bool train, bool update_stats, double momentum, double eps) {
    const Tensor& X = val(x.id);
    const Tensor& G = val(gamma.id);
    const Tensor& B = val(beta.id);
    const std::size_t N = X.rows, C = X.cols;
    require(G.rows == 1 && G.cols == C && B.rows == 1 && B.cols == C, "batch_norm: gamma/beta must be 1xC");
    require(running_mean && running_var && running_mean->cols == C && running_var->cols == C,
            "batch_norm: running stats must be 1xC");
    require(N >= 1, "batch_norm: empty input");

    Tensor xhat(N, C);
    std::vector<double> inv_std(C);
    if (train) {
        for (std::size_t c = 0; c < C; ++c) {
            double m = 0.0;
            for (std::size_t r = 0; r < N; ++r) m += X.at(r, c);
            m /= static_cast<double>(N);
            double v = 0.0;
            for (std::size_t r = 0; r < N; ++r) {
                const double d = X.at(r, c) - m;
                v += d * d;
            }
            v /= static_cast<double>(N);
            inv_std[c] = 1.0 / std::sqrt(v + eps);
            for (std::size_t r = 0; r < N; ++r) xhat.at(r, c) = (X.at(r, c) - m) * inv_std[c];
            if (update_stats) {
                const double v_unbiased = N > 1 ? v * static_cast<double>(N) / static_cast<double>(N - 1) : v;
                running_mean->at(0, c) = (1.0 - momentum) * running_mean->at(0, c) + momentum * m;
                running_var->at(0, c) = (1.0 - momentum) * running_var->at(0, c) + momentum * v_unbiased;
            }
        }
    } else {
        for (std::size_t c = 0; c < C; ++c) {
            inv_std[c] = 1.0 / std::sqrt(running_var->at(0, c) + eps);
            for (std::size_t r = 0; r < N; ++r)
                xhat.at(r, c) = (X.at(r, c) - running_mean->at(0, c)) * inv_std[c];
        }
    }
    Tensor Y(N, C);
    for (std::size_t r = 0; r < N; ++r)
        for (std::size_t c = 0; c < C; ++c) Y.at(r, c) = G.at(0, c) * xhat.at(r, c) + B.at(0, c);

    const auto xi = x.id, gi = gamma.id, bi = beta.id;
    return push(std::move(Y), any_needs_grad({x, gamma, beta}),
                [xi, gi, bi, xhat = std::move(xhat), inv_std = std::move(inv_std), train](
                    Tape& t, std::uint32_t self) {
                    const Tensor& g = t.gradv(self);
                    const Tensor& G2 = t.val(gi);
                    const std::size_t N2 = g.rows, C2 = g.cols;
                    if (t.nodes_[gi].needs_grad) {
                        Tensor dg(1, C2);
                        for (std::size_t r = 0; r < N2; ++r)
                            for (std::size_t c = 0; c < C2; ++c) dg.at(0, c) += g.at(r, c) * xhat.at(r, c);
                        t.accumulate(gi, dg);
                    }
                    if (t.nodes_[bi].needs_grad) {
                        Tensor db(1, C2);
                        for (std::size_t r = 0; r < N2; ++r)
                            for (std::size_t c = 0; c < C2; ++c) db.at(0, c) += g.at(r, c);
                        t.accumulate(bi, db);
                    }
                    if (t.nodes_[xi].needs_grad) {
                        Tensor dx(N2, C2);
                        if (train) {
                            for (std::size_t c = 0; c < C2; ++c) {
                                double sum_dxhat = 0.0, sum_dxhat_xhat = 0.0;
                                for (std::size_t r = 0; r < N2; ++r) {
                                    const double dxh = g.at(r, c) * G2.at(0, c);
                                    sum_dxhat += dxh;
                                    sum_dxhat_xhat += dxh * xhat.at(r, c);
                                }
                                const double invN = 1.0 / static_cast<double>(N2);
                                for (std::size_t r = 0; r < N2; ++r) {
                                    const double dxh = g.at(r, c) * G2.at(0, c);
                                    dx.at(r, c) = inv_std[c] *
                                                  (dxh - invN * sum_dxhat - invN * xhat.at(r, c) * sum_dxhat_xhat);
                                }
                            }
                        } else {
                            for (std::size_t r = 0; r < N2; ++r)
                                for (std::size_t c = 0; c < C2; ++c)
                                    dx.at(r, c) = g.at(r, c) * G2.at(0, c) * inv_std[c];
                        }
                        t.accumulate(xi, dx);
                    }
                });
}

Tape::Var Tape::layer_norm(Var x, Var gamma, Var beta, double eps) {
    const Tensor& X = val(x.id);
    const Tensor& G = val(gamma.id);
    const Tensor& B = val(beta.id);
    const std::size_t N = X.rows, C = X.cols;
    require(G.rows == 1 && G.cols == C && B.rows == 1 && B.cols == C, "layer_norm: gamma/beta must be 1xC");
    require(C >= 1, "layer_norm: empty rows");

    Tensor xhat(N, C);
    std::vector<double> inv_std(N);
    for (std::size_t r = 0; r < N; ++r) {
        double m = 0.0;
        for (std::size_t c = 0; c < C; ++c) m += X.at(r, c);
        m /= static_cast<double>(C);
        double v = 0.0;
        for (std::size_t c = 0; c < C; ++c) {
            const double d = X.at(r, c) - m;
            v += d * d;
        }
        v /= static_cast<double>(C);
        inv_std[r] = 1.0 / std::sqrt(v + eps);
        for (std::size_t c = 0; c < C; ++c) xhat.at(r, c) = (X.at(r, c) - m) * inv_std[r];
    }
    Tensor Y(N, C);
    for (std::size_t r = 0; r < N; ++r)
        for (std::size_t c = 0; c < C; ++c) Y.at(r, c) = G.at(0, c) * xhat.at(r, c) + B.at(0, c);

    const auto xi = x.id, gi = gamma.id, bi = beta.id;
    return push(std::move(Y), any_needs_grad({x, gamma, beta}),
                [xi, gi, bi, xhat = std::move(xhat), inv_std = std::move(inv_std)](Tape& t,
                                                                                   std::uint32_t self) {
                    const Tensor& g = t.gradv(self);
                    const Tensor& G2 = t.val(gi);
                    const std::size_t N2 = g.rows, C2 = g.cols;
                    if (t.nodes_[gi].needs_grad) {
                        Tensor dg(1, C2);
                        for (std::size_t r = 0; r < N2; ++r)
                            for (std::size_t c = 0; c < C2; ++c) dg.at(0, c) += g.at(r, c) * xhat.at(r, c);
                        t.accumulate(gi, dg);
                    }
                    if (t.nodes_[bi].needs_grad) {
                        Tensor db(1, C2);
                        for (std::size_t r = 0; r < N2; ++r)
                            for (std::size_t c = 0; c < C2; ++c) db.at(0, c) += g.at(r, c);
                        t.accumulate(bi, db);
                    }
                    if (t.nodes_[xi].needs_grad) {
                        Tensor dx(N2, C2);
                        const double invC = 1.0 / static_cast<double>(C2);
                        for (std::size_t r = 0; r < N2; ++r) {
                            double sum_dxhat = 0.0, sum_dxhat_xhat = 0.0;
                            for (std::size_t c = 0; c < C2; ++c) {
                                const double dxh = g.at(r, c) * G2.at(0, c);
                                sum_dxhat += dxh;
                                sum_dxhat_xhat += dxh * xhat.at(r, c);
                            }
                            for (std::size_t c = 0; c < C2; ++c) {
                                const double dxh = g.at(r, c) * G2.at(0, c);
                                dx.at(r, c) = inv_std[r] *
                                              (dxh - invC * sum_dxhat - invC * xhat.at(r, c) * sum_dxhat_xhat);
                            }
                        }
                        t.accumulate(xi, dx);
                    }
                });
}

Tape::Var Tape::segment_mean(Var h, std::vector<std::size_t> offsets) {
    const Tensor& H = val(h.id);
    require(offsets.size() >= 2 && offsets.front() == 0 && offsets.back() == H.rows,
            "segment_mean: bad offsets");
    const std::size_t G = offsets.size() - 1;
    Tensor C(G, H.cols);
    for (std::size_t g = 0; g < G; ++g) {
        require(offsets[g + 1] > offsets[g], "segment_mean: empty segment");
        const double inv = 1.0 / static_cast<double>(offsets[g + 1] - offsets[g]);
        for (std::size_t r = offsets[g]; r < offsets[g + 1]; ++r)
            for (std::size_t c = 0; c < H.cols; ++c) C.at(g, c) += H.at(r, c) * inv;
    }
    const auto hi = h.id;
    return push(std::move(C), any_needs_grad({h}),
                [hi, offsets = std::move(offsets)](Tape& t, std::uint32_t self) {
                    const Tensor& g = t.gradv(self);
                    Tensor dh(t.val(hi).rows, t.val(hi).cols);
                    for (std::size_t s = 0; s + 1 < offsets.size(); ++s) {
                        const double inv = 1.0 / static_cast<double>(offsets[s + 1] - offsets[s]);
                        for (std::size_t r = offsets[s]; r < offsets[s + 1]; ++r)
                            for (std::size_t c = 0; c < g.cols; ++c) dh.at(r, c) = g.at(s, c) * inv;
                    }
                    t.accumulate(hi, dh);
                });
}

Tape::Var Tape::segment_sum(Var h, std::vector<std::size_t> offsets) {
    const Tensor& H = val(h.id);
    require(offsets.size() >= 2 && offsets.front() == 0 && offsets.back() == H.rows,
            "segment_sum: bad offsets");
    const std::size_t G = offsets.size() - 1;
    Tensor C(G, H.cols);
    for (std::size_t g = 0; g < G; ++g)
        for (std::size_t r = offsets[g]; r < offsets[g + 1]; ++r)
            for (std::size_t c = 0; c < H.cols; ++c) C.at(g, c) += H.at(r, c);
    const auto hi = h.id;
    return push(std::move(C), any_needs_grad({h}),
                [hi, offsets = std::move(offsets)](Tape& t, std::uint32_t self) {
                    const Tensor& g = t.gradv(self);
                    Tensor dh(t.val(hi).rows, t.val(hi).cols);
                    for (std::size_t s = 0; s + 1 < offsets.size(); ++s)
                        for (std::size_t r = offsets[s]; r < offsets[s + 1]; ++r)
                            for (std::size_t c = 0; c < g.cols; ++c) dh.at(r, c) = g.at(s, c);
                    t.accumulate(hi, dh);
                });
}

Tape::Var Tape::segment_max(Var h, std::vector<std::size_t> offsets) {
    const Tensor& H = val(h.id);
    require(offsets.size() >= 2 && offsets.front() == 0 && offsets.back() == H.rows,
            "segment_max: bad offsets");
    const std::size_t G = offsets.size() - 1;
    Tensor C(G, H.cols);
    std::vector<std::size_t> argmax(G * H.cols);
    for (std::size_t g = 0; g < G; ++g) {
        require(offsets[g + 1] > offsets[g], "segment_max: empty segment");
        for (std::size_t c = 0; c < H.cols; ++c) {
            double best = H.at(offsets[g], c);
            std::size_t arg = offsets[g];
            for (std::size_t r = offsets[g] + 1; r < offsets[g + 1]; ++r)
                if (H.at(r, c) > best) {
                    best = H.at(r, c);
                    arg = r;
                }
            C.at(g, c) = best;
            argmax[g * H.cols + c] = arg;
        }
    }
    const auto hi = h.id;
    return push(std::move(C), any_needs_grad({h}),
                [hi, argmax = std::move(argmax)](Tape& t, std::uint32_t self) {
                    const Tensor& g = t.gradv(self);
                    Tensor dh(t.val(hi).rows, t.val(hi).cols);
                    for (std::size_t s = 0; s < g.rows; ++s)
                        for (std::size_t c = 0; c < g.cols; ++c)
                            dh.at(argmax[s * g.cols + c], c) += g.at(s, c);
                    t.accumulate(hi, dh);
                });
}

Tape::Var Tape::gin_aggregate(Var h, Var eps, const std::vector<std::array<std::size_t, 2>>& edges) {
    const Tensor& H = val(h.id);
    const Tensor& E = val(eps.id);
    require(E.is_scalar(), "gin_aggregate: eps must be 1x1");
    const double e = E.data[0];
    Tensor C = H;
    for (auto& v : C.data) v *= (1.0 + e);
    for (const auto& ed : edges) {
        require(ed[0] < H.rows && ed[1] < H.rows, "gin_aggregate: edge endpoint out of range");
        for (std::size_t c = 0; c < H.cols; ++c) {
            C.at(ed[0], c) += H.at(ed[1], c);
            C.at(ed[1], c) += H.at(ed[0], c);
        }
    }
    const auto hi = h.id, ei = eps.id;
    auto edge_copy = std::make_shared<std::vector<std::array<std::size_t, 2>>>(edges);
    return push(std::move(C), any_needs_grad({h, eps}),
                [hi, ei, e, edge_ptr = std::move(edge_copy)](Tape& t, std::uint32_t self) {
        const Tensor& g = t.gradv(self);
        const Tensor& H2 = t.val(hi);
        if (t.nodes_[hi].needs_grad) {
            Tensor dh = g;
            for (auto& v : dh.data) v *= (1.0 + e);
            for (const auto& ed : *edge_ptr)
                for (std::size_t c = 0; c < g.cols; ++c) {
                    dh.at(ed[1], c) += g.at(ed[0], c);
                    dh.at(ed[0], c) += g.at(ed[1], c);
                }
            t.accumulate(hi, dh);
        }
        if (t.nodes_[ei].needs_grad) {
            double de = 0.0;
            for (std::size_t i = 0; i < g.data.size(); ++i) de += g.data[i] * H2.data[i];
            t.accumulate(ei, Tensor::scalar(de));
        }
    });
}

void Tape::backward(Var loss) {
    const Tensor& L = val(loss.id);
    if (!L.is_scalar()) throw InvalidArgument("backward: loss must be a scalar");
    grad_buf(loss.id).data[0] = 1.0;
    for (std::size_t i = nodes_.size(); i-- > 0;) {
        Node& n = nodes_[i];
        if (n.grad_alloc && n.back) n.back(*this, static_cast<std::uint32_t>(i));
    }
}

}  // namespace gssl
