#pragma once

#include <cstddef>
#include <initializer_list>
#include <vector>

namespace gssl {

// Dense row-major matrix of doubles. Scalars are 1x1, row vectors 1xN.
// requires_grad only matters when a tensor is bound to a tape as a leaf.
struct Tensor {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;
    bool requires_grad = false;

    Tensor() = default;
    Tensor(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}
    Tensor(std::size_t r, std::size_t c, std::vector<double> d);

    static Tensor scalar(double v);
    static Tensor zeros(std::size_t r, std::size_t c) { return Tensor(r, c); }
    static Tensor full(std::size_t r, std::size_t c, double v);
    static Tensor row(std::initializer_list<double> vals);
    static Tensor from_rows(std::initializer_list<std::initializer_list<double>> rows);

    std::size_t size() const { return rows * cols; }
    std::vector<std::size_t> shape() const { return {rows, cols}; }
    bool same_shape(const Tensor& o) const { return rows == o.rows && cols == o.cols; }
    bool is_scalar() const { return rows == 1 && cols == 1; }

    double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
    double item() const;  // value of a 1x1 tensor

    bool all_finite() const;
    double frobenius_norm() const;
    double row_norm(std::size_t r) const;
};

// Elementwise helpers used outside the tape (EMA, Adam, metrics).
void check_same_shape(const Tensor& a, const Tensor& b, const char* what);

}  // namespace gssl
