#include "gssl/tensor.hpp"

#include <cmath>
#include <string>

#include "gssl/errors.hpp"

namespace gssl {

Tensor::Tensor(std::size_t r, std::size_t c, std::vector<double> d) : rows(r), cols(c), data(std::move(d)) {
    if (data.size() != rows * cols)
        throw InvalidArgument("tensor data length " + std::to_string(data.size()) + " != " +
                              std::to_string(rows) + "x" + std::to_string(cols));
}

Tensor Tensor::scalar(double v) {
    Tensor t(1, 1);
    t.data[0] = v;
    return t;
}

Tensor Tensor::full(std::size_t r, std::size_t c, double v) {
    Tensor t(r, c);
    for (auto& x : t.data) x = v;
    return t;
}

Tensor Tensor::row(std::initializer_list<double> vals) {
    Tensor t(1, vals.size());
    std::size_t i = 0;
    for (double v : vals) t.data[i++] = v;
    return t;
}

Tensor Tensor::from_rows(std::initializer_list<std::initializer_list<double>> rows_in) {
    const std::size_t r = rows_in.size();
    const std::size_t c = r ? rows_in.begin()->size() : 0;
    Tensor t(r, c);
    std::size_t i = 0;
    for (const auto& row : rows_in) {
        if (row.size() != c) throw InvalidArgument("ragged initializer for tensor");
        for (double v : row) t.data[i++] = v;
    }
    return t;
}

double Tensor::item() const {
    if (!is_scalar()) throw InvalidArgument("item() on non-scalar tensor");
    return data[0];
}

bool Tensor::all_finite() const {
    for (double v : data)
        if (!std::isfinite(v)) return false;
    return true;
}

double Tensor::frobenius_norm() const {
    double s = 0.0;
    for (double v : data) s += v * v;
    return std::sqrt(s);
}

double Tensor::row_norm(std::size_t r) const {
    double s = 0.0;
    for (std::size_t c = 0; c < cols; ++c) s += at(r, c) * at(r, c);
    return std::sqrt(s);
}

void check_same_shape(const Tensor& a, const Tensor& b, const char* what) {
    if (!a.same_shape(b))
        throw InvalidArgument(std::string(what) + ": shape mismatch " + std::to_string(a.rows) + "x" +
                              std::to_string(a.cols) + " vs " + std::to_string(b.rows) + "x" +
                              std::to_string(b.cols));
}

}  // namespace gssl
