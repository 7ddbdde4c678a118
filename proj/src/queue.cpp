#include "gssl/queue.hpp"

#include <string>

#include "gssl/errors.hpp"

namespace gssl {

void DynamicQueue::push_rows(const Tensor& z) {
    if (z.rows == 0) return;
    if (width_ == 0) width_ = z.cols;
    if (z.cols != width_)
        throw ContractViolation("queue push width " + std::to_string(z.cols) + " != " +
                                std::to_string(width_));
    for (std::size_t r = 0; r < z.rows; ++r) {
        std::vector<double> row(z.cols);
        for (std::size_t c = 0; c < z.cols; ++c) row[c] = z.at(r, c);
        rows_.push_back(std::move(row));
        // capacity 0 keeps the queue permanently empty
        if (rows_.size() > capacity_) rows_.pop_front();
    }
}

Tensor DynamicQueue::snapshot() const {
    Tensor out(rows_.size(), width_);
    std::size_t r = 0;
    for (const auto& row : rows_) {
        for (std::size_t c = 0; c < width_; ++c) out.at(r, c) = row[c];
        ++r;
    }
    return out;
}

}  // namespace gssl
