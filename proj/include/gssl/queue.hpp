#pragma once

#include <deque>
#include <vector>

#include "gssl/tensor.hpp"

namespace gssl {

// Fixed-capacity FIFO of detached embedding rows. Rows are plain values with no
// tape linkage, so nothing stored here can ever receive gradients.
class DynamicQueue {
public:
    explicit DynamicQueue(std::size_t capacity) : capacity_(capacity) {}

    void push_rows(const Tensor& z);

    std::size_t size() const { return rows_.size(); }
    std::size_t capacity() const { return capacity_; }
    std::size_t width() const { return width_; }
    bool empty() const { return rows_.empty(); }

    // Contents in insertion order (oldest first) as a size x width matrix.
    Tensor snapshot() const;

    void clear() { rows_.clear(); }

private:
    std::size_t capacity_;
    std::size_t width_ = 0;
    std::deque<std::vector<double>> rows_;
};

}  // namespace gssl
