#pragma once

#include <map>
#include <string>

#include "gssl/tensor.hpp"

namespace gssl {

using GradMap = std::map<std::string, Tensor>;

struct EMAConfig {
    double momentum = 0.999;  // in [0, 1)
};

// Named tensors of one network component. Non-trainable entries (running norm
// stats) live here so EMA and checkpoints see them, but never receive gradients.
class ParameterSet {
public:
    struct Entry {
        Tensor value;
        bool trainable = true;
    };

    void add(const std::string& name, Tensor value, bool trainable = true);
    bool has(const std::string& name) const { return entries_.count(name) != 0; }
    Tensor& at(const std::string& name);
    const Tensor& at(const std::string& name) const;
    bool trainable(const std::string& name) const;

    std::map<std::string, Entry>& entries() { return entries_; }
    const std::map<std::string, Entry>& entries() const { return entries_; }
    std::size_t size() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }
    std::size_t scalar_count() const;

    // Same names, same shapes.
    bool congruent_with(const ParameterSet& other) const;

private:
    std::map<std::string, Entry> entries_;
};

// target <- mu * target + (1 - mu) * online, elementwise across every tensor.
void ema_update(ParameterSet& target, const ParameterSet& online, double mu);

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// Bias-corrected Adam moments for one parameter set.
struct AdamMoments {
    std::map<std::string, std::pair<Tensor, Tensor>> m_v;
};

// One update at step t (t >= 1) for every trainable tensor in params.
// Missing gradient entry for a trainable tensor is a contract violation.
void adam_step(ParameterSet& params, const GradMap& grads, AdamMoments& moments, const AdamConfig& cfg,
               std::int64_t t);

// Convenience wrapper driving several parameter sets with one shared step counter.
class AdamOptimizer {
public:
    explicit AdamOptimizer(AdamConfig cfg) : cfg_(cfg) {}

    void attach(const std::string& key, ParameterSet* set);
    bool attached(const std::string& key) const { return sets_.count(key) != 0; }
    // Steps every attached set; grads_by_set may omit keys that are not attached.
    void step(const std::map<std::string, GradMap>& grads_by_set);
    std::int64_t step_count() const { return t_; }

private:
    AdamConfig cfg_;
    std::int64_t t_ = 0;
    std::map<std::string, ParameterSet*> sets_;
    std::map<std::string, AdamMoments> moments_;
};

}  // namespace gssl
