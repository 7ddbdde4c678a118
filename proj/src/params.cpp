#include "gssl/params.hpp"

#include <cmath>

#include "gssl/errors.hpp"

namespace gssl {

void ParameterSet::add(const std::string& name, Tensor value, bool trainable) {
    if (entries_.count(name)) throw ContractViolation("parameter '" + name + "' already present");
    value.requires_grad = trainable;
    entries_[name] = Entry{std::move(value), trainable};
}

Tensor& ParameterSet::at(const std::string& name) {
    auto it = entries_.find(name);
    if (it == entries_.end()) throw ContractViolation("unknown parameter '" + name + "'");
    return it->second.value;
}

const Tensor& ParameterSet::at(const std::string& name) const {
    auto it = entries_.find(name);
    if (it == entries_.end()) throw ContractViolation("unknown parameter '" + name + "'");
    return it->second.value;
}

bool ParameterSet::trainable(const std::string& name) const {
    auto it = entries_.find(name);
    if (it == entries_.end()) throw ContractViolation("unknown parameter '" + name + "'");
    return it->second.trainable;
}

std::size_t ParameterSet::scalar_count() const {
    std::size_t n = 0;
    for (const auto& [name, e] : entries_)
        if (e.trainable) n += e.value.size();
    return n;
}

bool ParameterSet::congruent_with(const ParameterSet& other) const {
    if (entries_.size() != other.entries_.size()) return false;
    for (const auto& [name, e] : entries_) {
        auto it = other.entries_.find(name);
        if (it == other.entries_.end()) return false;
        if (!e.value.same_shape(it->second.value)) return false;
    }
    return true;
}

void ema_update(ParameterSet& target, const ParameterSet& online, double mu) {
    if (mu < 0.0 || mu >= 1.0) throw InvalidArgument("ema_update: momentum must be in [0,1)");
    if (!target.congruent_with(online))
        throw ContractViolation("ema_update: target and online sets are not congruent");
    for (auto& [name, e] : target.entries()) {
        const Tensor& src = online.at(name);
        for (std::size_t i = 0; i < e.value.data.size(); ++i)
            e.value.data[i] = mu * e.value.data[i] + (1.0 - mu) * src.data[i];
    }
}

void adam_step(ParameterSet& params, const GradMap& grads, AdamMoments& moments, const AdamConfig& cfg,
               std::int64_t t) {
    if (t < 1) throw InvalidArgument("adam_step: t must be >= 1");
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
    for (auto& [name, e] : params.entries()) {
        if (!e.trainable) continue;
        auto git = grads.find(name);
        if (git == grads.end())
            throw ContractViolation("adam_step: missing gradient for '" + name + "'");
        const Tensor& g = git->second;
        check_same_shape(e.value, g, "adam_step");
        auto mit = moments.m_v.find(name);
        if (mit == moments.m_v.end()) {
            mit = moments.m_v
                      .emplace(name, std::make_pair(Tensor(e.value.rows, e.value.cols),
                                                    Tensor(e.value.rows, e.value.cols)))
                      .first;
        }
        Tensor& m = mit->second.first;
        Tensor& v = mit->second.second;
        for (std::size_t i = 0; i < e.value.data.size(); ++i) {
            m.data[i] = cfg.beta1 * m.data[i] + (1.0 - cfg.beta1) * g.data[i];
            v.data[i] = cfg.beta2 * v.data[i] + (1.0 - cfg.beta2) * g.data[i] * g.data[i];
            const double mhat = m.data[i] / bc1;
            const double vhat = v.data[i] / bc2;
            e.value.data[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
        }
    }
}

void AdamOptimizer::attach(const std::string& key, ParameterSet* set) {
    if (!set) throw InvalidArgument("AdamOptimizer::attach: null set");
    sets_[key] = set;
    moments_.emplace(key, AdamMoments{});
}

void AdamOptimizer::step(const std::map<std::string, GradMap>& grads_by_set) {
    ++t_;
    for (auto& [key, set] : sets_) {
        auto git = grads_by_set.find(key);
        if (git == grads_by_set.end())
            throw ContractViolation("AdamOptimizer::step: no gradients for attached set '" + key + "'");
        adam_step(*set, git->second, moments_[key], cfg_, t_);
    }
}

}  // namespace gssl
