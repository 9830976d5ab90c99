#pragma once

#include "hoir/nn/model.hpp"

namespace hoir::nn {

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Adam over a ParamStore. Moment buffers mirror the store's entries in
// order; updates are plain ordered loops, so a fixed gradient sequence
// yields bit-identical parameters run to run.
template <typename T>
class Adam {
 public:
  explicit Adam(ParamStore<T>& store, AdamConfig cfg = {}) : store_(&store), cfg_(cfg) {
    m_.resize(store.entries.size());
    v_.resize(store.entries.size());
    for (size_t i = 0; i < store.entries.size(); ++i) {
      m_[i].assign(store.entries[i].value.size(), T(0));
      v_[i].assign(store.entries[i].value.size(), T(0));
    }
  }

  // One update from the gradients accumulated in `g` at the nodes named in
  // `param_nodes`. Every store entry must have a node; a forward() build
  // guarantees that.
  void step(Graph<T>& g, const std::map<std::string, int>& param_nodes) {
    ++t_;
    const T b1 = static_cast<T>(cfg_.beta1), b2 = static_cast<T>(cfg_.beta2);
    const T corr1 = T(1) - static_cast<T>(std::pow(cfg_.beta1, static_cast<double>(t_)));
    const T corr2 = T(1) - static_cast<T>(std::pow(cfg_.beta2, static_cast<double>(t_)));
    const T lr = static_cast<T>(cfg_.lr), eps = static_cast<T>(cfg_.eps);
    for (size_t e = 0; e < store_->entries.size(); ++e) {
      auto& entry = store_->entries[e];
      auto it = param_nodes.find(entry.name);
      if (it == param_nodes.end()) throw NnError("adam: no graph node for " + entry.name);
      const auto& grad = g.data(it->second).g;
      if (grad.size() != entry.value.size())
        throw NnError("adam: gradient size mismatch for " + entry.name);
      auto& m = m_[e];
      auto& v = v_[e];
      for (size_t i = 0; i < grad.size(); ++i) {
        const T gi = grad[i];
        m[i] = b1 * m[i] + (T(1) - b1) * gi;
        v[i] = b2 * v[i] + (T(1) - b2) * gi * gi;
        const T mhat = m[i] / corr1;
        const T vhat = v[i] / corr2;
        entry.value[i] -= lr * mhat / (std::sqrt(vhat) + eps);
      }
    }
  }

  const AdamConfig& config() const { return cfg_; }
  // Schedules adjust the rate between steps; moments are unaffected.
  void set_lr(double lr) { cfg_.lr = lr; }
  int64_t step_count() const { return t_; }
  const std::vector<std::vector<T>>& moments_m() const { return m_; }
  const std::vector<std::vector<T>>& moments_v() const { return v_; }

  // Restore optimizer state (checkpoint resume). Shapes must match the store.
  void set_state(int64_t t, std::vector<std::vector<T>> m, std::vector<std::vector<T>> v) {
    if (m.size() != m_.size() || v.size() != v_.size())
      throw NnError("adam: state block count mismatch");
    for (size_t i = 0; i < m.size(); ++i)
      if (m[i].size() != m_[i].size() || v[i].size() != v_[i].size())
        throw NnError("adam: state block size mismatch");
    t_ = t;
    m_ = std::move(m);
    v_ = std::move(v);
  }

 private:
  ParamStore<T>* store_;
  AdamConfig cfg_;
  int64_t t_ = 0;
  std::vector<std::vector<T>> m_, v_;
};

}  // namespace hoir::nn
