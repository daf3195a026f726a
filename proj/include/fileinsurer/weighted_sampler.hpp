#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace fileinsurer {

/// Fenwick tree over non-negative integer weights supporting point updates
/// and sampling an index with probability weight / total in O(log n).
template <typename Weight = std::uint64_t>
class WeightedSampler {
 public:
  std::size_t size() const noexcept { return weights_.size(); }
  Weight total() const noexcept { return total_; }
  Weight weight(std::size_t i) const { return weights_[i]; }

  std::size_t push_back(Weight w) {
    weights_.push_back(Weight{});
    tree_.push_back(Weight{});
    const std::size_t i = weights_.size() - 1;
    // A new slot's Fenwick node covers (i - lowbit(i+1), i]; rebuild it from
    // the already-present children.
    const std::size_t node = i + 1;
    Weight sum{};
    for (std::size_t child = node - 1, stop = node - (node & (~node + 1)); child > stop;
         child -= child & (~child + 1)) {
      sum += tree_[child - 1];
    }
    tree_[i] = sum;
    set(i, w);
    return i;
  }

  void set(std::size_t i, Weight w) {
    const Weight old = weights_[i];
    weights_[i] = w;
    total_ = total_ - old + w;
    for (std::size_t node = i + 1; node <= tree_.size(); node += node & (~node + 1)) {
      tree_[node - 1] = tree_[node - 1] - old + w;
    }
  }

  /// Smallest index whose prefix sum exceeds `target`; target < total().
  std::size_t find(Weight target) const {
    std::size_t pos = 0;
    std::size_t step = 1;
    while ((step << 1) <= tree_.size()) step <<= 1;
    for (; step > 0; step >>= 1) {
      const std::size_t next = pos + step;
      if (next <= tree_.size() && tree_[next - 1] <= target) {
        target -= tree_[next - 1];
        pos = next;
      }
    }
    return pos;
  }

 private:
  std::vector<Weight> weights_;
  std::vector<Weight> tree_;
  Weight total_{};
};

}  // namespace fileinsurer
