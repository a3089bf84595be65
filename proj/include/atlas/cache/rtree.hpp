#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include "atlas/error.hpp"
#include "atlas/warehouse/geometry.hpp"

namespace atlas {

/**
 * Static R-tree, bulk loaded with Sort-Tile-Recursive packing and stored as
 * flat arrays (the layout popularised by flatbush):
 *
 *   boxes/refs [0, n)            leaves, one per item, ref = item number
 *   boxes/refs [n, ...)          internal nodes level by level, root last
 *
 * An internal node's ref is the position of its first child; children are
 * contiguous and at most node_size long, clipped to the end of their level.
 * `level_ends[k]` is one past the last position of level k.
 */
class PackedRTree {
 public:
  PackedRTree() = default;

  explicit PackedRTree(std::span<const Box> items, std::uint32_t node_size = 16) : node_size_(node_size) {
    if (node_size_ < 2) throw error(errc::invalid_argument, "R-tree node size must be at least 2");
    const std::size_t n = items.size();
    boxes_.assign(items.begin(), items.end());
    refs_.resize(n);
    std::iota(refs_.begin(), refs_.end(), std::uint64_t{0});
    if (n == 0) return;

    std::size_t begin = 0, end = n;
    str_sort(begin, end);
    level_ends_.push_back(end);
    while (end - begin > 1) {
      for (std::size_t i = begin; i < end; i += node_size_) {
        Box b;
        for (std::size_t j = i; j < std::min(end, i + node_size_); ++j) b.expand(boxes_[j]);
        boxes_.push_back(b);
        refs_.push_back(i);
      }
      begin = end;
      end = boxes_.size();
      str_sort(begin, end);
      level_ends_.push_back(end);
    }
  }

  /// Rebuilds a tree from its serialized arrays, checking their structure.
  static PackedRTree from_parts(std::uint32_t node_size, std::uint64_t num_items, std::vector<Box> boxes,
                                std::vector<std::uint64_t> refs, std::vector<std::uint64_t> level_ends) {
    PackedRTree t;
    t.node_size_ = node_size;
    t.boxes_ = std::move(boxes);
    t.refs_ = std::move(refs);
    t.level_ends_.assign(level_ends.begin(), level_ends.end());
    auto bad = [] { return error(errc::corrupt, "spatial index structure is inconsistent"); };
    if (node_size < 2 || t.boxes_.size() != t.refs_.size()) throw bad();
    if (num_items == 0) {
      if (!t.boxes_.empty() || !t.level_ends_.empty()) throw bad();
      return t;
    }
    if (t.level_ends_.empty() || t.level_ends_.front() != num_items || t.level_ends_.back() != t.boxes_.size() ||
        t.level_ends_.back() - (t.level_ends_.size() > 1 ? t.level_ends_[t.level_ends_.size() - 2] : 0) != 1)
      throw bad();
    for (std::size_t k = 1; k < t.level_ends_.size(); ++k)
      if (t.level_ends_[k] <= t.level_ends_[k - 1]) throw bad();
    std::vector<bool> seen(num_items, false);
    for (std::size_t i = 0; i < num_items; ++i) {
      if (t.refs_[i] >= num_items || seen[t.refs_[i]]) throw bad();
      seen[t.refs_[i]] = true;
    }
    for (std::size_t k = 1; k < t.level_ends_.size(); ++k)
      for (std::size_t i = t.level_ends_[k - 1]; i < t.level_ends_[k]; ++i) {
        const std::size_t lo = k >= 2 ? t.level_ends_[k - 2] : 0;
        if (t.refs_[i] < lo || t.refs_[i] >= t.level_ends_[k - 1]) throw bad();
      }
    return t;
  }

  /// Calls f(item) for every item whose box intersects q, in no fixed order.
  template <typename F>
  void search(const Box& q, F&& f) const {
    if (level_ends_.empty()) return;
    std::vector<std::pair<std::size_t, std::size_t>> stack;  // (position, level)
    stack.emplace_back(boxes_.size() - 1, level_ends_.size() - 1);
    while (!stack.empty()) {
      const auto [pos, level] = stack.back();
      stack.pop_back();
      if (!boxes_[pos].intersects(q)) continue;
      if (level == 0) {
        f(static_cast<std::size_t>(refs_[pos]));
        continue;
      }
      const std::size_t first = refs_[pos];
      const std::size_t last = std::min<std::size_t>(first + node_size_, level_ends_[level - 1]);
      for (std::size_t c = first; c < last; ++c) stack.emplace_back(c, level - 1);
    }
  }

  std::vector<std::size_t> search(const Box& q) const {
    std::vector<std::size_t> out;
    search(q, [&](std::size_t i) { out.push_back(i); });
    return out;
  }

  std::size_t size() const noexcept { return level_ends_.empty() ? 0 : level_ends_.front(); }
  std::size_t depth() const noexcept { return level_ends_.size(); }
  std::uint32_t node_size() const noexcept { return node_size_; }
  const std::vector<Box>& boxes() const noexcept { return boxes_; }
  const std::vector<std::uint64_t>& refs() const noexcept { return refs_; }
  std::vector<std::uint64_t> level_ends() const { return {level_ends_.begin(), level_ends_.end()}; }
  Box extent() const { return boxes_.empty() ? Box{} : boxes_.back(); }

 private:
  // Orders [begin, end) into STR tiles: vertical slabs by center x, each slab
  // by center y. Ties fall back to the current ref so the result is
  // deterministic.
  void str_sort(std::size_t begin, std::size_t end) {
    const std::size_t m = end - begin;
    if (m <= node_size_) return;
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), begin);
    auto cx = [&](std::size_t i) { return boxes_[i].minx + boxes_[i].maxx; };
    auto cy = [&](std::size_t i) { return boxes_[i].miny + boxes_[i].maxy; };
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return cx(a) != cx(b) ? cx(a) < cx(b) : refs_[a] < refs_[b];
    });
    const std::size_t nodes = (m + node_size_ - 1) / node_size_;
    const std::size_t slabs = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(nodes))));
    const std::size_t slab = slabs * node_size_;
    for (std::size_t s = 0; s < m; s += slab)
      std::sort(order.begin() + s, order.begin() + std::min(m, s + slab), [&](std::size_t a, std::size_t b) {
        return cy(a) != cy(b) ? cy(a) < cy(b) : refs_[a] < refs_[b];
      });
    std::vector<Box> b(m);
    std::vector<std::uint64_t> r(m);
    for (std::size_t k = 0; k < m; ++k) {
      b[k] = boxes_[order[k]];
      r[k] = refs_[order[k]];
    }
    std::copy(b.begin(), b.end(), boxes_.begin() + begin);
    std::copy(r.begin(), r.end(), refs_.begin() + begin);
  }

  std::uint32_t node_size_ = 16;
  std::vector<Box> boxes_;
  std::vector<std::uint64_t> refs_;
  std::vector<std::size_t> level_ends_;
};

}  // namespace atlas
