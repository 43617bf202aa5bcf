#ifndef SEQLAB_PAVA_HPP
#define SEQLAB_PAVA_HPP

#include <span>
#include <vector>

#include "core.hpp"

namespace seqlab {

/// Euclidean projection onto {a_1 <= a_2 <= ... <= a_n} by pool-adjacent-violators.
/// Blocks are merged while their means decrease; each block keeps (sum, count),
/// so the output is exactly mean-preserving within every pooled run.
inline Vector pava(std::span<const double> x) {
  const std::size_t n = x.size();
  struct Block {
    double sum;
    double count;
    std::size_t len;
  };
  std::vector<Block> stack;
  stack.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    stack.push_back({x[i], 1.0, 1});
    while (stack.size() > 1) {
      const Block& top = stack.back();
      const Block& below = stack[stack.size() - 2];
      // compare means without dividing: below.sum/below.count > top.sum/top.count
      if (below.sum * top.count <= top.sum * below.count) break;
      Block merged{below.sum + top.sum, below.count + top.count, below.len + top.len};
      stack.pop_back();
      stack.back() = merged;
    }
  }
  Vector out;
  out.reserve(n);
  for (const Block& b : stack) out.insert(out.end(), b.len, b.sum / b.count);
  return out;
}

}  // namespace seqlab

#endif  // SEQLAB_PAVA_HPP
