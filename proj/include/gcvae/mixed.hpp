#pragma once

#include <algorithm>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "errors.hpp"
#include "ndcore.hpp"

namespace gcvae {

/// One observation: continuous sub-vector plus categorical codes in 1..J_i.
struct MixedDatum {
  Vec cont;
  std::vector<int> cat;

  friend bool operator==(const MixedDatum&, const MixedDatum&) = default;
};

/// Shape of a mixed observation: number of continuous columns and the
/// cardinality of every categorical column.
struct DataLayout {
  std::size_t n_cont = 0;
  std::vector<int> cards;

  std::size_t n_cat() const noexcept { return cards.size(); }
  std::size_t dim() const noexcept { return n_cont + cards.size(); }
  std::size_t one_hot_width() const noexcept {
    return n_cont + static_cast<std::size_t>(std::accumulate(cards.begin(), cards.end(), 0));
  }
  std::size_t total_categories() const noexcept {
    return static_cast<std::size_t>(std::accumulate(cards.begin(), cards.end(), 0));
  }

  void check(const MixedDatum& x) const {
    if (x.cont.size() != n_cont || x.cat.size() != cards.size())
      throw SchemaError("datum has " + std::to_string(x.cont.size()) + " continuous and " +
                        std::to_string(x.cat.size()) + " categorical entries; layout expects " +
                        std::to_string(n_cont) + " and " + std::to_string(cards.size()));
    for (std::size_t i = 0; i < cards.size(); ++i)
      if (x.cat[i] < 1 || x.cat[i] > cards[i])
        throw SchemaError("category " + std::to_string(x.cat[i]) + " outside 1.." + std::to_string(cards[i]));
  }

  friend bool operator==(const DataLayout&, const DataLayout&) = default;
};

/// Continuous values followed by one one-hot block per categorical column.
inline Vec encode_for_network(const MixedDatum& x, const DataLayout& layout) {
  layout.check(x);
  Vec out(layout.one_hot_width(), 0.0);
  std::copy(x.cont.begin(), x.cont.end(), out.begin());
  std::size_t off = layout.n_cont;
  for (std::size_t i = 0; i < layout.cards.size(); ++i) {
    out[off + static_cast<std::size_t>(x.cat[i] - 1)] = 1.0;
    off += static_cast<std::size_t>(layout.cards[i]);
  }
  return out;
}

/// Inverse of encode_for_network; each categorical block decodes to its argmax.
inline MixedDatum decode_from_network(std::span<const double> v, const DataLayout& layout) {
  if (v.size() != layout.one_hot_width()) throw std::invalid_argument("decode_from_network: width mismatch");
  MixedDatum x;
  x.cont.assign(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(layout.n_cont));
  std::size_t off = layout.n_cont;
  for (int J : layout.cards) {
    int best = 1;
    for (int j = 2; j <= J; ++j)
      if (v[off + static_cast<std::size_t>(j - 1)] > v[off + static_cast<std::size_t>(best - 1)]) best = j;
    x.cat.push_back(best);
    off += static_cast<std::size_t>(J);
  }
  return x;
}

}  // namespace gcvae
