#pragma once

#include <cstdint>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "tempcycle/random.hpp"

namespace tempcycle {

/// History of generated samples for discriminator updates.
///
/// Until `capacity` items are stored every query returns its argument. Once
/// full, a query returns the incoming item with probability 1/2, otherwise a
/// uniformly chosen stored item, which the incoming item then replaces.
template <typename Item>
class ReplayBuffer {
 public:
  explicit ReplayBuffer(size_t capacity = 50, uint64_t seed = 0) : capacity_(capacity), rng_(seed) {
    if (capacity_ == 0) throw std::invalid_argument("ReplayBuffer: capacity must be positive");
    items_.reserve(capacity_);
  }

  Item query(Item incoming) {
    if (items_.size() < capacity_) {
      items_.push_back(incoming);
      return incoming;
    }
    if (uniform01(rng_) < 0.5) return incoming;
    const auto idx = uniform_index(rng_, items_.size());
    Item out = std::move(items_[idx]);
    items_[idx] = std::move(incoming);
    return out;
  }

  size_t size() const { return items_.size(); }
  size_t capacity() const { return capacity_; }
  bool full() const { return items_.size() == capacity_; }
  const std::vector<Item>& items() const { return items_; }

  std::string rng_state() const {
    std::ostringstream os;
    os << rng_;
    return os.str();
  }

  /// Restores a buffer from checkpointed contents.
  void restore(std::vector<Item> items, const std::string& rng_state) {
    if (items.size() > capacity_) throw std::invalid_argument("ReplayBuffer: restored items exceed capacity");
    items_ = std::move(items);
    std::istringstream is(rng_state);
    is >> rng_;
    if (!is) throw std::invalid_argument("ReplayBuffer: bad rng state");
  }

 private:
  size_t capacity_;
  std::vector<Item> items_;
  std::mt19937_64 rng_;
};

}  // namespace tempcycle
