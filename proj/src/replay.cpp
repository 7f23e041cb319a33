#include "exprl/replay.hpp"

#include <cstring>
#include <stdexcept>

namespace exprl::replay {

std::uint64_t frame_hash(const envs::Frame& frame) {
  // FNV-1a over the pixel bytes plus the dimensions.
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&h](const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= p[i];
      h *= 1099511628211ull;
    }
  };
  mix(&frame.height, sizeof(frame.height));
  mix(&frame.width, sizeof(frame.width));
  mix(frame.pixels.data(), frame.pixels.size() * sizeof(double));
  return h;
}

int FramePool::intern(const envs::Frame& frame) {
  const std::uint64_t h = frame_hash(frame);
  auto it = index_.find(h);
  if (it != index_.end()) {
    for (int id : it->second)
      if (frames_[static_cast<std::size_t>(id)] == frame) return id;
  }
  const int id = static_cast<int>(frames_.size());
  frames_.push_back(frame);
  index_[h].push_back(id);
  return id;
}

MemoryBank::MemoryBank(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw std::invalid_argument("replay: capacity must be positive");
}

void MemoryBank::store(const Transition& t) {
  if (buffer_.size() == capacity_) buffer_.pop_front();
  buffer_.push_back(t);
  ++total_stored_;
}

}  // namespace exprl::replay
