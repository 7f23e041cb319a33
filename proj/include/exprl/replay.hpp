#pragma once

// Transition storage for the memory bank. Frames are interned per run: the
// toy environments have a small set of distinct frames, so transitions hold
// pool ids instead of pixel copies. Value semantics are unchanged.

#include <cstddef>
#include <cstdint>
#include <deque>
#include <unordered_map>
#include <vector>

#include "exprl/envs.hpp"

namespace exprl::replay {

class FramePool {
 public:
  int intern(const envs::Frame& frame);
  const envs::Frame& get(int id) const { return frames_[static_cast<std::size_t>(id)]; }
  std::size_t size() const { return frames_.size(); }

 private:
  std::vector<envs::Frame> frames_;
  std::unordered_map<std::uint64_t, std::vector<int>> index_;
};

std::uint64_t frame_hash(const envs::Frame& frame);

struct Transition {
  int frame_t = -1;   // pool id of s_t
  int frame_t1 = -1;  // pool id of s_{t+1}
  int action = 0;
  double r = 0.0;
  double r_bonus = 0.0;
  bool terminal = false;
  long long step_index = 0;  // 1-based global step at which this was observed
};

// FIFO ring buffer holding at most `capacity` transitions.
class MemoryBank {
 public:
  explicit MemoryBank(std::size_t capacity);

  void store(const Transition& t);
  std::size_t size() const { return buffer_.size(); }
  std::size_t capacity() const { return capacity_; }
  bool empty() const { return buffer_.empty(); }

  // Index 0 is the oldest stored transition.
  const Transition& at(std::size_t i) const { return buffer_[i]; }

  long long total_stored() const { return total_stored_; }

 private:
  std::size_t capacity_;
  std::deque<Transition> buffer_;
  long long total_stored_ = 0;
};

}  // namespace exprl::replay
