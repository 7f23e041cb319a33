#include "exprl/envs.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace exprl::envs {

// ---------------------------------------------------------------------------
// PixelChain

PixelChain::PixelChain(int length) : length_(length) {
  if (length < 2) throw std::invalid_argument("PixelChain: length must be >= 2");
}

std::string PixelChain::name() const { return "pixel_chain(" + std::to_string(length_) + ")"; }

Frame PixelChain::render() const {
  Frame f;
  f.height = 8;
  f.width = length_;
  f.pixels.assign(static_cast<std::size_t>(8) * length_, 0.0);
  for (int r = 0; r < 8; ++r) f.pixels[static_cast<std::size_t>(r) * length_ + cell_] = 1.0;
  return f;
}

Frame PixelChain::reset(std::uint64_t /*seed*/) {
  cell_ = 0;
  steps_ = 0;
  done_ = false;
  return render();
}

StepResult PixelChain::step(int action) {
  if (done_) throw std::logic_error("PixelChain: step() after episode end");
  if (action != kLeft && action != kRight)
    throw std::invalid_argument("PixelChain: invalid action " + std::to_string(action));
  if (action == kLeft) {
    cell_ = 0;
  } else {
    cell_ = std::min(cell_ + 1, length_ - 1);
  }
  ++steps_;
  StepResult result;
  if (cell_ == length_ - 1) {
    result.reward = 1.0;
    done_ = true;
  }
  if (steps_ >= 4 * length_) done_ = true;
  result.terminal = done_;
  result.frame = render();
  return result;
}

std::unique_ptr<MdpEnv> PixelChain::clone_fresh() const {
  return std::make_unique<PixelChain>(length_);
}

// ---------------------------------------------------------------------------
// GridMaze

GridMaze::GridMaze(int width, int height) : width_(width), height_(height) {
  if (width < 3 || height < 3) throw std::invalid_argument("GridMaze: sides must be >= 3");
  walls_.assign(static_cast<std::size_t>(width_) * height_, false);
  // Odd rows are walls with one gap, alternating between the right and left
  // edge, which makes the open cells a single snaking corridor.
  for (int r = 1; r < height_; r += 2) {
    const int gap_col = ((r / 2) % 2 == 0) ? width_ - 1 : 0;
    for (int c = 0; c < width_; ++c)
      if (c != gap_col) walls_[static_cast<std::size_t>(r) * width_ + c] = true;
  }
  for (int r = 0; r < height_; r += 2) {
    const bool rightward = (r / 2) % 2 == 0;
    for (int i = 0; i < width_; ++i) corridor_.emplace_back(r, rightward ? i : width_ - 1 - i);
    if (r + 2 < height_) {
      const int gap_col = rightward ? width_ - 1 : 0;
      corridor_.emplace_back(r + 1, gap_col);
    }
  }
  goal_row_ = corridor_.back().first;
  goal_col_ = corridor_.back().second;
}

std::string GridMaze::name() const {
  return "grid_maze(" + std::to_string(width_) + "x" + std::to_string(height_) + ")";
}

bool GridMaze::is_wall(int row, int col) const {
  return walls_[static_cast<std::size_t>(row) * width_ + col];
}

Frame GridMaze::render() const {
  Frame f;
  f.height = height_;
  f.width = width_;
  f.pixels.assign(static_cast<std::size_t>(width_) * height_, 0.0);
  for (int r = 0; r < height_; ++r)
    for (int c = 0; c < width_; ++c)
      if (is_wall(r, c)) f.pixels[static_cast<std::size_t>(r) * width_ + c] = 0.5;
  f.pixels[static_cast<std::size_t>(goal_row_) * width_ + goal_col_] = 0.8;
  f.pixels[static_cast<std::size_t>(row_) * width_ + col_] = 1.0;
  return f;
}

Frame GridMaze::reset(std::uint64_t /*seed*/) {
  row_ = 0;
  col_ = 0;
  steps_ = 0;
  done_ = false;
  return render();
}

double GridMaze::visit(int row, int col, bool* terminal) {
  if (row == goal_row_ && col == goal_col_) {
    *terminal = true;
    return 1.0;
  }
  return 0.0;
}

StepResult GridMaze::step(int action) {
  if (done_) throw std::logic_error("GridMaze: step() after episode end");
  int nr = row_;
  int nc = col_;
  switch (action) {
    case kUp: --nr; break;
    case kDown: ++nr; break;
    case kLeft: --nc; break;
    case kRight: ++nc; break;
    default: throw std::invalid_argument("GridMaze: invalid action " + std::to_string(action));
  }
  const bool blocked = nr < 0 || nr >= height_ || nc < 0 || nc >= width_ || is_wall(nr, nc);
  StepResult result;
  if (!blocked) {
    row_ = nr;
    col_ = nc;
    bool terminal = false;
    result.reward = visit(row_, col_, &terminal);
    if (terminal) done_ = true;
  }
  ++steps_;
  if (steps_ >= 4 * width_ * height_) done_ = true;
  result.terminal = done_;
  result.frame = render();
  return result;
}

std::unique_ptr<MdpEnv> GridMaze::clone_fresh() const {
  return std::make_unique<GridMaze>(width_, height_);
}

// ---------------------------------------------------------------------------
// LockedTreasure

LockedTreasure::LockedTreasure(int width, int height) : GridMaze(width, height) {
  // Chest midway along the corridor, key at the far end.
  key_row_ = corridor_.back().first;
  key_col_ = corridor_.back().second;
  const auto& chest = corridor_[corridor_.size() / 2];
  goal_row_ = chest.first;
  goal_col_ = chest.second;
}

std::string LockedTreasure::name() const {
  return "locked_treasure(" + std::to_string(width_) + "x" + std::to_string(height_) + ")";
}

Frame LockedTreasure::reset(std::uint64_t seed) {
  has_key_ = false;
  return GridMaze::reset(seed);
}

Frame LockedTreasure::render() const {
  Frame f = GridMaze::render();
  if (!has_key_) f.pixels[static_cast<std::size_t>(key_row_) * width_ + key_col_] = 0.6;
  return f;
}

double LockedTreasure::visit(int row, int col, bool* terminal) {
  if (row == key_row_ && col == key_col_) {
    has_key_ = true;
    return 0.0;
  }
  if (row == goal_row_ && col == goal_col_ && has_key_) {
    *terminal = true;
    return 1.0;
  }
  return 0.0;
}

std::unique_ptr<MdpEnv> LockedTreasure::clone_fresh() const {
  return std::make_unique<LockedTreasure>(width_, height_);
}

// ---------------------------------------------------------------------------

void write_pgm(const Frame& frame, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_pgm: cannot open " + path);
  out << "P5\n" << frame.width << " " << frame.height << "\n255\n";
  for (double v : frame.pixels) {
    const double clamped = std::clamp(v, 0.0, 1.0);
    out.put(static_cast<char>(static_cast<unsigned char>(std::lround(clamped * 255.0))));
  }
  if (!out) throw std::runtime_error("write_pgm: write failed for " + path);
}

}  // namespace exprl::envs
