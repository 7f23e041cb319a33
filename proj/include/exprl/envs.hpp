#pragma once

// Deterministic pixel-observation MDPs at desk scale. Every environment
// renders its hidden state to a grayscale frame with values in [0,1]; a
// fixed (seed, action sequence) reproduces the exact (frame, reward) trace.

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace exprl::envs {

struct Frame {
  int height = 0;
  int width = 0;
  std::vector<double> pixels;  // row-major, values in [0,1]

  int size() const { return height * width; }
  double at(int row, int col) const { return pixels[static_cast<std::size_t>(row) * width + col]; }
  bool operator==(const Frame& other) const = default;
};

struct StepResult {
  Frame frame;
  double reward = 0.0;
  bool terminal = false;
};

class MdpEnv {
 public:
  virtual ~MdpEnv() = default;

  virtual std::string name() const = 0;
  virtual int num_actions() const = 0;
  virtual int frame_height() const = 0;
  virtual int frame_width() const = 0;
  int frame_size() const { return frame_height() * frame_width(); }

  // Maximum undiscounted episode return, known analytically per definition.
  virtual double optimal_return() const = 0;

  virtual Frame reset(std::uint64_t seed) = 0;
  // Throws std::logic_error if called on a finished episode. An episode
  // finishes on the goal transition or when the step cap is reached.
  virtual StepResult step(int action) = 0;

  virtual bool episode_over() const = 0;
  virtual std::unique_ptr<MdpEnv> clone_fresh() const = 0;
};

// Chain of N cells. LEFT always returns to cell 0, RIGHT advances one cell;
// entering cell N-1 pays 1.0 and terminates. Episode cap 4*N steps.
// Frame: 8 x N strip, the agent's column at 1.0.
class PixelChain final : public MdpEnv {
 public:
  static constexpr int kLeft = 0;
  static constexpr int kRight = 1;

  explicit PixelChain(int length);

  std::string name() const override;
  int num_actions() const override { return 2; }
  int frame_height() const override { return 8; }
  int frame_width() const override { return length_; }
  double optimal_return() const override { return 1.0; }

  Frame reset(std::uint64_t seed) override;
  StepResult step(int action) override;
  bool episode_over() const override { return done_; }
  std::unique_ptr<MdpEnv> clone_fresh() const override;

  int cell() const { return cell_; }

 private:
  Frame render() const;

  int length_;
  int cell_ = 0;
  int steps_ = 0;
  bool done_ = false;
};

// Serpentine maze on a W x H grid: odd rows are walls with a single gap on
// alternating sides, so the open cells form one snaking corridor from the
// start (top-left) to the corridor's far end, where the goal sits. Four move
// actions; walls and borders block (no-op, reward 0). Goal pays 1.0 and
// terminates. Episode cap 4*W*H steps. Frame: H x W image with walls 0.5,
// agent 1.0, goal 0.8.
class GridMaze : public MdpEnv {
 public:
  static constexpr int kUp = 0;
  static constexpr int kDown = 1;
  static constexpr int kLeft = 2;
  static constexpr int kRight = 3;

  GridMaze(int width, int height);

  std::string name() const override;
  int num_actions() const override { return 4; }
  int frame_height() const override { return height_; }
  int frame_width() const override { return width_; }
  double optimal_return() const override { return 1.0; }

  Frame reset(std::uint64_t seed) override;
  StepResult step(int action) override;
  bool episode_over() const override { return done_; }
  std::unique_ptr<MdpEnv> clone_fresh() const override;

  bool is_wall(int row, int col) const;
  int agent_row() const { return row_; }
  int agent_col() const { return col_; }
  int goal_row() const { return goal_row_; }
  int goal_col() const { return goal_col_; }
  // Open cells in corridor order, start first.
  const std::vector<std::pair<int, int>>& corridor() const { return corridor_; }

 protected:
  virtual Frame render() const;
  virtual double visit(int row, int col, bool* terminal);  // reward rule on entering a cell

  int width_;
  int height_;
  int row_ = 0;
  int col_ = 0;
  int steps_ = 0;
  bool done_ = false;
  int goal_row_ = 0;
  int goal_col_ = 0;
  std::vector<bool> walls_;
  std::vector<std::pair<int, int>> corridor_;
};

// GridMaze variant with a composite objective: the chest sits midway along
// the corridor and pays 1.0 (terminal) only once the key, at the corridor's
// far end, has been collected this episode; the key itself pays 0. The
// optimal route walks past the locked chest to the key and doubles back.
// The key cell renders at 0.6 until collected so the frame stays Markov.
class LockedTreasure final : public GridMaze {
 public:
  LockedTreasure(int width, int height);

  std::string name() const override;
  Frame reset(std::uint64_t seed) override;
  std::unique_ptr<MdpEnv> clone_fresh() const override;

  bool has_key() const { return has_key_; }
  int key_row() const { return key_row_; }
  int key_col() const { return key_col_; }

 protected:
  Frame render() const override;
  double visit(int row, int col, bool* terminal) override;

 private:
  int key_row_ = 0;
  int key_col_ = 0;
  bool has_key_ = false;
};

// Writes a binary PGM (P5, maxval 255) image of the frame.
void write_pgm(const Frame& frame, const std::string& path);

}  // namespace exprl::envs
