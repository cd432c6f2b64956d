#pragma once

// Domain types and exact gain mathematics for the cascaded Tx-RIS-Rx link.
//
// An element has four states: a 0/180-degree phase bit per polarization
// (horizontal, vertical). A codebook assigns a state to every controllable
// cell of an R x C panel; masked cells (e.g. the controller block) carry no
// state. Channels are abstract per-polarization complex vectors indexed
// over controllable cells, so the end-to-end power gain of a configuration
// is a single coherent sum.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace rislab {

using cdouble = std::complex<double>;

// ---------------------------------------------------------------------------
// Element state

// Per-element configuration: one phase bit per polarization.
// Bit 0 applies a 0-degree shift, bit 1 a 180-degree shift.
struct ElementState {
  std::uint8_t h_bit = 0;
  std::uint8_t v_bit = 0;

  friend bool operator==(ElementState a, ElementState b) {
    return a.h_bit == b.h_bit && a.v_bit == b.v_bit;
  }
  friend bool operator!=(ElementState a, ElementState b) { return !(a == b); }
};

inline constexpr int kStateCount = 4;

// Canonical state order, used for sweep iteration, tie-breaking and the
// text encoding: index = h_bit + 2 * v_bit, i.e. (0,0) (1,0) (0,1) (1,1).
inline ElementState state_from_index(int s) {
  if (s < 0 || s >= kStateCount)
    throw std::invalid_argument("state index must be in [0,4): got " + std::to_string(s));
  return {static_cast<std::uint8_t>(s & 1), static_cast<std::uint8_t>((s >> 1) & 1)};
}

inline int state_index(ElementState s) { return s.h_bit + 2 * s.v_bit; }

inline ElementState flipped(ElementState s) {
  return {static_cast<std::uint8_t>(1 - s.h_bit), static_cast<std::uint8_t>(1 - s.v_bit)};
}

// ---------------------------------------------------------------------------
// Grid geometry

// Panel geometry: dimensions plus the controllability mask (row-major,
// true = reflecting element with a selectable state).
class GridSpec {
 public:
  GridSpec(int rows, int cols, std::vector<std::uint8_t> mask)
      : rows_(rows), cols_(cols), mask_(std::move(mask)) {
    if (rows_ < 1 || cols_ < 1)
      throw std::invalid_argument("grid must have at least one row and column");
    if (mask_.size() != static_cast<std::size_t>(rows_) * static_cast<std::size_t>(cols_))
      throw std::invalid_argument("mask size does not match rows*cols");
  }

  // All cells controllable.
  static GridSpec full(int rows, int cols) {
    if (rows < 1 || cols < 1)
      throw std::invalid_argument("grid must have at least one row and column");
    return GridSpec(rows, cols,
                    std::vector<std::uint8_t>(static_cast<std::size_t>(rows) * cols, 1));
  }

  // Full grid minus a rectangular non-controllable block (the panel's
  // controller region).
  static GridSpec with_blocked_rect(int rows, int cols, int r0, int c0, int bh, int bw) {
    GridSpec g = full(rows, cols);
    if (r0 < 0 || c0 < 0 || bh < 0 || bw < 0 || r0 + bh > rows || c0 + bw > cols)
      throw std::invalid_argument("blocked rectangle exceeds grid bounds");
    for (int r = r0; r < r0 + bh; ++r)
      for (int c = c0; c < c0 + bw; ++c) g.mask_[static_cast<std::size_t>(r) * cols + c] = 0;
    return g;
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }

  bool controllable(int r, int c) const { return mask_[cell_offset(r, c)] != 0; }

  void block_cell(int r, int c) { mask_[cell_offset(r, c)] = 0; }

  int n_controllable() const {
    return static_cast<int>(std::count(mask_.begin(), mask_.end(), std::uint8_t{1}));
  }

  const std::vector<std::uint8_t>& mask() const { return mask_; }

  friend bool operator==(const GridSpec& a, const GridSpec& b) {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.mask_ == b.mask_;
  }
  friend bool operator!=(const GridSpec& a, const GridSpec& b) { return !(a == b); }

 private:
  std::size_t cell_offset(int r, int c) const {
    if (r < 0 || r >= rows_ || c < 0 || c >= cols_)
      throw std::out_of_range("cell (" + std::to_string(r) + "," + std::to_string(c) +
                              ") outside " + std::to_string(rows_) + "x" + std::to_string(cols_) +
                              " grid");
    return static_cast<std::size_t>(r) * cols_ + c;
  }

  int rows_;
  int cols_;
  std::vector<std::uint8_t> mask_;
};

// ---------------------------------------------------------------------------
// Codebook

// A full assignment of states to the controllable cells of a grid.
// Controllable cells are indexed row-major; that order is the canonical
// state sequence used for lexicographic comparisons.
class Codebook {
 public:
  explicit Codebook(GridSpec grid)
      : grid_(std::move(grid)),
        states_(static_cast<std::size_t>(grid_.n_controllable())),
        cell_to_state_(static_cast<std::size_t>(grid_.rows()) * grid_.cols(), -1) {
    int k = 0;
    for (int r = 0; r < grid_.rows(); ++r)
      for (int c = 0; c < grid_.cols(); ++c)
        if (grid_.controllable(r, c))
          cell_to_state_[static_cast<std::size_t>(r) * grid_.cols() + c] = k++;
  }

  static Codebook all_off(const GridSpec& grid) { return Codebook(grid); }

  const GridSpec& grid() const { return grid_; }
  int rows() const { return grid_.rows(); }
  int cols() const { return grid_.cols(); }
  int n() const { return static_cast<int>(states_.size()); }

  bool controllable(int r, int c) const { return grid_.controllable(r, c); }

  ElementState at(int r, int c) const { return states_[state_slot(r, c)]; }
  void set(int r, int c, ElementState s) { states_[state_slot(r, c)] = s; }

  // k-th controllable cell in row-major order.
  ElementState state_by_index(int k) const { return states_[checked_index(k)]; }
  void set_by_index(int k, ElementState s) { states_[checked_index(k)] = s; }

  // Grid coordinates of the k-th controllable cell.
  std::pair<int, int> cell_of_index(int k) const {
    checked_index(k);
    for (std::size_t off = 0; off < cell_to_state_.size(); ++off)
      if (cell_to_state_[off] == k)
        return {static_cast<int>(off) / grid_.cols(), static_cast<int>(off) % grid_.cols()};
    throw std::logic_error("corrupt cell index map");
  }

  // Sets every controllable cell of one row / one column to a state.
  void set_row(int r, ElementState s) {
    for (int c = 0; c < grid_.cols(); ++c)
      if (grid_.controllable(r, c)) set(r, c, s);
  }
  void set_col(int c, ElementState s) {
    for (int r = 0; r < grid_.rows(); ++r)
      if (grid_.controllable(r, c)) set(r, c, s);
  }

  const std::vector<ElementState>& states() const { return states_; }

  friend bool operator==(const Codebook& a, const Codebook& b) {
    return a.grid_ == b.grid_ && a.states_ == b.states_;
  }
  friend bool operator!=(const Codebook& a, const Codebook& b) { return !(a == b); }

 private:
  int state_slot(int r, int c) const {
    if (r < 0 || r >= grid_.rows() || c < 0 || c >= grid_.cols())
      throw std::out_of_range("cell (" + std::to_string(r) + "," + std::to_string(c) +
                              ") outside grid");
    const int k = cell_to_state_[static_cast<std::size_t>(r) * grid_.cols() + c];
    if (k < 0)
      throw std::invalid_argument("cell (" + std::to_string(r) + "," + std::to_string(c) +
                                  ") is not controllable");
    return k;
  }
  int checked_index(int k) const {
    if (k < 0 || k >= n())
      throw std::out_of_range("controllable index " + std::to_string(k) + " outside [0," +
                              std::to_string(n()) + ")");
    return k;
  }

  GridSpec grid_;
  std::vector<ElementState> states_;
  std::vector<int> cell_to_state_;
};

// True when a's state sequence precedes b's in the canonical order.
inline bool state_sequence_less(const Codebook& a, const Codebook& b) {
  const auto& sa = a.states();
  const auto& sb = b.states();
  for (std::size_t i = 0; i < sa.size() && i < sb.size(); ++i) {
    const int ia = state_index(sa[i]);
    const int ib = state_index(sb[i]);
    if (ia != ib) return ia < ib;
  }
  return sa.size() < sb.size();
}

inline Codebook flip_all(const Codebook& cb) {
  Codebook out = cb;
  for (int k = 0; k < out.n(); ++k) out.set_by_index(k, flipped(out.state_by_index(k)));
  return out;
}

// ---------------------------------------------------------------------------
// Codebook text format
//
// Header line "RISCB v1 rows=<R> cols=<C>", then R lines of C characters:
// '#' marks a non-controllable cell, '0'..'3' encode h_bit + 2*v_bit.
// Parsing is strict: any other character, a short/long line, or trailing
// garbage is an error.

inline char state_to_char(ElementState s) { return static_cast<char>('0' + state_index(s)); }

inline std::string to_text(const Codebook& cb) {
  std::string out = "RISCB v1 rows=" + std::to_string(cb.rows()) +
                    " cols=" + std::to_string(cb.cols()) + "\n";
  for (int r = 0; r < cb.rows(); ++r) {
    for (int c = 0; c < cb.cols(); ++c)
      out += cb.controllable(r, c) ? state_to_char(cb.at(r, c)) : '#';
    out += '\n';
  }
  return out;
}

inline Codebook parse_text(const std::string& text) {
  std::vector<std::string> lines;
  std::string cur;
  for (char ch : text) {
    if (ch == '\n') {
      lines.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  if (!cur.empty()) lines.push_back(cur);  // final newline optional

  if (lines.empty()) throw std::invalid_argument("codebook text: empty input");

  int rows = 0, cols = 0;
  {
    std::istringstream hs(lines[0]);
    std::string magic, version, rows_kv, cols_kv, extra;
    hs >> magic >> version >> rows_kv >> cols_kv;
    if (hs >> extra || magic != "RISCB" || version != "v1" || rows_kv.rfind("rows=", 0) != 0 ||
        cols_kv.rfind("cols=", 0) != 0)
      throw std::invalid_argument("codebook text: bad header line: " + lines[0]);
    try {
      rows = std::stoi(rows_kv.substr(5));
      cols = std::stoi(cols_kv.substr(5));
    } catch (const std::exception&) {
      throw std::invalid_argument("codebook text: bad header dimensions: " + lines[0]);
    }
  }
  if (rows < 1 || cols < 1) throw std::invalid_argument("codebook text: dimensions must be >= 1");
  if (lines.size() != static_cast<std::size_t>(rows) + 1)
    throw std::invalid_argument("codebook text: expected " + std::to_string(rows) +
                                " grid lines, found " + std::to_string(lines.size() - 1));

  GridSpec grid = GridSpec::full(rows, cols);
  for (int r = 0; r < rows; ++r) {
    const std::string& line = lines[static_cast<std::size_t>(r) + 1];
    if (line.size() != static_cast<std::size_t>(cols))
      throw std::invalid_argument("codebook text: line " + std::to_string(r + 2) + " has " +
                                  std::to_string(line.size()) + " cells, expected " +
                                  std::to_string(cols));
    for (int c = 0; c < cols; ++c)
      if (line[static_cast<std::size_t>(c)] == '#') grid.block_cell(r, c);
  }

  Codebook cb(grid);
  for (int r = 0; r < rows; ++r) {
    const std::string& line = lines[static_cast<std::size_t>(r) + 1];
    for (int c = 0; c < cols; ++c) {
      const char ch = line[static_cast<std::size_t>(c)];
      if (ch == '#') continue;
      if (ch < '0' || ch > '3')
        throw std::invalid_argument(std::string("codebook text: invalid cell character '") + ch +
                                    "' at row " + std::to_string(r) + " col " + std::to_string(c));
      cb.set(r, c, state_from_index(ch - '0'));
    }
  }
  return cb;
}

// FNV-1a 64-bit over the canonical text; used to tag measurements.
inline std::string digest(const Codebook& cb) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char ch : to_text(cb)) {
    h ^= static_cast<unsigned char>(ch);
    h *= 0x100000001b3ULL;
  }
  static const char* hex = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = hex[h & 0xf];
    h >>= 4;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Channel and gain

// One realization of the cascaded link: per-polarization Tx->RIS and
// RIS->Rx vectors indexed over controllable cells, an uncontrolled
// background leakage term, the element reflection magnitude, and the
// power levels the RSSI model needs. noise_power_dbm may be -inf to
// disable receiver noise.
struct ChannelRealization {
  std::vector<cdouble> h_h;
  std::vector<cdouble> h_v;
  std::vector<cdouble> g_h;
  std::vector<cdouble> g_v;
  cdouble background{0.0, 0.0};
  double alpha = 1.0;
  double tx_power_dbm = -10.0;
  double noise_power_dbm = -std::numeric_limits<double>::infinity();

  std::size_t n() const { return h_h.size(); }

  void validate() const {
    if (h_v.size() != n() || g_h.size() != n() || g_v.size() != n())
      throw std::invalid_argument("channel vectors must share one length");
    if (!(alpha > 0.0)) throw std::invalid_argument("reflection magnitude must be positive");
    auto finite = [](const std::vector<cdouble>& v) {
      for (const cdouble& z : v)
        if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return false;
      return true;
    };
    if (!finite(h_h) || !finite(h_v) || !finite(g_h) || !finite(g_v) ||
        !std::isfinite(background.real()) || !std::isfinite(background.imag()))
      throw std::invalid_argument("channel entries must be finite");
  }
};

// Nonnegative end-to-end power gain, with the dBm view used for RSSI.
struct GainValue {
  double linear = 0.0;
  double dbm(double tx_power_dbm) const { return tx_power_dbm + 10.0 * std::log10(linear); }
};

// Reflection coefficient of one polarization branch: alpha * e^{j*pi*bit}.
inline cdouble element_coefficient(int bit, double alpha) {
  if (bit != 0 && bit != 1)
    throw std::invalid_argument("phase bit must be 0 or 1: got " + std::to_string(bit));
  if (!(alpha > 0.0)) throw std::invalid_argument("reflection magnitude must be positive");
  return {bit == 0 ? alpha : -alpha, 0.0};
}

inline void check_dims(const ChannelRealization& chan, const Codebook& cb) {
  if (chan.n() != static_cast<std::size_t>(cb.n()))
    throw std::invalid_argument("dimension mismatch: channel has N=" + std::to_string(chan.n()) +
                                ", codebook has N=" + std::to_string(cb.n()));
}

// Complex received amplitude b + alpha * sum of both polarization branches.
inline cdouble cascade_amplitude(const ChannelRealization& chan, const Codebook& cb) {
  check_dims(chan, cb);
  cdouble sum{0.0, 0.0};
  for (int k = 0; k < cb.n(); ++k) {
    const ElementState s = cb.state_by_index(k);
    const double sh = s.h_bit ? -1.0 : 1.0;
    const double sv = s.v_bit ? -1.0 : 1.0;
    const std::size_t i = static_cast<std::size_t>(k);
    sum += sh * (chan.g_h[i] * chan.h_h[i]) + sv * (chan.g_v[i] * chan.h_v[i]);
  }
  return chan.background + chan.alpha * sum;
}

inline GainValue cascade_gain(const ChannelRealization& chan, const Codebook& cb) {
  return {std::norm(cascade_amplitude(chan, cb))};
}

// ---------------------------------------------------------------------------
// Exhaustive optimum

// 4^10 configurations; keeps a full enumeration comfortably under a second.
inline constexpr std::uint64_t kDefaultEnumerationLimit = 1ULL << 20;

struct ExhaustiveResult {
  Codebook codebook;
  GainValue gain;
};

// Enumerates all 4^N configurations in lexicographic state-sequence order
// and returns the gain maximizer. Strict improvement keeps the first
// maximizer seen, so ties resolve to the lexicographically smallest
// sequence. Refuses grids whose search space exceeds max_configs.
inline ExhaustiveResult exhaustive_optimum(const ChannelRealization& chan, const GridSpec& grid,
                                           std::uint64_t max_configs = kDefaultEnumerationLimit) {
  const int n = grid.n_controllable();
  if (n > 31 || (1ULL << (2 * n)) > max_configs)
    throw std::invalid_argument("exhaustive search over 4^" + std::to_string(n) +
                                " configurations exceeds the enumeration limit of " +
                                std::to_string(max_configs));
  Codebook cur = Codebook::all_off(grid);
  chan.validate();
  check_dims(chan, cur);

  Codebook best = cur;
  double best_gain = cascade_gain(chan, cur).linear;

  std::vector<int> odometer(static_cast<std::size_t>(n), 0);
  const std::uint64_t total = 1ULL << (2 * n);
  for (std::uint64_t step = 1; step < total; ++step) {
    // Advance the last digit with carry: lexicographic ascending order.
    int pos = n - 1;
    while (pos >= 0) {
      if (++odometer[static_cast<std::size_t>(pos)] < kStateCount) break;
      odometer[static_cast<std::size_t>(pos)] = 0;
      --pos;
    }
    for (int k = pos; k < n; ++k)  // only digits at pos.. changed
      cur.set_by_index(k, state_from_index(odometer[static_cast<std::size_t>(k)]));
    const double g = cascade_gain(chan, cur).linear;
    if (g > best_gain) {
      best_gain = g;
      best = cur;
    }
  }
  return {best, GainValue{best_gain}};
}

}  // namespace rislab
