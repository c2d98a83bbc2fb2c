#ifndef QAC_TENSOR_HPP_
#define QAC_TENSOR_HPP_

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "qac/errors.hpp"

namespace qac {

// Dense row-major array of doubles. Most uses are 1-D or 2-D.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> shape, double fill = 0.0)
      : shape_(std::move(shape)), data_(element_count(shape_), fill) {}
  Tensor(std::vector<std::size_t> shape, std::vector<double> data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    if (data_.size() != element_count(shape_))
      throw ContractError("tensor data length does not match shape");
  }

  static Tensor matrix(std::size_t rows, std::size_t cols, double fill = 0.0) {
    return Tensor({rows, cols}, fill);
  }
  static Tensor vector(std::span<const double> values) {
    return Tensor({values.size()},
                  std::vector<double>(values.begin(), values.end()));
  }

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }
  // A 1-D tensor is treated as a single row.
  std::size_t rows() const { return shape_.size() >= 2 ? shape_[0] : 1; }
  std::size_t cols() const { return shape_.empty() ? 0 : shape_.back(); }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }
  double& operator()(std::size_t r, std::size_t c) {
    return data_[r * cols() + c];
  }
  double operator()(std::size_t r, std::size_t c) const {
    return data_[r * cols() + c];
  }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  std::span<const double> row(std::size_t r) const {
    return std::span<const double>(data_).subspan(r * cols(), cols());
  }
  std::span<double> row(std::size_t r) {
    return std::span<double>(data_).subspan(r * cols(), cols());
  }

  void fill(double v) { std::fill(data_.begin(), data_.end(), v); }
  bool all_finite() const {
    for (double v : data_)
      if (!std::isfinite(v)) return false;
    return true;
  }

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  static std::size_t element_count(const std::vector<std::size_t>& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                           std::multiplies<>());
  }

  std::vector<std::size_t> shape_;
  std::vector<double> data_;
};

// Stacks equal-length rows into a (rows x cols) matrix.
inline Tensor stack_rows(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) throw ContractError("cannot stack zero rows");
  Tensor out = Tensor::matrix(rows.size(), rows.front().size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != out.cols())
      throw ContractError("ragged rows in stack_rows");
    std::copy(rows[r].begin(), rows[r].end(), out.row(r).begin());
  }
  return out;
}

// FNV-1a over the raw bytes of every tensor; used to assert frozen weights.
inline std::uint64_t fingerprint(std::span<const Tensor* const> tensors) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const Tensor* t : tensors) {
    for (double v : t->data()) {
      std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
      for (int b = 0; b < 8; ++b) {
        h ^= (bits >> (8 * b)) & 0xff;
        h *= 0x100000001b3ULL;
      }
    }
  }
  return h;
}

// ---------------------------------------------------------------------------
// Checkpoints
//
// "QACKPT01", u64 tensor count, then per tensor: u64 rank, rank x u64 dims,
// row-major f64 values. All integers and doubles little-endian.

inline constexpr char kCheckpointMagic[8] = {'Q', 'A', 'C', 'K',
                                             'P', 'T', '0', '1'};

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

inline void save_checkpoint(const std::string& path,
                            std::span<const Tensor* const> tensors) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write checkpoint " + path);
  auto put_u64 = [&](std::uint64_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
  };
  out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
  put_u64(tensors.size());
  for (const Tensor* t : tensors) {
    put_u64(t->rank());
    for (std::size_t d : t->shape()) put_u64(d);
    out.write(reinterpret_cast<const char*>(t->data().data()),
              static_cast<std::streamsize>(t->size() * sizeof(double)));
  }
  if (!out) throw ConfigError("failed writing checkpoint " + path);
}

inline std::vector<Tensor> load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open checkpoint " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0)
    throw ConfigError("bad checkpoint magic in " + path);
  auto get_u64 = [&]() {
    std::uint64_t v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof(v));
    if (!in) throw ConfigError("truncated checkpoint " + path);
    return v;
  };
  const std::uint64_t count = get_u64();
  std::vector<Tensor> tensors;
  for (std::uint64_t i = 0; i < count; ++i) {
    const std::uint64_t rank = get_u64();
    if (rank > 8) throw ConfigError("implausible tensor rank in " + path);
    std::vector<std::size_t> shape(rank);
    for (auto& d : shape) d = get_u64();
    Tensor t(shape);
    in.read(reinterpret_cast<char*>(t.data().data()),
            static_cast<std::streamsize>(t.size() * sizeof(double)));
    if (!in) throw ConfigError("truncated checkpoint " + path);
    tensors.push_back(std::move(t));
  }
  return tensors;
}

}  // namespace qac

#endif  // QAC_TENSOR_HPP_
