#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace ncbe {

struct config_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Strictly increasing partition of one property axis. Immutable after
/// construction; elements are the consecutive intervals between nodes.
struct Axis1D {
  std::vector<double> nodes;

  int num_elements() const { return int(nodes.size()) - 1; }
  double x_min() const { return nodes.front(); }
  double x_max() const { return nodes.back(); }
  double element_left(int i) const { return nodes[i]; }
  double element_right(int i) const { return nodes[i + 1]; }
  double element_size(int i) const { return nodes[i + 1] - nodes[i]; }

  double max_element_size() const {
    double h = 0.0;
    for (int i = 0; i < num_elements(); ++i) h = std::max(h, element_size(i));
    return h;
  }

  /// Element index containing x (nodes map to the element on their right,
  /// except x_max which belongs to the last element).
  int locate(double x) const {
    if (x < x_min() || x > x_max())
      throw std::out_of_range("Axis1D::locate: point outside axis");
    auto it = std::upper_bound(nodes.begin(), nodes.end(), x);
    int i = int(it - nodes.begin()) - 1;
    return std::min(std::max(i, 0), num_elements() - 1);
  }

  void validate() const {
    if (nodes.size() < 2) throw config_error("axis needs at least one element");
    if (nodes.front() < 0) throw config_error("axis lower bound must be >= 0");
    for (size_t i = 1; i < nodes.size(); ++i)
      if (!(nodes[i] > nodes[i - 1]))
        throw config_error("axis nodes must be strictly increasing");
  }
};

enum class GridMode { Uniform, Geometric, Random };

inline Axis1D uniform_axis(double x_min, double x_max, int n) {
  if (n < 1) throw config_error("uniform_axis: element count must be >= 1");
  if (!(x_min >= 0.0) || !(x_max > x_min))
    throw config_error("uniform_axis: need 0 <= x_min < x_max");
  Axis1D a;
  a.nodes.resize(n + 1);
  for (int i = 0; i <= n; ++i)
    a.nodes[i] = x_min + (x_max - x_min) * double(i) / double(n);
  a.nodes[0] = x_min;
  a.nodes[n] = x_max;
  return a;
}

namespace detail {

// mt19937_64 mapped to [0,1) the same way on every platform;
// std::uniform_real_distribution is implementation-defined.
struct PortableUniform {
  std::uint64_t state[312];
  explicit PortableUniform(std::uint64_t) {}
};

class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : s_(seed) {}
  std::uint64_t next() {
    std::uint64_t z = (s_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
  double uniform01() { return double(next() >> 11) * 0x1.0p-53; }

 private:
  std::uint64_t s_;
};

}  // namespace detail

/// Graded or randomized partition. Geometric grading uses a fixed
/// end-to-end size ratio (last element / first element); random grids draw
/// interior nodes i.i.d. uniform and sort, retrying on coincident nodes.
inline Axis1D nonuniform_axis(double x_min, double x_max, int n, GridMode mode,
                              std::uint64_t seed = 0, double ratio = 2.0) {
  if (n < 1) throw config_error("nonuniform_axis: element count must be >= 1");
  if (!(x_min >= 0.0) || !(x_max > x_min))
    throw config_error("nonuniform_axis: need 0 <= x_min < x_max");
  Axis1D a;
  if (mode == GridMode::Uniform) return uniform_axis(x_min, x_max, n);
  if (mode == GridMode::Geometric) {
    if (!(ratio > 0)) throw config_error("nonuniform_axis: ratio must be positive");
    a.nodes.resize(n + 1);
    double q = (n == 1) ? 1.0 : std::pow(ratio, 1.0 / double(n - 1));
    // sizes h, hq, hq^2, ...; sum = span
    double sum = 0.0, p = 1.0;
    for (int i = 0; i < n; ++i) { sum += p; p *= q; }
    double h0 = (x_max - x_min) / sum;
    a.nodes[0] = x_min;
    double s = 0.0;
    p = 1.0;
    for (int i = 1; i <= n; ++i) { s += h0 * p; p *= q; a.nodes[i] = x_min + s; }
    a.nodes[n] = x_max;
    a.validate();
    return a;
  }
  detail::SplitMix64 rng(seed);
  for (int attempt = 0; attempt < 100; ++attempt) {
    a.nodes.assign(1, x_min);
    for (int i = 0; i < n - 1; ++i)
      a.nodes.push_back(x_min + (x_max - x_min) * rng.uniform01());
    a.nodes.push_back(x_max);
    std::sort(a.nodes.begin(), a.nodes.end());
    bool ok = true;
    for (size_t i = 1; i < a.nodes.size(); ++i)
      if (!(a.nodes[i] > a.nodes[i - 1])) { ok = false; break; }
    if (ok) return a;
  }
  throw config_error("nonuniform_axis: failed to draw distinct nodes");
}

/// Tensor-product rectilinear grid, dimension d in {1,2,3}.
struct TensorMesh {
  std::vector<Axis1D> axes;

  int dim() const { return int(axes.size()); }

  void validate() const {
    if (axes.empty() || axes.size() > 3)
      throw config_error("TensorMesh: dimension must be 1, 2 or 3");
    for (const auto& a : axes) a.validate();
  }
};

inline TensorMesh tensor_mesh(std::vector<Axis1D> axes) {
  TensorMesh m{std::move(axes)};
  m.validate();
  return m;
}

/// Global mesh parameter: max element size in 1D, max cell diameter
/// sqrt(sum of squared per-axis sizes) for tensor cells.
inline double mesh_size(const TensorMesh& m) {
  if (m.dim() == 1) return m.axes[0].max_element_size();
  double s = 0.0;
  for (const auto& a : m.axes) {
    double h = a.max_element_size();
    s += h * h;
  }
  return std::sqrt(s);
}

/// One coordinate column per axis; shorter axes padded with empty fields.
inline std::string mesh_to_csv(const TensorMesh& m) {
  std::string out;
  for (int a = 0; a < m.dim(); ++a) {
    if (a) out += ',';
    out += "x" + std::to_string(a + 1);
  }
  out += '\n';
  size_t rows = 0;
  for (const auto& a : m.axes) rows = std::max(rows, a.nodes.size());
  char buf[64];
  for (size_t i = 0; i < rows; ++i) {
    for (int a = 0; a < m.dim(); ++a) {
      if (a) out += ',';
      if (i < m.axes[a].nodes.size()) {
        std::snprintf(buf, sizeof buf, "%.17g", m.axes[a].nodes[i]);
        out += buf;
      }
    }
    out += '\n';
  }
  return out;
}

}  // namespace ncbe
