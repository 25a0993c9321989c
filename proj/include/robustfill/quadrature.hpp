#ifndef ROBUSTFILL_QUADRATURE_HPP
#define ROBUSTFILL_QUADRATURE_HPP

#include <cstddef>
#include <vector>

namespace robustfill {

struct Quad1D {
  std::vector<double> nodes;
  std::vector<double> weights;
  std::size_t size() const { return nodes.size(); }
};

// Gauss-Legendre rule on [-1,1]; nodes by Newton iteration on the Legendre
// recurrence, good to ~1e-15 for n up to several thousand.
Quad1D gauss_legendre(int n);

// Gauss-Legendre rule mapped to [a,b].
Quad1D gauss_legendre(int n, double a, double b);

// Gauss-Hermite rule for weight exp(-t^2) on (-inf,inf), via Golub-Welsch.
Quad1D gauss_hermite(int n);

// Tensor product of per-dimension rules, iterated without materializing the
// full grid.  f receives (point, weight).
class TensorGrid {
 public:
  explicit TensorGrid(std::vector<Quad1D> dims) : dims_(std::move(dims)) {}

  std::size_t dim() const { return dims_.size(); }
  std::size_t size() const {
    std::size_t s = 1;
    for (const auto& q : dims_) s *= q.size();
    return s;
  }
  const Quad1D& rule(std::size_t d) const { return dims_[d]; }

  template <class F>
  void for_each(F&& f) const {
    const std::size_t d = dims_.size();
    std::vector<std::size_t> idx(d, 0);
    std::vector<double> pt(d);
    for (;;) {
      double w = 1.0;
      for (std::size_t k = 0; k < d; ++k) {
        pt[k] = dims_[k].nodes[idx[k]];
        w *= dims_[k].weights[idx[k]];
      }
      f(pt, w);
      std::size_t k = 0;
      while (k < d && ++idx[k] == dims_[k].size()) {
        idx[k] = 0;
        ++k;
      }
      if (k == d) break;
    }
  }

 private:
  std::vector<Quad1D> dims_;
};

}  // namespace robustfill

#endif
