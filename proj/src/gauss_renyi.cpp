#include <cmath>
#include <stdexcept>

#include "entropic/gauss.hpp"

namespace entropic::gauss {

double gaussian_renyi(double mu1, double mu2, double sigma, double b) {
  if (!(sigma > 0.0)) throw std::invalid_argument("sigma must be positive");
  if (!(b >= 0.0 && b <= 1.0)) throw std::invalid_argument("order b must lie in [0, 1]");
  const double d = (mu1 - mu2) / sigma;
  return 0.5 * b * d * d;
}

double gaussian_gb(double mu1, double mu2, double sigma, double b) {
  return (1.0 - b) * gaussian_renyi(mu1, mu2, sigma, b);
}

double integrate_simpson(const std::function<double(double)>& f, double lo, double hi, std::size_t intervals) {
  if (intervals < 2) intervals = 2;
  if (intervals % 2 == 1) ++intervals;
  const double h = (hi - lo) / static_cast<double>(intervals);
  double sum = f(lo) + f(hi);
  for (std::size_t i = 1; i < intervals; ++i) sum += (i % 2 == 1 ? 4.0 : 2.0) * f(lo + h * static_cast<double>(i));
  return sum * h / 3.0;
}

double integrate_box(const std::function<double(std::span<const double>)>& f, std::size_t dim,
                     std::size_t intervals) {
  if (dim == 1) {
    double x[1];
    return integrate_simpson([&](double a) {
      x[0] = a;
      return f(x);
    }, kLower, kUpper, intervals);
  }
  if (dim == 2) {
    double x[2];
    return integrate_simpson([&](double a0) {
      return integrate_simpson([&](double a1) {
        x[0] = a0;
        x[1] = a1;
        return f(x);
      }, kLower, kUpper, intervals);
    }, kLower, kUpper, intervals);
  }
  throw std::invalid_argument("integrate_box supports dimension 1 or 2");
}

}  // namespace entropic::gauss
