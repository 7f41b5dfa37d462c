#include "slt/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <tuple>
#include <vector>

#include "slt/errors.hpp"

namespace slt {

namespace {

class PlanCache {
 public:
  ~PlanCache() {
    for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
  }

  fftw_plan get(int dimension, int points, int sign) {
    std::lock_guard lock(mutex_);
    const auto key = std::make_tuple(dimension, points, sign);
    if (auto it = plans_.find(key); it != plans_.end()) return it->second;
    const std::size_t n = dimension == 1 ? points : static_cast<std::size_t>(points) * points;
    std::vector<fftw_complex> scratch(n);
    fftw_plan plan = dimension == 1
                         ? fftw_plan_dft_1d(points, scratch.data(), scratch.data(), sign,
                                            FFTW_ESTIMATE | FFTW_UNALIGNED)
                         : fftw_plan_dft_2d(points, points, scratch.data(), scratch.data(), sign,
                                            FFTW_ESTIMATE | FFTW_UNALIGNED);
    plans_.emplace(key, plan);
    return plan;
  }

 private:
  std::mutex mutex_;
  std::map<std::tuple<int, int, int>, fftw_plan> plans_;
};

PlanCache& cache() {
  static PlanCache instance;
  return instance;
}

void execute(std::span<std::complex<double>> data, int dimension, int points, int sign) {
  const std::size_t expected = dimension == 1 ? points : static_cast<std::size_t>(points) * points;
  if (data.size() != expected) throw StructuralError("fft buffer size does not match grid shape");
  auto* buf = reinterpret_cast<fftw_complex*>(data.data());
  fftw_execute_dft(cache().get(dimension, points, sign), buf, buf);
}

}  // namespace

void fft_forward(std::span<std::complex<double>> data, int dimension, int points) {
  execute(data, dimension, points, FFTW_FORWARD);
}

void fft_backward(std::span<std::complex<double>> data, int dimension, int points) {
  execute(data, dimension, points, FFTW_BACKWARD);
}

}  // namespace slt
