#include "fft.h"

#include <fftw3.h>

#include <algorithm>
#include <map>
#include <mutex>

namespace mcse::internal {
namespace {

struct PlanPair {
  fftw_plan forward = nullptr;
  fftw_plan inverse = nullptr;
};

std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

// Plans live for the process lifetime; fftw_execute_dft_* on them is
// thread-safe as long as planning itself is serialized.
const PlanPair& plans_for(int size) {
  static std::map<int, PlanPair> cache;
  std::lock_guard<std::mutex> lock(planner_mutex());
  auto it = cache.find(size);
  if (it != cache.end()) return it->second;
  double* re = fftw_alloc_real(size);
  fftw_complex* cx = fftw_alloc_complex(size / 2 + 1);
  PlanPair p;
  p.forward = fftw_plan_dft_r2c_1d(size, re, cx, FFTW_ESTIMATE);
  p.inverse = fftw_plan_dft_c2r_1d(size, cx, re, FFTW_ESTIMATE);
  fftw_free(re);
  fftw_free(cx);
  return cache.emplace(size, p).first->second;
}

}  // namespace

struct RealFft::Buffers {
  double* real = nullptr;
  fftw_complex* complex = nullptr;
  const PlanPair* plans = nullptr;
};

RealFft::RealFft(int size) : size_(size), buffers_(new Buffers) {
  buffers_->real = fftw_alloc_real(size);
  buffers_->complex = fftw_alloc_complex(size / 2 + 1);
  buffers_->plans = &plans_for(size);
}

RealFft::~RealFft() {
  fftw_free(buffers_->real);
  fftw_free(buffers_->complex);
}

void RealFft::forward(const double* time_data,
                      std::complex<double>* freq_data) {
  std::copy(time_data, time_data + size_, buffers_->real);
  fftw_execute_dft_r2c(buffers_->plans->forward, buffers_->real,
                       buffers_->complex);
  const int bins = size_ / 2 + 1;
  for (int k = 0; k < bins; ++k) {
    freq_data[k] = {buffers_->complex[k][0], buffers_->complex[k][1]};
  }
}

void RealFft::inverse(const std::complex<double>* freq_data,
                      double* time_data) {
  const int bins = size_ / 2 + 1;
  for (int k = 0; k < bins; ++k) {
    buffers_->complex[k][0] = freq_data[k].real();
    buffers_->complex[k][1] = freq_data[k].imag();
  }
  // c2r destroys its input; the buffer is scratch.
  fftw_execute_dft_c2r(buffers_->plans->inverse, buffers_->complex,
                       buffers_->real);
  const double scale = 1.0 / size_;
  for (int n = 0; n < size_; ++n) time_data[n] = buffers_->real[n] * scale;
}

}  // namespace mcse::internal
