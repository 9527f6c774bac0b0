#ifndef MCSE_SRC_FFT_H_
#define MCSE_SRC_FFT_H_

#include <complex>
#include <memory>

namespace mcse::internal {

// Real-input FFT of a fixed even size backed by FFTW. Instances are cheap;
// plans are shared process-wide and created under a lock.
class RealFft {
 public:
  explicit RealFft(int size);
  ~RealFft();
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  int size() const { return size_; }

  // Unnormalized forward transform: time_data[size] -> freq_data[size/2+1].
  void forward(const double* time_data, std::complex<double>* freq_data);
  // Inverse transform scaled by 1/size.
  void inverse(const std::complex<double>* freq_data, double* time_data);

 private:
  struct Buffers;
  int size_;
  std::unique_ptr<Buffers> buffers_;
};

}  // namespace mcse::internal

#endif  // MCSE_SRC_FFT_H_
