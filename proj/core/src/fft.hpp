#pragma once

// Thin RAII wrapper around a pair of real-to-complex FFTW plans. Plans are
// built with FFTW_ESTIMATE so that the chosen algorithm (and therefore every
// rounding decision) is identical from run to run.

#include <fftw3.h>

#include <complex>
#include <cstddef>
#include <span>

namespace spdelab::detail {

class RealFft {
 public:
  explicit RealFft(std::size_t n);
  ~RealFft();
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  std::size_t size() const { return n_; }
  std::size_t spectrum_size() const { return n_ / 2 + 1; }

  std::span<double> real() { return {real_, n_}; }
  std::span<std::complex<double>> spectrum() {
    return {reinterpret_cast<std::complex<double>*>(spec_), n_ / 2 + 1};
  }

  /// real() -> spectrum(), unnormalized.
  void forward();
  /// spectrum() -> real(), unnormalized (caller divides by n).
  void backward();

 private:
  std::size_t n_;
  double* real_ = nullptr;
  fftw_complex* spec_ = nullptr;
  fftw_plan fwd_ = nullptr;
  fftw_plan bwd_ = nullptr;
};

}  // namespace spdelab::detail
