#include "fft.hpp"

#include "spdelab/version.hpp"

#include <mutex>
#include <new>

namespace spdelab::detail {

namespace {
// FFTW's planner is not reentrant.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

RealFft::RealFft(std::size_t n) : n_(n) {
  std::lock_guard lock(planner_mutex());
  real_ = fftw_alloc_real(n);
  spec_ = fftw_alloc_complex(n / 2 + 1);
  if (real_ == nullptr || spec_ == nullptr) throw std::bad_alloc();
  const int ni = static_cast<int>(n);
  fwd_ = fftw_plan_dft_r2c_1d(ni, real_, spec_, FFTW_ESTIMATE);
  // FFTW_PRESERVE_INPUT is unavailable for multi-dimensional c2r only; the
  // 1-d c2r planner may clobber the spectrum, which we never reuse.
  bwd_ = fftw_plan_dft_c2r_1d(ni, spec_, real_, FFTW_ESTIMATE);
}

RealFft::~RealFft() {
  std::lock_guard lock(planner_mutex());
  if (fwd_) fftw_destroy_plan(fwd_);
  if (bwd_) fftw_destroy_plan(bwd_);
  fftw_free(real_);
  fftw_free(spec_);
}

void RealFft::forward() { fftw_execute(fwd_); }
void RealFft::backward() { fftw_execute(bwd_); }

}  // namespace spdelab::detail

namespace spdelab {

std::string fft_backend_version() { return fftw_version; }

}  // namespace spdelab
