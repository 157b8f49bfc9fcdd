#include "hml/fft.hpp"

#include <fftw3.h>

#include <mutex>
#include <vector>

#include "hml/errors.hpp"

namespace hml {

namespace {
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

void fft_inplace(std::span<cd> data, std::span<const int> dims, int howmany, FftDirection dir) {
  std::size_t block = 1;
  for (int d : dims) block *= static_cast<std::size_t>(d);
  if (block * howmany != data.size()) throw MismatchError("fft: data size does not match dims");
  if (data.empty()) return;

  std::vector<int> n(dims.begin(), dims.end());
  auto* ptr = reinterpret_cast<fftw_complex*>(data.data());
  fftw_plan plan;
  {
    std::lock_guard lock(planner_mutex());
    plan = fftw_plan_many_dft(static_cast<int>(n.size()), n.data(), howmany, ptr, nullptr, 1,
                              static_cast<int>(block), ptr, nullptr, 1, static_cast<int>(block),
                              dir == FftDirection::Forward ? FFTW_FORWARD : FFTW_BACKWARD,
                              FFTW_ESTIMATE);
  }
  if (!plan) throw Error("fftw planning failed");
  fftw_execute(plan);
  std::lock_guard lock(planner_mutex());
  fftw_destroy_plan(plan);
}

}  // namespace hml
