#include "fsoisac/fft.hpp"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>
#include <utility>

namespace fsoisac::fft {
namespace {

class PlanCache {
 public:
  ~PlanCache() {
    for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
  }

  fftw_plan get(int n, int sign) {
    std::lock_guard lock(mutex_);
    auto it = plans_.find({n, sign});
    if (it != plans_.end()) return it->second;
    auto* buf = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * static_cast<std::size_t>(n)));
    fftw_plan plan = fftw_plan_dft_1d(n, buf, buf, sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
    fftw_free(buf);
    if (plan == nullptr) throw std::runtime_error("fft: planning failed");
    plans_.emplace(std::make_pair(n, sign), plan);
    return plan;
  }

 private:
  std::mutex mutex_;
  std::map<std::pair<int, int>, fftw_plan> plans_;
};

PlanCache& cache() {
  static PlanCache instance;
  return instance;
}

std::vector<cplx> transform(std::span<const cplx> in, int sign) {
  std::vector<cplx> out(in.begin(), in.end());
  if (out.empty()) return out;
  const int n = static_cast<int>(out.size());
  auto* data = reinterpret_cast<fftw_complex*>(out.data());
  fftw_execute_dft(cache().get(n, sign), data, data);
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  for (auto& v : out) v *= scale;
  return out;
}

}  // namespace

std::vector<cplx> forward(std::span<const cplx> in) { return transform(in, FFTW_FORWARD); }

std::vector<cplx> inverse(std::span<const cplx> in) { return transform(in, FFTW_BACKWARD); }

std::vector<cplx> forward_real(std::span<const double> in) {
  std::vector<cplx> tmp(in.begin(), in.end());
  return transform(tmp, FFTW_FORWARD);
}

std::vector<double> inverse_real(std::span<const cplx> in) {
  const auto full = transform(in, FFTW_BACKWARD);
  std::vector<double> out(full.size());
  for (std::size_t i = 0; i < full.size(); ++i) out[i] = full[i].real();
  return out;
}

}  // namespace fsoisac::fft
