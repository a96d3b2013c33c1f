#include "stirflow/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>

namespace stirflow::fft {
namespace {

// FFTW planning is not thread-safe; execution with new-array calls is.
struct PlanCache {
  std::mutex mutex;
  std::map<std::pair<int, int>, fftw_plan> plans;

  fftw_plan get(int n, int sign) {
    std::lock_guard<std::mutex> lock(mutex);
    auto key = std::make_pair(n, sign);
    if (auto it = plans.find(key); it != plans.end()) return it->second;
    fftw_complex* buf = fftw_alloc_complex(static_cast<size_t>(n));
    fftw_plan p = fftw_plan_dft_1d(n, buf, buf, sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
    fftw_free(buf);
    plans.emplace(key, p);
    return p;
  }

  ~PlanCache() {
    for (auto& [key, p] : plans) fftw_destroy_plan(p);
  }
};

PlanCache& cache() {
  static PlanCache c;
  return c;
}

void run(std::span<const cplx> in, std::span<cplx> out, int sign) {
  if (in.size() != out.size()) throw Error("fft: size mismatch");
  const int n = static_cast<int>(in.size());
  if (n == 0) return;
  if (in.data() != out.data()) std::copy(in.begin(), in.end(), out.begin());
  auto* p = reinterpret_cast<fftw_complex*>(out.data());
  fftw_execute_dft(cache().get(n, sign), p, p);
}

}  // namespace

void forward(std::span<const cplx> in, std::span<cplx> out) { run(in, out, FFTW_FORWARD); }

void inverse(std::span<const cplx> in, std::span<cplx> out) {
  run(in, out, FFTW_BACKWARD);
  const double s = 1.0 / static_cast<double>(out.size());
  for (auto& v : out) v *= s;
}

void apply_symbol(std::span<const cplx> in, std::span<const cplx> symbol, std::span<cplx> out) {
  CplxVec work(in.size());
  forward(in, work);
  for (size_t k = 0; k < work.size(); ++k) work[k] *= symbol[k];
  inverse(work, out);
}

CplxVec derivative(std::span<const cplx> samples) {
  const int n = static_cast<int>(samples.size());
  CplxVec symbol(static_cast<size_t>(n));
  for (int k = 0; k < n; ++k) {
    const int w = wavenumber(k, n);
    symbol[static_cast<size_t>(k)] = (2 * w == n) ? cplx{} : kI * static_cast<double>(w);
  }
  CplxVec out(samples.size());
  apply_symbol(samples, symbol, out);
  return out;
}

TrigInterpolant::TrigInterpolant(std::span<const cplx> samples)
    : n_(static_cast<int>(samples.size())), coef_(samples.size()) {
  forward(samples, coef_);
  for (auto& c : coef_) c /= static_cast<double>(n_);
}

void TrigInterpolant::eval(double t, cplx& value, cplx& d1, cplx& d2) const {
  value = d1 = d2 = 0.0;
  for (int k = 0; k < n_; ++k) {
    const int w = wavenumber(k, n_);
    cplx c = coef_[static_cast<size_t>(k)];
    if (2 * w == n_) {
      // split the Nyquist mode evenly so the interpolant of real data stays real
      const double wd = static_cast<double>(w);
      value += c * std::cos(wd * t);
      d1 += -c * wd * std::sin(wd * t);
      d2 += -c * wd * wd * std::cos(wd * t);
      continue;
    }
    const double wd = static_cast<double>(w);
    const cplx e = std::polar(1.0, wd * t);
    value += c * e;
    d1 += c * e * kI * wd;
    d2 -= c * e * wd * wd;
  }
}

cplx TrigInterpolant::operator()(double t) const {
  cplx v, d1, d2;
  eval(t, v, d1, d2);
  return v;
}

}  // namespace stirflow::fft
