#include "qglat/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

#include "qglat/errors.hpp"

namespace qglat {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::IntegrationFailure: return "integration failure";
    case ErrorCode::WindowExhausted: return "window exhausted";
    case ErrorCode::NearEigenvalue: return "near eigenvalue";
    case ErrorCode::InadmissibleLambda: return "inadmissible lambda";
    case ErrorCode::IllConditioned: return "ill-conditioned system";
    case ErrorCode::IncompleteFrontier: return "incomplete frontier";
    case ErrorCode::UninformativeLambda: return "uninformative lambda";
    case ErrorCode::MaskMismatch: return "mask mismatch";
    case ErrorCode::ResampleRequest: return "resample request";
    case ErrorCode::InsufficientGrid: return "insufficient grid";
  }
  return "unknown";
}

double cos_sqrt(double x) {
  if (std::abs(x) < 1e-8) {
    // cos(sqrt(x)) = 1 - x/2 + x^2/24 - ...
    return 1.0 - x / 2.0 + x * x / 24.0;
  }
  if (x > 0.0) return std::cos(std::sqrt(x));
  return std::cosh(std::sqrt(-x));
}

double sinc_sqrt(double x) {
  if (std::abs(x) < 1e-8) {
    // sin(sqrt(x))/sqrt(x) = 1 - x/6 + x^2/120 - ...
    return 1.0 - x / 6.0 + x * x / 120.0;
  }
  if (x > 0.0) {
    const double r = std::sqrt(x);
    return std::sin(r) / r;
  }
  const double r = std::sqrt(-x);
  return std::sinh(r) / r;
}

double free_weyl(double x) { return cos_sqrt(x) / sinc_sqrt(x); }

double dist_to_half_pi_squares(double lambda) {
  constexpr double half_pi = 1.5707963267948966;
  if (lambda <= 0.0) return std::abs(lambda);  // only m = 0 lies at or below 0
  const double m = std::round(std::sqrt(lambda) / half_pi);
  double best = std::abs(lambda);  // m = 0 candidate
  for (double mm : {m - 1.0, m, m + 1.0}) {
    if (mm < 0.0) continue;
    const double p = mm * half_pi;
    best = std::min(best, std::abs(lambda - p * p));
  }
  return best;
}

double refine_root(const std::function<std::optional<double>(double)>& f,
                   double lo, double hi, double flo, double fhi, double tol) {
  if (lo > hi) { std::swap(lo, hi); std::swap(flo, fhi); }
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if ((flo < 0.0) == (fhi < 0.0))
    throw NumericalError(ErrorCode::WindowExhausted,
                         "refine_root: no sign change in bracket");

  for (int it = 0; it < 200 && hi - lo > tol; ++it) {
    // Secant trial, clipped away from the bracket ends; fall back to the
    // midpoint when the secant step degenerates.
    double mid = 0.5 * (lo + hi);
    double trial = mid;
    const double denom = fhi - flo;
    if (denom != 0.0) {
      const double sec = lo - flo * (hi - lo) / denom;
      const double margin = 0.01 * (hi - lo);
      if (sec > lo + margin && sec < hi - margin && it % 3 != 2) trial = sec;
    }

    std::optional<double> ft = f(trial);
    for (int nudge = 1; !ft && nudge <= 4; ++nudge) {
      // Declined evaluation: probe nearby points inside the bracket.
      const double off = nudge * 0.07 * (hi - lo);
      if (trial + off < hi) ft = f(trial + off), trial = trial + off;
      if (!ft && trial - off > lo) ft = f(trial - off), trial = trial - off;
    }
    if (!ft) {
      // The interior declines everywhere we probed; stop refining.
      break;
    }
    if (*ft == 0.0) return trial;
    if ((*ft < 0.0) == (flo < 0.0)) {
      lo = trial;
      flo = *ft;
    } else {
      hi = trial;
      fhi = *ft;
    }
  }
  // Final linear interpolation on the bracket.
  const double denom = fhi - flo;
  if (denom != 0.0) {
    const double sec = lo - flo * (hi - lo) / denom;
    if (sec >= lo && sec <= hi) return sec;
  }
  return 0.5 * (lo + hi);
}

void parallel_for(int n, int workers, const std::function<void(int)>& fn) {
  if (n <= 0) return;
  if (workers <= 0) {
    workers = static_cast<int>(std::thread::hardware_concurrency());
    if (workers <= 0) workers = 1;
  }
  workers = std::min(workers, n);
  if (workers == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }

  std::vector<std::thread> pool;
  std::exception_ptr first_error;
  std::mutex error_mutex;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w]() {
      try {
        for (int i = w; i < n; i += workers) fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace qglat
