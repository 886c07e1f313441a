#pragma once

#include <functional>
#include <optional>

namespace qglat {

// Entire functions of lambda. cos_sqrt(x) = cos(sqrt(x)) continued to
// x <= 0 as cosh(sqrt(-x)); sinc_sqrt(x) = sin(sqrt(x))/sqrt(x) likewise.
double cos_sqrt(double x);
double sinc_sqrt(double x);
// cos_sqrt / sinc_sqrt; the zero-potential Weyl value sqrt(x)*cot(sqrt(x)).
double free_weyl(double x);

// Distance from lambda to the set {x : cos_sqrt(x) in {0, +-1}}, i.e. the
// squares (m*pi/2)^2, m = 0, 1, 2, ...
double dist_to_half_pi_squares(double lambda);

// Safeguarded secant/bisection root refinement on a sign-change bracket
// [lo, hi]. f may decline an evaluation (nullopt); the refiner then nudges
// the trial point inside the bracket and eventually falls back to plain
// interval halving on the last valid pair. Returns the refined abscissa.
double refine_root(const std::function<std::optional<double>(double)>& f,
                   double lo, double hi, double flo, double fhi, double tol);

// Deterministic parallel loop: fn(i) for i in [0, n), partitioned over
// `workers` threads (<= 0 means hardware concurrency). Each index is
// processed exactly once; callers write to disjoint slots so the result is
// independent of the pool size. Exceptions are rethrown on the caller.
void parallel_for(int n, int workers, const std::function<void(int)>& fn);

}  // namespace qglat
