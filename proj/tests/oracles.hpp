// oracles.hpp - test-only reference implementations and statistics helpers.
//
// Everything here is deliberately independent of the closed-form production
// paths: brute-force sums, quadrature, and textbook special functions used
// to freeze expected values.
#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include "masim/channel.hpp"
#include "masim/params.hpp"
#include "masim/types.hpp"

namespace masim::testing {

// Regularized lower incomplete gamma P(a, x) (series + continued fraction).
double gamma_p(double a, double x);

// chi-square CDF with k degrees of freedom.
double chi2_cdf(double x, int k);

// Binomial 3-sigma check: |observed/n - p| <= 3 sqrt(p(1-p)/n).
bool within_3sigma(double observed, int n, double p);

// Piecewise evaluation of the subframe-2 superposition at arbitrary time by
// direct summation over devices (no breakpoint machinery).
cd direct_waveform_value(std::span<const ActiveDevice> devices, double t,
                         double T, int C2);

}  // namespace masim::testing
