#pragma once

#include <vector>

namespace ews
{

// Spherical Bessel functions of the first (j) and second (y, also written
// n) kind for integer order.

double spherical_bessel_j(int l, double x);
double spherical_bessel_y(int l, double x);

//! j_0..j_lmax at x; Miller downward recurrence normalized by the sum rule
//! sum (2n+1) j_n^2 = 1 when x < lmax, upward recurrence otherwise.
std::vector<double> spherical_bessel_j_all(int lmax, double x);
//! y_0..y_lmax at x > 0 by upward recurrence.
std::vector<double> spherical_bessel_y_all(int lmax, double x);

//! Number of zeros of j_l on (0, x].
int spherical_bessel_j_zero_count(int l, double x);

}  // namespace ews
