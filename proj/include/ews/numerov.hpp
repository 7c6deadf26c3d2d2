#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace ews::numerov
{

// Three-term Numerov recursion for u'' = f(r) u on a uniform mesh.

inline double step(double u_prev, double u_cur, double f_prev, double f_cur, double f_next,
                   double c)
{
    return (2.0 * (1.0 + 5.0 * c * f_cur) * u_cur - (1.0 - c * f_prev) * u_prev)
           / (1.0 - c * f_next);
}

//! First index integrated by the recursion. Points 1..start_index(l) are
//! seeded from the regular series; for large l the recursion is only
//! well conditioned once l(l+1) h^2 / (12 r^2) is small.
inline std::size_t start_index(int l)
{
    auto i = static_cast<std::size_t>(std::ceil(std::sqrt(l * (l + 1.0) / 0.6)));
    return i < 2 ? 2 : i;
}

//! Regular series r^{l+1} (1 + (V - E) r^2 / (2l + 3)).
inline double regular_series(int l, double r, double v_minus_e)
{
    return std::pow(r, l + 1) * (1.0 + v_minus_e * r * r / (2.0 * l + 3.0));
}

//! f_i = 2 (V_i - E) + l(l+1)/r_i^2 at r_i = i h; f_0 is unused and set to 0.
std::vector<double> kernel(std::span<double const> potential, int l, double energy, double h,
                           std::size_t n);

}  // namespace ews::numerov
