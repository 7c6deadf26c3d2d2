#include "ews/bessel.hpp"

#include <cmath>
#include <string>

#include "ews/errors.hpp"

namespace ews
{

std::vector<double> spherical_bessel_j_all(int lmax, double x)
{
    if (lmax < 0)
        throw ConfigError("spherical_bessel_j: negative order");
    std::vector<double> j(static_cast<std::size_t>(lmax) + 1, 0.0);
    if (x == 0)
    {
        j[0] = 1.0;
        return j;
    }
    double ax = std::abs(x);
    if (ax >= lmax)
    {
        j[0] = std::sin(x) / x;
        if (lmax >= 1)
            j[1] = std::sin(x) / (x * x) - std::cos(x) / x;
        for (int n = 1; n < lmax; ++n)
            j[n + 1] = (2 * n + 1) / x * j[n] - j[n - 1];
        return j;
    }

    // Miller: start well above both lmax and x, recur down, normalize.
    int start = lmax + static_cast<int>(std::sqrt(40.0 * (lmax + ax))) + 20;
    double above = 0.0;   // j_{n+1}
    double cur = 1e-30;   // j_n, n = start
    double norm = (2 * start + 1) * cur * cur;
    for (int n = start - 1; n >= 0; --n)
    {
        double next = (2 * n + 3) / x * cur - above;
        above = cur;
        cur = next;
        if (n <= lmax)
            j[static_cast<std::size_t>(n)] = cur;
        norm += (2 * n + 1) * cur * cur;
        if (std::abs(cur) > 1e150)
        {
            constexpr double s = 1e-150;
            cur *= s;
            above *= s;
            norm *= s * s;
            for (int m = n; m <= lmax; ++m)
                j[static_cast<std::size_t>(m)] *= s;
        }
    }
    double scale = 1.0 / std::sqrt(norm);
    // Overall sign from whichever closed form is better conditioned.
    double j0 = std::sin(x) / x;
    double j1 = std::sin(x) / (x * x) - std::cos(x) / x;
    bool flip = std::abs(j0) >= std::abs(j1) || lmax == 0 ? (j0 > 0) != (j[0] > 0)
                                                          : (j1 > 0) != (j[1] > 0);
    if (flip)
        scale = -scale;
    for (double& v : j)
        v *= scale;
    return j;
}

std::vector<double> spherical_bessel_y_all(int lmax, double x)
{
    if (lmax < 0)
        throw ConfigError("spherical_bessel_y: negative order");
    if (!(x > 0))
        throw ConfigError("spherical_bessel_y: argument must be positive, got "
                          + std::to_string(x));
    std::vector<double> y(static_cast<std::size_t>(lmax) + 1);
    y[0] = -std::cos(x) / x;
    if (lmax >= 1)
        y[1] = -std::cos(x) / (x * x) - std::sin(x) / x;
    for (int n = 1; n < lmax; ++n)
        y[n + 1] = (2 * n + 1) / x * y[n] - y[n - 1];
    return y;
}

double spherical_bessel_j(int l, double x)
{
    return spherical_bessel_j_all(l, x)[static_cast<std::size_t>(l)];
}

double spherical_bessel_y(int l, double x)
{
    return spherical_bessel_y_all(l, x)[static_cast<std::size_t>(l)];
}

int spherical_bessel_j_zero_count(int l, double x)
{
    // Zeros of j_l are separated by more than pi and the first one lies
    // above l, so sampling with step 1 finds every sign change.
    if (x <= l)
        return 0;
    int count = 0;
    double prev = spherical_bessel_j(l, static_cast<double>(l) + 1e-3);
    int steps = static_cast<int>(std::ceil(x - l));
    for (int s = 1; s <= steps; ++s)
    {
        double xs = std::min(x, l + static_cast<double>(s));
        double cur = spherical_bessel_j(l, xs);
        if ((cur > 0) != (prev > 0) && cur != 0)
            ++count;
        prev = cur;
    }
    return count;
}

}  // namespace ews
