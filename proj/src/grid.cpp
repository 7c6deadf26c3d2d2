#include "ews/grid.hpp"

#include <cmath>
#include <stdexcept>

namespace ews
{

RadialGrid::RadialGrid(double r_max, std::size_t n_points)
    : r_max_(r_max), n_(n_points), h_(0)
{
    if (!(r_max > 0) || n_points < 3)
        throw std::invalid_argument("RadialGrid: need r_max > 0 and at least 3 points");
    h_ = r_max_ / static_cast<double>(n_ - 1);
}

RadialGrid RadialGrid::with_spacing(double h, double r_max)
{
    if (!(h > 0) || !(r_max > h))
        throw std::invalid_argument("RadialGrid::with_spacing: bad spacing");
    auto intervals = static_cast<std::size_t>(std::ceil(r_max / h - 1e-9));
    RadialGrid g(static_cast<double>(intervals) * h, intervals + 1);
    g.h_ = h;
    return g;
}

std::vector<double> RadialGrid::points() const
{
    std::vector<double> out(n_);
    for (std::size_t i = 0; i < n_; ++i)
        out[i] = r(i);
    return out;
}

std::size_t RadialGrid::nearest_index(double r) const
{
    if (r <= 0)
        return 0;
    auto i = static_cast<std::size_t>(std::llround(r / h_));
    return i >= n_ ? n_ - 1 : i;
}

namespace quad
{

double trapezoid(std::span<double const> f, double h)
{
    if (f.size() < 2)
        return 0;
    double s = 0.5 * (f.front() + f.back());
    for (std::size_t i = 1; i + 1 < f.size(); ++i)
        s += f[i];
    return s * h;
}

double simpson(std::span<double const> f, double h)
{
    std::size_t n = f.size();
    if (n < 3)
        return trapezoid(f, h);
    std::size_t intervals = n - 1;
    std::size_t simpson_end = intervals;
    double tail = 0;
    if (intervals % 2 == 1)
    {
        if (intervals < 3)
            return trapezoid(f, h);
        // Simpson 3/8 over the last three intervals
        simpson_end = intervals - 3;
        std::size_t k = simpson_end;
        tail = 3.0 * h / 8.0 * (f[k] + 3 * f[k + 1] + 3 * f[k + 2] + f[k + 3]);
    }
    double s = 0;
    if (simpson_end > 0)
    {
        s = f[0] + f[simpson_end];
        for (std::size_t i = 1; i < simpson_end; ++i)
            s += (i % 2 ? 4.0 : 2.0) * f[i];
        s *= h / 3.0;
    }
    return s + tail;
}

std::vector<double> cumulative_trapezoid(std::span<double const> f, double h)
{
    std::vector<double> out(f.size(), 0.0);
    for (std::size_t i = 1; i < f.size(); ++i)
        out[i] = out[i - 1] + 0.5 * h * (f[i - 1] + f[i]);
    return out;
}

}  // namespace quad
}  // namespace ews
