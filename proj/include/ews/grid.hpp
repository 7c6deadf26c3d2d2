#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace ews
{

/// Uniform radial mesh r_i = i*h on [0, r_max].
class RadialGrid
{
  public:
    static constexpr double default_r_max = 28.0;
    static constexpr std::size_t default_points = 4096;

    RadialGrid() : RadialGrid(default_r_max, default_points) {}
    RadialGrid(double r_max, std::size_t n_points);

    //! Grid with spacing h extending to at least r_max (last point >= r_max).
    static RadialGrid with_spacing(double h, double r_max);

    double r_max() const { return r_max_; }
    std::size_t size() const { return n_; }
    double spacing() const { return h_; }
    double r(std::size_t i) const { return static_cast<double>(i) * h_; }
    std::vector<double> points() const;

    //! Index of the grid point nearest to r (clamped to the grid).
    std::size_t nearest_index(double r) const;

    bool operator==(RadialGrid const& other) const
    {
        return n_ == other.n_ && r_max_ == other.r_max_;
    }

  private:
    double r_max_;
    std::size_t n_;
    double h_;
};

namespace quad
{
// Integrals over the full uniform grid. Simpson with a 3/8 tail when the
// interval count is odd.
double trapezoid(std::span<double const> f, double h);
double simpson(std::span<double const> f, double h);

// Running trapezoid integral: out[i] = int_0^{r_i} f.
std::vector<double> cumulative_trapezoid(std::span<double const> f, double h);
}  // namespace quad

}  // namespace ews
