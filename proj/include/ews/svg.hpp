#pragma once

#include <string>
#include <vector>

namespace ews::svg
{

struct Series
{
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
};

struct Marker
{
    double x;
    std::string label;
};

struct Plot
{
    std::string title;
    std::string x_label;
    std::string y_label;
    bool log_x = false;
    //! Log axes drop non-positive samples.
    bool log_y = false;
    std::vector<Series> series;
    //! Vertical lines, e.g. resonance energies.
    std::vector<Marker> markers;
    int width = 800;
    int height = 500;
};

std::string render(Plot const& plot);
void write(Plot const& plot, std::string const& path);

}  // namespace ews::svg
