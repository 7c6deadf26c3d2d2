#include "ews/svg.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "ews/errors.hpp"

namespace ews::svg
{

namespace
{

constexpr char const* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                   "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

std::string escape(std::string const& s)
{
    std::string out;
    for (char c : s)
    {
        switch (c)
        {
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '&': out += "&amp;"; break;
        case '"': out += "&quot;"; break;
        default: out += c;
        }
    }
    return out;
}

struct Axis
{
    double lo;
    double hi;
    bool log;

    double map(double v) const
    {
        if (log)
            return (std::log10(v) - std::log10(lo)) / (std::log10(hi) - std::log10(lo));
        return (v - lo) / (hi - lo);
    }

    std::vector<double> ticks() const
    {
        std::vector<double> t;
        if (log)
        {
            for (double d = std::floor(std::log10(lo)); d <= std::ceil(std::log10(hi)); d += 1)
            {
                double v = std::pow(10.0, d);
                if (v >= lo * (1 - 1e-12) && v <= hi * (1 + 1e-12))
                    t.push_back(v);
            }
            return t;
        }
        double span = hi - lo;
        double raw = span / 6;
        double mag = std::pow(10.0, std::floor(std::log10(raw)));
        double step = mag;
        for (double m : {1.0, 2.0, 5.0, 10.0})
            if (m * mag >= raw)
            {
                step = m * mag;
                break;
            }
        for (double v = std::ceil(lo / step) * step; v <= hi + 1e-12 * span; v += step)
            t.push_back(std::abs(v) < 1e-12 * span ? 0.0 : v);
        return t;
    }
};

bool usable(double v, bool log)
{
    return std::isfinite(v) && (!log || v > 0);
}

Axis make_axis(Plot const& plot, bool for_x)
{
    bool log = for_x ? plot.log_x : plot.log_y;
    double lo = INFINITY, hi = -INFINITY;
    for (auto const& s : plot.series)
        for (double v : for_x ? s.x : s.y)
            if (usable(v, log))
            {
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
    if (!std::isfinite(lo))
    {
        lo = log ? 1 : 0;
        hi = log ? 10 : 1;
    }
    if (hi <= lo)
    {
        double pad = log ? 0 : std::max(std::abs(lo) * 0.1, 1.0);
        lo = log ? lo / 10 : lo - pad;
        hi = log ? hi * 10 : hi + pad;
    }
    return {lo, hi, log};
}

std::string tick_label(double v)
{
    std::ostringstream os;
    os << std::setprecision(3) << v;
    return os.str();
}

}  // namespace

std::string render(Plot const& plot)
{
    double left = 80, right = 160, top = 40, bottom = 60;
    double pw = plot.width - left - right, ph = plot.height - top - bottom;
    Axis xa = make_axis(plot, true), ya = make_axis(plot, false);
    auto px = [&](double v) { return left + pw * xa.map(v); };
    auto py = [&](double v) { return top + ph * (1.0 - ya.map(v)); };

    std::ostringstream os;
    os << std::fixed << std::setprecision(2);
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << plot.width << "\" height=\""
       << plot.height << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << left + pw / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">"
       << escape(plot.title) << "</text>\n";
    os << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
       << "\" fill=\"none\" stroke=\"black\"/>\n";

    for (double t : xa.ticks())
    {
        double x = px(t);
        os << "<line x1=\"" << x << "\" y1=\"" << top + ph << "\" x2=\"" << x << "\" y2=\""
           << top + ph + 5 << "\" stroke=\"black\"/>\n";
        os << "<text x=\"" << x << "\" y=\"" << top + ph + 18 << "\" text-anchor=\"middle\">"
           << tick_label(t) << "</text>\n";
    }
    for (double t : ya.ticks())
    {
        double y = py(t);
        os << "<line x1=\"" << left - 5 << "\" y1=\"" << y << "\" x2=\"" << left << "\" y2=\"" << y
           << "\" stroke=\"black\"/>\n";
        os << "<text x=\"" << left - 8 << "\" y=\"" << y + 4 << "\" text-anchor=\"end\">"
           << tick_label(t) << "</text>\n";
    }
    os << "<text x=\"" << left + pw / 2 << "\" y=\"" << plot.height - 15
       << "\" text-anchor=\"middle\">" << escape(plot.x_label) << "</text>\n";
    os << "<text transform=\"translate(18," << top + ph / 2
       << ") rotate(-90)\" text-anchor=\"middle\">" << escape(plot.y_label) << "</text>\n";

    os << "<clipPath id=\"area\"><rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw
       << "\" height=\"" << ph << "\"/></clipPath>\n";
    for (std::size_t k = 0; k < plot.series.size(); ++k)
    {
        auto const& s = plot.series[k];
        char const* color = palette[k % std::size(palette)];
        os << "<polyline clip-path=\"url(#area)\" fill=\"none\" stroke=\"" << color
           << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i)
            if (usable(s.x[i], xa.log) && usable(s.y[i], ya.log))
                os << px(s.x[i]) << ',' << py(s.y[i]) << ' ';
        os << "\"/>\n";
        double ly = top + 14 + 18 * static_cast<double>(k);
        os << "<line x1=\"" << left + pw + 12 << "\" y1=\"" << ly - 4 << "\" x2=\""
           << left + pw + 32 << "\" y2=\"" << ly - 4 << "\" stroke=\"" << color
           << "\" stroke-width=\"2\"/>\n";
        os << "<text x=\"" << left + pw + 38 << "\" y=\"" << ly << "\">" << escape(s.label)
           << "</text>\n";
    }
    for (auto const& m : plot.markers)
    {
        if (!usable(m.x, xa.log) || m.x < xa.lo || m.x > xa.hi)
            continue;
        double x = px(m.x);
        os << "<line x1=\"" << x << "\" y1=\"" << top << "\" x2=\"" << x << "\" y2=\"" << top + ph
           << "\" stroke=\"gray\" stroke-dasharray=\"4,3\"/>\n";
        os << "<text x=\"" << x + 3 << "\" y=\"" << top + 12 << "\" fill=\"gray\">"
           << escape(m.label) << "</text>\n";
    }
    os << "</svg>\n";
    return os.str();
}

void write(Plot const& plot, std::string const& path)
{
    std::ofstream os(path);
    if (!os)
        throw ConfigError("cannot write " + path);
    os << render(plot);
}

}  // namespace ews::svg
