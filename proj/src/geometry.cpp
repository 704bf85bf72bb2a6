#include "chemoflow/geometry.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace chemoflow {

RadialGrid RadialGrid::build(std::size_t n_cells, RadialSpacing spacing)
{
    if (n_cells == 0) {
        throw std::invalid_argument("radial grid needs at least one cell");
    }
    RadialGrid g;
    const double n = static_cast<double>(n_cells);
    g.edges.resize(n_cells + 1);
    for (std::size_t j = 0; j <= n_cells; ++j) {
        const double t = static_cast<double>(j) / n;
        g.edges[j] = spacing == RadialSpacing::UniformRadius ? t : std::sqrt(t);
    }
    g.edges.front() = 0.0;
    g.edges.back() = 1.0;

    g.centers.resize(n_cells);
    g.measures.resize(n_cells);
    for (std::size_t j = 0; j < n_cells; ++j) {
        const double a = g.edges[j], b = g.edges[j + 1];
        g.centers[j] = 0.5 * (a + b);
        // (b - a)(b + a) keeps the telescoping sum exact to rounding
        g.measures[j] = std::numbers::pi * (b - a) * (b + a);
    }
    return g;
}

BoxGrid BoxGrid::build(std::size_t nx, std::size_t ny, double half_width)
{
    if (nx < 2 || ny < 2) {
        throw std::invalid_argument("box grid needs at least 2 cells per direction, got " +
                                    std::to_string(nx) + "x" + std::to_string(ny));
    }
    if (!(half_width > 0.0) || !std::isfinite(half_width)) {
        throw std::invalid_argument("box half width must be positive");
    }
    BoxGrid g;
    g.nx = nx;
    g.ny = ny;
    g.half_width = half_width;
    g.hx = 2.0 * half_width / static_cast<double>(nx);
    g.hy = 2.0 * half_width / static_cast<double>(ny);
    g.boundary.assign(nx * ny, false);
    for (std::size_t iy = 0; iy < ny; ++iy) {
        for (std::size_t ix = 0; ix < nx; ++ix) {
            g.boundary[g.index(ix, iy)] = ix == 0 || iy == 0 || ix + 1 == nx || iy + 1 == ny;
        }
    }
    return g;
}

const RadialGrid& Grid::radial() const
{
    if (auto* g = std::get_if<RadialGrid>(&impl_)) return *g;
    throw std::invalid_argument("operation requires a radial grid");
}

const BoxGrid& Grid::box() const
{
    if (auto* g = std::get_if<BoxGrid>(&impl_)) return *g;
    throw std::invalid_argument("operation requires a box grid");
}

std::size_t Grid::size() const
{
    return std::visit([](const auto& g) { return g.size(); }, impl_);
}

double Grid::measure(std::size_t cell) const
{
    if (auto* g = std::get_if<RadialGrid>(&impl_)) return g->measures[cell];
    return std::get<BoxGrid>(impl_).cell_area();
}

double Grid::center_norm2(std::size_t cell) const
{
    if (auto* g = std::get_if<RadialGrid>(&impl_)) return g->centers[cell] * g->centers[cell];
    const auto& b = std::get<BoxGrid>(impl_);
    const double x = b.x(cell % b.nx), y = b.y(cell / b.nx);
    return x * x + y * y;
}

double Grid::domain_area() const
{
    if (is_radial()) return std::numbers::pi;
    const double side = 2.0 * std::get<BoxGrid>(impl_).half_width;
    return side * side;
}

double Grid::total_measure() const
{
    double s = 0.0;
    for (std::size_t j = 0; j < size(); ++j) s += measure(j);
    return s;
}

GridPtr make_radial_grid(std::size_t n_cells, RadialSpacing spacing)
{
    return std::make_shared<const Grid>(RadialGrid::build(n_cells, spacing));
}

GridPtr make_box_grid(std::size_t nx, std::size_t ny, double half_width)
{
    return std::make_shared<const Grid>(BoxGrid::build(nx, ny, half_width));
}

}  // namespace chemoflow
