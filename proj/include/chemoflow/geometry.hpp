#pragma once

#include <cstddef>
#include <memory>
#include <variant>
#include <vector>

namespace chemoflow {

enum class RadialSpacing { UniformRadius, EqualArea };

/// Annular cells on the closed unit disk. Edge radii run from 0 to 1.
struct RadialGrid {
    std::vector<double> edges;     // n+1 radii, edges[0] = 0, edges[n] = 1
    std::vector<double> centers;   // midpoints
    std::vector<double> measures;  // annulus areas

    std::size_t size() const { return centers.size(); }
    double edge_sq(std::size_t e) const { return edges[e] * edges[e]; }

    static RadialGrid build(std::size_t n_cells, RadialSpacing spacing = RadialSpacing::UniformRadius);
};

/// Uniform Cartesian cells on [-L, L]^2, row-major with x fastest.
struct BoxGrid {
    std::size_t nx = 0, ny = 0;
    double half_width = 1.0;
    double hx = 0.0, hy = 0.0;
    std::vector<bool> boundary;  // true for cells touching the box boundary

    std::size_t size() const { return nx * ny; }
    std::size_t index(std::size_t ix, std::size_t iy) const { return ix + nx * iy; }
    double x(std::size_t ix) const { return -half_width + (static_cast<double>(ix) + 0.5) * hx; }
    double y(std::size_t iy) const { return -half_width + (static_cast<double>(iy) + 0.5) * hy; }
    double cell_area() const { return hx * hy; }

    static BoxGrid build(std::size_t nx, std::size_t ny, double half_width);
};

/// Immutable spatial discretization, either radial or Cartesian.
class Grid {
public:
    explicit Grid(RadialGrid g) : impl_(std::move(g)) {}
    explicit Grid(BoxGrid g) : impl_(std::move(g)) {}

    bool is_radial() const { return std::holds_alternative<RadialGrid>(impl_); }
    const RadialGrid& radial() const;
    const BoxGrid& box() const;

    std::size_t size() const;
    double measure(std::size_t cell) const;
    /// |x|^2 at the cell center.
    double center_norm2(std::size_t cell) const;
    double domain_area() const;
    double total_measure() const;

private:
    std::variant<RadialGrid, BoxGrid> impl_;
};

using GridPtr = std::shared_ptr<const Grid>;

GridPtr make_radial_grid(std::size_t n_cells, RadialSpacing spacing = RadialSpacing::UniformRadius);
GridPtr make_box_grid(std::size_t nx, std::size_t ny, double half_width);

}  // namespace chemoflow
