#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "chemoflow/geometry.hpp"

namespace chemoflow {

/// Cell-averaged nonnegative density (mass per unit area) on a grid.
class DensityField {
public:
    DensityField() = default;
    DensityField(GridPtr grid, std::vector<double> values);
    static DensityField zeros(GridPtr grid);
    static DensityField constant(GridPtr grid, double value);

    const GridPtr& grid_ptr() const { return grid_; }
    const Grid& grid() const { return *grid_; }
    std::size_t size() const { return values_.size(); }
    std::span<const double> values() const { return values_; }
    std::vector<double>& mutable_values() { return values_; }
    double operator[](std::size_t j) const { return values_[j]; }

    /// Throws std::invalid_argument on a negative or non-finite value.
    void validate() const;

private:
    GridPtr grid_;
    std::vector<double> values_;
};

double mass(const DensityField& field);
double max_value(const DensityField& field);
/// Sum of rho log rho over cells with 0 log 0 = 0.
double entropy(const DensityField& field);
/// Sum of rho |x_center|^2 over cells.
double second_moment(const DensityField& field);
/// L1 distance between two fields on the same grid.
double l1_distance(const DensityField& a, const DensityField& b);

/// N densities on one grid with their sensitivities and cached masses.
class SpeciesState {
public:
    SpeciesState() = default;
    SpeciesState(std::vector<DensityField> fields, std::vector<double> alphas);

    std::size_t species() const { return fields_.size(); }
    const Grid& grid() const { return fields_.front().grid(); }
    const GridPtr& grid_ptr() const { return fields_.front().grid_ptr(); }
    const DensityField& field(std::size_t i) const { return fields_[i]; }
    const std::vector<DensityField>& fields() const { return fields_; }
    const std::vector<double>& alphas() const { return alphas_; }
    const std::vector<double>& masses() const { return masses_; }

    /// Rescale field i so its mass is exactly `target`.
    void renormalize(std::size_t i, double target);
    void set_field(std::size_t i, DensityField f);

private:
    std::vector<DensityField> fields_;
    std::vector<double> alphas_;
    std::vector<double> masses_;
};

/// max over species of the max cell value.
double linf_norm(const SpeciesState& state);

enum class GrowthKind { None, Birth, Death, Custom };

/// Growth term H. Linear kinds act as H_i = +rate_i rho_i (birth) or
/// -rate_i rho_i (death). Custom kinds carry a pointwise function and
/// declared bounds c <= |H_i|/rho_i <= C plus a Lipschitz constant.
struct GrowthSpec {
    using PointwiseFn = std::function<double(std::size_t species, std::size_t cell,
                                             std::span<const double> values_at_cell)>;

    GrowthKind kind = GrowthKind::None;
    std::vector<double> rates;
    PointwiseFn custom;
    bool custom_is_birth = false;
    double declared_c = 0.0;
    double declared_C = 0.0;
    double lipschitz = 0.0;

    static GrowthSpec none() { return {}; }
    static GrowthSpec birth(std::vector<double> rates);
    static GrowthSpec death(std::vector<double> rates);
    static GrowthSpec pointwise(PointwiseFn fn, bool is_birth, double c, double C, double lipschitz);

    bool is_birth() const;
    bool is_death() const;
    /// Lower rate bound c (death: H <= -c rho). Zero for birth.
    double lower_rate() const;
    /// Upper rate bound C.
    double upper_rate() const;
    void validate(std::size_t n_species) const;
};

struct GrowthResult {
    SpeciesState predictor;
    std::vector<double> masses;
};

/// nu_i = rho_i + tau H_i(rho). Throws StepRejected if any nu_i < 0.
GrowthResult apply_growth(const SpeciesState& state, const GrowthSpec& growth, double tau);

/// CSV with a one-line header: cell,r,value (radial) or cell,x,y,value (box).
void write_field_csv(std::ostream& os, const DensityField& field);
/// Reads the value column of a field CSV onto `grid`.
DensityField read_field_csv(std::istream& is, GridPtr grid);

}  // namespace chemoflow
