#include "chemoflow/fields.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "chemoflow/errors.hpp"

namespace chemoflow {

DensityField::DensityField(GridPtr grid, std::vector<double> values)
    : grid_(std::move(grid)), values_(std::move(values))
{
    if (!grid_) throw std::invalid_argument("density field needs a grid");
    if (values_.size() != grid_->size()) {
        throw std::invalid_argument("density field has " + std::to_string(values_.size()) +
                                    " values for a grid of " + std::to_string(grid_->size()) + " cells");
    }
}

DensityField DensityField::zeros(GridPtr grid)
{
    const auto n = grid->size();
    return DensityField(std::move(grid), std::vector<double>(n, 0.0));
}

DensityField DensityField::constant(GridPtr grid, double value)
{
    const auto n = grid->size();
    return DensityField(std::move(grid), std::vector<double>(n, value));
}

void DensityField::validate() const
{
    for (std::size_t j = 0; j < values_.size(); ++j) {
        if (!std::isfinite(values_[j]) || values_[j] < 0.0) {
            throw std::invalid_argument("density value at cell " + std::to_string(j) +
                                        " is negative or not finite");
        }
    }
}

double mass(const DensityField& field)
{
    const auto& g = field.grid();
    double m = 0.0;
    for (std::size_t j = 0; j < field.size(); ++j) m += field[j] * g.measure(j);
    return m;
}

double max_value(const DensityField& field)
{
    double m = 0.0;
    for (double v : field.values()) m = std::max(m, v);
    return m;
}

double entropy(const DensityField& field)
{
    const auto& g = field.grid();
    double s = 0.0;
    for (std::size_t j = 0; j < field.size(); ++j) {
        const double v = field[j];
        if (v > 0.0) s += v * std::log(v) * g.measure(j);
    }
    return s;
}

double second_moment(const DensityField& field)
{
    const auto& g = field.grid();
    double s = 0.0;
    for (std::size_t j = 0; j < field.size(); ++j) s += field[j] * g.center_norm2(j) * g.measure(j);
    return s;
}

double l1_distance(const DensityField& a, const DensityField& b)
{
    if (a.size() != b.size()) throw std::invalid_argument("l1_distance: grid size mismatch");
    const auto& g = a.grid();
    double s = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) s += std::abs(a[j] - b[j]) * g.measure(j);
    return s;
}

SpeciesState::SpeciesState(std::vector<DensityField> fields, std::vector<double> alphas)
    : fields_(std::move(fields)), alphas_(std::move(alphas))
{
    if (fields_.empty()) throw std::invalid_argument("species state needs at least one species");
    if (fields_.size() != alphas_.size()) {
        throw std::invalid_argument("species state: one sensitivity per species required");
    }
    for (std::size_t i = 0; i < fields_.size(); ++i) {
        if (!(alphas_[i] >= 0.0) || !std::isfinite(alphas_[i])) {
            throw std::invalid_argument("sensitivity of species " + std::to_string(i + 1) +
                                        " must be finite and nonnegative");
        }
        if (fields_[i].grid_ptr() != fields_.front().grid_ptr() &&
            fields_[i].size() != fields_.front().size()) {
            throw std::invalid_argument("species fields must share one grid");
        }
        fields_[i].validate();
        masses_.push_back(mass(fields_[i]));
    }
}

void SpeciesState::renormalize(std::size_t i, double target)
{
    const double m = mass(fields_[i]);
    if (!(m > 0.0)) throw std::invalid_argument("cannot renormalize a zero-mass field");
    const double s = target / m;
    for (double& v : fields_[i].mutable_values()) v *= s;
    masses_[i] = mass(fields_[i]);
}

void SpeciesState::set_field(std::size_t i, DensityField f)
{
    f.validate();
    masses_[i] = mass(f);
    fields_[i] = std::move(f);
}

double linf_norm(const SpeciesState& state)
{
    double m = 0.0;
    for (const auto& f : state.fields()) m = std::max(m, max_value(f));
    return m;
}

GrowthSpec GrowthSpec::birth(std::vector<double> rates)
{
    GrowthSpec g;
    g.kind = GrowthKind::Birth;
    g.rates = std::move(rates);
    return g;
}

GrowthSpec GrowthSpec::death(std::vector<double> rates)
{
    GrowthSpec g;
    g.kind = GrowthKind::Death;
    g.rates = std::move(rates);
    return g;
}

GrowthSpec GrowthSpec::pointwise(PointwiseFn fn, bool is_birth, double c, double C, double lipschitz)
{
    GrowthSpec g;
    g.kind = GrowthKind::Custom;
    g.custom = std::move(fn);
    g.custom_is_birth = is_birth;
    g.declared_c = c;
    g.declared_C = C;
    g.lipschitz = lipschitz;
    return g;
}

bool GrowthSpec::is_birth() const
{
    return kind == GrowthKind::Birth || (kind == GrowthKind::Custom && custom_is_birth);
}

bool GrowthSpec::is_death() const
{
    return kind == GrowthKind::Death || (kind == GrowthKind::Custom && !custom_is_birth);
}

double GrowthSpec::lower_rate() const
{
    switch (kind) {
    case GrowthKind::None:
    case GrowthKind::Birth: return 0.0;
    case GrowthKind::Death: return *std::min_element(rates.begin(), rates.end());
    case GrowthKind::Custom: return declared_c;
    }
    return 0.0;
}

double GrowthSpec::upper_rate() const
{
    switch (kind) {
    case GrowthKind::None: return 0.0;
    case GrowthKind::Birth:
    case GrowthKind::Death: return *std::max_element(rates.begin(), rates.end());
    case GrowthKind::Custom: return declared_C;
    }
    return 0.0;
}

void GrowthSpec::validate(std::size_t n_species) const
{
    if (kind == GrowthKind::None) return;
    if (kind == GrowthKind::Custom) {
        if (!custom) throw std::invalid_argument("custom growth needs a pointwise function");
        if (!(declared_c >= 0.0 && declared_c <= declared_C)) {
            throw std::invalid_argument("growth bounds must satisfy 0 <= c <= C");
        }
        if (!custom_is_birth && declared_C > 1.0) {
            throw std::invalid_argument("death bounds must satisfy C <= 1");
        }
        return;
    }
    if (rates.size() != n_species) {
        throw std::invalid_argument("growth needs one rate per species (" + std::to_string(n_species) + ")");
    }
    for (double r : rates) {
        if (!std::isfinite(r) || r < 0.0) throw std::invalid_argument("growth rates must be nonnegative");
        if (kind == GrowthKind::Death && r > 1.0) {
            throw std::invalid_argument("death rates must satisfy 0 <= c <= C <= 1");
        }
    }
}

GrowthResult apply_growth(const SpeciesState& state, const GrowthSpec& growth, double tau)
{
    if (!(tau > 0.0)) throw std::invalid_argument("time step must be positive");
    growth.validate(state.species());
    if (growth.kind == GrowthKind::None) return {state, state.masses()};

    const std::size_t n_species = state.species();
    const std::size_t n_cells = state.grid().size();
    std::vector<std::vector<double>> next(n_species);
    for (std::size_t i = 0; i < n_species; ++i) next[i].assign(state.field(i).values().begin(),
                                                              state.field(i).values().end());

    if (growth.kind == GrowthKind::Custom) {
        std::vector<double> at_cell(n_species);
        for (std::size_t j = 0; j < n_cells; ++j) {
            for (std::size_t i = 0; i < n_species; ++i) at_cell[i] = state.field(i)[j];
            for (std::size_t i = 0; i < n_species; ++i) next[i][j] += tau * growth.custom(i, j, at_cell);
        }
    } else {
        for (std::size_t i = 0; i < n_species; ++i) {
            const double sign = growth.kind == GrowthKind::Birth ? 1.0 : -1.0;
            const double factor = 1.0 + sign * tau * growth.rates[i];
            for (double& v : next[i]) v *= factor;
        }
    }

    std::vector<DensityField> fields;
    for (std::size_t i = 0; i < n_species; ++i) {
        for (std::size_t j = 0; j < n_cells; ++j) {
            if (next[i][j] < 0.0 || !std::isfinite(next[i][j])) {
                std::ostringstream msg;
                msg << "growth predictor negative for species " << i + 1 << " at cell " << j
                    << " (tau = " << tau << " too large for the death rate)";
                throw StepRejected(msg.str());
            }
        }
        fields.emplace_back(state.grid_ptr(), std::move(next[i]));
    }
    SpeciesState predictor(std::move(fields), state.alphas());
    auto masses = predictor.masses();
    return {std::move(predictor), std::move(masses)};
}

void write_field_csv(std::ostream& os, const DensityField& field)
{
    const auto& g = field.grid();
    os << std::setprecision(17);
    if (g.is_radial()) {
        os << "cell,r,value\n";
        for (std::size_t j = 0; j < field.size(); ++j) {
            os << j << ',' << g.radial().centers[j] << ',' << field[j] << '\n';
        }
    } else {
        const auto& b = g.box();
        os << "cell,x,y,value\n";
        for (std::size_t j = 0; j < field.size(); ++j) {
            os << j << ',' << b.x(j % b.nx) << ',' << b.y(j / b.nx) << ',' << field[j] << '\n';
        }
    }
}

DensityField read_field_csv(std::istream& is, GridPtr grid)
{
    std::string line;
    if (!std::getline(is, line)) throw std::invalid_argument("field CSV is empty");
    std::vector<double> values(grid->size(), 0.0);
    std::vector<bool> seen(grid->size(), false);
    std::size_t line_no = 1;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::vector<std::string> cols;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cols.push_back(cell);
        if (cols.size() < 2) throw std::invalid_argument("field CSV line " + std::to_string(line_no) + ": too few columns");
        std::size_t idx = 0;
        double v = 0.0;
        try {
            idx = std::stoul(cols.front());
            v = std::stod(cols.back());
        } catch (const std::exception&) {
            throw std::invalid_argument("field CSV line " + std::to_string(line_no) + ": not numeric");
        }
        if (idx >= values.size()) {
            throw std::invalid_argument("field CSV line " + std::to_string(line_no) + ": cell index out of range");
        }
        values[idx] = v;
        seen[idx] = true;
    }
    for (std::size_t j = 0; j < seen.size(); ++j) {
        if (!seen[j]) throw std::invalid_argument("field CSV is missing cell " + std::to_string(j));
    }
    DensityField f(std::move(grid), std::move(values));
    f.validate();
    return f;
}

}  // namespace chemoflow
