#include "sfalpha/spectral.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace sfalpha {

SpectrumSpec::SpectrumSpec(int m_, std::vector<double> eigenvalues_)
    : m(m_), eigenvalues(std::move(eigenvalues_)) {
    if (m <= 0)
        throw std::invalid_argument("SpectrumSpec: m must be positive");
    if (static_cast<int>(eigenvalues.size()) != m)
        throw std::invalid_argument("SpectrumSpec: eigenvalue count != m");
    double prev = 0.0;
    for (double lam : eigenvalues) {
        if (!(lam > prev))
            throw std::invalid_argument(
                "SpectrumSpec: eigenvalues must be strictly increasing and positive");
        prev = lam;
    }
}

std::shared_ptr<const SpectrumSpec> SpectrumSpec::dirichlet_laplacian_1d(int m) {
    std::vector<double> lam(m);
    const double pi2 = std::numbers::pi * std::numbers::pi;
    for (int k = 1; k <= m; ++k)
        lam[k - 1] = pi2 * k * k;
    return std::make_shared<SpectrumSpec>(m, std::move(lam));
}

SpectralField::SpectralField(std::vector<double> coeffs, SpectrumPtr spectrum)
    : coeffs_(std::move(coeffs)), spectrum_(std::move(spectrum)) {
    if (!spectrum_)
        throw std::invalid_argument("SpectralField: null spectrum");
    if (static_cast<int>(coeffs_.size()) != spectrum_->m)
        throw std::invalid_argument("SpectralField: coefficient count != m");
    for (double c : coeffs_)
        if (!std::isfinite(c))
            throw std::invalid_argument("SpectralField: non-finite coefficient");
}

SpectralField SpectralField::basis(int k, const SpectrumPtr& spectrum, double amplitude) {
    if (k < 1 || k > spectrum->m)
        throw std::invalid_argument("SpectralField::basis: mode index out of range");
    std::vector<double> c(spectrum->m, 0.0);
    c[k - 1] = amplitude;
    return SpectralField(std::move(c), spectrum);
}

SpectralField SpectralField::zero(const SpectrumPtr& spectrum) {
    return SpectralField(std::vector<double>(spectrum->m, 0.0), spectrum);
}

SpectralField SpectralField::operator+(const SpectralField& other) const {
    if (spectrum_ != other.spectrum_)
        throw std::invalid_argument("SpectralField: spectrum mismatch");
    std::vector<double> c(coeffs_);
    for (size_t i = 0; i < c.size(); ++i)
        c[i] += other.coeffs_[i];
    return SpectralField(std::move(c), spectrum_);
}

SpectralField SpectralField::operator-(const SpectralField& other) const {
    if (spectrum_ != other.spectrum_)
        throw std::invalid_argument("SpectralField: spectrum mismatch");
    std::vector<double> c(coeffs_);
    for (size_t i = 0; i < c.size(); ++i)
        c[i] -= other.coeffs_[i];
    return SpectralField(std::move(c), spectrum_);
}

SpectralField SpectralField::operator*(double s) const {
    std::vector<double> c(coeffs_);
    for (double& v : c)
        v *= s;
    return SpectralField(std::move(c), spectrum_);
}

double hs_norm(std::span<const double> coeffs, std::span<const double> eigenvalues, double s) {
    double acc = 0.0;
    if (s == 0.0) {
        for (double c : coeffs)
            acc += c * c;
    } else {
        for (size_t i = 0; i < coeffs.size(); ++i)
            acc += std::pow(eigenvalues[i], s) * coeffs[i] * coeffs[i];
    }
    return std::sqrt(acc);
}

double hs_norm(const SpectralField& field, double s) {
    return hs_norm(field.coeffs(), field.spectrum()->eigenvalues, s);
}

SpectralField semigroup_apply(const SpectralField& field, double t) {
    if (t < 0.0)
        throw std::invalid_argument("semigroup_apply: t must be nonnegative");
    std::vector<double> c(field.coeffs());
    const auto& lam = field.spectrum()->eigenvalues;
    for (size_t i = 0; i < c.size(); ++i)
        c[i] *= std::exp(-lam[i] * t);
    return SpectralField(std::move(c), field.spectrum());
}

SpectralField project(const SpectralField& field, int m_target) {
    const int m = field.m();
    if (m_target < 1 || m_target > m)
        throw std::invalid_argument("project: m_target out of range");
    auto trunc = std::make_shared<SpectrumSpec>(
        m_target, std::vector<double>(field.spectrum()->eigenvalues.begin(),
                                      field.spectrum()->eigenvalues.begin() + m_target));
    std::vector<double> c(field.coeffs().begin(), field.coeffs().begin() + m_target);
    return SpectralField(std::move(c), std::move(trunc));
}

SineGrid::SineGrid(int n_points) : n_(n_points) {
    if (n_ < 1)
        throw std::invalid_argument("SineGrid: n_points must be positive");
    nodes_.resize(n_);
    for (int j = 1; j <= n_; ++j)
        nodes_[j - 1] = static_cast<double>(j) / (n_ + 1);
    sin_table_.resize(static_cast<size_t>(n_) * n_);
    for (int k = 1; k <= n_; ++k)
        for (int j = 1; j <= n_; ++j)
            sin_table_[static_cast<size_t>(k - 1) * n_ + (j - 1)] =
                std::sin(k * std::numbers::pi * nodes_[j - 1]);
}

void SineGrid::to_grid(std::span<const double> coeffs, std::span<double> values) const {
    const int m = static_cast<int>(coeffs.size());
    if (m > n_)
        throw std::invalid_argument("SineGrid::to_grid: grid too narrow for field");
    if (static_cast<int>(values.size()) != n_)
        throw std::invalid_argument("SineGrid::to_grid: output size mismatch");
    const double sqrt2 = std::numbers::sqrt2;
    for (int j = 0; j < n_; ++j) {
        double acc = 0.0;
        for (int k = 0; k < m; ++k)
            acc += coeffs[k] * sin_table_[static_cast<size_t>(k) * n_ + j];
        values[j] = sqrt2 * acc;
    }
}

std::vector<double> SineGrid::to_grid(const SpectralField& field) const {
    std::vector<double> values(n_);
    to_grid(field.coeffs(), values);
    return values;
}

void SineGrid::from_grid(std::span<const double> values, std::span<double> coeffs) const {
    const int m = static_cast<int>(coeffs.size());
    if (m > n_)
        throw std::invalid_argument("SineGrid::from_grid: grid too narrow for m");
    if (static_cast<int>(values.size()) != n_)
        throw std::invalid_argument("SineGrid::from_grid: input size mismatch");
    // orthogonality: sum_j sin(k pi xi_j) sin(l pi xi_j) = (n+1)/2 delta_kl
    const double w = std::numbers::sqrt2 / (n_ + 1);
    for (int k = 0; k < m; ++k) {
        double acc = 0.0;
        for (int j = 0; j < n_; ++j)
            acc += values[j] * sin_table_[static_cast<size_t>(k) * n_ + j];
        coeffs[k] = w * acc;
    }
}

SpectralField SineGrid::from_grid(std::span<const double> values, const SpectrumPtr& spectrum) const {
    std::vector<double> c(spectrum->m);
    from_grid(values, c);
    return SpectralField(std::move(c), spectrum);
}

} // namespace sfalpha
