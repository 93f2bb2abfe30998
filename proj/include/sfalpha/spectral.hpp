#pragma once

#include <memory>
#include <span>
#include <vector>

namespace sfalpha {

/// Diagonal negative generator: A e_k = -lambda_k e_k with
/// 0 < lambda_1 < lambda_2 < ... < lambda_m.
struct SpectrumSpec {
    int m = 0;
    std::vector<double> eigenvalues;

    SpectrumSpec() = default;
    SpectrumSpec(int m_, std::vector<double> eigenvalues_);

    /// lambda_k = pi^2 k^2 (Dirichlet Laplacian on (0,1)).
    static std::shared_ptr<const SpectrumSpec> dirichlet_laplacian_1d(int m);
};

using SpectrumPtr = std::shared_ptr<const SpectrumSpec>;

/// Element of the truncated space H_m as coefficients against the
/// eigenbasis {e_k}. Immutable spectrum association; arithmetic preserves it.
class SpectralField {
public:
    SpectralField() = default;
    SpectralField(std::vector<double> coeffs, SpectrumPtr spectrum);

    /// Basis vector e_k (1-based index) scaled by amplitude.
    static SpectralField basis(int k, const SpectrumPtr& spectrum, double amplitude = 1.0);
    static SpectralField zero(const SpectrumPtr& spectrum);

    const std::vector<double>& coeffs() const { return coeffs_; }
    const SpectrumPtr& spectrum() const { return spectrum_; }
    int m() const { return static_cast<int>(coeffs_.size()); }
    double operator[](int i) const { return coeffs_[i]; }

    SpectralField operator+(const SpectralField& other) const;
    SpectralField operator-(const SpectralField& other) const;
    SpectralField operator*(double s) const;

private:
    std::vector<double> coeffs_;
    SpectrumPtr spectrum_;
};

/// Fractional Sobolev norm ||u||_s = (sum_k lambda_k^s u_k^2)^{1/2}.
/// s = 0 gives the H norm; negative s is well defined at finite m.
double hs_norm(const SpectralField& field, double s);

/// Same formula on raw coefficients (hot paths avoid field wrapping).
double hs_norm(std::span<const double> coeffs, std::span<const double> eigenvalues, double s);

/// e^{tA}: coefficient k maps to e^{-lambda_k t} u_k. Rejects t < 0.
SpectralField semigroup_apply(const SpectralField& field, double t);

/// Orthogonal projection pi_{m_target}: keeps the first m_target modes.
/// The returned field carries the truncated spectrum.
SpectralField project(const SpectralField& field, int m_target);

/// Collocation grid for Nemytskii coefficients: nodes xi_j = j/(n+1) and
/// the sine transform between grid values and spectral coefficients.
class SineGrid {
public:
    /// n_points must be >= the mode count it will be used with.
    explicit SineGrid(int n_points);

    int n_points() const { return n_; }
    const std::vector<double>& nodes() const { return nodes_; }

    /// u(xi_j) = sum_k u_k sqrt(2) sin(k pi xi_j).
    std::vector<double> to_grid(const SpectralField& field) const;
    void to_grid(std::span<const double> coeffs, std::span<double> values) const;

    /// Discrete inverse (sine quadrature); exact on the span of the first
    /// m modes when n_points >= m.
    SpectralField from_grid(std::span<const double> values, const SpectrumPtr& spectrum) const;
    void from_grid(std::span<const double> values, std::span<double> coeffs) const;

private:
    int n_;
    std::vector<double> nodes_;
    std::vector<double> sin_table_; // sin(k pi xi_j), k-major: [k*n_ + j]
};

} // namespace sfalpha
